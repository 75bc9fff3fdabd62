//! Structured result reports with deterministic serialization: floats are
//! rendered in scientific notation with 17 significant digits, so identical
//! inputs produce byte-identical output and parsing the report recovers the
//! exact f64 bit patterns.

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};
use std::io;

use crate::potentials::{BoundaryCondition, ProblemSpec};
use crate::spectrum::SpectralData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemEcho {
    pub label: String,
    pub bc: String,
    pub shift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub index: i64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormingRecord {
    pub index: i64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub route: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagsRecord {
    pub all_real: bool,
    pub all_simple: bool,
    pub almost_interlacing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub residual: Option<f64>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub problem: ProblemEcho,
    pub kappa: Option<usize>,
    pub eigenvalues: Vec<EigenvalueRecord>,
    pub norming: Vec<NormingRecord>,
    pub flags: Option<FlagsRecord>,
    pub checks: Vec<CheckRecord>,
    /// excluded from determinism guarantees
    pub timings_ms: Option<f64>,
}

impl Report {
    pub fn new(spec: &ProblemSpec) -> Self {
        Report {
            problem: ProblemEcho {
                label: spec.label.clone(),
                bc: match spec.bc {
                    BoundaryCondition::Dirichlet => "dirichlet".into(),
                    BoundaryCondition::Mixed => "mixed".into(),
                },
                shift: spec.shift(),
            },
            kappa: None,
            eigenvalues: Vec::new(),
            norming: Vec::new(),
            flags: None,
            checks: Vec::new(),
            timings_ms: None,
        }
    }

    /// Report carrying enumerated spectral data; norming entries are filled
    /// when the alpha/beta sequences are present, tagged by the route the
    /// attachment used (characteristic for simple, direct for multiple).
    pub fn from_spectral_data(spec: &ProblemSpec, data: &SpectralData) -> Self {
        let mut rep = Report::new(spec);
        rep.kappa = Some(data.kappa);
        rep.eigenvalues = data
            .eigenvalues
            .iter()
            .map(|ev| EigenvalueRecord {
                re: ev.value.re,
                im: ev.value.im,
                multiplicity: ev.multiplicity,
                index: ev.index,
                residual: ev.residual,
            })
            .collect();
        rep.norming = data
            .eigenvalues
            .iter()
            .zip(data.alphas.iter().zip(data.betas.iter()))
            .map(|(ev, (a, b))| NormingRecord {
                index: ev.index,
                alpha_re: a.re,
                alpha_im: a.im,
                beta_re: b.re,
                beta_im: b.im,
                route: if ev.multiplicity == 1 { "characteristic" } else { "direct" }.into(),
            })
            .collect();
        rep.flags = Some(FlagsRecord {
            all_real: data.flags.all_real,
            all_simple: data.flags.all_simple,
            almost_interlacing: data.flags.almost_interlacing,
        });
        rep
    }

    pub fn push_check(&mut self, name: impl Into<String>, pass: bool, residual: Option<f64>, detail: Option<String>) {
        self.checks.push(CheckRecord { name: name.into(), pass, residual, detail });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Pretty formatter that writes every float with 17 significant digits.
struct SciFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl<'a> Formatter for SciFormatter<'a> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes any report-like value with the fixed-precision float format.
pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let fmt = SciFormatter { inner: PrettyFormatter::new() };
    let mut ser = Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}
