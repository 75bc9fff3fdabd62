//! Potential pair (r, p) of the pencil -y'' + qy + 2*lambda*p*y = lambda^2*y,
//! with q = r' understood distributionally: only r is ever evaluated.
//!
//! A [`ProblemSpec`] stores the *base* potentials together with an accumulated
//! spectral shift sigma.  The shifted problem is realized on the fly as
//! p_hat = p - sigma and r_hat(x) = r(x) + 2*sigma*int_0^x p - sigma^2*x, so
//! that shift composition is exact by construction.

use serde::Deserialize;

use crate::error::ProblemError;

/// Boundary conditions of the pencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// y(0) = y(1) = 0
    Dirichlet,
    /// y(0) = y^[1](1) = 0
    Mixed,
}

/// Interpolation order of a sampled potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpOrder {
    /// Piecewise constant (step function); a step in r encodes a delta in q.
    Step,
    /// Piecewise linear.
    Linear,
}

/// A real-valued potential on [0, 1].
#[derive(Clone, Debug)]
pub enum PotentialFn {
    Constant(f64),
    /// Coefficients c0 + c1*x + c2*x^2 + ...
    Polynomial(Vec<f64>),
    Sampled(SampledPotential),
}

/// Sampled grid values with step or linear interpolation; constant
/// extension outside [x_0, x_last].
#[derive(Clone, Debug)]
pub struct SampledPotential {
    xs: Vec<f64>,
    vs: Vec<f64>,
    order: InterpOrder,
    /// cum[i] = int_0^{xs[i]} v, cached at construction.
    cum: Vec<f64>,
}

impl SampledPotential {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>, order: InterpOrder) -> Result<Self, ProblemError> {
        if xs.len() != vs.len() || xs.is_empty() {
            return Err(ProblemError::Validation(
                "sample abscissae and values must be non-empty and of equal length".into(),
            ));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(ProblemError::Validation(
                "sample abscissae must be strictly increasing".into(),
            ));
        }
        if xs[0] < 0.0 || *xs.last().unwrap() > 1.0 {
            return Err(ProblemError::Validation(
                "sample abscissae must lie in [0, 1]".into(),
            ));
        }
        if !vs.iter().all(|v| v.is_finite()) {
            return Err(ProblemError::Validation("sample values must be finite".into()));
        }
        let mut cum = Vec::with_capacity(xs.len());
        let mut acc = xs[0] * vs[0];
        cum.push(acc);
        for i in 1..xs.len() {
            let dx = xs[i] - xs[i - 1];
            acc += match order {
                InterpOrder::Step => vs[i - 1] * dx,
                InterpOrder::Linear => 0.5 * (vs[i - 1] + vs[i]) * dx,
            };
            cum.push(acc);
        }
        Ok(Self { xs, vs, order, cum })
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.vs[0];
        }
        if x >= self.xs[n - 1] {
            return self.vs[n - 1];
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k => k - 1,
        };
        match self.order {
            InterpOrder::Step => self.vs[i],
            InterpOrder::Linear => {
                let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
                self.vs[i] + t * (self.vs[i + 1] - self.vs[i])
            }
        }
    }

    fn integral_to(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return x * self.vs[0];
        }
        if x >= self.xs[n - 1] {
            return self.cum[n - 1] + (x - self.xs[n - 1]) * self.vs[n - 1];
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k => k - 1,
        };
        let dx = x - self.xs[i];
        self.cum[i]
            + match self.order {
                InterpOrder::Step => self.vs[i] * dx,
                InterpOrder::Linear => {
                    let slope = (self.vs[i + 1] - self.vs[i]) / (self.xs[i + 1] - self.xs[i]);
                    self.vs[i] * dx + 0.5 * slope * dx * dx
                }
            }
    }

    /// Segment boundaries, i.e. points where the interpolant loses smoothness.
    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

/// int_a^b (alpha + beta*x) cos(theta*x) dx
fn linear_cos_moment(alpha: f64, beta: f64, a: f64, b: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return alpha * (b - a) + 0.5 * beta * (b * b - a * a);
    }
    let part_const = alpha * ((theta * b).sin() - (theta * a).sin()) / theta;
    // int x cos(theta x) dx = x sin(theta x)/theta + cos(theta x)/theta^2
    let prim = |x: f64| x * (theta * x).sin() / theta + (theta * x).cos() / (theta * theta);
    part_const + beta * (prim(b) - prim(a))
}

/// int_a^b (alpha + beta*x) sin(theta*x) dx
fn linear_sin_moment(alpha: f64, beta: f64, a: f64, b: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let part_const = alpha * ((theta * a).cos() - (theta * b).cos()) / theta;
    // int x sin(theta x) dx = sin(theta x)/theta^2 - x cos(theta x)/theta
    let prim = |x: f64| (theta * x).sin() / (theta * theta) - x * (theta * x).cos() / theta;
    part_const + beta * (prim(b) - prim(a))
}

/// Moments int_0^1 x^m cos(theta x) dx and int_0^1 x^m sin(theta x) dx,
/// m = 0..=deg, by the integration-by-parts recursion.
fn monomial_moments(deg: usize, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut ic = vec![0.0; deg + 1];
    let mut is = vec![0.0; deg + 1];
    if theta == 0.0 {
        for m in 0..=deg {
            ic[m] = 1.0 / (m as f64 + 1.0);
        }
        return (ic, is);
    }
    let (s, c) = theta.sin_cos();
    ic[0] = s / theta;
    is[0] = (1.0 - c) / theta;
    for m in 1..=deg {
        ic[m] = s / theta - (m as f64) / theta * is[m - 1];
        is[m] = -c / theta + (m as f64) / theta * ic[m - 1];
    }
    (ic, is)
}

impl PotentialFn {
    pub fn constant(c: f64) -> Self {
        PotentialFn::Constant(c)
    }

    pub fn zero() -> Self {
        PotentialFn::Constant(0.0)
    }

    pub fn sampled(
        points: &[(f64, f64)],
        order: InterpOrder,
    ) -> Result<Self, ProblemError> {
        let xs = points.iter().map(|p| p.0).collect();
        let vs = points.iter().map(|p| p.1).collect();
        Ok(PotentialFn::Sampled(SampledPotential::new(xs, vs, order)?))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PotentialFn::Constant(c) => *c,
            PotentialFn::Polynomial(cs) => {
                cs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            PotentialFn::Sampled(s) => s.eval(x),
        }
    }

    /// int_0^x v(t) dt, exact for every kind.
    pub fn integral_to(&self, x: f64) -> f64 {
        match self {
            PotentialFn::Constant(c) => c * x,
            PotentialFn::Polynomial(cs) => cs
                .iter()
                .enumerate()
                .map(|(m, &c)| c * x.powi(m as i32 + 1) / (m as f64 + 1.0))
                .sum(),
            PotentialFn::Sampled(s) => s.integral_to(x),
        }
    }

    /// int_0^1 v(x) dx
    pub fn mean(&self) -> f64 {
        self.integral_to(1.0)
    }

    /// int_0^1 x v(x) dx, exact; used when shifting sampled specs.
    pub fn first_moment(&self) -> f64 {
        match self {
            PotentialFn::Constant(c) => 0.5 * c,
            PotentialFn::Polynomial(cs) => cs
                .iter()
                .enumerate()
                .map(|(m, &c)| c / (m as f64 + 2.0))
                .sum(),
            PotentialFn::Sampled(s) => {
                let mut acc = 0.0;
                for (a, b, alpha, beta) in s.segments() {
                    // int x (alpha + beta x) dx
                    acc += alpha * 0.5 * (b * b - a * a) + beta * (b * b * b - a * a * a) / 3.0;
                }
                acc
            }
        }
    }

    /// int_0^1 v(x) cos(theta x) dx, exact per kind.
    pub fn cos_moment(&self, theta: f64) -> f64 {
        let theta = theta.abs(); // cosine moment is even in theta
        match self {
            PotentialFn::Constant(c) => {
                if theta == 0.0 {
                    *c
                } else {
                    c * theta.sin() / theta
                }
            }
            PotentialFn::Polynomial(cs) => {
                let (ic, _) = monomial_moments(cs.len().saturating_sub(1), theta);
                cs.iter().zip(ic.iter()).map(|(c, m)| c * m).sum()
            }
            PotentialFn::Sampled(s) => s
                .segments()
                .map(|(a, b, alpha, beta)| linear_cos_moment(alpha, beta, a, b, theta))
                .sum(),
        }
    }

    /// int_0^1 v(x) sin(theta x) dx, exact per kind.
    pub fn sin_moment(&self, theta: f64) -> f64 {
        let sign = if theta < 0.0 { -1.0 } else { 1.0 };
        let theta = theta.abs();
        let val = match self {
            PotentialFn::Constant(c) => {
                if theta == 0.0 {
                    0.0
                } else {
                    c * (1.0 - theta.cos()) / theta
                }
            }
            PotentialFn::Polynomial(cs) => {
                let (_, is) = monomial_moments(cs.len().saturating_sub(1), theta);
                cs.iter().zip(is.iter()).map(|(c, m)| c * m).sum()
            }
            PotentialFn::Sampled(s) => s
                .segments()
                .map(|(a, b, alpha, beta)| linear_sin_moment(alpha, beta, a, b, theta))
                .sum(),
        };
        sign * val
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PotentialFn::Sampled(s) => s.breakpoints(),
            _ => Vec::new(),
        }
    }
}

impl SampledPotential {
    /// Iterate the interpolant as affine segments (a, b, alpha, beta) with
    /// v(x) = alpha + beta*x on [a, b], covering all of [0, 1].
    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let n = self.xs.len();
        let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(n + 1);
        if self.xs[0] > 0.0 {
            segs.push((0.0, self.xs[0], self.vs[0], 0.0));
        }
        for i in 0..n - 1 {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            match self.order {
                InterpOrder::Step => segs.push((a, b, self.vs[i], 0.0)),
                InterpOrder::Linear => {
                    let slope = (self.vs[i + 1] - self.vs[i]) / (b - a);
                    segs.push((a, b, self.vs[i] - slope * a, slope));
                }
            }
        }
        if self.xs[n - 1] < 1.0 {
            segs.push((self.xs[n - 1], 1.0, self.vs[n - 1], 0.0));
        }
        segs.into_iter()
    }
}

/// The spectral problem: potentials, boundary-condition kind and the applied
/// spectral-parameter shift.  Immutable after construction; all evaluations
/// are pure.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub label: String,
    pub bc: BoundaryCondition,
    r: PotentialFn,
    p: PotentialFn,
    shift: f64,
}

impl ProblemSpec {
    pub fn new(label: impl Into<String>, bc: BoundaryCondition, r: PotentialFn, p: PotentialFn) -> Self {
        Self { label: label.into(), bc, r, p, shift: 0.0 }
    }

    /// The free problem: p = r = 0, Dirichlet.
    pub fn free() -> Self {
        Self::new("free", BoundaryCondition::Dirichlet, PotentialFn::zero(), PotentialFn::zero())
    }

    /// p = pi, q = -5 pi^2 (r(x) = -5 pi^2 x), Dirichlet.  Its spectrum is
    /// {pi +- pi sqrt(n^2 - 4)}: a double eigenvalue at pi and the conjugate
    /// pair (1 +- i sqrt(3)) pi.
    pub fn paper_example() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "paper-example",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.0, -5.0 * PI * PI]),
            PotentialFn::constant(PI),
        )
    }

    pub fn by_preset(name: &str) -> Option<Self> {
        match name {
            "free" => Some(Self::free()),
            "paper-example" => Some(Self::paper_example()),
            _ => None,
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Effective r(x) = r_base(x) + 2 sigma int_0^x p_base - sigma^2 x.
    pub fn r_at(&self, x: f64) -> f64 {
        let s = self.shift;
        if s == 0.0 {
            self.r.eval(x)
        } else {
            self.r.eval(x) + 2.0 * s * self.p.integral_to(x) - s * s * x
        }
    }

    /// Effective p(x) = p_base(x) - sigma.
    pub fn p_at(&self, x: f64) -> f64 {
        self.p.eval(x) - self.shift
    }

    /// int_0^x of the effective p.
    pub fn p_integral_to(&self, x: f64) -> f64 {
        self.p.integral_to(x) - self.shift * x
    }

    /// p0 = int_0^1 p of the effective p; centres the eigenvalue asymptotics.
    pub fn p_mean(&self) -> f64 {
        self.p.mean() - self.shift
    }

    /// Shift the spectral parameter: eigenvalues of the result are those of
    /// `self` minus `sigma`.
    pub fn shifted(&self, sigma: f64) -> Self {
        let mut out = self.clone();
        out.shift += sigma;
        if sigma != 0.0 {
            out.label = format!("{}+shift({})", self.label, out.shift);
        }
        out
    }

    /// With a fresh boundary condition; potentials unchanged.
    pub fn with_bc(&self, bc: BoundaryCondition) -> Self {
        let mut out = self.clone();
        out.bc = bc;
        out
    }

    /// Non-smooth points of the effective potentials, within (0, 1).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .r
            .breakpoints()
            .into_iter()
            .chain(self.p.breakpoints())
            .filter(|&x| x > 0.0 && x < 1.0)
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts
    }

    /// int_0^1 p_eff(x) cos(theta x) dx, exact (used by the Galerkin assembly).
    pub fn p_eff_cos_moment(&self, theta: f64) -> f64 {
        let base = self.p.cos_moment(theta);
        if self.shift == 0.0 {
            return base;
        }
        let theta_a = theta.abs();
        let const_mom = if theta_a == 0.0 { 1.0 } else { theta_a.sin() / theta_a };
        base - self.shift * const_mom
    }

    /// int_0^1 r_eff(x) sin(theta x) dx, exact.
    pub fn r_eff_sin_moment(&self, theta: f64) -> f64 {
        let base = self.r.sin_moment(theta);
        let s = self.shift;
        if s == 0.0 {
            return base;
        }
        let sign = if theta < 0.0 { -1.0 } else { 1.0 };
        let th = theta.abs();
        let (pint_sin, x_sin) = if th == 0.0 {
            (0.0, 0.0)
        } else {
            let p1 = self.p.integral_to(1.0);
            // int_0^1 P(x) sin(th x) dx by parts, P = int_0^x p
            let pint = (-p1 * th.cos() + self.p.cos_moment(th)) / th;
            let xs = th.sin() / (th * th) - th.cos() / th;
            (pint, xs)
        };
        base + sign * (2.0 * s * pint_sin - s * s * x_sin)
    }
}

// ---------------------------------------------------------------------------
// Problem-document ingestion (JSON)
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum PotentialDoc {
    Preset {
        preset: String,
    },
    Const {
        #[serde(rename = "const")]
        value: f64,
    },
    Poly {
        poly: Vec<f64>,
    },
    Samples {
        samples: Vec<(f64, f64)>,
        order: u8,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    label: Option<String>,
    bc: String,
    p: PotentialDoc,
    r: PotentialDoc,
    shift: Option<f64>,
}

#[derive(Clone, Copy)]
enum Role {
    P,
    R,
}

fn resolve_potential(doc: &PotentialDoc, role: Role) -> Result<PotentialFn, ProblemError> {
    use std::f64::consts::PI;
    match doc {
        PotentialDoc::Preset { preset } => match (preset.as_str(), role) {
            ("free", _) => Ok(PotentialFn::zero()),
            ("paper-example", Role::P) => Ok(PotentialFn::constant(PI)),
            ("paper-example", Role::R) => Ok(PotentialFn::Polynomial(vec![0.0, -5.0 * PI * PI])),
            (other, _) => Err(ProblemError::Validation(format!("unknown preset {other:?}"))),
        },
        PotentialDoc::Const { value } => {
            if !value.is_finite() {
                return Err(ProblemError::Validation("constant potential must be finite".into()));
            }
            Ok(PotentialFn::constant(*value))
        }
        PotentialDoc::Poly { poly } => {
            if poly.is_empty() || !poly.iter().all(|c| c.is_finite()) {
                return Err(ProblemError::Validation(
                    "polynomial coefficients must be non-empty and finite".into(),
                ));
            }
            Ok(PotentialFn::Polynomial(poly.clone()))
        }
        PotentialDoc::Samples { samples, order } => {
            let order = match order {
                0 => InterpOrder::Step,
                1 => InterpOrder::Linear,
                other => {
                    return Err(ProblemError::Validation(format!(
                        "interpolation order must be 0 or 1, got {other}"
                    )))
                }
            };
            PotentialFn::sampled(samples, order)
        }
    }
}

/// Parse and validate a problem document; unknown fields are rejected.
pub fn load_problem(text: &str) -> Result<ProblemSpec, ProblemError> {
    let doc: ProblemDoc =
        serde_json::from_str(text).map_err(|e| ProblemError::Parse(e.to_string()))?;
    let bc = match doc.bc.as_str() {
        "dirichlet" => BoundaryCondition::Dirichlet,
        "mixed" => BoundaryCondition::Mixed,
        other => {
            return Err(ProblemError::Validation(format!(
                "bc must be \"dirichlet\" or \"mixed\", got {other:?}"
            )))
        }
    };
    let p = resolve_potential(&doc.p, Role::P)?;
    let r = resolve_potential(&doc.r, Role::R)?;
    let label = doc.label.unwrap_or_else(|| "problem".into());
    let mut spec = ProblemSpec::new(label.clone(), bc, r, p);
    if let Some(s) = doc.shift {
        if !s.is_finite() {
            return Err(ProblemError::Validation("shift must be finite".into()));
        }
        spec = spec.shifted(s);
        spec.label = label;
    }
    Ok(spec)
}
