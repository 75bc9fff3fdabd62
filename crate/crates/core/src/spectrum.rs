//! Eigenvalue location, refinement, multiplicity estimation and enumeration
//! for the pencils T (Dirichlet) and T_M (mixed), plus the negativity index
//! kappa of the underlying operator A.
//!
//! The reduced characteristic functions S = s/lambda and C = c/lambda remove
//! the trivial zero at 0 forced by the normalization y^[1](0) = lambda;
//! eigenvalues are their zeros, counted with order.  Real candidates come
//! from a scan over asymptotically centred slots; complex ones from the
//! argument principle over rectangles.  Index anchoring counts zeros in
//! vertical strips, which stays correct even when low-index eigenvalues sit
//! far from their asymptotic centres.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{ShootingError, SpectrumError};
use crate::potentials::{BoundaryCondition, ProblemSpec};
use crate::shooting::{
    characteristic_values_tol, integrate_with_ic, Grid, DEFAULT_TOL, MAX_DERIV_ORDER,
};

/// Which characteristic function owns the eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pencil {
    /// Dirichlet pencil; zeros of s, slots over the nonzero integers.
    T,
    /// Mixed pencil; zeros of c, slots over all integers.
    TM,
}

impl From<BoundaryCondition> for Pencil {
    fn from(bc: BoundaryCondition) -> Self {
        match bc {
            BoundaryCondition::Dirichlet => Pencil::T,
            BoundaryCondition::Mixed => Pencil::TM,
        }
    }
}

impl Pencil {
    pub fn bc(self) -> BoundaryCondition {
        match self {
            Pencil::T => BoundaryCondition::Dirichlet,
            Pencil::TM => BoundaryCondition::Mixed,
        }
    }

    /// Asymptotic slot centre: pi n + p0 for T, pi (n - 1/2) + p0 for T_M.
    pub fn slot_center(self, p0: f64, n: i64) -> f64 {
        match self {
            Pencil::T => PI * n as f64 + p0,
            Pencil::TM => PI * (n as f64 - 0.5) + p0,
        }
    }

    /// Next valid slot index (T skips 0).
    pub fn next_slot(self, n: i64) -> i64 {
        let m = n + 1;
        if self == Pencil::T && m == 0 {
            1
        } else {
            m
        }
    }

    pub fn slots(self, lo: i64, hi: i64) -> Vec<i64> {
        let mut out = Vec::new();
        let mut n = lo;
        if self == Pencil::T && n == 0 {
            n = 1;
        }
        while n <= hi {
            out.push(n);
            n = self.next_slot(n);
        }
        out
    }
}

/// A located eigenvalue.  `index` is the enumeration slot (set to 0 by the
/// raw locators of the T pencil until enumeration assigns it).
#[derive(Clone, Copy, Debug)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub multiplicity: usize,
    pub index: i64,
    pub pencil: Pencil,
    /// |s| (resp. |c|) at the value.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SpectralFlags {
    pub all_real: bool,
    pub all_simple: bool,
    pub almost_interlacing: Option<bool>,
}

/// Enumerated spectral content of a problem over a finite slot window,
/// with room for the norming sequences filled in by a later stage.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub label: String,
    pub pencil: Pencil,
    /// Enumerated, multiplicity-repeated, index-aligned.
    pub eigenvalues: Vec<Eigenvalue>,
    pub kappa: usize,
    pub alphas: Vec<Complex64>,
    pub betas: Vec<Complex64>,
    pub flags: SpectralFlags,
}

/// Half-height of the search strips; non-real eigenvalues of the validated
/// problem class stay well inside.
const STRIP_HALF_HEIGHT: f64 = 12.0;

/// Two values within this distance refer to the same zero.
const SAME_ZERO_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Reduced characteristic function
// ---------------------------------------------------------------------------

/// Derivatives S^(k), k = 0..=j_max, of the reduced characteristic function
/// of the pencil (s/lambda or c/lambda).  Near lambda = 0 the removable
/// singularity is evaluated through one extra raw derivative.
pub fn reduced_char(
    spec: &ProblemSpec,
    pencil: Pencil,
    lambda: Complex64,
    j_max: usize,
    tol: f64,
) -> Result<Vec<Complex64>, ShootingError> {
    let near_zero = lambda.norm() < 1e-8;
    let raw_order = if near_zero { j_max + 1 } else { j_max };
    if raw_order > MAX_DERIV_ORDER {
        return Err(ShootingError::OrderTooHigh { requested: raw_order, cap: MAX_DERIV_ORDER });
    }
    let ch = characteristic_values_tol(spec, lambda, raw_order, tol)?;
    let raw = match pencil {
        Pencil::T => &ch.s,
        Pencil::TM => &ch.c,
    };
    let mut out = Vec::with_capacity(j_max + 1);
    if near_zero {
        // s = lambda S, so S^(k)(0) = s^(k+1)(0) / (k + 1)
        for k in 0..=j_max {
            out.push(raw[k + 1] / (k as f64 + 1.0));
        }
    } else {
        for k in 0..=j_max {
            let prev = if k == 0 { Complex64::ZERO } else { out[k - 1] };
            out.push((raw[k] - k as f64 * prev) / lambda);
        }
    }
    Ok(out)
}

/// |s| (resp. |c|) at lambda: the residual reported with eigenvalues.
fn raw_residual(spec: &ProblemSpec, pencil: Pencil, lambda: Complex64, tol: f64) -> Result<f64, ShootingError> {
    let s0 = reduced_char(spec, pencil, lambda, 0, tol)?[0];
    Ok((lambda * s0).norm())
}

// ---------------------------------------------------------------------------
// Negativity count of A via oscillation
// ---------------------------------------------------------------------------

/// Number of negative eigenvalues of A (Dirichlet) or A_M (mixed): interior
/// zeros of the solution of l(y) = 0 with y(0) = 0, y^[1](0) = 1, plus one
/// for the mixed condition when y(1) y^[1](1) < 0.
pub fn count_negative_a(spec: &ProblemSpec, bc: BoundaryCondition) -> Result<usize, SpectrumError> {
    count_negative_a_robin(spec, bc, 0.0)
}

/// Oscillation count with the right-endpoint functional replaced by
/// u(1) + delta y(1).  A nonzero delta expresses a Robin condition with a
/// different quasi-derivative constant, e.g. keeping the original boundary
/// operator after a spectral-parameter shift changes the effective r(1).
pub fn count_negative_a_robin(
    spec: &ProblemSpec,
    bc: BoundaryCondition,
    delta: f64,
) -> Result<usize, SpectrumError> {
    let grid = Grid::for_spec(spec, 1200);
    let sol = integrate_with_ic(
        spec,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::ONE,
        DEFAULT_TOL,
        grid,
    )?;
    let y: Vec<f64> = sol.y[0].iter().map(|v| v.re).collect();
    let u: Vec<f64> = sol.yq[0].iter().map(|v| v.re).collect();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let endpoint = match bc {
        BoundaryCondition::Dirichlet => *y.last().unwrap(),
        BoundaryCondition::Mixed => u.last().unwrap() + delta * y.last().unwrap(),
    };
    if endpoint.abs() <= 1e-8 * scale {
        return Err(SpectrumError::NotInvertible);
    }
    let mut count = 0usize;
    for w in y.windows(2).skip(1) {
        // skip(1) leaves out the forced zero at x = 0
        if w[0] == 0.0 {
            continue;
        }
        if w[0] * w[1] < 0.0 {
            count += 1;
        }
    }
    if bc == BoundaryCondition::Mixed && y.last().unwrap() * endpoint < 0.0 {
        count += 1;
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// Newton refinement and multiplicity
// ---------------------------------------------------------------------------

/// Modified Newton z <- z - m f / f' on the reduced characteristic function;
/// converges linearly toward a zero of order m for wrong m, quadratically for
/// the right one.
fn refine_newton(
    spec: &ProblemSpec,
    pencil: Pencil,
    start: Complex64,
    m: usize,
    tol: f64,
) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..60 {
        let d = reduced_char(spec, pencil, z, 1, tol).ok()?;
        // at a multiple zero both value and derivative sit at the noise
        // floor; stepping noise/noise diverges, so stop on the value alone
        if d[0].norm() < 1e-12 * (1.0 + d[1].norm()) {
            return Some(z);
        }
        if d[1].norm() < 1e-300 {
            return None;
        }
        let mut step = m as f64 * d[0] / d[1];
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() > 1e6 {
            return None;
        }
        if step.norm() <= 1e-13 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    Some(z)
}

/// For a cluster of w zeros near z (one zero of order w, possibly split by
/// integration noise), z - S^(w-1)/S^(w) is the cluster mean up to terms
/// quadratic in the spread; iterating is Newton on the (w-1)-th derivative.
fn polish_cluster_center(
    spec: &ProblemSpec,
    pencil: Pencil,
    start: Complex64,
    w: usize,
    tol: f64,
) -> Complex64 {
    if w < 2 || w > MAX_DERIV_ORDER {
        return start;
    }
    let mut z = start;
    for _ in 0..4 {
        let Ok(d) = reduced_char(spec, pencil, z, w, tol) else { return z };
        if d[w].norm() < 1e-300 {
            return z;
        }
        let step = d[w - 1] / d[w];
        z -= step;
        if step.norm() <= 1e-13 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Order of the zero of the reduced characteristic function at lambda:
/// smallest j with |S^(j)|/j! above the relative threshold.  Returns 0 when
/// lambda is not a zero at all.
pub fn multiplicity(
    spec: &ProblemSpec,
    pencil: Pencil,
    lambda: Complex64,
) -> Result<usize, SpectrumError> {
    let j_max = if lambda.norm() < 1e-8 { MAX_DERIV_ORDER - 1 } else { MAX_DERIV_ORDER };
    let ds = reduced_char(spec, pencil, lambda, j_max, DEFAULT_TOL)?;
    let mut fact = 1.0;
    let mut scaled = Vec::with_capacity(ds.len());
    for (j, d) in ds.iter().enumerate() {
        if j > 0 {
            fact *= j as f64;
        }
        scaled.push(d.norm() / fact);
    }
    let scale = scaled.iter().fold(0.0f64, |m, &v| m.max(v));
    if scale < 1e-12 {
        return Err(SpectrumError::MultiplicityUndetermined { lambda, max_order: j_max });
    }
    for (j, &v) in scaled.iter().enumerate() {
        if v > 1e-6 * scale {
            return Ok(j);
        }
    }
    Err(SpectrumError::MultiplicityUndetermined { lambda, max_order: j_max })
}

// ---------------------------------------------------------------------------
// Argument-principle winding numbers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Rect { re0, re1, im0, im1 }
    }

    fn contains(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.re0 - margin
            && z.re <= self.re1 + margin
            && z.im >= self.im0 - margin
            && z.im <= self.im1 + margin
    }

    fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    fn expanded(&self, d: f64) -> Self {
        Rect::new(self.re0 - d, self.re1 + d, self.im0 - d, self.im1 + d)
    }
}

enum WindFail {
    BoundaryZero,
    Shooting(ShootingError),
    Unstable,
}

fn edge_phase(
    spec: &ProblemSpec,
    pencil: Pencil,
    a: Complex64,
    b: Complex64,
    fa: Complex64,
    fb: Complex64,
    depth: usize,
    tol: f64,
) -> Result<f64, WindFail> {
    if depth > 26 {
        return Err(WindFail::BoundaryZero);
    }
    let mid = 0.5 * (a + b);
    let fm = reduced_char(spec, pencil, mid, 0, tol).map_err(WindFail::Shooting)?[0];
    if fm.norm() < 1e-13 * (1.0 + fa.norm().max(fb.norm())) {
        return Err(WindFail::BoundaryZero);
    }
    // aliasing guards: short segments, bounded magnitude swings, and a
    // midpoint phase consistency check (a full hidden turn past a nearby
    // zero shows up as disagreement between the halves and the whole)
    let dphi = (fb / fa).arg();
    let d1 = (fm / fa).arg();
    let d2 = (fb / fm).arg();
    let ratio_ok = |x: Complex64, y: Complex64| {
        let r = x.norm() / y.norm();
        (0.25..4.0).contains(&r)
    };
    let guards = (b - a).norm() <= 0.4
        && depth >= 2
        && dphi.abs() <= 0.5 * PI
        && d1.abs() <= 0.5 * PI
        && d2.abs() <= 0.5 * PI
        && (d1 + d2 - dphi).abs() <= 1e-9
        && ratio_ok(fa, fm)
        && ratio_ok(fm, fb);
    if guards {
        return Ok(dphi);
    }
    Ok(edge_phase(spec, pencil, a, mid, fa, fm, depth + 1, tol)?
        + edge_phase(spec, pencil, mid, b, fm, fb, depth + 1, tol)?)
}

fn winding_once(
    spec: &ProblemSpec,
    pencil: Pencil,
    rect: Rect,
    tol: f64,
) -> Result<i64, WindFail> {
    let corners = [
        Complex64::new(rect.re0, rect.im0),
        Complex64::new(rect.re1, rect.im0),
        Complex64::new(rect.re1, rect.im1),
        Complex64::new(rect.re0, rect.im1),
    ];
    let mut f = [Complex64::ZERO; 4];
    for (i, &z) in corners.iter().enumerate() {
        f[i] = reduced_char(spec, pencil, z, 0, tol).map_err(WindFail::Shooting)?[0];
        if f[i].norm() < 1e-250 {
            return Err(WindFail::BoundaryZero);
        }
    }
    let mut total = 0.0;
    for i in 0..4 {
        let j = (i + 1) % 4;
        total += edge_phase(spec, pencil, corners[i], corners[j], f[i], f[j], 0, tol)?;
    }
    let w = total / (2.0 * PI);
    let snapped = w.round();
    if (w - snapped).abs() > 0.1 {
        return Err(WindFail::Unstable);
    }
    Ok(snapped as i64)
}

/// Winding number of the reduced characteristic function around `rect`,
/// retried with slight boundary perturbations when a zero sits on (or too
/// close to) the contour.
pub fn winding_number(
    spec: &ProblemSpec,
    pencil: Pencil,
    rect: Rect,
) -> Result<i64, SpectrumError> {
    let scale = rect.width().max(rect.height()).max(1e-3);
    for &frac in &[0.0, 4.1e-3, -6.7e-3, 1.23e-2, -1.9e-2] {
        match winding_once(spec, pencil, rect.expanded(frac * scale), DEFAULT_TOL) {
            Ok(w) => return Ok(w),
            Err(WindFail::Shooting(e)) => return Err(SpectrumError::Shooting(e)),
            Err(_) => continue,
        }
    }
    Err(SpectrumError::UnstableWinding {
        re0: rect.re0,
        re1: rect.re1,
        im0: rect.im0,
        im1: rect.im1,
    })
}

// ---------------------------------------------------------------------------
// Complex spectrum by recursive subdivision
// ---------------------------------------------------------------------------

fn push_zero(found: &mut Vec<(Complex64, usize)>, z: Complex64, m: usize) {
    for (zi, mi) in found.iter_mut() {
        if (*zi - z).norm() < SAME_ZERO_TOL {
            *mi = (*mi).max(m);
            return;
        }
    }
    found.push((z, m));
}

fn subdivide(
    spec: &ProblemSpec,
    pencil: Pencil,
    rect: Rect,
    w: i64,
    found: &mut Vec<(Complex64, usize)>,
) -> Result<(), SpectrumError> {
    if w == 0 {
        return Ok(());
    }
    let side = rect.width().max(rect.height());
    // a tiny box with winding w holds one zero of order w (possibly a
    // numerically split cluster whose centre the damped Newton finds)
    if (w == 1 && side < 1.0) || side < 2e-4 {
        let starts = [
            rect.center(),
            rect.center() + Complex64::new(0.21 * rect.width(), 0.13 * rect.height()),
            rect.center() - Complex64::new(0.17 * rect.width(), 0.23 * rect.height()),
        ];
        for &start in &starts {
            for m_try in [w as usize, 1, 2] {
                if m_try == 0 || m_try > MAX_DERIV_ORDER {
                    continue;
                }
                if let Some(z) = refine_newton(spec, pencil, start, m_try, DEFAULT_TOL) {
                    if !rect.contains(z, 0.02 * side.max(1e-3)) {
                        continue;
                    }
                    let z = polish_cluster_center(spec, pencil, z, w as usize, DEFAULT_TOL);
                    // the winding count is authoritative for the order
                    push_zero(found, z, w as usize);
                    return Ok(());
                }
            }
        }
        return Err(SpectrumError::UnstableWinding {
            re0: rect.re0,
            re1: rect.re1,
            im0: rect.im0,
            im1: rect.im1,
        });
    }
    // split the longer side, nudging the cut if a zero sits on it
    let vertical_cut = rect.width() >= rect.height();
    for &frac in &[0.5, 0.43, 0.571, 0.367] {
        let (ra, rb) = if vertical_cut {
            let c = rect.re0 + frac * rect.width();
            (
                Rect::new(rect.re0, c, rect.im0, rect.im1),
                Rect::new(c, rect.re1, rect.im0, rect.im1),
            )
        } else {
            let c = rect.im0 + frac * rect.height();
            (
                Rect::new(rect.re0, rect.re1, rect.im0, c),
                Rect::new(rect.re0, rect.re1, c, rect.im1),
            )
        };
        let wa = match winding_number(spec, pencil, ra) {
            Ok(w) => w,
            Err(SpectrumError::Shooting(e)) => return Err(SpectrumError::Shooting(e)),
            Err(_) => continue,
        };
        let wb = match winding_number(spec, pencil, rb) {
            Ok(w) => w,
            Err(SpectrumError::Shooting(e)) => return Err(SpectrumError::Shooting(e)),
            Err(_) => continue,
        };
        if wa + wb != w {
            continue;
        }
        subdivide(spec, pencil, ra, wa, found)?;
        subdivide(spec, pencil, rb, wb, found)?;
        return Ok(());
    }
    Err(SpectrumError::UnstableWinding {
        re0: rect.re0,
        re1: rect.re1,
        im0: rect.im0,
        im1: rect.im1,
    })
}

/// All zeros of the reduced characteristic function inside `rect`, with
/// multiplicities, conjugate-closed.  Indices are left unassigned.
pub fn complex_spectrum(
    spec: &ProblemSpec,
    rect: Rect,
) -> Result<Vec<Eigenvalue>, SpectrumError> {
    let pencil = Pencil::from(spec.bc);
    let w = winding_number(spec, pencil, rect)?;
    let mut raw = Vec::new();
    subdivide(spec, pencil, rect, w, &mut raw)?;
    // merge numerically split clusters (a double zero perturbs into a pair
    // at the square root of the integration tolerance), then snap the
    // near-real survivors onto the axis
    raw.sort_by(|u, v| u.0.re.partial_cmp(&v.0.re).unwrap());
    let mut found: Vec<(Complex64, usize)> = Vec::new();
    for (z, m) in raw {
        if let Some(last) = found.last_mut() {
            if (last.0 - z).norm() < 2e-4 {
                let total = last.1 + m;
                last.0 = (last.0 * last.1 as f64 + z * m as f64) / total as f64;
                last.1 = total;
                continue;
            }
        }
        found.push((z, m));
    }
    for (z, m) in found.iter_mut() {
        if *m >= 2 {
            *z = polish_cluster_center(spec, pencil, *z, *m, DEFAULT_TOL);
        }
        if z.im.abs() < 1e-6 {
            z.im = 0.0;
        }
    }
    let snapshot = found.clone();
    for (z, m) in snapshot {
        if z.im != 0.0 {
            let conj = z.conj();
            if rect.contains(conj, 0.0)
                && !found.iter().any(|(zi, _)| (*zi - conj).norm() < SAME_ZERO_TOL)
            {
                push_zero(&mut found, conj, m);
            }
        }
    }
    // average matched pairs so stored conjugates are exact
    let n = found.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if (found[i].0 - found[j].0.conj()).norm() < SAME_ZERO_TOL && found[i].0.im > 0.0 {
                let z = 0.5 * (found[i].0 + found[j].0.conj());
                found[i].0 = z;
                found[j].0 = z.conj();
            }
        }
    }
    let mut out = Vec::with_capacity(found.len());
    for (z, m) in found {
        let residual = raw_residual(spec, pencil, z, DEFAULT_TOL)?;
        out.push(Eigenvalue { value: z, multiplicity: m, index: 0, pencil, residual });
    }
    sort_by_enumeration(&mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Real spectrum with counting-based index anchoring
// ---------------------------------------------------------------------------

/// All real zeros (with order) of the reduced characteristic function on
/// [a, b], by sign-change bisection plus even-order detection at deep dips.
fn real_zeros_on(
    spec: &ProblemSpec,
    pencil: Pencil,
    a: f64,
    b: f64,
) -> Result<Vec<(f64, usize)>, SpectrumError> {
    let steps = ((b - a) / (PI / 40.0)).ceil() as usize;
    let steps = steps.max(8);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let x = a + (b - a) * i as f64 / steps as f64;
        // real potentials make the reduced function real on the real axis
        let v = reduced_char(spec, pencil, Complex64::new(x, 0.0), 0, DEFAULT_TOL)?[0].re;
        xs.push(x);
        vs.push(v);
    }
    let scan_scale = vs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut zeros: Vec<f64> = Vec::new();
    for i in 0..steps {
        if vs[i] == 0.0 {
            zeros.push(xs[i]);
        } else if vs[i] * vs[i + 1] < 0.0 {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            let (mut flo, _fhi) = (vs[i], vs[i + 1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm =
                    reduced_char(spec, pencil, Complex64::new(mid, 0.0), 0, DEFAULT_TOL)?[0].re;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            let mut z = 0.5 * (lo + hi);
            if let Some(p) = refine_newton(spec, pencil, Complex64::new(z, 0.0), 1, DEFAULT_TOL) {
                if p.im.abs() < 1e-9 && p.re >= a && p.re <= b {
                    z = p.re;
                }
            }
            zeros.push(z);
        }
    }
    // even-order zeros: dips of |S| that do not change sign
    for i in 1..steps {
        if vs[i].abs() < vs[i - 1].abs()
            && vs[i].abs() < vs[i + 1].abs()
            && vs[i].abs() < 0.25 * scan_scale
            && vs[i - 1] * vs[i + 1] > 0.0
        {
            if let Some(p) = refine_newton(spec, pencil, Complex64::new(xs[i], 0.0), 2, DEFAULT_TOL)
            {
                let p = polish_cluster_center(spec, pencil, p, 2, DEFAULT_TOL);
                let on_axis = p.im.abs() < 1e-7;
                let resid = raw_residual(spec, pencil, Complex64::new(p.re, 0.0), DEFAULT_TOL)?;
                if on_axis && p.re >= a && p.re <= b && resid <= 1e-9 {
                    zeros.push(p.re);
                }
            }
        }
    }
    zeros.sort_by(|u, v| u.partial_cmp(v).unwrap());
    // merge numerically split clusters to their midpoint; the multiplicity
    // estimate at the midpoint sees the full order
    let mut merged: Vec<(f64, usize)> = Vec::new();
    for z in zeros {
        if let Some(last) = merged.last_mut() {
            if (z - last.0).abs() < 2e-4 {
                last.0 = (last.0 * last.1 as f64 + z) / (last.1 + 1) as f64;
                last.1 += 1;
                continue;
            }
        }
        merged.push((z, 1));
    }
    let mut out = Vec::with_capacity(merged.len());
    for (z, _) in merged {
        let m = multiplicity(spec, pencil, Complex64::new(z, 0.0))?;
        if m >= 1 {
            out.push((z, m));
        }
    }
    Ok(out)
}

/// Walks the strip [a, b] x [-H, H] panel by panel, assigning consecutive
/// slots to the zeros counted by winding numbers; real zeros take the lowest
/// slots of their panel (smallest |Im| first).  Returns (real zero, order,
/// first slot) triples.  Fails over to asymptotic-offset assignment when the
/// strip count disagrees with the slot count.
fn anchor_real_indices(
    spec: &ProblemSpec,
    pencil: Pencil,
    reals: &[(f64, usize)],
    a: f64,
    b: f64,
    slots: &[i64],
) -> Result<Vec<(f64, usize, i64)>, SpectrumError> {
    let h = STRIP_HALF_HEIGHT;
    let counting = (|| -> Result<Option<Vec<(f64, usize, i64)>>, SpectrumError> {
        let total = match winding_number(spec, pencil, Rect::new(a, b, -h, h)) {
            Ok(w) => w,
            Err(SpectrumError::Shooting(e)) => return Err(SpectrumError::Shooting(e)),
            Err(_) => return Ok(None),
        };
        if total as usize != slots.len() {
            return Ok(None);
        }
        // panel boundaries: strip edges plus midpoints between real zeros
        let mut cuts = vec![a];
        for w in reals.windows(2) {
            cuts.push(0.5 * (w[0].0 + w[1].0));
        }
        cuts.push(b);
        let mut out = Vec::with_capacity(reals.len());
        let mut cursor = 0usize; // next free slot position
        if reals.is_empty() {
            return Ok(Some(out));
        }
        for (i, &(z, m)) in reals.iter().enumerate() {
            let rect = Rect::new(cuts[i], cuts[i + 1], -h, h);
            let w = match winding_number(spec, pencil, rect) {
                Ok(w) => w as usize,
                Err(SpectrumError::Shooting(e)) => return Err(SpectrumError::Shooting(e)),
                Err(_) => return Ok(None),
            };
            if w < m || cursor + w > slots.len() {
                return Ok(None);
            }
            out.push((z, m, slots[cursor]));
            cursor += w;
        }
        if cursor != slots.len() {
            return Ok(None);
        }
        Ok(Some(out))
    })()?;
    if let Some(res) = counting {
        return Ok(res);
    }
    // fallback: nearest-asymptote assignment with a global integer offset
    let p0 = spec.p_mean();
    let mut best: Option<(f64, Vec<(f64, usize, i64)>)> = None;
    for shift in -3i64..=3 {
        let mut cost = 0.0;
        let mut assign = Vec::with_capacity(reals.len());
        let mut prev: Option<i64> = None;
        for &(z, m) in reals {
            // nearest asymptotic slot, offset globally, kept monotone
            let mut slot = ((z - p0) / PI).round() as i64 + shift;
            if pencil == Pencil::T && slot == 0 {
                slot = 1;
            }
            if let Some(p) = prev {
                let floor = pencil.next_slot(p);
                if slot < floor {
                    slot = floor;
                }
            }
            cost += (z - pencil.slot_center(p0, slot)).abs();
            assign.push((z, m, slot));
            let mut last = slot;
            for _ in 1..m {
                last = pencil.next_slot(last);
            }
            prev = Some(last);
        }
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, assign));
        }
    }
    best.map(|(_, v)| v).ok_or(SpectrumError::NoShiftCandidates)
}

/// Real eigenvalues whose enumeration slots intersect [n_min, n_max].
/// Slots missing from the output signal complex pairs (or out-of-strip
/// transients); they are not an error here.
pub fn real_spectrum(
    spec: &ProblemSpec,
    index_range: (i64, i64),
) -> Result<Vec<Eigenvalue>, SpectrumError> {
    let pencil = Pencil::from(spec.bc);
    let (n_min, n_max) = index_range;
    assert!(n_min <= n_max, "empty index range");
    let p0 = spec.p_mean();
    let k = n_min.abs().max(n_max.abs()).max(1) + 2;
    let slots = pencil.slots(-k, k);
    let a = pencil.slot_center(p0, -k) - 0.5 * PI;
    let b = pencil.slot_center(p0, k) + 0.5 * PI;
    let reals = real_zeros_on(spec, pencil, a, b)?;
    let anchored = anchor_real_indices(spec, pencil, &reals, a, b, &slots)?;
    let mut out = Vec::new();
    for (z, m, first_slot) in anchored {
        // slot span of a repeated eigenvalue
        let mut last_slot = first_slot;
        for _ in 1..m {
            last_slot = pencil.next_slot(last_slot);
        }
        if last_slot < n_min || first_slot > n_max {
            continue;
        }
        let value = Complex64::new(z, 0.0);
        let residual = raw_residual(spec, pencil, value, DEFAULT_TOL)?;
        out.push(Eigenvalue { value, multiplicity: m, index: first_slot, pencil, residual });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

fn enum_cmp(x: Complex64, y: Complex64) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let eps = SAME_ZERO_TOL;
    if (x.re - y.re).abs() > eps {
        return x.re.partial_cmp(&y.re).unwrap();
    }
    if (x.im.abs() - y.im.abs()).abs() > eps {
        return x.im.abs().partial_cmp(&y.im.abs()).unwrap();
    }
    // equal moduli of imaginary parts: positive side first
    y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal)
}

fn sort_by_enumeration(list: &mut [Eigenvalue]) {
    list.sort_by(|u, v| enum_cmp(u.value, v.value));
}

/// Multiplicity-repeated, sorted, consecutively indexed listing.  The index
/// window (over the nonzero integers for T, all integers for T_M) is chosen
/// to best match the asymptotic centres pi n + p0.
pub fn enumerate_spectrum(raw: &[Eigenvalue], pencil: Pencil, p0: f64) -> Vec<Eigenvalue> {
    let mut rep: Vec<Eigenvalue> = Vec::new();
    for ev in raw {
        for _ in 0..ev.multiplicity {
            rep.push(*ev);
        }
    }
    sort_by_enumeration(&mut rep);
    let l = rep.len() as i64;
    if l == 0 {
        return rep;
    }
    let mut best: Option<(f64, i64)> = None;
    for start in (-l - 3)..=3 {
        if pencil == Pencil::T && start == 0 {
            continue;
        }
        let mut slot = start;
        let mut cost = 0.0;
        for ev in &rep {
            cost += (ev.value.re - pencil.slot_center(p0, slot)).abs();
            slot = pencil.next_slot(slot);
        }
        if best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, start));
        }
    }
    let mut slot = best.unwrap().1;
    for ev in rep.iter_mut() {
        ev.index = slot;
        slot = pencil.next_slot(slot);
    }
    rep
}

// ---------------------------------------------------------------------------
// Automatic shift selection
// ---------------------------------------------------------------------------

/// Picks a real shift sigma keeping 0 away from both characteristic zero
/// sets of the shifted problem (so A and A_M are invertible): the midpoint
/// of the real gap around 0 between zeros of s and c.
pub fn auto_shift(spec: &ProblemSpec) -> Result<(ProblemSpec, f64), SpectrumError> {
    let p0 = spec.p_mean();
    let (a, b) = (p0 - 2.0 * PI, p0 + 2.0 * PI);
    let mut zeros: Vec<f64> = Vec::new();
    for pencil in [Pencil::T, Pencil::TM] {
        for (z, _) in real_zeros_on(spec, pencil, a, b)? {
            zeros.push(z);
        }
    }
    zeros.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let below = zeros.iter().copied().filter(|&z| z < 0.0).fold(a, f64::max);
    let above = zeros.iter().copied().filter(|&z| z >= 0.0).fold(b, f64::min);
    if above - below < 1e-3 {
        return Err(SpectrumError::NoShiftCandidates);
    }
    let sigma = 0.5 * (below + above);
    // sigma = 0 when the origin is already comfortably inside its gap
    let sigma = if below < 0.0 && above > 0.0 && (-below).min(above) > 0.45 * (above - below) {
        0.0
    } else {
        sigma
    };
    Ok((spec.shifted(sigma), sigma))
}

// ---------------------------------------------------------------------------
// Combined spectral data
// ---------------------------------------------------------------------------

/// Full (real and complex) enumerated spectrum over the slot window
/// [-half_range, half_range], with kappa and the structural flags.  The
/// norming sequences are left empty for a later stage to fill.
pub fn spectral_data(spec: &ProblemSpec, half_range: i64) -> Result<SpectralData, SpectrumError> {
    let pencil = Pencil::from(spec.bc);
    let kappa = count_negative_a(spec, spec.bc)?;
    let p0 = spec.p_mean();
    let k = half_range.max(1);
    let a = pencil.slot_center(p0, -k) - 0.5 * PI;
    let b = pencil.slot_center(p0, k) + 0.5 * PI;
    let raw = complex_spectrum(spec, Rect::new(a, b, -STRIP_HALF_HEIGHT, STRIP_HALF_HEIGHT))?;
    let eigenvalues = enumerate_spectrum(&raw, pencil, p0);
    let all_real = eigenvalues.iter().all(|e| e.value.im == 0.0);
    let all_simple = raw.iter().all(|e| e.multiplicity == 1);
    Ok(SpectralData {
        label: spec.label.clone(),
        pencil,
        eigenvalues,
        kappa,
        alphas: Vec::new(),
        betas: Vec::new(),
        flags: SpectralFlags { all_real, all_simple, almost_interlacing: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialFn;
    use approx::assert_abs_diff_eq;

    fn p0r5() -> ProblemSpec {
        ProblemSpec::new(
            "p0r5",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.0, -5.0 * PI * PI]),
            PotentialFn::zero(),
        )
    }

    #[test]
    fn kappa_free_and_indefinite() {
        assert_eq!(count_negative_a(&ProblemSpec::free(), BoundaryCondition::Dirichlet).unwrap(), 0);
        assert_eq!(count_negative_a(&ProblemSpec::free(), BoundaryCondition::Mixed).unwrap(), 0);
        assert_eq!(count_negative_a(&p0r5(), BoundaryCondition::Dirichlet).unwrap(), 2);
        assert_eq!(
            count_negative_a(&ProblemSpec::paper_example(), BoundaryCondition::Dirichlet).unwrap(),
            2
        );
    }

    #[test]
    fn kappa_mixed_endpoint_rule() {
        // constant r = 2 keeps A = -d^2/dx^2 but turns the mixed endpoint
        // condition into y'(1) = 2 y(1), which admits one bound state
        // (kappa cosh kappa = 2 sinh kappa has a root) while the Dirichlet
        // operator stays positive
        let spec = ProblemSpec::new(
            "robin",
            BoundaryCondition::Dirichlet,
            PotentialFn::constant(2.0),
            PotentialFn::zero(),
        );
        assert_eq!(count_negative_a(&spec, BoundaryCondition::Dirichlet).unwrap(), 0);
        assert_eq!(count_negative_a(&spec, BoundaryCondition::Mixed).unwrap(), 1);
    }

    #[test]
    fn kappa_not_invertible() {
        // q = -pi^2 puts 0 exactly in the Dirichlet spectrum of A
        let spec = ProblemSpec::new(
            "a-singular",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.0, -PI * PI]),
            PotentialFn::zero(),
        );
        assert!(matches!(
            count_negative_a(&spec, BoundaryCondition::Dirichlet),
            Err(SpectrumError::NotInvertible)
        ));
    }

    #[test]
    fn real_spectrum_free_dirichlet() {
        let evs = real_spectrum(&ProblemSpec::free(), (-3, 3)).unwrap();
        assert_eq!(evs.len(), 6);
        for ev in &evs {
            let expect = PI * ev.index as f64;
            assert_abs_diff_eq!(ev.value.re, expect, epsilon = 1e-9);
            assert_eq!(ev.multiplicity, 1);
            assert!(ev.residual <= 1e-10);
        }
    }

    #[test]
    fn real_spectrum_free_mixed() {
        let spec = ProblemSpec::free().with_bc(BoundaryCondition::Mixed);
        let evs = real_spectrum(&spec, (-2, 3)).unwrap();
        assert_eq!(evs.len(), 6);
        for ev in &evs {
            let expect = PI * (ev.index as f64 - 0.5);
            assert_abs_diff_eq!(ev.value.re, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn real_spectrum_paper_outer_slots() {
        let evs = real_spectrum(&ProblemSpec::paper_example(), (3, 4)).unwrap();
        assert_eq!(evs.len(), 2);
        assert_eq!(evs[0].index, 3);
        assert_abs_diff_eq!(evs[0].value.re, PI + PI * 5.0f64.sqrt(), epsilon = 1e-8);
        assert_eq!(evs[1].index, 4);
        assert_abs_diff_eq!(evs[1].value.re, PI + PI * 12.0f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn real_spectrum_paper_double_at_pi() {
        let evs = real_spectrum(&ProblemSpec::paper_example(), (-4, 4)).unwrap();
        let double = evs.iter().find(|e| (e.value.re - PI).abs() < 1e-6).unwrap();
        assert_eq!(double.multiplicity, 2);
        assert_eq!(double.index, -2);
        let low = evs.iter().find(|e| e.index == -4).unwrap();
        assert_abs_diff_eq!(low.value.re, PI - PI * 12.0f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn complex_spectrum_paper_box() {
        let evs =
            complex_spectrum(&ProblemSpec::paper_example(), Rect::new(-1.0, 5.0, -7.0, 7.0))
                .unwrap();
        assert_eq!(evs.len(), 3);
        let s3 = 3.0f64.sqrt();
        assert_abs_diff_eq!(evs[0].value.re, PI, epsilon = 1e-7);
        assert_eq!(evs[0].multiplicity, 2);
        assert_abs_diff_eq!(evs[1].value.re, PI, epsilon = 1e-7);
        assert_abs_diff_eq!(evs[1].value.im, s3 * PI, epsilon = 1e-7);
        assert_eq!(evs[2].value, evs[1].value.conj());
    }

    #[test]
    fn complex_spectrum_free_box_real_only() {
        let evs = complex_spectrum(&ProblemSpec::free(), Rect::new(1.0, 7.0, -2.0, 2.0)).unwrap();
        assert_eq!(evs.len(), 2);
        assert_abs_diff_eq!(evs[0].value.re, PI, epsilon = 1e-9);
        assert_abs_diff_eq!(evs[1].value.re, 2.0 * PI, epsilon = 1e-9);
        assert!(evs.iter().all(|e| e.value.im == 0.0 && e.multiplicity == 1));
    }

    #[test]
    fn complex_spectrum_pure_imaginary_pairs() {
        let evs = complex_spectrum(&p0r5(), Rect::new(-1.0, 1.0, -8.0, 8.0)).unwrap();
        assert_eq!(evs.len(), 4);
        let mut ims: Vec<f64> = evs.iter().map(|e| e.value.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(ims[0], -2.0 * PI, epsilon = 1e-7);
        assert_abs_diff_eq!(ims[1], -PI, epsilon = 1e-7);
        assert_abs_diff_eq!(ims[2], PI, epsilon = 1e-7);
        assert_abs_diff_eq!(ims[3], 2.0 * PI, epsilon = 1e-7);
        for e in &evs {
            assert!(e.value.re.abs() <= 1e-7);
        }
        // two conjugate pairs = kappa, the Pontryagin bound attained
        assert_eq!(count_negative_a(&p0r5(), BoundaryCondition::Dirichlet).unwrap(), 2);
    }

    #[test]
    fn multiplicity_examples() {
        let free = ProblemSpec::free();
        assert_eq!(multiplicity(&free, Pencil::T, Complex64::new(PI, 0.0)).unwrap(), 1);
        let paper = ProblemSpec::paper_example();
        assert_eq!(multiplicity(&paper, Pencil::T, Complex64::new(PI, 0.0)).unwrap(), 2);
        let s3 = 3.0f64.sqrt();
        assert_eq!(
            multiplicity(&paper, Pencil::T, Complex64::new(PI, s3 * PI)).unwrap(),
            1
        );
    }

    #[test]
    fn winding_equals_multiplicity_sum() {
        let paper = ProblemSpec::paper_example();
        let rect = Rect::new(-1.0, 5.0, -7.0, 7.0);
        let w = winding_number(&paper, Pencil::T, rect).unwrap();
        let evs = complex_spectrum(&paper, rect).unwrap();
        let total: usize = evs.iter().map(|e| e.multiplicity).sum();
        assert_eq!(w as usize, total);
        assert_eq!(w, 4);
    }

    #[test]
    fn enumeration_examples() {
        let mk = |re: f64, im: f64, m: usize| Eigenvalue {
            value: Complex64::new(re, im),
            multiplicity: m,
            index: 0,
            pencil: Pencil::T,
            residual: 0.0,
        };
        let s3 = 3.0f64.sqrt();
        let out = enumerate_spectrum(
            &[mk(PI, 0.0, 2), mk(PI, s3 * PI, 1), mk(PI, -s3 * PI, 1)],
            Pencil::T,
            PI,
        );
        assert_eq!(out.len(), 4);
        assert_eq!(out[0].value.im, 0.0);
        assert_eq!(out[1].value.im, 0.0);
        assert!(out[2].value.im > 0.0);
        assert!(out[3].value.im < 0.0);

        let out = enumerate_spectrum(&[mk(PI, 0.0, 1), mk(-PI, 0.0, 1)], Pencil::T, 0.0);
        assert!(out[0].value.re < out[1].value.re);
        assert_eq!((out[0].index, out[1].index), (-1, 1));

        let out = enumerate_spectrum(
            &[mk(2.0, 1.0, 1), mk(2.0, -1.0, 1), mk(2.0, 0.0, 1)],
            Pencil::T,
            0.0,
        );
        assert_eq!(out[0].value.im, 0.0);
        assert_eq!(out[1].value.im, 1.0);
        assert_eq!(out[2].value.im, -1.0);
    }

    #[test]
    fn spectral_data_paper_full() {
        let data = spectral_data(&ProblemSpec::paper_example(), 4).unwrap();
        assert_eq!(data.kappa, 2);
        assert_eq!(data.eigenvalues.len(), 8);
        let idx: Vec<i64> = data.eigenvalues.iter().map(|e| e.index).collect();
        assert_eq!(idx, vec![-4, -3, -2, -1, 1, 2, 3, 4]);
        let s12 = 12.0f64.sqrt();
        assert_abs_diff_eq!(data.eigenvalues[0].value.re, PI - PI * s12, epsilon = 1e-7);
        assert_abs_diff_eq!(data.eigenvalues[7].value.re, PI + PI * s12, epsilon = 1e-7);
        // structural invariants
        let pairs = data.eigenvalues.iter().filter(|e| e.value.im > 0.0).count();
        assert!(pairs <= data.kappa);
        assert!(data.eigenvalues.iter().all(|e| e.multiplicity <= 2 * data.kappa + 1));
        assert!(!data.flags.all_real);
        assert!(!data.flags.all_simple);
    }

    #[test]
    fn spectral_data_free_kappa_zero_real_simple() {
        let data = spectral_data(&ProblemSpec::free(), 3).unwrap();
        assert_eq!(data.kappa, 0);
        assert!(data.flags.all_real && data.flags.all_simple);
        assert_eq!(data.eigenvalues.len(), 6);
        for e in &data.eigenvalues {
            assert_abs_diff_eq!(e.value.re, PI * e.index as f64, epsilon = 1e-8);
        }
    }

    #[test]
    fn shift_moves_spectrum() {
        let spec = ProblemSpec::paper_example();
        let sigma = 0.7;
        let shifted = spec.shifted(sigma);
        let base = real_spectrum(&spec, (3, 4)).unwrap();
        let moved = real_spectrum(&shifted, (3, 4)).unwrap();
        assert_eq!(base.len(), moved.len());
        for (b, m) in base.iter().zip(moved.iter()) {
            assert_abs_diff_eq!(m.value.re, b.value.re - sigma, epsilon = 1e-8);
        }
    }

    #[test]
    fn auto_shift_free_is_identity() {
        let (_, sigma) = auto_shift(&ProblemSpec::free()).unwrap();
        assert_abs_diff_eq!(sigma, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn auto_shift_fixes_singular_a() {
        let spec = ProblemSpec::new(
            "a-singular",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.0, -PI * PI]),
            PotentialFn::zero(),
        );
        let (shifted, sigma) = auto_shift(&spec).unwrap();
        assert!(sigma != 0.0);
        assert!(count_negative_a(&shifted, BoundaryCondition::Dirichlet).is_ok());
        assert!(count_negative_a(&shifted, BoundaryCondition::Mixed).is_ok());
    }

    #[test]
    fn missing_real_slots_match_complex_count() {
        // slot conservation for the paper-example preset over [-4, 4]
        let spec = ProblemSpec::paper_example();
        let reals = real_spectrum(&spec, (-4, 4)).unwrap();
        let real_count: usize = reals.iter().map(|e| e.multiplicity).sum();
        let complex = complex_spectrum(&spec, Rect::new(-1.0, 5.0, -7.0, 7.0))
            .unwrap()
            .iter()
            .filter(|e| e.value.im != 0.0)
            .map(|e| e.multiplicity)
            .sum::<usize>();
        assert_eq!(8 - real_count, complex);
    }
}
