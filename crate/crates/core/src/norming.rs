//! Norming constants of the pencils by three routes (eigenfunction
//! integrals, characteristic functions, spectral products), the
//! anti-triangular Hankel machinery, and the eta/delta residue relations.
//!
//! All eigenfunction pairings are bilinear, int f g with no conjugation:
//! the residue identities and alpha_n = s'(lambda) c(lambda) / lambda hold
//! in that pairing, which coincides with the L2 inner product for real
//! eigenvalues of real potentials and extends consistently to complex ones.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::NormingError;
use crate::potentials::ProblemSpec;
use crate::shooting::{
    characteristic_values, eigenfunction_chain_on, EigenfunctionChain, Grid, MAX_DERIV_ORDER,
};
use crate::spectrum::{Eigenvalue, Pencil, SpectralData};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Direct,
    Characteristic,
    TwoSpectra,
}

#[derive(Clone, Copy, Debug)]
pub struct NormingConstant {
    pub index: i64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub route: Route,
}

/// beta_k = lambda_k^2 alpha_k, the norming constant of the linearization.
pub fn beta_from_alpha(lambda: Complex64, alpha: Complex64) -> Complex64 {
    lambda * lambda * alpha
}

// ---------------------------------------------------------------------------
// Direct route: chain integrals
// ---------------------------------------------------------------------------

/// alpha_n .. alpha_{n+m-1} from a chain at lambda:
///   alpha_n     = int (2 - 2p/lambda) y_n y_n,
///   alpha_{n+j} = int (2 - 2p/lambda) y_n y_{n+j} + (1/lambda) int y_n y_{n+j-1}.
pub fn alpha_direct(
    spec: &ProblemSpec,
    chain: &EigenfunctionChain,
) -> Result<Vec<Complex64>, NormingError> {
    let m = chain.functions.len();
    if m > 2 {
        return Err(NormingError::MultiplicityOutOfRange(m));
    }
    let lambda = chain.lambda;
    if lambda.norm() < 1e-6 {
        return Err(NormingError::LambdaNearZero(lambda.norm()));
    }
    let grid = &chain.grid;
    let n = grid.len();
    let weight: Vec<Complex64> = (0..n)
        .map(|i| 2.0 * (Complex64::ONE - spec.p_at(grid.points[i]) / lambda))
        .collect();
    let y0 = &chain.functions[0];
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let yj = &chain.functions[j];
        let vals: Vec<Complex64> = (0..n).map(|i| weight[i] * y0[i] * yj[i]).collect();
        let mut a = grid.integrate(&vals);
        if j >= 1 {
            let prev = &chain.functions[j - 1];
            let vals: Vec<Complex64> = (0..n).map(|i| y0[i] * prev[i]).collect();
            a += grid.integrate(&vals) / lambda;
        }
        out.push(a);
    }
    Ok(out)
}

/// Direct route with the quadrature grid refined until the values settle
/// below 1e-8.
pub fn alpha_direct_refined(
    spec: &ProblemSpec,
    lambda: Complex64,
    m: usize,
) -> Result<Vec<Complex64>, NormingError> {
    let mut prev: Option<Vec<Complex64>> = None;
    for target in [600usize, 1200, 2400, 4800] {
        let chain = eigenfunction_chain_on(spec, lambda, m, Grid::for_spec(spec, target))?;
        let cur = alpha_direct(spec, &chain)?;
        if let Some(p) = &prev {
            let diff = p
                .iter()
                .zip(cur.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            if diff < 1e-8 {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Ok(prev.unwrap())
}

// ---------------------------------------------------------------------------
// Characteristic route
// ---------------------------------------------------------------------------

/// alpha_n = s'(lambda) c(lambda) / lambda for simple eigenvalues of T,
/// alpha^M_n = -s(mu) c'(mu) / mu for simple eigenvalues of T_M.
pub fn alpha_from_characteristic(
    spec: &ProblemSpec,
    ev: &Eigenvalue,
) -> Result<Complex64, NormingError> {
    if ev.multiplicity != 1 {
        return Err(NormingError::NotSimple(ev.multiplicity));
    }
    let lambda = ev.value;
    if lambda.norm() < 1e-6 {
        return Err(NormingError::LambdaNearZero(lambda.norm()));
    }
    let ch = characteristic_values(spec, lambda, 1)?;
    Ok(match ev.pencil {
        Pencil::T => ch.s[1] * ch.c[0] / lambda,
        Pencil::TM => -ch.s[0] * ch.c[1] / lambda,
    })
}

// ---------------------------------------------------------------------------
// Two-spectra route: canonical products
// ---------------------------------------------------------------------------

/// Paired product over the Dirichlet spectrum,
///   prod_{k != 0, exclude} (z - lambda_k) / (pi k),
/// with factors combined as (k, -k); converges to s'(z)-like values only in
/// this pairing.  Tail-corrected by Richardson extrapolation over N and N/2.
pub fn product_over_lambda(
    lambda_list: &dyn Fn(i64) -> Complex64,
    z: Complex64,
    exclude: Option<i64>,
    n_trunc: usize,
) -> Result<Complex64, NormingError> {
    if n_trunc < 8 {
        return Err(NormingError::InsufficientWindow { have: n_trunc, need: 8 });
    }
    let factor = |k: i64| (z - lambda_list(k)) / (PI * k as f64);
    let mut p = Complex64::ONE;
    let mut half = Complex64::ONE;
    for k in 1..=n_trunc as i64 {
        if exclude != Some(k) {
            p *= factor(k);
        }
        if exclude != Some(-k) {
            p *= factor(-k);
        }
        if k == (n_trunc / 2) as i64 {
            half = p;
        }
    }
    Ok(p * p / half)
}

/// Paired product over the mixed spectrum,
///   prod_{k != exclude} (z - mu_k) / (pi (k - 1/2)),
/// factors combined as (k, 1-k).  The pairing is normative: symmetric
/// truncation without it converges to the wrong value (see the module
/// tests for the sign trap at z = pi).
pub fn product_over_mu(
    mu_list: &dyn Fn(i64) -> Complex64,
    z: Complex64,
    exclude: Option<i64>,
    n_trunc: usize,
) -> Result<Complex64, NormingError> {
    if n_trunc < 8 {
        return Err(NormingError::InsufficientWindow { have: n_trunc, need: 8 });
    }
    let factor = |k: i64| (z - mu_list(k)) / (PI * (k as f64 - 0.5));
    let mut p = Complex64::ONE;
    let mut half = Complex64::ONE;
    for k in 1..=n_trunc as i64 {
        if exclude != Some(k) {
            p *= factor(k);
        }
        if exclude != Some(1 - k) {
            p *= factor(1 - k);
        }
        if k == (n_trunc / 2) as i64 {
            half = p;
        }
    }
    Ok(p * p / half)
}

/// The mu-product under naive symmetric truncation k = -N..N with no factor
/// pairing; kept as a diagnostic of the conditional-convergence trap.
pub fn product_over_mu_unpaired(
    mu_list: &dyn Fn(i64) -> Complex64,
    z: Complex64,
    n_trunc: usize,
) -> Complex64 {
    let mut p = Complex64::ONE;
    for k in -(n_trunc as i64)..=n_trunc as i64 {
        p *= (z - mu_list(k)) / (PI * (k as f64 - 0.5));
    }
    p
}

/// Norming constant from the two spectra alone:
///   T:   alpha_n   =  prod_lambda(exclude n) * prod_mu        at lambda_n,
///   T_M: alpha^M_n = -prod_lambda            * prod_mu(excl n) at mu_n.
/// The paired lambda-product equals s'(z) and the paired mu-product equals
/// c(z)/z on the free problem, which fixes the normalization.
pub fn alpha_from_two_spectra(
    lambda_list: &dyn Fn(i64) -> Complex64,
    mu_list: &dyn Fn(i64) -> Complex64,
    pencil: Pencil,
    n: i64,
    n_trunc: usize,
) -> Result<Complex64, NormingError> {
    match pencil {
        Pencil::T => {
            let z = lambda_list(n);
            let pl = product_over_lambda(lambda_list, z, Some(n), n_trunc)?;
            let pm = product_over_mu(mu_list, z, None, n_trunc)?;
            Ok(pl * pm)
        }
        Pencil::TM => {
            let z = mu_list(n);
            let pl = product_over_lambda(lambda_list, z, None, n_trunc)?;
            let pm = product_over_mu(mu_list, z, Some(n), n_trunc)?;
            Ok(-pl * pm)
        }
    }
}

// ---------------------------------------------------------------------------
// Anti-triangular Hankel blocks and the Gram matrix
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Zero strictly below the anti-diagonal: entry (i, j) = gamma_{i+j-1}
    /// when i + j - 1 <= p (1-based).
    Upper,
    /// Zero strictly above the anti-diagonal: entry (i, j) = gamma_{i+j-p}
    /// when i + j - p >= 1.
    Lower,
}

#[derive(Clone, Debug)]
pub struct HankelBlock {
    pub orientation: Orientation,
    pub gamma: Vec<Complex64>,
}

impl HankelBlock {
    pub fn size(&self) -> usize {
        self.gamma.len()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        hankel_matrix(&self.gamma, self.orientation)
    }
}

pub fn hankel_matrix(gamma: &[Complex64], orientation: Orientation) -> DMatrix<Complex64> {
    let p = gamma.len();
    DMatrix::from_fn(p, p, |i, j| {
        // gamma is 1-based in the display conventions
        match orientation {
            Orientation::Upper => {
                let idx = i + j + 1;
                if idx <= p {
                    gamma[idx - 1]
                } else {
                    Complex64::ZERO
                }
            }
            Orientation::Lower => {
                let idx = (i + 1 + j + 1) as i64 - p as i64;
                if idx >= 1 {
                    gamma[(idx - 1) as usize]
                } else {
                    Complex64::ZERO
                }
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    RealEigenvalue,
    ConjugatePair,
}

#[derive(Clone, Debug)]
pub struct GramBlock {
    pub kind: BlockKind,
    pub eigenvalue: Complex64,
    pub first_index: i64,
    pub hankel: HankelBlock,
}

#[derive(Clone, Debug, Default)]
pub struct GramMatrix {
    pub blocks: Vec<GramBlock>,
}

/// Block-diagonal Gram structure from enumerated eigenvalues and betas:
/// real eigenvalues give lower anti-triangular blocks M^-[beta_n ...],
/// conjugate pairs carry their betas in the off-diagonal two-block form.
pub fn build_gram(data: &SpectralData) -> GramMatrix {
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < data.eigenvalues.len() {
        let ev = data.eigenvalues[i];
        let m = ev.multiplicity;
        if i + m > data.betas.len() {
            break;
        }
        let gamma: Vec<Complex64> = data.betas[i..i + m].to_vec();
        let kind = if ev.value.im == 0.0 {
            BlockKind::RealEigenvalue
        } else {
            BlockKind::ConjugatePair
        };
        blocks.push(GramBlock {
            kind,
            eigenvalue: ev.value,
            first_index: ev.index,
            hankel: HankelBlock { orientation: Orientation::Lower, gamma },
        });
        i += m;
    }
    GramMatrix { blocks }
}

/// Indefinite Gram matrix [Y_k, Y_l] of the linearized chain vectors
/// Y_{n+j} = (y_{n+j}, lambda y_{n+j} + y_{n+j-1}), computed bilinearly:
/// [Y, Z] = (A y, z) + (y_2, z_2), with A y taken from the chain relations
/// A y_j = lambda^2 y_j - lambda B y_j + (2 lambda - B) y_{j-1} + y_{j-2}.
pub fn gram_from_chain(spec: &ProblemSpec, chain: &EigenfunctionChain) -> DMatrix<Complex64> {
    let m = chain.functions.len();
    let lambda = chain.lambda;
    let grid = &chain.grid;
    let n = grid.len();
    let p: Vec<f64> = grid.points.iter().map(|&x| spec.p_at(x)).collect();
    let zero = vec![Complex64::ZERO; n];
    let yget = |j: i64| -> &Vec<Complex64> {
        if j < 0 {
            &zero
        } else {
            &chain.functions[j as usize]
        }
    };
    let mut a_of_y: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut z_comp: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for j in 0..m as i64 {
        let (yj, ym1, ym2) = (yget(j), yget(j - 1), yget(j - 2));
        let mut ay = Vec::with_capacity(n);
        let mut zc = Vec::with_capacity(n);
        for i in 0..n {
            let b = 2.0 * p[i];
            ay.push((lambda * lambda - lambda * b) * yj[i] + (2.0 * lambda - b) * ym1[i] + ym2[i]);
            zc.push(lambda * yj[i] + ym1[i]);
        }
        a_of_y.push(ay);
        z_comp.push(zc);
    }
    DMatrix::from_fn(m, m, |k, l| {
        let vals: Vec<Complex64> = (0..n)
            .map(|i| a_of_y[k][i] * chain.functions[l][i] + z_comp[k][i] * z_comp[l][i])
            .collect();
        grid.integrate(&vals)
    })
}

// ---------------------------------------------------------------------------
// Eta sequence and the delta relation
// ---------------------------------------------------------------------------

/// eta_{n+i}, i = 0..m-1, for an eigenvalue of multiplicity m:
///   eta_j = (1/(m+n-1-j)!) d^{m+n-1-j}/dz [ (z-lambda)^m / (s c) ] at lambda,
/// i.e. the Taylor coefficients of the analytic quotient; the mixed pencil
/// carries a leading minus.  The quotient is analytic because s c vanishes
/// to order exactly m at an eigenvalue of either pencil.
pub fn eta_sequence(spec: &ProblemSpec, ev: &Eigenvalue) -> Result<Vec<Complex64>, NormingError> {
    let m = ev.multiplicity;
    if m == 0 || 2 * m - 1 > MAX_DERIV_ORDER {
        return Err(NormingError::MultiplicityOutOfRange(m));
    }
    let lambda = ev.value;
    let order = 2 * m - 1;
    let ch = characteristic_values(spec, lambda, order)?;
    let mut fact = 1.0;
    let mut s_t = Vec::with_capacity(order + 1);
    let mut c_t = Vec::with_capacity(order + 1);
    for j in 0..=order {
        if j > 0 {
            fact *= j as f64;
        }
        s_t.push(ch.s[j] / fact);
        c_t.push(ch.c[j] / fact);
    }
    // Taylor product of s and c around lambda
    let mut a = vec![Complex64::ZERO; order + 1];
    for i in 0..=order {
        for j in 0..=(order - i) {
            a[i + j] += s_t[i] * c_t[j];
        }
    }
    let scale = a.iter().fold(0.0f64, |mx, v| mx.max(v.norm()));
    if a[m].norm() < 1e-8 * scale.max(1e-300) {
        return Err(NormingError::DegenerateSymbol { order: m });
    }
    // reciprocal series of a_m + a_{m+1} t + ... up to order m-1
    let mut b = vec![Complex64::ZERO; m];
    b[0] = Complex64::ONE / a[m];
    for k in 1..m {
        let mut acc = Complex64::ZERO;
        for i in 1..=k {
            acc += a[m + i] * b[k - i];
        }
        b[k] = -acc / a[m];
    }
    let sign = match ev.pencil {
        Pencil::T => Complex64::ONE,
        Pencil::TM => -Complex64::ONE,
    };
    // eta_{n+i} is the coefficient of order m-1-i
    Ok((0..m).map(|i| sign * b[m - 1 - i]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaReading {
    /// delta_j = (eta_j - delta_{j+1}) / conj(lambda)
    Corrected,
    /// the self-referential printed form, solved literally:
    /// delta_j = eta_{j+1} / (1 - conj(lambda))
    Printed,
}

#[derive(Clone, Debug)]
pub struct DeltaReport {
    pub multiplicity: usize,
    /// m = 1: |1/beta_n - eta_n/lambda|
    pub simple_residual: Option<f64>,
    pub corrected_residual: Option<f64>,
    pub printed_residual: Option<f64>,
    pub selected: Option<DeltaReading>,
}

/// Diagnostic evaluation of the delta recursion against the inverse of the
/// numerically computed Gram block.  For m = 1 the relation
/// delta_n = 1/beta_n = eta_n/lambda is unambiguous; for m = 2 both readings
/// of the recursion are scored and the better one reported.
pub fn delta_relation_check(
    spec: &ProblemSpec,
    ev: &Eigenvalue,
) -> Result<DeltaReport, NormingError> {
    let m = ev.multiplicity;
    let lambda = ev.value;
    let lbar = lambda.conj();
    let eta = eta_sequence(spec, ev)?;
    if m == 1 {
        let chain = eigenfunction_chain_on(spec, lambda, 1, Grid::for_spec(spec, 1600))?;
        let alpha = alpha_direct(spec, &chain)?[0];
        let beta = beta_from_alpha(lambda, alpha);
        let residual = (Complex64::ONE / beta - eta[0] / lbar).norm();
        return Ok(DeltaReport {
            multiplicity: 1,
            simple_residual: Some(residual),
            corrected_residual: None,
            printed_residual: None,
            selected: None,
        });
    }
    if m != 2 {
        return Err(NormingError::MultiplicityOutOfRange(m));
    }
    let chain = eigenfunction_chain_on(spec, lambda, 2, Grid::for_spec(spec, 1600))?;
    let g = gram_from_chain(spec, &chain);
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    if det.norm() < 1e-12 {
        return Err(NormingError::DegenerateSymbol { order: 2 });
    }
    // oracle: D = G^{-1}, anti-triangular with delta_n = D_11, delta_{n+1} = D_12
    let d11 = g[(1, 1)] / det;
    let d12 = -g[(0, 1)] / det;
    let scale = d11.norm().max(d12.norm()).max(1e-300);
    let corr_hi = eta[1] / lbar;
    let corr_lo = (eta[0] - corr_hi) / lbar;
    let corrected = ((corr_lo - d11).norm() + (corr_hi - d12).norm()) / scale;
    let printed_hi = eta[1] / lbar;
    let printed_lo = eta[1] / (Complex64::ONE - lbar);
    let printed = ((printed_lo - d11).norm() + (printed_hi - d12).norm()) / scale;
    let selected = if corrected <= printed {
        DeltaReading::Corrected
    } else {
        DeltaReading::Printed
    };
    Ok(DeltaReport {
        multiplicity: 2,
        simple_residual: None,
        corrected_residual: Some(corrected),
        printed_residual: Some(printed),
        selected: Some(selected),
    })
}

// ---------------------------------------------------------------------------
// Attachment to enumerated spectral data
// ---------------------------------------------------------------------------

/// Fills the alpha and beta sequences of enumerated spectral data, aligned
/// with the repeated eigenvalue listing: the characteristic route for simple
/// eigenvalues, chain integrals for multiple ones.
pub fn attach_norming(spec: &ProblemSpec, data: &mut SpectralData) -> Result<(), NormingError> {
    let mut alphas = Vec::with_capacity(data.eigenvalues.len());
    let mut i = 0;
    while i < data.eigenvalues.len() {
        let ev = data.eigenvalues[i];
        let m = ev.multiplicity;
        if m == 1 {
            alphas.push(alpha_from_characteristic(spec, &ev)?);
        } else {
            for a in alpha_direct_refined(spec, ev.value, m)? {
                alphas.push(a);
            }
        }
        i += m;
    }
    data.betas = data
        .eigenvalues
        .iter()
        .zip(alphas.iter())
        .map(|(ev, &a)| beta_from_alpha(ev.value, a))
        .collect();
    data.alphas = alphas;
    Ok(())
}
