//! Finite-dimensional model of the pencil: sine-Galerkin discretization,
//! block linearization in the energy inner product, the indefinite Gram
//! structure with negative index kappa, and the interlacing/negativity
//! equivalence checks.
//!
//! The weak form never differentiates r: integration by parts turns the
//! distributional potential q = r' into -int r (phi_i phi_j)', so every
//! matrix entry is an exact trigonometric moment of r and p.
//!
//! Mixed boundary condition: the basis sin((n - 1/2) pi x) spans
//! {y in H^1 : y(0) = 0}; the condition at x = 1 is natural.  In the weak
//! form a(u, v) = int u'v' - r (uv)' the boundary term produced by parts is
//! [u^[1] v] at 1, so the natural condition is the quasi-derivative one,
//! y^[1](1) = y'(1) - r(1) y(1) = 0, not y'(1) = 0; no extra boundary work
//! is needed because the r-term is folded into the volume integral.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{PontryaginError, SpectrumError};
use crate::potentials::{BoundaryCondition, ProblemSpec};
use crate::spectrum::{enumerate_spectrum, Eigenvalue, Pencil};

#[derive(Clone, Debug)]
pub struct DiscretizedPencil {
    pub n_modes: usize,
    pub a_mat: DMatrix<f64>,
    pub b_mat: DMatrix<f64>,
    pub omegas: Vec<f64>,
    pub bc: BoundaryCondition,
    pub p_mean: f64,
}

/// Galerkin matrices in the basis sqrt(2) sin(omega_n x) with
/// omega_n = n pi (Dirichlet) or (n - 1/2) pi (mixed):
///   A_ij = omega_i^2 delta_ij + (omega_i - omega_j) R(omega_i - omega_j)
///                             - (omega_i + omega_j) R(omega_i + omega_j),
///   B_ij = 2 [P(omega_i - omega_j) - P(omega_i + omega_j)],
/// where R, P are the sine and cosine moments of the effective r and p.
/// All moments are exact for the supported potential classes.
pub fn discretize(spec: &ProblemSpec, n_modes: usize) -> Result<DiscretizedPencil, PontryaginError> {
    if n_modes < 4 {
        return Err(PontryaginError::TooFewModes(n_modes));
    }
    let omegas: Vec<f64> = (1..=n_modes)
        .map(|n| match spec.bc {
            BoundaryCondition::Dirichlet => PI * n as f64,
            BoundaryCondition::Mixed => PI * (n as f64 - 0.5),
        })
        .collect();
    let rs = |w: f64| spec.r_eff_sin_moment(w);
    let pc = |w: f64| spec.p_eff_cos_moment(w);
    let mut a_mat = DMatrix::zeros(n_modes, n_modes);
    let mut b_mat = DMatrix::zeros(n_modes, n_modes);
    for i in 0..n_modes {
        for j in i..n_modes {
            let (wi, wj) = (omegas[i], omegas[j]);
            let (wd, ws) = (wi - wj, wi + wj);
            let kinetic = if i == j { wi * wi } else { 0.0 };
            let a = kinetic + wd * rs(wd) - ws * rs(ws);
            let b = 2.0 * (pc(wd) - pc(ws));
            a_mat[(i, j)] = a;
            a_mat[(j, i)] = a;
            b_mat[(i, j)] = b;
            b_mat[(j, i)] = b;
        }
    }
    Ok(DiscretizedPencil { n_modes, a_mat, b_mat, omegas, bc: spec.bc, p_mean: spec.p_mean() })
}

#[derive(Clone, Debug)]
pub struct Linearization {
    /// Companion blocks expressed in the energy coordinates
    /// (|A|^{1/2} y, z): [[0, |A|^{1/2}], [sign(A) |A|^{1/2}, B]].
    pub l_mat: DMatrix<f64>,
    /// Gram of the indefinite inner product in the same coordinates:
    /// blkdiag(sign(A), I); it has exactly kappa negative eigenvalues and
    /// j_gram * l_mat is symmetric.
    pub j_gram: DMatrix<f64>,
    pub kappa: usize,
    pub n_modes: usize,
    pub omegas: Vec<f64>,
    pub bc: BoundaryCondition,
    pub p_mean: f64,
    a_half_inv: DMatrix<f64>,
    sign_a: DMatrix<f64>,
}

/// Builds the linearization in the energy inner product, where the
/// companion form becomes self-adjoint with respect to blkdiag(sign A, I).
pub fn linearization_build(d: &DiscretizedPencil) -> Result<Linearization, PontryaginError> {
    let n = d.n_modes;
    let eig = d.a_mat.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_abs = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min_abs < 1e-8 * scale.max(1.0) {
        return Err(PontryaginError::SingularA(min_abs));
    }
    let kappa = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
    let q = &eig.eigenvectors;
    let from_diag = |f: &dyn Fn(f64) -> f64| -> DMatrix<f64> {
        let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| f(v)));
        q * diag * q.transpose()
    };
    let a_half = from_diag(&|v: f64| v.abs().sqrt());
    let a_half_inv = from_diag(&|v: f64| 1.0 / v.abs().sqrt());
    let sign_a = from_diag(&|v: f64| v.signum());
    let j_half = from_diag(&|v: f64| v.signum() * v.abs().sqrt());
    let mut l_mat = DMatrix::zeros(2 * n, 2 * n);
    let mut j_gram = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            l_mat[(i, n + j)] = a_half[(i, j)];
            l_mat[(n + i, j)] = j_half[(i, j)];
            l_mat[(n + i, n + j)] = d.b_mat[(i, j)];
            j_gram[(i, j)] = sign_a[(i, j)];
        }
        j_gram[(n + i, n + i)] = 1.0;
    }
    Ok(Linearization {
        l_mat,
        j_gram,
        kappa,
        n_modes: n,
        omegas: d.omegas.clone(),
        bc: d.bc,
        p_mean: d.p_mean,
        a_half_inv,
        sign_a,
    })
}

/// Dense eigensolve of the linearization, clustered into multiplicities and
/// enumerated by the same slot rules as the shooting spectrum.
pub fn linearization_spectrum(lin: &Linearization) -> Result<Vec<Eigenvalue>, PontryaginError> {
    let raw = lin.l_mat.clone().complex_eigenvalues();
    let mut vals: Vec<Complex64> = raw
        .iter()
        .map(|v| {
            let z = Complex64::new(v.re, v.im);
            if z.im.abs() < 1e-7 * (1.0 + z.norm()) {
                Complex64::new(z.re, 0.0)
            } else {
                z
            }
        })
        .collect();
    vals.sort_by(|a, b| {
        // real values first within equal re, so a split defective real pair
        // stays adjacent even when a complex pair shares its real part
        (a.re, a.im.abs(), a.im)
            .partial_cmp(&(b.re, b.im.abs(), b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // greedy clustering of near-coincident values into multiplicities
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for z in vals {
        match clusters
            .iter_mut()
            .find(|(c, _)| (z - *c).norm() < 1e-5 * (1.0 + z.norm()))
        {
            Some((c, m)) => {
                *c = (*c * *m as f64 + z) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => clusters.push((z, 1)),
        }
    }
    clusters.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let pencil = Pencil::from(lin.bc);
    let evs: Vec<Eigenvalue> = clusters
        .into_iter()
        .map(|(value, multiplicity)| Eigenvalue {
            value,
            multiplicity,
            index: 0,
            pencil,
            residual: 0.0,
        })
        .collect();
    Ok(enumerate_spectrum(&evs, pencil, lin.p_mean))
}

/// Eigenvector of the linearization at lambda, in energy coordinates,
/// normalized so the basis-reconstructed y has y^[1](0) = lambda (matching
/// the shooting gauge): sum_k y_k sqrt(2) omega_k = lambda.
pub fn eigenvector(lin: &Linearization, lambda: Complex64) -> Result<DVector<Complex64>, PontryaginError> {
    let n2 = 2 * lin.n_modes;
    let shift = lambda + Complex64::new(1e-10 * (1.0 + lambda.norm()), 0.0);
    let m = DMatrix::from_fn(n2, n2, |i, j| {
        let d = if i == j { shift } else { Complex64::ZERO };
        Complex64::new(lin.l_mat[(i, j)], 0.0) - d
    });
    let lu = m.lu();
    let mut v = DVector::from_element(n2, Complex64::new(1.0, 0.3));
    v /= Complex64::new(v.norm(), 0.0);
    for _ in 0..4 {
        let Some(w) = lu.solve(&v) else {
            return Err(PontryaginError::EigenFailure);
        };
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(PontryaginError::EigenFailure);
        }
        v = w / Complex64::new(norm, 0.0);
    }
    // bridge: y coefficients are |A|^{-1/2} times the energy block
    let mut deriv0 = Complex64::ZERO;
    for k in 0..lin.n_modes {
        let mut yk = Complex64::ZERO;
        for j in 0..lin.n_modes {
            yk += Complex64::new(lin.a_half_inv[(k, j)], 0.0) * v[j];
        }
        deriv0 += yk * (2.0f64).sqrt() * lin.omegas[k];
    }
    if deriv0.norm() < 1e-12 {
        return Err(PontryaginError::EigenFailure);
    }
    Ok(v * (lambda / deriv0))
}

/// Bilinear indefinite pairing [x, y] = x1^T sign(A) y1 + x2^T y2 in energy
/// coordinates, which equals y1^T A y1 + ... in the original ones.
pub fn gram_value(lin: &Linearization, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
    let n = lin.n_modes;
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += x[i] * Complex64::new(lin.sign_a[(i, j)], 0.0) * y[j];
        }
    }
    for i in n..2 * n {
        acc += x[i] * y[i];
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterlaceReport {
    pub holds: bool,
    /// first index k (by increasing k) with mu_k < lambda_k < mu_{k+1} violated
    pub witness: Option<i64>,
}

/// Almost-interlacing check: mu_k < lambda_k < mu_{k+1} for every index k
/// present in the Dirichlet list whose neighbors exist in the mixed list.
/// Both lists must be real, simple and enumerated.
pub fn interlace_check(
    lambda_list: &[Eigenvalue],
    mu_list: &[Eigenvalue],
) -> Result<InterlaceReport, PontryaginError> {
    for ev in lambda_list.iter().chain(mu_list.iter()) {
        if ev.value.im != 0.0 || ev.multiplicity != 1 {
            return Err(PontryaginError::NotRealSimple);
        }
    }
    let mu: std::collections::BTreeMap<i64, f64> =
        mu_list.iter().map(|e| (e.index, e.value.re)).collect();
    let mut ks: Vec<i64> = lambda_list.iter().map(|e| e.index).collect();
    ks.sort_unstable();
    for ev in lambda_list {
        if mu.get(&ev.index).is_none() {
            continue;
        }
    }
    let lam: std::collections::BTreeMap<i64, f64> =
        lambda_list.iter().map(|e| (e.index, e.value.re)).collect();
    for k in ks {
        let (Some(&lo), Some(&hi), Some(&lk)) = (mu.get(&k), mu.get(&(k + 1)), lam.get(&k)) else {
            continue;
        };
        if !(lo < lk && lk < hi) {
            return Ok(InterlaceReport { holds: false, witness: Some(k) });
        }
    }
    Ok(InterlaceReport { holds: true, witness: None })
}

/// True iff -T_M(mu_star) is a positive operator, decided by an oscillation
/// count on the problem shifted by mu_star.  The mixed boundary condition of
/// T_M belongs to the original problem, y'(1) = r(1) y(1); the shift changes
/// the effective r at 1, so the count keeps the original Robin constant via
/// the offset delta = r_shifted(1) - r(1).
pub fn tm_negativity_check(spec: &ProblemSpec, mu_star: f64) -> Result<bool, PontryaginError> {
    let shifted = spec.shifted(mu_star);
    let delta = shifted.r_at(1.0) - spec.r_at(1.0);
    match crate::spectrum::count_negative_a_robin(&shifted, BoundaryCondition::Mixed, delta) {
        Ok(k) => Ok(k == 0),
        Err(SpectrumError::NotInvertible) => Err(PontryaginError::Indeterminate(1e-8)),
        Err(e) => Err(PontryaginError::Spectrum(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialFn;
    use crate::spectrum::real_spectrum;
    use approx::assert_abs_diff_eq;

    fn max_asym(m: &DMatrix<f64>) -> f64 {
        let mt = m.transpose();
        (m - mt).iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn discretize_free() {
        let d = discretize(&ProblemSpec::free(), 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { (PI * (i + 1) as f64).powi(2) } else { 0.0 };
                assert_abs_diff_eq!(d.a_mat[(i, j)], expect, epsilon = 1e-10);
                assert_abs_diff_eq!(d.b_mat[(i, j)], 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn discretize_constant_p() {
        let spec = ProblemSpec::new(
            "const-p",
            BoundaryCondition::Dirichlet,
            PotentialFn::zero(),
            PotentialFn::constant(PI),
        );
        let d = discretize(&spec, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 2.0 * PI } else { 0.0 };
                assert_abs_diff_eq!(d.b_mat[(i, j)], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn discretize_linear_r() {
        // r = -5 pi^2 x carries constant q = -5 pi^2: A = diag(pi^2 n^2 - 5 pi^2)
        let spec = ProblemSpec::new(
            "p0r5",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.0, -5.0 * PI * PI]),
            PotentialFn::zero(),
        );
        let d = discretize(&spec, 8).unwrap();
        assert!(max_asym(&d.a_mat) <= 1e-12);
        for i in 0..8 {
            for j in 0..8 {
                let n = (i + 1) as f64;
                let expect = if i == j { PI * PI * (n * n - 5.0) } else { 0.0 };
                assert_abs_diff_eq!(d.a_mat[(i, j)], expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn linearization_free_identity_gram() {
        let d = discretize(&ProblemSpec::free(), 4).unwrap();
        let lin = linearization_build(&d).unwrap();
        assert_eq!(lin.kappa, 0);
        assert!((lin.j_gram.clone() - DMatrix::<f64>::identity(8, 8))
            .iter()
            .all(|v| v.abs() <= 1e-12));
        assert!(max_asym(&(&lin.j_gram * &lin.l_mat)) <= 1e-10);
    }

    #[test]
    fn linearization_paper_kappa_and_symmetry() {
        let d = discretize(&ProblemSpec::paper_example(), 8).unwrap();
        let lin = linearization_build(&d).unwrap();
        assert_eq!(lin.kappa, 2);
        let neg = lin
            .j_gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .filter(|&&v| v < 0.0)
            .count();
        assert_eq!(neg, 2);
        assert!(max_asym(&(&lin.j_gram * &lin.l_mat)) <= 1e-10);
    }

    #[test]
    fn spectrum_free_exact() {
        let d = discretize(&ProblemSpec::free(), 8).unwrap();
        let lin = linearization_build(&d).unwrap();
        let evs = linearization_spectrum(&lin).unwrap();
        assert_eq!(evs.len(), 16);
        for ev in &evs {
            assert_eq!(ev.multiplicity, 1);
            assert_abs_diff_eq!(ev.value.re, PI * ev.index as f64, epsilon = 1e-9);
            assert_abs_diff_eq!(ev.value.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn spectrum_paper_closed_form() {
        let d = discretize(&ProblemSpec::paper_example(), 8).unwrap();
        let lin = linearization_build(&d).unwrap();
        let evs = linearization_spectrum(&lin).unwrap();
        let find = |target: Complex64| -> &Eigenvalue {
            evs.iter()
                .min_by(|a, b| {
                    (a.value - target)
                        .norm()
                        .partial_cmp(&(b.value - target).norm())
                        .unwrap()
                })
                .unwrap()
        };
        let double = find(Complex64::new(PI, 0.0));
        assert!((double.value - Complex64::new(PI, 0.0)).norm() <= 1e-8);
        assert_eq!(double.multiplicity, 2);
        for target in [
            Complex64::new(PI, PI * 3.0f64.sqrt()),
            Complex64::new(PI, -PI * 3.0f64.sqrt()),
            Complex64::new(PI + PI * 5.0f64.sqrt(), 0.0),
            Complex64::new(PI - PI * 5.0f64.sqrt(), 0.0),
            Complex64::new(PI + PI * 12.0f64.sqrt(), 0.0),
            Complex64::new(PI - PI * 12.0f64.sqrt(), 0.0),
        ] {
            assert!((find(target).value - target).norm() <= 1e-8, "missing {target}");
        }
    }

    #[test]
    fn kappa_bound_attained_imaginary_spectrum() {
        let spec = ProblemSpec::new(
            "p0r5",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.0, -5.0 * PI * PI]),
            PotentialFn::zero(),
        );
        let d = discretize(&spec, 8).unwrap();
        let lin = linearization_build(&d).unwrap();
        assert_eq!(lin.kappa, 2);
        let evs = linearization_spectrum(&lin).unwrap();
        let pairs = evs.iter().filter(|e| e.value.im > 0.0).count();
        assert_eq!(pairs, 2);
        for target in [Complex64::new(0.0, PI), Complex64::new(0.0, 2.0 * PI)] {
            assert!(evs.iter().any(|e| (e.value - target).norm() <= 1e-8));
        }
    }

    fn mild_problem() -> ProblemSpec {
        ProblemSpec::new(
            "mild",
            BoundaryCondition::Dirichlet,
            PotentialFn::Polynomial(vec![0.4, -1.1, 0.9]),
            PotentialFn::Polynomial(vec![0.3, 0.5, -0.6]),
        )
    }

    #[test]
    fn shooting_agreement_smooth_problem() {
        let spec = mild_problem();
        let shoot = real_spectrum(&spec, (1, 6)).unwrap();
        let d = discretize(&spec, 64).unwrap();
        let lin = linearization_build(&d).unwrap();
        let evs = linearization_spectrum(&lin).unwrap();
        for s in &shoot {
            let closest = evs
                .iter()
                .map(|e| (e.value - s.value).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(
                closest / s.value.norm() <= 1e-3,
                "idx {}: discrete off by rel {:.2e}",
                s.index,
                closest / s.value.norm()
            );
        }
    }

    #[test]
    fn gram_free_beta() {
        let d = discretize(&ProblemSpec::free(), 16).unwrap();
        let lin = linearization_build(&d).unwrap();
        let lambda = Complex64::new(PI, 0.0);
        let v = eigenvector(&lin, lambda).unwrap();
        let g = gram_value(&lin, &v, &v);
        assert!((g - Complex64::new(PI * PI, 0.0)).norm() <= 1e-6);
    }

    #[test]
    fn gram_neutral_complex_and_conjugate_pairing() {
        let d = discretize(&ProblemSpec::paper_example(), 16).unwrap();
        let lin = linearization_build(&d).unwrap();
        let lam = Complex64::new(PI, PI * 3.0f64.sqrt());
        let v = eigenvector(&lin, lam).unwrap();
        let vbar = eigenvector(&lin, lam.conj()).unwrap();
        // eigenspaces at non-real eigenvalues are neutral: the sesquilinear
        // self-pairing is the bilinear pairing against the conjugate vector
        let neutral = gram_value(&lin, &v, &vbar);
        let cross = gram_value(&lin, &v, &v);
        assert!(neutral.norm() <= 1e-8 * cross.norm().max(1.0));
        assert!(cross.norm() > 1e-3);
    }

    #[test]
    fn gram_matches_direct_norming() {
        let spec = mild_problem();
        let shoot = real_spectrum(&spec, (1, 1)).unwrap();
        let lambda = shoot[0].value;
        let alpha = crate::norming::alpha_direct_refined(&spec, lambda, 1).unwrap()[0];
        let beta = lambda * lambda * alpha;
        let d = discretize(&spec, 64).unwrap();
        let lin = linearization_build(&d).unwrap();
        let evs = linearization_spectrum(&lin).unwrap();
        let z = evs
            .iter()
            .min_by(|a, b| {
                (a.value - lambda).norm().partial_cmp(&(b.value - lambda).norm()).unwrap()
            })
            .unwrap()
            .value;
        let v = eigenvector(&lin, z).unwrap();
        let g = gram_value(&lin, &v, &v);
        assert!((g - beta).norm() / beta.norm() <= 1e-3, "gram {g} vs beta {beta}");
    }

    fn real_simple(value: f64, index: i64, pencil: Pencil) -> Eigenvalue {
        Eigenvalue {
            value: Complex64::new(value, 0.0),
            multiplicity: 1,
            index,
            pencil,
            residual: 0.0,
        }
    }

    #[test]
    fn interlace_free_holds() {
        let lam: Vec<Eigenvalue> = [-3i64, -2, -1, 1, 2, 3]
            .iter()
            .map(|&k| real_simple(PI * k as f64, k, Pencil::T))
            .collect();
        let mu: Vec<Eigenvalue> = (-3i64..=4)
            .map(|k| real_simple(PI * (k as f64 - 0.5), k, Pencil::TM))
            .collect();
        let rep = interlace_check(&lam, &mu).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.witness, None);
    }

    #[test]
    fn interlace_swapped_mu_fails() {
        let lam: Vec<Eigenvalue> = [1i64, 2]
            .iter()
            .map(|&k| real_simple(PI * k as f64, k, Pencil::T))
            .collect();
        let mut mu: Vec<Eigenvalue> = (0i64..=3)
            .map(|k| real_simple(PI * (k as f64 - 0.5), k, Pencil::TM))
            .collect();
        // swap the values carried by indices 1 and 2
        let (v1, v2) = (mu[1].value, mu[2].value);
        mu[1].value = v2;
        mu[2].value = v1;
        let rep = interlace_check(&lam, &mu).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.witness, Some(1));
    }

    #[test]
    fn interlace_rejects_complex() {
        let lam = vec![Eigenvalue {
            value: Complex64::new(PI, PI),
            multiplicity: 1,
            index: 1,
            pencil: Pencil::T,
            residual: 0.0,
        }];
        let mu = vec![real_simple(0.5 * PI, 1, Pencil::TM)];
        assert!(matches!(
            interlace_check(&lam, &mu),
            Err(PontryaginError::NotRealSimple)
        ));
    }

    #[test]
    fn tm_negativity_free_interval() {
        let spec = ProblemSpec::free();
        // negative exactly for |mu*| < pi/2 on the free problem
        for mu in [0.0, 1.2, -1.2] {
            assert!(tm_negativity_check(&spec, mu).unwrap(), "mu* = {mu}");
        }
        for mu in [2.0, -2.0, 2.0 * PI] {
            assert!(!tm_negativity_check(&spec, mu).unwrap(), "mu* = {mu}");
        }
    }
}
