//! Seeded random problem generator for the property suites.
//!
//! p is a low-order trigonometric polynomial with coefficients in [-2, 2],
//! represented by its piecewise-linear interpolant on 33 equispaced nodes so
//! that all moments stay exactly computable; r is piecewise linear on 9
//! equispaced nodes with values in [-5, 5].  Everything is driven by a
//! counter-based ChaCha stream, so a seed fully determines the problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::SpectrumError;
use crate::potentials::{BoundaryCondition, InterpOrder, PotentialFn, ProblemSpec};
use crate::spectrum::{auto_shift, count_negative_a};

const SEED_WALK: u64 = 0x9E37_79B9_7F4A_7C15;

fn trig_poly_samples(rng: &mut ChaCha8Rng, scale: f64) -> PotentialFn {
    let c0: f64 = rng.gen_range(-2.0..2.0);
    let coeffs: Vec<(f64, f64)> = (0..2).map(|_| {
        (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }).collect();
    let pts: Vec<(f64, f64)> = (0..=32)
        .map(|i| {
            let x = i as f64 / 32.0;
            let mut v = c0;
            for (k, (a, b)) in coeffs.iter().enumerate() {
                let w = 2.0 * PI * (k + 1) as f64 * x;
                v += a * w.cos() + b * w.sin();
            }
            (x, scale * v)
        })
        .collect();
    PotentialFn::sampled(&pts, InterpOrder::Linear).expect("valid sample grid")
}

fn piecewise_linear_r(rng: &mut ChaCha8Rng, scale: f64, slope: f64) -> PotentialFn {
    let pts: Vec<(f64, f64)> = (0..=8)
        .map(|i| {
            let x = i as f64 / 8.0;
            (x, scale * rng.gen_range(-5.0..5.0) + slope * x)
        })
        .collect();
    PotentialFn::sampled(&pts, InterpOrder::Linear).expect("valid sample grid")
}

fn problem_with(seed: u64, scale: f64, slope: f64, label: &str) -> ProblemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = trig_poly_samples(&mut rng, scale);
    let r = piecewise_linear_r(&mut rng, scale, slope);
    ProblemSpec::new(format!("{label}-{seed}"), BoundaryCondition::Dirichlet, r, p)
}

/// Full-amplitude random problem.
pub fn random_problem(seed: u64) -> ProblemSpec {
    problem_with(seed, 1.0, 0.0, "random")
}

/// Reduced-amplitude variant for checks whose tolerances assume small
/// l2-remainders in the eigenvalue asymptotics.
pub fn random_mild_problem(seed: u64) -> ProblemSpec {
    problem_with(seed, 0.3, 0.0, "random-mild")
}

/// A random problem auto-shifted until both the Dirichlet and mixed
/// operators are positive (kappa = 0); walks the seed deterministically if
/// a given draw admits no definitizing shift.  Returns the shifted spec and
/// the shift.  Amplitudes are reduced so such a shift exists generically.
pub fn random_definite_problem(seed: u64) -> Result<(ProblemSpec, f64), SpectrumError> {
    for attempt in 0..40u64 {
        let s = seed.wrapping_add(attempt.wrapping_mul(SEED_WALK));
        let spec = problem_with(s, 0.6, 0.0, "random-definite");
        let Ok((shifted, sigma)) = auto_shift(&spec) else { continue };
        let kd = count_negative_a(&shifted, BoundaryCondition::Dirichlet);
        let km = count_negative_a(&shifted, BoundaryCondition::Mixed);
        if matches!(kd, Ok(0)) && matches!(km, Ok(0)) {
            return Ok((shifted, sigma));
        }
    }
    Err(SpectrumError::NoShiftCandidates)
}

/// A random problem with a strongly negative linear drift in r, giving the
/// Dirichlet operator at least one negative eigenvalue (kappa >= 1).
pub fn random_indefinite_problem(seed: u64) -> Result<ProblemSpec, SpectrumError> {
    for attempt in 0..40u64 {
        let s = seed.wrapping_add(attempt.wrapping_mul(SEED_WALK));
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x5bd1_e995);
        let slope = -PI * PI * rng.gen_range(5.0..8.0);
        let spec = {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let p = trig_poly_samples(&mut rng, 1.0);
            let r = piecewise_linear_r(&mut rng, 1.0, slope);
            ProblemSpec::new(
                format!("random-indefinite-{s}"),
                BoundaryCondition::Dirichlet,
                r,
                p,
            )
        };
        if matches!(count_negative_a(&spec, BoundaryCondition::Dirichlet), Ok(k) if k >= 1) {
            return Ok(spec);
        }
    }
    Err(SpectrumError::NoShiftCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_generation() {
        let a = random_problem(7);
        let b = random_problem(7);
        let c = random_problem(8);
        for x in [0.0, 0.31, 0.77, 1.0] {
            assert_eq!(a.r_at(x), b.r_at(x));
            assert_eq!(a.p_at(x), b.p_at(x));
        }
        assert!((0..=8).any(|i| {
            let x = i as f64 / 8.0;
            a.r_at(x) != c.r_at(x)
        }));
    }

    #[test]
    fn mild_problems_are_small() {
        let spec = random_mild_problem(3);
        for i in 0..=32 {
            let x = i as f64 / 32.0;
            assert!(spec.p_at(x).abs() <= 0.3 * 10.0);
            assert!(spec.r_at(x).abs() <= 0.3 * 5.0 + 1e-12);
        }
    }

    #[test]
    fn definite_problem_has_kappa_zero() {
        let (spec, _sigma) = random_definite_problem(1).unwrap();
        assert_eq!(
            count_negative_a(&spec, BoundaryCondition::Dirichlet).unwrap(),
            0
        );
        assert_eq!(count_negative_a(&spec, BoundaryCondition::Mixed).unwrap(), 0);
    }

    #[test]
    fn indefinite_problem_has_negative_mode() {
        let spec = random_indefinite_problem(1).unwrap();
        assert!(count_negative_a(&spec, BoundaryCondition::Dirichlet).unwrap() >= 1);
    }
}
