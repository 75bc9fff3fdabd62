//! Shooting integration of the quasi-derivative system at complex lambda,
//! together with the variational equations for lambda-derivatives.
//!
//! The governing first-order system (y, y^[1]) with y^[1] = y' - r y is
//!     y'      = y^[1] + r y,
//!     (y^[1])' = -r y^[1] - r^2 y + (2 lambda p - lambda^2) y,
//! which never differentiates r.  Differentiating j times in lambda gives the
//! 2(J+1)-dimensional system solved here.  The fundamental solution phi is
//! normalized by y(0) = 0, y^[1](0) = lambda, so s(lambda) = phi(1, lambda)
//! and c(lambda) = phi^[1](1, lambda) are entire characteristic functions of
//! the Dirichlet and mixed problems.

use num_complex::Complex64;

use crate::error::ShootingError;
use crate::potentials::ProblemSpec;

/// Validated cap for lambda-derivative order: chains beyond length 2 are
/// non-generic, data structures support up to 4.
pub const MAX_DERIV_ORDER: usize = 4;

/// Fixed maximum integrator step, so breakpoints of merely piecewise-linear
/// potentials never degrade adaptivity estimates over long spans.
pub const MAX_STEP: f64 = 1e-2;

/// Default mixed absolute/relative local error control.
pub const DEFAULT_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Quadrature grid
// ---------------------------------------------------------------------------

/// Output grid covering [0, 1]: breakpoints of the potentials are mandatory
/// mesh points, each segment between them is subdivided uniformly into an
/// even number of intervals so composite Simpson weights are exact per
/// segment.
#[derive(Clone, Debug)]
pub struct Grid {
    pub points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn for_spec(spec: &ProblemSpec, target_points: usize) -> Self {
        let mut bounds = vec![0.0];
        bounds.extend(spec.breakpoints());
        bounds.push(1.0);
        Self::from_bounds(&bounds, target_points)
    }

    fn from_bounds(bounds: &[f64], target_points: usize) -> Self {
        let mut points = Vec::with_capacity(target_points + bounds.len() * 2);
        let mut weights = Vec::new();
        points.push(0.0);
        weights.push(0.0);
        for w in bounds.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            let mut n = ((len * target_points as f64).ceil() as usize).max(2);
            if n % 2 == 1 {
                n += 1;
            }
            let h = len / n as f64;
            // composite Simpson weights h/3 * (1, 4, 2, ..., 4, 1)
            *weights.last_mut().unwrap() += h / 3.0;
            for i in 1..=n {
                let x = if i == n { b } else { a + i as f64 * h };
                points.push(x);
                let w = if i == n {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
                weights.push(w);
            }
        }
        Grid { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Composite Simpson integral of grid samples.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.points.len());
        self.weights
            .iter()
            .zip(values.iter())
            .map(|(&w, &v)| w * v)
            .sum()
    }

    pub fn integrate_real(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.points.len());
        self.weights.iter().zip(values.iter()).map(|(&w, &v)| w * v).sum()
    }
}

// ---------------------------------------------------------------------------
// Embedded Dormand-Prince 5(4) over complex state vectors
// ---------------------------------------------------------------------------

const STAGES: usize = 7;
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate y' = rhs(t, y) from outputs[0] to outputs[last], recording the
/// state at every output point.  Step size is adaptive under mixed control
/// with atol = rtol = tol and never exceeds MAX_STEP; every output point is
/// hit exactly.
fn integrate_ode<F>(
    rhs: &F,
    outputs: &[f64],
    y0: Vec<Complex64>,
    tol: f64,
    mut record: impl FnMut(usize, &[Complex64]),
) -> Result<(), ShootingError>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]) -> Result<(), ShootingError>,
{
    let dim = y0.len();
    let mut y = y0;
    let mut t = outputs[0];
    record(0, &y);

    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; dim]; STAGES];
    let mut ytmp = vec![Complex64::ZERO; dim];
    let mut h = (MAX_STEP / 10.0).min(1e-3);

    for (oi, &tout) in outputs.iter().enumerate().skip(1) {
        while t < tout {
            let mut step = h.min(MAX_STEP).min(tout - t);
            loop {
                // FSAL is not exploited; stage 0 fresh each attempt
                rhs(t, &y, &mut k[0])?;
                for s in 1..STAGES {
                    for i in 0..dim {
                        let mut acc = Complex64::ZERO;
                        for (j, kj) in k.iter().enumerate().take(s) {
                            let a = A[s - 1][j];
                            if a != 0.0 {
                                acc += a * kj[i];
                            }
                        }
                        ytmp[i] = y[i] + step * acc;
                    }
                    rhs(t + C[s - 1] * step, &ytmp, &mut k[s])?;
                }
                let mut err_sq = 0.0;
                let mut y5 = vec![Complex64::ZERO; dim];
                for i in 0..dim {
                    let mut acc5 = Complex64::ZERO;
                    let mut acc4 = Complex64::ZERO;
                    for s in 0..STAGES {
                        if B5[s] != 0.0 {
                            acc5 += B5[s] * k[s][i];
                        }
                        if B4[s] != 0.0 {
                            acc4 += B4[s] * k[s][i];
                        }
                    }
                    let ynew = y[i] + step * acc5;
                    let e = step * (acc5 - acc4);
                    let scale = tol + tol * y[i].norm().max(ynew.norm());
                    err_sq += (e.norm() / scale).powi(2);
                    y5[i] = ynew;
                }
                let err = (err_sq / dim as f64).sqrt();
                if err <= 1.0 || step <= 1e-14 {
                    if step <= 1e-14 && err > 1.0 {
                        return Err(ShootingError::StepUnderflow { x: t });
                    }
                    t += step;
                    y = y5;
                    let factor = if err > 0.0 {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    } else {
                        5.0
                    };
                    h = (step * factor).min(MAX_STEP);
                    break;
                }
                step *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
            }
        }
        record(oi, &y);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The variational shooting system
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Direction {
    /// phi: from x = 0, y(0) = 0, y^[1](0) = lambda.
    Forward,
    /// psi: from x = 1, y(1) = 0, y^[1](1) = lambda.
    Backward,
}

fn shooting_rhs(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
    dir: Direction,
) -> impl Fn(f64, &[Complex64], &mut [Complex64]) -> Result<(), ShootingError> + '_ {
    move |t, state, out| {
        let x = match dir {
            Direction::Forward => t,
            Direction::Backward => 1.0 - t,
        };
        let r = spec.r_at(x);
        let p = spec.p_at(x);
        if !r.is_finite() || !p.is_finite() {
            return Err(ShootingError::NonFinitePotential { x });
        }
        let g = 2.0 * lambda * p - lambda * lambda; // coefficient of y
        let gp = 2.0 * (p - lambda); // d/d lambda
        for j in 0..=j_max {
            let yj = state[2 * j];
            let uj = state[2 * j + 1];
            let mut dy = uj + r * yj;
            let mut du = -r * uj - r * r * yj + g * yj;
            if j >= 1 {
                du += (j as f64) * gp * state[2 * (j - 1)];
            }
            if j >= 2 {
                du -= (j * (j - 1)) as f64 * state[2 * (j - 2)];
            }
            if let Direction::Backward = dir {
                dy = -dy;
                du = -du;
            }
            out[2 * j] = dy;
            out[2 * j + 1] = du;
        }
        Ok(())
    }
}

fn initial_state(lambda: Complex64, j_max: usize) -> Vec<Complex64> {
    let mut y0 = vec![Complex64::ZERO; 2 * (j_max + 1)];
    y0[1] = lambda; // y^[1](x0) = lambda
    if j_max >= 1 {
        y0[3] = Complex64::ONE; // d/d lambda of the initial quasi-derivative
    }
    y0
}

/// Grid values of phi and its lambda-derivatives: `y[j][i]` holds
/// d^j/d lambda^j y at grid point i, `yq` the same for the quasi-derivative.
#[derive(Clone, Debug)]
pub struct ShootingSolution {
    pub lambda: Complex64,
    pub order: usize,
    pub grid: Grid,
    pub y: Vec<Vec<Complex64>>,
    pub yq: Vec<Vec<Complex64>>,
}

/// Endpoint values s^(j)(lambda) = d^j phi(1, .) and c^(j)(lambda).
#[derive(Clone, Debug)]
pub struct CharacteristicPair {
    pub lambda: Complex64,
    pub s: Vec<Complex64>,
    pub c: Vec<Complex64>,
}

fn integrate_on_grid(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
    tol: f64,
    grid: Grid,
    dir: Direction,
) -> Result<ShootingSolution, ShootingError> {
    if j_max > MAX_DERIV_ORDER {
        return Err(ShootingError::OrderTooHigh { requested: j_max, cap: MAX_DERIV_ORDER });
    }
    let n = grid.len();
    let mut y = vec![vec![Complex64::ZERO; n]; j_max + 1];
    let mut yq = vec![vec![Complex64::ZERO; n]; j_max + 1];
    let rhs = shooting_rhs(spec, lambda, j_max, dir);
    // Backward integration runs in t = 1 - x over the reversed grid.
    let outputs: Vec<f64> = match dir {
        Direction::Forward => grid.points.clone(),
        Direction::Backward => grid.points.iter().rev().map(|&x| 1.0 - x).collect(),
    };
    integrate_ode(&rhs, &outputs, initial_state(lambda, j_max), tol, |oi, state| {
        let idx = match dir {
            Direction::Forward => oi,
            Direction::Backward => n - 1 - oi,
        };
        for j in 0..=j_max {
            y[j][idx] = state[2 * j];
            yq[j][idx] = state[2 * j + 1];
        }
    })?;
    Ok(ShootingSolution { lambda, order: j_max, grid, y, yq })
}

/// Dense forward integration of phi with lambda-derivatives up to `j_max`.
pub fn integrate_shooting(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
    tol: f64,
) -> Result<ShootingSolution, ShootingError> {
    integrate_shooting_on(spec, lambda, j_max, tol, Grid::for_spec(spec, 800))
}

pub fn integrate_shooting_on(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
    tol: f64,
    grid: Grid,
) -> Result<ShootingSolution, ShootingError> {
    integrate_on_grid(spec, lambda, j_max, tol, grid, Direction::Forward)
}

/// psi: the solution anchored at the right endpoint, integrated by reversing
/// the independent variable; recorded on the same kind of grid as phi.
pub fn integrate_backward_on(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
    tol: f64,
    grid: Grid,
) -> Result<ShootingSolution, ShootingError> {
    integrate_on_grid(spec, lambda, j_max, tol, grid, Direction::Backward)
}

/// Forward integration of the plain system (no lambda-derivatives) from a
/// caller-supplied initial condition (y(0), y^[1](0)).  Used for oscillation
/// counting at lambda = 0, where the standard normalization is trivial.
pub fn integrate_with_ic(
    spec: &ProblemSpec,
    lambda: Complex64,
    y0: Complex64,
    u0: Complex64,
    tol: f64,
    grid: Grid,
) -> Result<ShootingSolution, ShootingError> {
    let n = grid.len();
    let mut y = vec![vec![Complex64::ZERO; n]];
    let mut yq = vec![vec![Complex64::ZERO; n]];
    let rhs = shooting_rhs(spec, lambda, 0, Direction::Forward);
    integrate_ode(&rhs, &grid.points, vec![y0, u0], tol, |oi, state| {
        y[0][oi] = state[0];
        yq[0][oi] = state[1];
    })?;
    Ok(ShootingSolution { lambda, order: 0, grid, y, yq })
}

/// Endpoint characteristic values; only breakpoints enter the output grid so
/// the integrator is free to take full adaptive steps.
pub fn characteristic_values(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
) -> Result<CharacteristicPair, ShootingError> {
    characteristic_values_tol(spec, lambda, j_max, DEFAULT_TOL)
}

pub fn characteristic_values_tol(
    spec: &ProblemSpec,
    lambda: Complex64,
    j_max: usize,
    tol: f64,
) -> Result<CharacteristicPair, ShootingError> {
    if j_max > MAX_DERIV_ORDER {
        return Err(ShootingError::OrderTooHigh { requested: j_max, cap: MAX_DERIV_ORDER });
    }
    let mut outputs = vec![0.0];
    outputs.extend(spec.breakpoints());
    outputs.push(1.0);
    let rhs = shooting_rhs(spec, lambda, j_max, Direction::Forward);
    let mut s = vec![Complex64::ZERO; j_max + 1];
    let mut c = vec![Complex64::ZERO; j_max + 1];
    let last = outputs.len() - 1;
    integrate_ode(&rhs, &outputs, initial_state(lambda, j_max), tol, |oi, state| {
        if oi == last {
            for j in 0..=j_max {
                s[j] = state[2 * j];
                c[j] = state[2 * j + 1];
            }
        }
    })?;
    Ok(CharacteristicPair { lambda, s, c })
}

/// Integrates both phi and psi and returns the worst-case residual of the
/// x-independence identity W(lambda) = phi psi^[1] - psi phi^[1] =
/// lambda s(lambda) over the grid.
pub fn wronskian_check(spec: &ProblemSpec, lambda: Complex64) -> Result<f64, ShootingError> {
    let grid = Grid::for_spec(spec, 400);
    let phi = integrate_shooting_on(spec, lambda, 0, DEFAULT_TOL, grid.clone())?;
    let psi = integrate_backward_on(spec, lambda, 0, DEFAULT_TOL, grid)?;
    let s = phi.y[0].last().copied().unwrap();
    let w_expected = lambda * s;
    let mut worst = 0.0f64;
    for i in 0..phi.grid.len() {
        let w = phi.y[0][i] * psi.yq[0][i] - psi.y[0][i] * phi.yq[0][i];
        worst = worst.max((w - w_expected).norm());
    }
    Ok(worst)
}

/// The chain y_n, ..., y_{n+m-1} of eigen- and associated functions at an
/// eigenvalue lambda, built from the variational derivatives:
/// y_{n+j} = (1/j!) d^j/dz^j y_n(x, z) at z = lambda, with the normalization
/// y_n(0) = 0, y_n^[1](0) = lambda.
#[derive(Clone, Debug)]
pub struct EigenfunctionChain {
    pub lambda: Complex64,
    pub grid: Grid,
    /// functions[j][i]: value of the j-th chain element at grid point i.
    pub functions: Vec<Vec<Complex64>>,
    /// Quasi-derivatives of the chain elements on the grid.
    pub qderivs: Vec<Vec<Complex64>>,
}

pub fn eigenfunction_chain(
    spec: &ProblemSpec,
    lambda: Complex64,
    m: usize,
) -> Result<EigenfunctionChain, ShootingError> {
    eigenfunction_chain_on(spec, lambda, m, Grid::for_spec(spec, 800))
}

pub fn eigenfunction_chain_on(
    spec: &ProblemSpec,
    lambda: Complex64,
    m: usize,
    grid: Grid,
) -> Result<EigenfunctionChain, ShootingError> {
    use crate::potentials::BoundaryCondition;
    if m == 0 || m > MAX_DERIV_ORDER {
        return Err(ShootingError::OrderTooHigh { requested: m, cap: MAX_DERIV_ORDER });
    }
    let sol = integrate_shooting_on(spec, lambda, m - 1, DEFAULT_TOL, grid)?;
    // lambda must be an approximate zero of the relevant characteristic
    // function (s for Dirichlet, c for mixed).
    let endpoint = match spec.bc {
        BoundaryCondition::Dirichlet => *sol.y[0].last().unwrap(),
        BoundaryCondition::Mixed => *sol.yq[0].last().unwrap(),
    };
    let scale = sol.y[0]
        .iter()
        .map(|v| v.norm())
        .fold(1.0f64, f64::max);
    if endpoint.norm() > 1e-6 * scale.max(1.0) {
        return Err(ShootingError::NotAnEigenvalue { lambda, residual: endpoint.norm() });
    }
    let mut functions = Vec::with_capacity(m);
    let mut qderivs = Vec::with_capacity(m);
    let mut fact = 1.0;
    for j in 0..m {
        if j > 0 {
            fact *= j as f64;
        }
        functions.push(sol.y[j].iter().map(|&v| v / fact).collect());
        qderivs.push(sol.yq[j].iter().map(|&v| v / fact).collect());
    }
    Ok(EigenfunctionChain { lambda, grid: sol.grid, functions, qderivs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{BoundaryCondition, PotentialFn, ProblemSpec};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_problem_closed_form_endpoint() {
        let spec = ProblemSpec::free();
        let sol = integrate_shooting(&spec, c(PI, 0.0), 0, 1e-10).unwrap();
        let y1 = *sol.y[0].last().unwrap();
        let u1 = *sol.yq[0].last().unwrap();
        assert!(y1.norm() <= 1e-10, "sin(pi) = 0, got {y1}");
        assert_abs_diff_eq!(u1.re, -PI, epsilon = 1e-10);
        assert_abs_diff_eq!(u1.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn free_problem_lambda_zero_trivial() {
        let spec = ProblemSpec::free();
        let sol = integrate_shooting(&spec, Complex64::ZERO, 0, 1e-10).unwrap();
        for i in 0..sol.grid.len() {
            assert_eq!(sol.y[0][i], Complex64::ZERO);
            assert_eq!(sol.yq[0][i], Complex64::ZERO);
        }
    }

    #[test]
    fn initial_conditions_invariant() {
        let spec = ProblemSpec::paper_example();
        let sol = integrate_shooting(&spec, c(2.0, 1.0), 3, 1e-10).unwrap();
        assert_eq!(sol.y[0][0], Complex64::ZERO);
        assert_eq!(sol.yq[0][0], c(2.0, 1.0));
        assert_eq!(sol.yq[1][0], Complex64::ONE);
        assert_eq!(sol.yq[2][0], Complex64::ZERO);
        assert_eq!(sol.yq[3][0], Complex64::ZERO);
        for j in 0..=3 {
            assert_eq!(sol.y[j][0], Complex64::ZERO);
        }
        assert_eq!(sol.grid.points[0], 0.0);
        assert_eq!(*sol.grid.points.last().unwrap(), 1.0);
    }

    #[test]
    fn characteristic_free_closed_form() {
        let spec = ProblemSpec::free();
        let ch = characteristic_values(&spec, c(2.0, 0.0), 1).unwrap();
        assert_abs_diff_eq!(ch.s[0].re, 2.0f64.sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(ch.c[0].re, 2.0 * 2.0f64.cos(), epsilon = 1e-10);
        // derivatives of the closed form s = sin(lambda), c = lambda cos(lambda)
        assert_abs_diff_eq!(ch.s[1].re, 2.0f64.cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(ch.c[1].re, 2.0f64.cos() - 2.0 * 2.0f64.sin(), epsilon = 1e-9);
    }

    #[test]
    fn paper_example_complex_eigenvalue() {
        let spec = ProblemSpec::paper_example();
        let lambda = c(PI, 3.0f64.sqrt() * PI);
        let ch = characteristic_values(&spec, lambda, 0).unwrap();
        assert!(ch.s[0].norm() <= 1e-8, "|s| = {}", ch.s[0].norm());
    }

    #[test]
    fn paper_example_eigenfunction_sin_2pi() {
        let spec = ProblemSpec::paper_example();
        let sol = integrate_shooting(&spec, c(PI, 0.0), 0, 1e-10).unwrap();
        assert!(sol.y[0].last().unwrap().norm() <= 1e-9);
        // phi(x, pi) = (pi / 2 pi) sin(2 pi x) = sin(2 pi x) / 2
        for (i, &x) in sol.grid.points.iter().enumerate() {
            let expect = 0.5 * (2.0 * PI * x).sin();
            assert_abs_diff_eq!(sol.y[0][i].re, expect, epsilon = 1e-9);
            assert_abs_diff_eq!(sol.y[0][i].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wronskian_residuals() {
        let spec = ProblemSpec::free();
        assert!(wronskian_check(&spec, c(3.0, 0.0)).unwrap() <= 1e-9);
        let paper = ProblemSpec::paper_example();
        assert!(wronskian_check(&paper, c(2.0, 1.0)).unwrap() <= 1e-8);
        // lambda = 0 forces both solutions trivial
        assert_eq!(wronskian_check(&paper, Complex64::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn chain_free_single() {
        let spec = ProblemSpec::free();
        let chain = eigenfunction_chain(&spec, c(PI, 0.0), 1).unwrap();
        for (i, &x) in chain.grid.points.iter().enumerate() {
            assert_abs_diff_eq!(chain.functions[0][i].re, (PI * x).sin(), epsilon = 1e-9);
        }
        // odd symmetry in lambda
        let neg = eigenfunction_chain(&spec, c(-PI, 0.0), 1).unwrap();
        for (i, &x) in neg.grid.points.iter().enumerate() {
            assert_abs_diff_eq!(neg.functions[0][i].re, -(PI * x).sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn chain_rejects_non_eigenvalue() {
        let spec = ProblemSpec::free();
        let res = eigenfunction_chain(&spec, c(2.5, 0.0), 1);
        assert!(matches!(res, Err(ShootingError::NotAnEigenvalue { .. })));
    }

    #[test]
    fn paper_example_chain_second_element() {
        // The degenerate double eigenvalue pi: the derivative-built associate
        // y_1 = d/dz phi(x, z)|_pi satisfies the chain equation with
        // T'(pi) = 0, so T(pi) y_1 = 0 and y_1 is proportional to y_0.
        // Closed form: y_1 = sin(2 pi x) / (2 pi) = y_0 / pi.
        let spec = ProblemSpec::paper_example();
        let chain = eigenfunction_chain(&spec, c(PI, 0.0), 2).unwrap();
        for i in 0..chain.grid.len() {
            let expect = chain.functions[0][i] / PI;
            assert!((chain.functions[1][i] - expect).norm() <= 1e-6);
        }
        // its quasi-derivative at 0 is 1, per the z-normalization
        assert_abs_diff_eq!(chain.qderivs[1][0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn variational_derivative_matches_finite_difference() {
        use rand::{Rng, SeedableRng};
        let spec = ProblemSpec::paper_example();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..20 {
            let lambda = c(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let ch = characteristic_values(&spec, lambda, 1).unwrap();
            let plus = characteristic_values(&spec, lambda + h, 0).unwrap();
            let minus = characteristic_values(&spec, lambda - h, 0).unwrap();
            let fd = (plus.s[0] - minus.s[0]) / (2.0 * h);
            let denom = ch.s[1].norm().max(1e-12);
            assert!(
                (ch.s[1] - fd).norm() / denom <= 1e-6,
                "lambda {lambda}: variational {} vs fd {}",
                ch.s[1],
                fd
            );
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let spec = ProblemSpec::paper_example();
        let lambda = c(1.3, 2.1);
        let a = characteristic_values(&spec, lambda, 0).unwrap();
        let b = characteristic_values(&spec, lambda.conj(), 0).unwrap();
        assert!((a.s[0].conj() - b.s[0]).norm() <= 1e-12);
        assert!((a.c[0].conj() - b.c[0]).norm() <= 1e-12);
    }

    #[test]
    fn tolerance_halving_contract() {
        let spec = ProblemSpec::paper_example();
        let lam = c(4.0, 0.5);
        let coarse = characteristic_values_tol(&spec, lam, 0, 1e-6).unwrap();
        let fine = characteristic_values_tol(&spec, lam, 0, 1e-12).unwrap();
        let err_coarse = (coarse.s[0] - fine.s[0]).norm();
        let half = characteristic_values_tol(&spec, lam, 0, 5e-7).unwrap();
        let err_half = (half.s[0] - fine.s[0]).norm();
        assert!(err_half <= err_coarse.max(1e-12) * 2.0, "{err_half} vs {err_coarse}");
    }

    #[test]
    fn entirety_proxy_cauchy_integral() {
        // mean of s over |lambda| = 5 reproduces s(0) = 0
        let spec = ProblemSpec::paper_example();
        let n = 64;
        let mut acc = Complex64::ZERO;
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let lam = 5.0 * c(th.cos(), th.sin());
            acc += characteristic_values(&spec, lam, 0).unwrap().s[0];
        }
        acc /= n as f64;
        assert!(acc.norm() <= 1e-6, "mean-value residual {}", acc.norm());
    }

    #[test]
    fn mixed_bc_chain_accepts_cosine_mode() {
        let spec = ProblemSpec::free().with_bc(BoundaryCondition::Mixed);
        let mu = 0.5 * PI;
        let chain = eigenfunction_chain(&spec, c(mu, 0.0), 1).unwrap();
        for (i, &x) in chain.grid.points.iter().enumerate() {
            assert_abs_diff_eq!(chain.functions[0][i].re, (mu * x).sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn breakpoints_are_grid_points() {
        let spec = ProblemSpec::new(
            "step",
            BoundaryCondition::Dirichlet,
            PotentialFn::sampled(&[(0.0, 0.0), (0.3, 2.0), (1.0, 2.0)], crate::potentials::InterpOrder::Step)
                .unwrap(),
            PotentialFn::zero(),
        );
        let grid = Grid::for_spec(&spec, 100);
        assert!(grid.points.iter().any(|&x| (x - 0.3).abs() < 1e-15));
    }
}
