//! Multi-start damped least squares.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::system::ConstraintSystem;
use crate::random::rng_for;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Damped steps attempted per restart, accepted or not.
    pub max_iterations: usize,
    /// Residual norm below which a restart stops early.
    pub stop_residual: f64,
    pub initial_damping: f64,
    /// A restart gives up once the damping exceeds this.
    pub max_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 500,
            stop_residual: 1e-14,
            initial_damping: 1e-3,
            max_damping: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    pub residual: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Random starting point: every real unknown drawn from `N(0, 1/(2M'))`, so
/// that rows start near unit norm.
fn initial_point<R: Rng + ?Sized>(system: &ConstraintSystem, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 / (2.0 * system.shape().m_prime as f64)).sqrt();
    let normal = Normal::new(0.0, sd).expect("finite positive deviation");
    (0..system.num_unknowns()).map(|_| normal.sample(rng)).collect()
}

/// Levenberg-Marquardt from `x0`: solve `(J^T J + lambda I) d = -J^T r`,
/// shrink `lambda` on success and grow it on failure.
pub fn levenberg_marquardt(
    system: &ConstraintSystem,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut x = x0;
    let mut r = system.residuals(&x);
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;
    let mut jac: DMatrix<f64> = system.jacobian(&x);
    let mut iterations = 0;

    while iterations < opts.max_iterations && cost.sqrt() > opts.stop_residual {
        iterations += 1;
        let g: DVector<f64> = jac.tr_mul(&r);
        if g.amax() < 1e-300 {
            break;
        }
        let mut a = jac.tr_mul(&jac);
        for i in 0..n {
            a[(i, i)] += lambda;
        }
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => {
                lambda *= 4.0;
                if lambda > opts.max_damping {
                    break;
                }
                continue;
            }
        };
        let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let r_new = system.residuals(&candidate);
        let cost_new = r_new.norm_squared();
        if cost_new.is_finite() && cost_new < cost {
            x = candidate;
            r = r_new;
            cost = cost_new;
            jac = system.jacobian(&x);
            lambda = (lambda / 3.0).max(1e-15);
        } else {
            lambda *= 4.0;
            if lambda > opts.max_damping {
                break;
            }
        }
    }
    (x, cost.sqrt(), iterations)
}

/// Runs `restarts` independent restarts in parallel. Restart `i` draws from
/// stream `i` of the generator seeded with `seed`; outcomes come back in
/// restart order whatever the scheduling.
pub fn run_restarts(
    system: &ConstraintSystem,
    restarts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Vec<RestartOutcome> {
    (0..restarts)
        .into_par_iter()
        .map(|index| {
            let mut rng = rng_for(seed, index as u64);
            let x0 = initial_point(system, &mut rng);
            let (x, residual, iterations) = levenberg_marquardt(system, x0, opts);
            RestartOutcome {
                index,
                residual,
                x,
                iterations,
            }
        })
        .collect()
}

/// Smallest residual, ties to the lowest restart index.
pub fn best_outcome(outcomes: &[RestartOutcome]) -> Option<&RestartOutcome> {
    outcomes.iter().fold(None, |best, o| match best {
        Some(b) if b.residual <= o.residual || o.residual.is_nan() => Some(b),
        _ => Some(o),
    })
}

/// Numerical rank: singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
