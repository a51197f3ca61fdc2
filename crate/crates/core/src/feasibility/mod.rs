//! Whether a candidate rule leaves enough free parameters to describe a
//! two-set context `(M, M')` in which the transition amplitudes can be chosen
//! independently of the first set.

mod pad;
mod solver;
mod system;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::random::{random_normalized, rng_for, GENERATOR};
use crate::rule::ProbabilityRule;

pub use pad::{pad_hypothetical, pad_shape};
pub use solver::{
    best_outcome, levenberg_marquardt, numerical_rank, run_restarts, RestartOutcome,
    SolverOptions,
};
pub use system::{build_system, multi_indices, multinomial, ConstraintSystem, ShapeSpec, SystemMode};

/// A restart counts as a solution at or below this residual norm.
pub const FEASIBLE_RESIDUAL: f64 = 1e-9;

/// `NoSolutionFound` is certified when the best residual stays above this.
pub const REFUTATION_THRESHOLD: f64 = 1e-3;

/// Singular values below this fraction of the largest do not count to the
/// Jacobian rank.
pub const RANK_TOLERANCE: f64 = 1e-7;

/// Free real parameters against the independent propensities they must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DofAccount {
    pub unknowns: i64,
    pub conditions: i64,
    /// `unknowns - conditions`.
    pub available: i64,
    /// Independent conditional propensities, `M (M' - 1)`.
    pub required: i64,
    pub first_layer_available: i64,
    pub first_layer_required: i64,
}

impl DofAccount {
    pub fn deficit(&self) -> i64 {
        (self.required - self.available).max(0)
    }
}

/// Counts unknowns and conditions of the residual system for `rule`.
/// Only integer exponents have a finite condition count.
pub fn dof_count(shape: ShapeSpec, rule: ProbabilityRule) -> Result<DofAccount> {
    if rule.polynomial_degree().is_none() {
        return Err(Error::UnsupportedRule(format!(
            "condition counting needs f(x) = |x|^(2g) with integer g, got {rule}"
        )));
    }
    let system = build_system(shape, rule)?;
    let (m, mp) = (shape.m as i64, shape.m_prime as i64);
    let unknowns = system.num_unknowns() as i64;
    let conditions = system.num_residuals() as i64;
    Ok(DofAccount {
        unknowns,
        conditions,
        available: unknowns - conditions,
        required: m * (mp - 1),
        first_layer_available: 2 * m - 1,
        first_layer_required: m - 1,
    })
}

/// `M' >= M - 1`: the counting bound for the squared-modulus rule.
pub fn born_admissible(shape: ShapeSpec) -> bool {
    shape.m_prime + 1 >= shape.m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgumentField {
    Real,
    Complex,
}

/// Parameter count when every amplitude of a `(2, 2)` context lives in the
/// given field: three set normalizations plus the unknowable-path
/// normalization, against `M M' - 1` independent propensities.
pub fn argument_account(shape: ShapeSpec, field: ArgumentField) -> Result<DofAccount> {
    let per = match field {
        ArgumentField::Real => 1,
        ArgumentField::Complex => 2,
    };
    let (m, mp) = (shape.m as i64, shape.m_prime as i64);
    match (shape.m, shape.m_prime) {
        (2, 2) => {
            let unknowns = per * (m + m * mp);
            let conditions = 4;
            Ok(DofAccount {
                unknowns,
                conditions,
                available: unknowns - conditions,
                required: m * mp - 1,
                first_layer_available: per * m - 1,
                first_layer_required: m - 1,
            })
        }
        // One alternative per set: every amplitude is forced.
        (1, 1) => Ok(DofAccount {
            unknowns: 2 * per,
            conditions: 2 * per,
            available: 0,
            required: 0,
            first_layer_available: 0,
            first_layer_required: 0,
        }),
        _ => Err(Error::UnsupportedShape {
            m: shape.m,
            m_prime: shape.m_prime,
            reason: "the real-argument count is defined for (2, 2) and the trivial (1, 1)".into(),
        }),
    }
}

/// The real-argument account: for `(2, 2)`, 6 unknowns and 4 conditions leave
/// 2 free parameters against 3 required.
pub fn real_rule_exclusion(shape: ShapeSpec) -> Result<DofAccount> {
    argument_account(shape, ArgumentField::Real)
}

/// Largest `|sum_j' f(sum_j c_j w_jj') - 1|` over `samples` random first
/// layers normalized under `rule`.
pub fn sampled_independence_check(
    shape: ShapeSpec,
    rule: ProbabilityRule,
    witness: &DMatrix<Complex64>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if witness.nrows() != shape.m || witness.ncols() != shape.m_prime {
        return Err(Error::ShapeMismatch(format!(
            "witness is {}x{}, shape is {shape}",
            witness.nrows(),
            witness.ncols()
        )));
    }
    rule.validate()?;
    let mut rng = rng_for(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let c = random_normalized(&mut rng, shape.m, rule);
        let total: f64 = (0..shape.m_prime)
            .map(|jp| {
                let z: Complex64 = (0..shape.m).map(|j| c[j] * witness[(j, jp)]).sum();
                rule.apply(z)
            })
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    Ok(worst)
}

/// Rank of the propensity map `x -> f(a_jj')` restricted to the null space of
/// the residual Jacobian at `x`: how many independent propensities can be
/// varied locally while the system stays solved.
pub fn propensity_freedom(system: &ConstraintSystem, x: &[f64]) -> usize {
    let shape = system.shape();
    let n = system.num_unknowns();
    let jac = system.jacobian(x);
    let mut square = DMatrix::<f64>::zeros(n.max(jac.nrows()), n);
    square.rows_mut(0, jac.nrows()).copy_from(&jac);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let max = svd.singular_values.max();
    // Rows of V^T whose singular value is negligible span the null space.
    let null: Vec<usize> = (0..v_t.nrows())
        .filter(|&i| svd.singular_values[i] <= RANK_TOLERANCE * max.max(f64::MIN_POSITIVE))
        .collect();
    if null.is_empty() {
        return 0;
    }
    let gamma = system.rule().gamma_value().unwrap_or(1.0);
    let a = shape.to_matrix(x);
    let mut prop = DMatrix::<f64>::zeros(shape.m * shape.m_prime, n);
    for j in 0..shape.m {
        for jp in 0..shape.m_prime {
            let v = shape.var(j, jp);
            let z = a[(j, jp)];
            let nsq = z.norm_sqr();
            let slope = if nsq > 0.0 {
                gamma * nsq.powf(gamma - 1.0)
            } else if gamma == 1.0 {
                1.0
            } else {
                0.0
            };
            prop[(v, 2 * v)] = slope * 2.0 * z.re;
            prop[(v, 2 * v + 1)] = slope * 2.0 * z.im;
        }
    }
    let basis = DMatrix::from_fn(n, null.len(), |r, c| v_t[(null[c], r)]);
    let scale = prop.clone().singular_values().max();
    if scale <= 0.0 {
        return 0;
    }
    (prop * basis)
        .singular_values()
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * scale)
        .count()
}

/// A transition matrix in serializable row-major form.
pub type Amplitudes = Vec<Vec<Complex64>>;

pub fn matrix_rows(a: &DMatrix<Complex64>) -> Amplitudes {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn rows_matrix(rows: &Amplitudes) -> DMatrix<Complex64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Feasible {
        residual: f64,
        restart: usize,
        witness: Amplitudes,
    },
    NoSolutionFound {
        best_residual: f64,
        restarts: usize,
        threshold: f64,
        /// Whether every restart stayed above `threshold`.
        certified: bool,
        best: Amplitudes,
    },
    AnalyticallyInadmissible {
        reason: String,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Feasible { .. } => "feasible",
            Verdict::NoSolutionFound { .. } => "no_solution_found",
            Verdict::AnalyticallyInadmissible { .. } => "analytically_inadmissible",
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible { .. })
    }

    /// Best residual reached, if a solve ran.
    pub fn residual(&self) -> Option<f64> {
        match self {
            Verdict::Feasible { residual, .. } => Some(*residual),
            Verdict::NoSolutionFound { best_residual, .. } => Some(*best_residual),
            Verdict::AnalyticallyInadmissible { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<DMatrix<Complex64>> {
        match self {
            Verdict::Feasible { witness, .. } => Some(rows_matrix(witness)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub restarts: usize,
    /// Restarts that reached the feasibility threshold.
    pub converged: usize,
    pub total_iterations: usize,
    pub best_restart: Option<usize>,
    pub best_iterations: Option<usize>,
    pub worst_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub shape: ShapeSpec,
    pub rule: ProbabilityRule,
    pub mode: Option<SystemMode>,
    pub unknowns: usize,
    pub residuals: usize,
    pub verdict: Verdict,
    pub dof: Option<DofAccount>,
    pub born_bound: bool,
    /// Rank of the residual Jacobian at the best point.
    pub jacobian_rank: Option<usize>,
    /// Independent directions in which the propensities `f(a_jj')` can move
    /// without leaving the solution set, at a feasible witness. Compare with
    /// `dof.required`.
    pub propensity_freedom: Option<usize>,
    pub seed: u64,
    pub generator: String,
    pub trace: SolverTrace,
}

/// Multi-start solve of `system`; always returns a report.
pub fn solve(system: &ConstraintSystem, restarts: usize, seed: u64) -> FeasibilityReport {
    solve_with(system, restarts, seed, &SolverOptions::default())
}

pub fn solve_with(
    system: &ConstraintSystem,
    restarts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> FeasibilityReport {
    let restarts = restarts.max(1);
    let shape = system.shape();
    let outcomes = run_restarts(system, restarts, seed, opts);
    let best = best_outcome(&outcomes).expect("at least one restart");
    let converged = outcomes
        .iter()
        .filter(|o| o.residual <= FEASIBLE_RESIDUAL)
        .count();
    let witness = matrix_rows(&shape.to_matrix(&best.x));
    let verdict = if best.residual <= FEASIBLE_RESIDUAL {
        Verdict::Feasible {
            residual: best.residual,
            restart: best.index,
            witness,
        }
    } else {
        Verdict::NoSolutionFound {
            best_residual: best.residual,
            restarts,
            threshold: REFUTATION_THRESHOLD,
            certified: best.residual > REFUTATION_THRESHOLD,
            best: witness,
        }
    };
    let trace = SolverTrace {
        restarts,
        converged,
        total_iterations: outcomes.iter().map(|o| o.iterations).sum(),
        best_restart: Some(best.index),
        best_iterations: Some(best.iterations),
        worst_residual: outcomes.iter().map(|o| o.residual).reduce(f64::max),
    };
    FeasibilityReport {
        shape,
        rule: system.rule(),
        mode: Some(system.mode()),
        unknowns: system.num_unknowns(),
        residuals: system.num_residuals(),
        verdict,
        dof: dof_count(shape, system.rule()).ok(),
        born_bound: born_admissible(shape),
        jacobian_rank: Some(numerical_rank(&system.jacobian(&best.x), RANK_TOLERANCE)),
        propensity_freedom: (best.residual <= FEASIBLE_RESIDUAL)
            .then(|| propensity_freedom(system, &best.x)),
        seed,
        generator: GENERATOR.to_string(),
        trace,
    }
}

/// The full verdict for `(shape, rule)`: analytic exclusions first, then a
/// numerical solve.
pub fn assess(
    shape: ShapeSpec,
    rule: ProbabilityRule,
    restarts: usize,
    seed: u64,
) -> Result<FeasibilityReport> {
    rule.validate()?;
    let inadmissible = |reason: String, dof: Option<DofAccount>| FeasibilityReport {
        shape,
        rule,
        mode: None,
        unknowns: shape.unknowns(),
        residuals: 0,
        verdict: Verdict::AnalyticallyInadmissible { reason },
        dof,
        born_bound: born_admissible(shape),
        jacobian_rank: None,
        propensity_freedom: None,
        seed,
        generator: GENERATOR.to_string(),
        trace: SolverTrace {
            restarts: 0,
            converged: 0,
            total_iterations: 0,
            best_restart: None,
            best_iterations: None,
            worst_residual: None,
        },
    };
    if rule == ProbabilityRule::Classical {
        return Ok(inadmissible(
            "the identity rule makes interference equal classical chaining".into(),
            None,
        ));
    }
    if rule.is_born() && !born_admissible(shape) {
        return Ok(inadmissible(
            format!(
                "M' = {} is below M - 1 = {}; too few free parameters",
                shape.m_prime,
                shape.m - 1
            ),
            dof_count(shape, rule).ok(),
        ));
    }
    let system = build_system(shape, rule)?;
    Ok(solve(&system, restarts, seed))
}
