//! Seeded random amplitudes and contexts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::context::{build_context, AmplitudeAssignment, ContextNetwork, Knowability};
use crate::error::Result;
use crate::rule::ProbabilityRule;

/// Name of the generator behind every seeded computation, recorded in reports.
pub const GENERATOR: &str = "ChaCha8Rng";

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A standard complex Gaussian (independent N(0, 1/2) parts).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A random vector with `sum_j f(c_j) = 1` under `rule`.
pub fn random_normalized<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    rule: ProbabilityRule,
) -> Vec<Complex64> {
    loop {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| match rule {
                ProbabilityRule::Classical => Complex64::new(rng.random::<f64>(), 0.0),
                _ => complex_gaussian(rng),
            })
            .collect();
        let total: f64 = v.iter().map(|&c| rule.apply(c)).sum();
        if total > 1e-6 {
            let scale = match rule {
                ProbabilityRule::Classical => 1.0 / total,
                ProbabilityRule::GammaModulus(g) => total.powf(-1.0 / (2.0 * g)),
            };
            v.iter_mut().for_each(|c| *c *= scale);
            return v;
        }
    }
}

/// An `m x n` matrix whose rows are each normalized under `rule`.
pub fn random_row_normalized<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n: usize,
    rule: ProbabilityRule,
) -> DMatrix<Complex64> {
    let rows: Vec<Vec<Complex64>> = (0..m).map(|_| random_normalized(rng, n, rule)).collect();
    DMatrix::from_fn(m, n, |i, j| rows[i][j])
}

/// Orthonormalizes the rows of `a` in place by modified Gram-Schmidt.
/// Returns false if the rows are numerically dependent.
pub fn orthonormalize_rows(a: &mut DMatrix<Complex64>) -> bool {
    for i in 0..a.nrows() {
        for k in 0..i {
            let proj: Complex64 = (0..a.ncols()).map(|j| a[(i, j)] * a[(k, j)].conj()).sum();
            for j in 0..a.ncols() {
                let v = a[(k, j)];
                a[(i, j)] -= proj * v;
            }
        }
        let norm = (0..a.ncols())
            .map(|j| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm < 1e-10 {
            return false;
        }
        for j in 0..a.ncols() {
            a[(i, j)] /= norm;
        }
    }
    true
}

/// An `m x n` matrix with orthonormal rows. Requires `m <= n`.
pub fn random_row_orthonormal<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n: usize,
) -> DMatrix<Complex64> {
    assert!(m <= n, "{m} orthonormal rows do not fit in dimension {n}");
    loop {
        let mut a = DMatrix::from_fn(m, n, |_, _| complex_gaussian(rng));
        if orthonormalize_rows(&mut a) {
            return a;
        }
    }
}

/// A Born-rule context with the given layer sizes and knowability levels.
/// Transitions have orthonormal rows where the shape allows it and are
/// merely row-normalized otherwise, unless `orthonormal` is false.
pub fn random_context<R: Rng + ?Sized>(
    rng: &mut R,
    layers: &[(usize, Knowability)],
    orthonormal: bool,
) -> Result<ContextNetwork> {
    let rule = ProbabilityRule::BORN;
    let first = random_normalized(rng, layers[0].0, rule);
    let transitions = layers
        .windows(2)
        .map(|w| {
            let (m, n) = (w[0].0, w[1].0);
            if orthonormal && m <= n {
                random_row_orthonormal(rng, m, n)
            } else {
                random_row_normalized(rng, m, n, rule)
            }
        })
        .collect();
    build_context(
        "random",
        layers,
        AmplitudeAssignment::new(first, transitions),
        rule,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_under_each_rule() {
        let mut rng = rng_for(7, 0);
        for rule in [
            ProbabilityRule::BORN,
            ProbabilityRule::GammaModulus(2.0),
            ProbabilityRule::GammaModulus(0.75),
            ProbabilityRule::Classical,
        ] {
            let v = random_normalized(&mut rng, 4, rule);
            let s: f64 = v.iter().map(|&c| rule.apply(c)).sum();
            assert!((s - 1.0).abs() < 1e-12, "{rule}");
        }
    }

    #[test]
    fn orthonormal_rows() {
        let mut rng = rng_for(1, 0);
        let a = random_row_orthonormal(&mut rng, 3, 5);
        let g = &a * a.adjoint();
        for i in 0..3 {
            for k in 0..3 {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((g[(i, k)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_for(3, 1).random();
        let b: f64 = rng_for(3, 1).random();
        let c: f64 = rng_for(3, 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
