//! Brute-force and Monte Carlo references for classical composition.
//!
//! Nothing here reuses the engine: paths are enumerated one by one and
//! samples are drawn alternative by alternative.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::context::{ContextNetwork, Knowability, MAX_PATHS};
use crate::error::{Error, Result};
use crate::random::{rng_for, GENERATOR};

/// Trials drawn from one generator stream. Blocks are fixed so that counts do
/// not depend on how many workers run them.
pub const BLOCK_TRIALS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub trials: u64,
    pub freq: Vec<f64>,
    /// Path-enumerated probabilities.
    pub exact: Vec<f64>,
    /// Binomial standard error `sqrt(p(1-p)/trials)` of each frequency.
    pub sigma: Vec<f64>,
    pub seed: u64,
    pub generator: String,
}

impl FrequencyTable {
    /// Largest `|freq - exact|` in units of `sigma`. Alternatives with zero
    /// spread count only if their frequency is off at all.
    pub fn max_z(&self) -> f64 {
        self.freq
            .iter()
            .zip(&self.exact)
            .zip(&self.sigma)
            .map(|((&f, &p), &s)| {
                let d = (f - p).abs();
                if s > 0.0 {
                    d / s
                } else if d > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

fn require_sampleable(ctx: &ContextNetwork, what: &str) -> Result<()> {
    if let Some(l) = ctx.layers().iter().find(|l| l.knowability == Knowability::L1) {
        return Err(Error::KnowabilityMismatch(format!(
            "{what} is defined only where paths can be known, but layer {} is knowability level 1",
            l.id
        )));
    }
    Ok(())
}

/// Copy of `ctx` with every layer raised to level 3: each path is recorded.
pub fn classicalize(ctx: &ContextNetwork) -> Result<ContextNetwork> {
    let mut layers = ctx.layers().to_vec();
    for l in &mut layers {
        l.knowability = Knowability::L3;
    }
    ContextNetwork::from_sets(ctx.name(), layers, ctx.amplitudes().clone(), ctx.rule())
}

/// Exact distribution over the final layer by summing every path's product
/// of `f` values.
pub fn enumerate_paths(ctx: &ContextNetwork) -> Result<Vec<f64>> {
    require_sampleable(ctx, "path enumeration")?;
    let paths = ctx.path_count();
    if paths > MAX_PATHS as u128 {
        return Err(Error::TooManyPaths {
            paths,
            limit: MAX_PATHS,
        });
    }
    let last = ctx.num_layers() - 1;
    let mut out = vec![0.0; ctx.layers()[last].size()];
    let f = ctx.rule();
    for (j, &c) in ctx.first_layer().iter().enumerate() {
        descend(ctx, 0, j, f.apply(c), &mut out);
    }
    Ok(out)
}

fn descend(ctx: &ContextNetwork, layer: usize, at: usize, weight: f64, out: &mut [f64]) {
    if layer + 1 == ctx.num_layers() {
        out[at] += weight;
        return;
    }
    let t = ctx.transition_into(layer + 1);
    for to in 0..t.ncols() {
        descend(ctx, layer + 1, to, weight * ctx.rule().apply(t[(at, to)]), out);
    }
}

/// Cumulative weights for inverse-transform sampling.
struct Sampler {
    first: Vec<f64>,
    rows: Vec<Vec<Vec<f64>>>,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    let target = u * cum[cum.len() - 1];
    cum.iter()
        .position(|&c| target < c)
        .unwrap_or_else(|| {
            // Rounding at the top end: take the last alternative with weight.
            let mut i = cum.len() - 1;
            while i > 0 && cum[i] == cum[i - 1] {
                i -= 1;
            }
            i
        })
}

impl Sampler {
    fn new(ctx: &ContextNetwork) -> Self {
        let f = ctx.rule();
        let first = cumulative(ctx.first_layer().iter().map(|&c| f.apply(c)));
        let rows = (1..ctx.num_layers())
            .map(|k| {
                let t = ctx.transition_into(k);
                (0..t.nrows())
                    .map(|i| cumulative((0..t.ncols()).map(|j| f.apply(t[(i, j)]))))
                    .collect()
            })
            .collect();
        Sampler { first, rows }
    }

    fn trial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut at = pick(&self.first, rng.random());
        for rows in &self.rows {
            at = pick(&rows[at], rng.random());
        }
        at
    }
}

/// Samples `trials` runs alternative by alternative with probabilities
/// `f(c)`, and tallies the final alternative.
pub fn mc_sample_classical(ctx: &ContextNetwork, trials: u64, seed: u64) -> Result<FrequencyTable> {
    require_sampleable(ctx, "sampling")?;
    let exact = enumerate_paths(ctx)?;
    let sampler = Sampler::new(ctx);
    let n = exact.len();
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(seed, b);
            let len = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut counts = vec![0u64; n];
            for _ in 0..len {
                counts[sampler.trial(&mut rng)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let t = trials.max(1) as f64;
    let freq = counts.iter().map(|&c| c as f64 / t).collect();
    let sigma = exact
        .iter()
        .map(|&p| (p * (1.0 - p)).max(0.0).sqrt() / t.sqrt())
        .collect();
    Ok(FrequencyTable {
        labels: ctx.layers()[ctx.num_layers() - 1].labels.clone(),
        counts,
        trials,
        freq,
        exact,
        sigma,
        seed,
        generator: GENERATOR.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{build_context, AmplitudeAssignment};
    use crate::engine::{eval_classical, eval_interference};
    use crate::rule::ProbabilityRule;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mz(first: Knowability) -> ContextNetwork {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        build_context(
            "mz",
            &[(2, first), (2, Knowability::L3)],
            AmplitudeAssignment::new(
                vec![c(h, 0.0), c(h, 0.0)],
                vec![AmplitudeAssignment::matrix(&[
                    &[c(h, 0.0), c(0.0, h)],
                    &[c(h, 0.0), c(0.0, -h)],
                ])],
            ),
            ProbabilityRule::BORN,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_mz_paths() {
        let p = enumerate_paths(&mz(Knowability::L3)).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deterministic_chain_is_forced() {
        let ctx = build_context(
            "forced",
            &[(2, Knowability::L3), (2, Knowability::L3)],
            AmplitudeAssignment::new(
                vec![c(1.0, 0.0), c(0.0, 0.0)],
                vec![AmplitudeAssignment::matrix(&[
                    &[c(1.0, 0.0), c(0.0, 0.0)],
                    &[c(0.0, 0.0), c(1.0, 0.0)],
                ])],
            ),
            ProbabilityRule::BORN,
        )
        .unwrap();
        let t = mc_sample_classical(&ctx, 1000, 5).unwrap();
        assert_eq!(t.counts, vec![1000, 0]);
    }

    #[test]
    fn single_layer_is_f_of_c() {
        let ctx = build_context(
            "one",
            &[(2, Knowability::L3)],
            AmplitudeAssignment::new(vec![c(0.6, 0.0), c(0.0, 0.8)], vec![]),
            ProbabilityRule::BORN,
        )
        .unwrap();
        let p = enumerate_paths(&ctx).unwrap();
        assert!((p[0] - 0.36).abs() < 1e-15 && (p[1] - 0.64).abs() < 1e-15);
    }

    #[test]
    fn level_one_is_refused() {
        assert!(matches!(
            mc_sample_classical(&mz(Knowability::L1), 10, 0),
            Err(Error::KnowabilityMismatch(_))
        ));
        assert!(matches!(
            enumerate_paths(&mz(Knowability::L1)),
            Err(Error::KnowabilityMismatch(_))
        ));
    }

    #[test]
    fn counts_do_not_depend_on_scheduling() {
        let ctx = mz(Knowability::L3);
        let a = mc_sample_classical(&ctx, 200_000, 9).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_sample_classical(&ctx, 200_000, 9).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>(), 200_000);
    }

    #[test]
    fn sampling_cannot_reproduce_interference() {
        let ctx = mz(Knowability::L1);
        let interference = eval_interference(&ctx, 1).unwrap();
        let t = mc_sample_classical(&classicalize(&ctx).unwrap(), 100_000, 1).unwrap();
        assert!(t.max_z() < 5.0);
        assert!(((t.exact[0] - interference.probs[0]).abs() - 0.5).abs() < 1e-12);
        let classical = eval_classical(&classicalize(&ctx).unwrap(), 1).unwrap();
        assert!((classical.probs[0] - t.exact[0]).abs() < 1e-15);
    }

    #[test]
    fn pick_skips_zero_weight_tail() {
        let cum = cumulative([0.5, 0.5, 0.0].into_iter());
        assert_eq!(pick(&cum, 0.25), 0);
        assert_eq!(pick(&cum, 0.75), 1);
        assert_eq!(pick(&cum, 1.0), 1);
    }
}
