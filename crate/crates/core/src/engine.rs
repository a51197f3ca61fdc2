//! Outcome distributions under a candidate rule.
//!
//! Three composition modes exist. Classical chaining multiplies `f` values
//! layer by layer. Delayed evaluation sums `f` over every path product.
//! Interference applies `f` to summed path amplitudes. `eval_auto` reads the
//! epistemic state to decide, layer by layer, which mode applies.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::context::{ContextNetwork, Knowability, MAX_PATHS, NORMALIZATION_TOLERANCE};
use crate::error::{Error, Result};
use crate::rule::ProbabilityRule;
use crate::state::{Bracket, EpistemicState};

/// Slack on the unit interval before a value is flagged.
const UNIT_INTERVAL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    /// The layer will be observed: the values are probabilities.
    Probability,
    /// The layer is not (yet) certain to be observed: the values are
    /// propensities only.
    Propensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classical,
    Interference,
    Delayed,
    Mixed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Classical => "classical",
            Method::Interference => "interference",
            Method::Delayed => "delayed",
            Method::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionWarning {
    NotNormalized { sum: f64 },
    OutOfUnitInterval { index: usize, value: f64 },
}

impl fmt::Display for DistributionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionWarning::NotNormalized { sum } => write!(f, "values sum to {sum}"),
            DistributionWarning::OutOfUnitInterval { index, value } => {
                write!(f, "value {index} is {value}, outside [0, 1]")
            }
        }
    }
}

/// What an evaluation was conditioned on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Conditioning {
    /// The nearest observed upstream alternative, as `(layer, label)`.
    pub given: Option<(usize, String)>,
    /// Intermediate layers composed coherently (path never knowable).
    pub unknowable: Vec<usize>,
    /// Intermediate layers whose observation is still pending.
    pub pending: Vec<usize>,
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.given {
            Some((k, label)) => write!(f, "given {label} (layer {k})")?,
            None => f.write_str("prior")?,
        }
        let list = |v: &[usize]| {
            v.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        if !self.unknowable.is_empty() {
            write!(f, "; unknowable layers {}", list(&self.unknowable))?;
        }
        if !self.pending.is_empty() {
            write!(f, "; pending layers {}", list(&self.pending))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub layer: usize,
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
    pub kind: DistributionKind,
    pub method: Method,
    pub conditioning: Conditioning,
    /// Entries from this index on are hypothetical alternatives, which carry
    /// propensities regardless of `kind`.
    pub hypothetical_from: Option<usize>,
    pub warnings: Vec<DistributionWarning>,
}

impl OutcomeDistribution {
    fn new(
        ctx: &ContextNetwork,
        layer: usize,
        probs: Vec<f64>,
        kind: DistributionKind,
        method: Method,
        conditioning: Conditioning,
    ) -> Self {
        let set = &ctx.layers()[layer];
        let mut warnings = Vec::new();
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            warnings.push(DistributionWarning::NotNormalized { sum });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(-UNIT_INTERVAL_SLACK..=1.0 + UNIT_INTERVAL_SLACK).contains(&value) {
                warnings.push(DistributionWarning::OutOfUnitInterval { index, value });
            }
        }
        OutcomeDistribution {
            layer,
            labels: set.labels.clone(),
            probs,
            kind,
            method,
            conditioning,
            hypothetical_from: set.padded_from,
            warnings,
        }
    }

    /// Values for the alternatives that can actually be observed.
    pub fn observable(&self) -> &[f64] {
        &self.probs[..self.hypothetical_from.unwrap_or(self.probs.len())]
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn static_kind(ctx: &ContextNetwork, k: usize) -> DistributionKind {
    if ctx.layers()[k].knowability == Knowability::L3 {
        DistributionKind::Probability
    } else {
        DistributionKind::Propensity
    }
}

fn check_layer(ctx: &ContextNetwork, k: usize) -> Result<()> {
    ctx.layer(k).map(|_| ())
}

fn require_knowable_upstream(ctx: &ContextNetwork, k: usize, what: &str) -> Result<()> {
    if let Some(l) = ctx.layers()[..k]
        .iter()
        .find(|l| l.knowability == Knowability::L1)
    {
        return Err(Error::KnowabilityMismatch(format!(
            "{what} needs path information, but layer {} is knowability level 1",
            l.id
        )));
    }
    Ok(())
}

/// `f` values chained layer by layer: the law of total probability.
fn chain_classical(ctx: &ContextNetwork, k: usize) -> Vec<f64> {
    let f = ctx.rule();
    let mut p: Vec<f64> = ctx.first_layer().iter().map(|&c| f.apply(c)).collect();
    for m in 1..=k {
        let t = ctx.transition_into(m);
        p = (0..t.ncols())
            .map(|to| (0..t.nrows()).map(|from| p[from] * f.apply(t[(from, to)])).sum())
            .collect();
    }
    p
}

/// Amplitudes summed over every path into layer `k`.
pub(crate) fn propagate_amplitudes(ctx: &ContextNetwork, k: usize) -> Vec<Complex64> {
    let mut a = ctx.first_layer().to_vec();
    for m in 1..=k {
        a = step_amplitudes(&a, ctx, m);
    }
    a
}

fn step_amplitudes(a: &[Complex64], ctx: &ContextNetwork, m: usize) -> Vec<Complex64> {
    let t = ctx.transition_into(m);
    (0..t.ncols())
        .map(|to| (0..t.nrows()).map(|from| a[from] * t[(from, to)]).sum())
        .collect()
}

/// Probabilities for layer `k` when every upstream alternative is known.
pub fn eval_classical(ctx: &ContextNetwork, k: usize) -> Result<OutcomeDistribution> {
    check_layer(ctx, k)?;
    require_knowable_upstream(ctx, k, "classical composition")?;
    Ok(OutcomeDistribution::new(
        ctx,
        k,
        chain_classical(ctx, k),
        static_kind(ctx, k),
        Method::Classical,
        Conditioning::default(),
    ))
}

/// Probabilities for layer `k` when no upstream path can ever be known:
/// `f` of the summed path amplitudes.
pub fn eval_interference(ctx: &ContextNetwork, k: usize) -> Result<OutcomeDistribution> {
    check_layer(ctx, k)?;
    if ctx.rule() == ProbabilityRule::Classical {
        return Err(Error::RuleContractViolation(
            "the identity rule gives interference equal to classical chaining".into(),
        ));
    }
    let f = ctx.rule();
    let probs = propagate_amplitudes(ctx, k)
        .into_iter()
        .map(|a| f.apply(a))
        .collect();
    Ok(OutcomeDistribution::new(
        ctx,
        k,
        probs,
        static_kind(ctx, k),
        Method::Interference,
        Conditioning {
            unknowable: (0..k).collect(),
            ..Conditioning::default()
        },
    ))
}

/// Probabilities for layer `k` while upstream observations are pending:
/// `f` of each path product, summed over paths.
pub fn eval_delayed(ctx: &ContextNetwork, k: usize) -> Result<OutcomeDistribution> {
    check_layer(ctx, k)?;
    require_knowable_upstream(ctx, k, "delayed evaluation")?;
    let paths: u128 = ctx.sizes()[..=k].iter().map(|&s| s as u128).product();
    if paths > MAX_PATHS as u128 {
        return Err(Error::TooManyPaths {
            paths,
            limit: MAX_PATHS,
        });
    }
    let f = ctx.rule();
    let mut frontier: Vec<(usize, Complex64)> =
        ctx.first_layer().iter().copied().enumerate().collect();
    for m in 1..=k {
        let t = ctx.transition_into(m);
        frontier = frontier
            .iter()
            .flat_map(|&(from, amp)| (0..t.ncols()).map(move |to| (to, amp * t[(from, to)])))
            .collect();
    }
    let mut probs = vec![0.0; ctx.layers()[k].size()];
    for (end, amp) in frontier {
        probs[end] += f.apply(amp);
    }
    Ok(OutcomeDistribution::new(
        ctx,
        k,
        probs,
        static_kind(ctx, k),
        Method::Delayed,
        Conditioning {
            pending: (0..k).collect(),
            ..Conditioning::default()
        },
    ))
}

/// The distribution over layer `k` implied by the epistemic state.
///
/// Starting after the nearest observed upstream layer, each intermediate
/// layer is composed coherently if it is unknowable (collapsed, or level 1)
/// and incoherently if its observation is pending (level 2 or 3).
pub fn eval_auto(
    ctx: &ContextNetwork,
    state: &EpistemicState,
    k: usize,
) -> Result<OutcomeDistribution> {
    check_layer(ctx, k)?;
    if state.brackets().len() != ctx.num_layers() {
        return Err(Error::ShapeMismatch(format!(
            "state has {} brackets for {} layers",
            state.brackets().len(),
            ctx.num_layers()
        )));
    }
    if state.resolved_outcome(k).is_some() {
        return Err(Error::AlreadyResolved { layer: k });
    }
    let f = ctx.rule();
    let given = (0..k)
        .rev()
        .find_map(|m| state.resolved_outcome(m).map(|j| (m, j)));

    let mut conditioning = Conditioning {
        given: given.map(|(m, j)| (m, ctx.layers()[m].labels[j].clone())),
        ..Conditioning::default()
    };

    // A mixture over the alternatives of the last incoherent checkpoint:
    // weights[i] with amplitude vector amps[i] over the current layer.
    let (mut weights, mut amps, first) = match given {
        Some((m, j)) => {
            let mut e = vec![Complex64::new(0.0, 0.0); ctx.layers()[m].size()];
            e[j] = Complex64::new(1.0, 0.0);
            (vec![1.0], vec![e], m + 1)
        }
        None => (vec![1.0], vec![ctx.first_layer().to_vec()], 1),
    };

    let coherent = |m: usize| {
        state.level(m) == Knowability::L1 || matches!(state.brackets()[m], Bracket::Collapsed(_))
    };

    // The first layer itself when nothing upstream is observed.
    let mut layers_between: Vec<usize> = Vec::new();
    if given.is_none() && k > 0 {
        layers_between.push(0);
    }
    layers_between.extend(first..k);

    let mut current = if given.is_none() { 0 } else { first - 1 };
    for m in layers_between {
        while current < m {
            current += 1;
            amps = amps.iter().map(|a| step_amplitudes(a, ctx, current)).collect();
        }
        if coherent(m) {
            conditioning.unknowable.push(m);
            continue;
        }
        conditioning.pending.push(m);
        let size = ctx.layers()[m].size();
        let mut w = vec![0.0; size];
        for (wi, a) in weights.iter().zip(&amps) {
            for (j, wj) in w.iter_mut().enumerate() {
                *wj += wi * f.apply(a[j]);
            }
        }
        amps = (0..size)
            .map(|j| {
                let mut e = vec![Complex64::new(0.0, 0.0); size];
                e[j] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        weights = w;
    }
    while current < k {
        current += 1;
        amps = amps.iter().map(|a| step_amplitudes(a, ctx, current)).collect();
    }

    if !conditioning.unknowable.is_empty() && f == ProbabilityRule::Classical {
        return Err(Error::RuleContractViolation(
            "the identity rule cannot compose over unknowable layers".into(),
        ));
    }

    let mut probs = vec![0.0; ctx.layers()[k].size()];
    for (wi, a) in weights.iter().zip(&amps) {
        for (j, pj) in probs.iter_mut().enumerate() {
            *pj += wi * f.apply(a[j]);
        }
    }

    let method = match (conditioning.unknowable.is_empty(), conditioning.pending.is_empty()) {
        (true, true) => Method::Classical,
        (false, true) => Method::Interference,
        (true, false) => Method::Delayed,
        (false, false) => Method::Mixed,
    };
    let kind = if state.level(k) == Knowability::L3 && !coherent(k) {
        DistributionKind::Probability
    } else {
        DistributionKind::Propensity
    };
    Ok(OutcomeDistribution::new(
        ctx,
        k,
        probs,
        kind,
        method,
        conditioning,
    ))
}

/// `max_j' |f(sum_j c_j c_jj') - sum_j f(c_j) f(c_jj')|` on the final layer.
///
/// Zero for a single layer. Computed under the context's own rule without the
/// contract checks of the individual evaluators.
pub fn divergence_check(ctx: &ContextNetwork) -> f64 {
    let k = ctx.num_layers() - 1;
    if k == 0 {
        return 0.0;
    }
    let f = ctx.rule();
    let coherent = propagate_amplitudes(ctx, k);
    let classical = chain_classical(ctx, k);
    coherent
        .iter()
        .zip(&classical)
        .map(|(&a, &p)| (f.apply(a) - p).abs())
        .fold(0.0, f64::max)
}
