//! Experimental contexts as linear chains of complete alternative sets.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::ProbabilityRule;

/// Absolute tolerance on every normalization sum checked at build time.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Upper bound on the number of directed paths through a context.
pub const MAX_PATHS: u64 = 1_000_000;

/// Whether it can ever become known which alternative of a set came true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Knowability {
    /// No alternative will ever be known to come true.
    L1,
    /// It may become known which alternative is true.
    L2,
    /// It will become known which alternative is true.
    L3,
}

impl Knowability {
    pub fn level(self) -> u8 {
        match self {
            Knowability::L1 => 1,
            Knowability::L2 => 2,
            Knowability::L3 => 3,
        }
    }

    pub fn from_level(level: u8) -> Result<Self> {
        match level {
            1 => Ok(Knowability::L1),
            2 => Ok(Knowability::L2),
            3 => Ok(Knowability::L3),
            other => Err(Error::InvalidKnowability(other)),
        }
    }
}

impl TryFrom<u8> for Knowability {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Knowability::from_level(v)
    }
}

impl From<Knowability> for u8 {
    fn from(k: Knowability) -> u8 {
        k.level()
    }
}

impl fmt::Display for Knowability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.level())
    }
}

/// A complete set of mutually exclusive alternatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeSet {
    pub id: usize,
    pub labels: Vec<String>,
    pub knowability: Knowability,
    /// Original size before hypothetical alternatives were appended.
    pub padded_from: Option<usize>,
}

impl AlternativeSet {
    /// A set with the default labels `A1, A2, ...` carrying one prime per layer
    /// after the first (`A1'`, `A1''`, ...).
    pub fn with_default_labels(id: usize, size: usize, knowability: Knowability) -> Self {
        AlternativeSet {
            id,
            labels: (0..size).map(|j| default_label(id, j)).collect(),
            knowability,
            padded_from: None,
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn is_hypothetical(&self, j: usize) -> bool {
        self.padded_from.is_some_and(|m| j >= m)
    }
}

pub fn default_label(layer: usize, j: usize) -> String {
    format!("A{}{}", j + 1, "'".repeat(layer))
}

/// Complex amplitudes: `c_j` for the first layer and one `M x M'` matrix
/// `c_{jj'}` per consecutive layer pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeAssignment {
    pub first_layer: Vec<Complex64>,
    pub transitions: Vec<DMatrix<Complex64>>,
}

impl AmplitudeAssignment {
    pub fn new(first_layer: Vec<Complex64>, transitions: Vec<DMatrix<Complex64>>) -> Self {
        AmplitudeAssignment {
            first_layer,
            transitions,
        }
    }

    /// Builds a transition matrix from row slices.
    pub fn matrix(rows: &[&[Complex64]]) -> DMatrix<Complex64> {
        let ncols = rows.first().map_or(0, |r| r.len());
        DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
    }
}

/// Non-fatal findings from validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ValidationWarning {
    /// Two consecutive level-1 sets. Permitted, but nothing about such chains
    /// is derived beyond the recursive amplitude model.
    AdjacentUnknowableLayers { first: usize, second: usize },
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationWarning::AdjacentUnknowableLayers { first, second } => {
                write!(f, "layers {first} and {second} are both knowability level 1")
            }
        }
    }
}

/// A validated experimental context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextNetwork {
    name: String,
    layers: Vec<AlternativeSet>,
    amplitudes: AmplitudeAssignment,
    rule: ProbabilityRule,
    warnings: Vec<ValidationWarning>,
}

/// Builds a context with default labels from `(size, knowability)` pairs.
pub fn build_context(
    name: impl Into<String>,
    layers: &[(usize, Knowability)],
    amplitudes: AmplitudeAssignment,
    rule: ProbabilityRule,
) -> Result<ContextNetwork> {
    if layers.is_empty() {
        return Err(Error::EmptyContext);
    }
    let sets = layers
        .iter()
        .enumerate()
        .map(|(id, &(size, k))| AlternativeSet::with_default_labels(id, size, k))
        .collect();
    ContextNetwork::from_sets(name, sets, amplitudes, rule)
}

impl ContextNetwork {
    pub fn from_sets(
        name: impl Into<String>,
        layers: Vec<AlternativeSet>,
        amplitudes: AmplitudeAssignment,
        rule: ProbabilityRule,
    ) -> Result<Self> {
        rule.validate()?;
        let warnings = validate(&layers, &amplitudes, rule)?;
        Ok(ContextNetwork {
            name: name.into(),
            layers,
            amplitudes,
            rule,
            warnings,
        })
    }

    /// Revalidates the same network under another rule.
    pub fn with_rule(&self, rule: ProbabilityRule) -> Result<Self> {
        ContextNetwork::from_sets(
            self.name.clone(),
            self.layers.clone(),
            self.amplitudes.clone(),
            rule,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[AlternativeSet] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> Result<&AlternativeSet> {
        self.layers.get(k).ok_or(Error::LayerOutOfRange {
            layer: k,
            layers: self.layers.len(),
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.layers.iter().map(AlternativeSet::size).collect()
    }

    pub fn amplitudes(&self) -> &AmplitudeAssignment {
        &self.amplitudes
    }

    pub fn first_layer(&self) -> &[Complex64] {
        &self.amplitudes.first_layer
    }

    /// The matrix of amplitudes leading into layer `k` (`k >= 1`).
    pub fn transition_into(&self, k: usize) -> &DMatrix<Complex64> {
        &self.amplitudes.transitions[k - 1]
    }

    pub fn rule(&self) -> ProbabilityRule {
        self.rule
    }

    pub fn warnings(&self) -> &[ValidationWarning] {
        &self.warnings
    }

    /// Number of directed paths from the first layer into each alternative of
    /// the final layer, summed.
    pub fn path_count(&self) -> u128 {
        self.layers.iter().map(|l| l.size() as u128).product()
    }
}

fn validate(
    layers: &[AlternativeSet],
    amplitudes: &AmplitudeAssignment,
    rule: ProbabilityRule,
) -> Result<Vec<ValidationWarning>> {
    let last = layers.last().ok_or(Error::EmptyContext)?;

    for (k, layer) in layers.iter().enumerate() {
        if layer.id != k {
            return Err(Error::ShapeMismatch(format!(
                "layer at position {k} carries id {}",
                layer.id
            )));
        }
        if layer.labels.is_empty() {
            return Err(Error::ShapeMismatch(format!("layer {k} has no alternatives")));
        }
        let mut seen = HashSet::new();
        for label in &layer.labels {
            check_label(label)?;
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidLabel {
                    label: label.clone(),
                    reason: format!("duplicate within layer {k}"),
                });
            }
        }
        if let Some(m) = layer.padded_from {
            if m == 0 || m > layer.size() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {k} padded_from {m} outside 1..={}",
                    layer.size()
                )));
            }
        }
    }

    if last.knowability != Knowability::L3 {
        return Err(Error::FinalLayerNotObservable {
            layer: last.id,
            level: last.knowability.level(),
        });
    }

    if amplitudes.first_layer.len() != layers[0].size() {
        return Err(Error::ShapeMismatch(format!(
            "first layer has {} amplitudes for {} alternatives",
            amplitudes.first_layer.len(),
            layers[0].size()
        )));
    }
    if amplitudes.transitions.len() + 1 != layers.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} transition matrices for {} layers",
            amplitudes.transitions.len(),
            layers.len()
        )));
    }
    for (i, t) in amplitudes.transitions.iter().enumerate() {
        let (rows, cols) = (layers[i].size(), layers[i + 1].size());
        if t.nrows() != rows || t.ncols() != cols {
            return Err(Error::ShapeMismatch(format!(
                "transition {i} is {}x{}, expected {rows}x{cols}",
                t.nrows(),
                t.ncols()
            )));
        }
    }

    let paths: u128 = layers.iter().map(|l| l.size() as u128).product();
    if paths > MAX_PATHS as u128 {
        return Err(Error::ContextTooLarge {
            paths,
            limit: MAX_PATHS,
        });
    }

    let mut rows = vec![("first layer".to_string(), amplitudes.first_layer.clone())];
    for (i, t) in amplitudes.transitions.iter().enumerate() {
        for r in 0..t.nrows() {
            rows.push((
                format!("transition {i} row {r}"),
                t.row(r).iter().copied().collect(),
            ));
        }
    }
    for (location, row) in &rows {
        check_amplitudes(row, rule, location)?;
    }
    for (location, row) in rows {
        check_sum(&row, rule, location)?;
    }

    let warnings = layers
        .windows(2)
        .filter(|w| w[0].knowability == Knowability::L1 && w[1].knowability == Knowability::L1)
        .map(|w| ValidationWarning::AdjacentUnknowableLayers {
            first: w[0].id,
            second: w[1].id,
        })
        .collect();
    Ok(warnings)
}

fn check_label(label: &str) -> Result<()> {
    let bad = |reason: &str| {
        Err(Error::InvalidLabel {
            label: label.to_string(),
            reason: reason.to_string(),
        })
    };
    if label.is_empty() {
        return bad("empty");
    }
    if label.starts_with('c') {
        return bad("labels may not start with 'c'");
    }
    if label
        .chars()
        .any(|ch| ch.is_whitespace() || "[]()|+,".contains(ch))
    {
        return bad("contains whitespace or one of []()|+,");
    }
    Ok(())
}

fn check_amplitudes(values: &[Complex64], rule: ProbabilityRule, location: &str) -> Result<()> {
    for (j, c) in values.iter().enumerate() {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::InvalidAmplitude {
                location: format!("{location} entry {j}"),
                reason: "not finite".into(),
            });
        }
        if rule == ProbabilityRule::Classical && (c.im != 0.0 || c.re < 0.0) {
            return Err(Error::InvalidAmplitude {
                location: format!("{location} entry {j}"),
                reason: "the classical rule takes real nonnegative propensities".into(),
            });
        }
    }
    Ok(())
}

fn check_sum(values: &[Complex64], rule: ProbabilityRule, location: String) -> Result<()> {
    let sum: f64 = values.iter().map(|&c| rule.apply(c)).sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NormalizationViolation {
            location,
            sum,
            tolerance: NORMALIZATION_TOLERANCE,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mz_amplitudes() -> AmplitudeAssignment {
        let h = FRAC_1_SQRT_2;
        AmplitudeAssignment::new(
            vec![c(h, 0.0), c(h, 0.0)],
            vec![AmplitudeAssignment::matrix(&[
                &[c(h, 0.0), c(0.0, h)],
                &[c(h, 0.0), c(0.0, -h)],
            ])],
        )
    }

    #[test]
    fn builds_mach_zehnder() {
        let ctx = build_context(
            "mz",
            &[(2, Knowability::L3), (2, Knowability::L3)],
            mz_amplitudes(),
            ProbabilityRule::BORN,
        )
        .unwrap();
        assert_eq!(ctx.sizes(), vec![2, 2]);
        assert_eq!(ctx.layer(1).unwrap().labels, vec!["A1'", "A2'"]);
        assert!(ctx.warnings().is_empty());
    }

    #[test]
    fn single_outcome_context() {
        let ctx = build_context(
            "trivial",
            &[(1, Knowability::L3)],
            AmplitudeAssignment::new(vec![c(1.0, 0.0)], vec![]),
            ProbabilityRule::BORN,
        )
        .unwrap();
        assert_eq!(ctx.path_count(), 1);
    }

    #[test]
    fn rejects_unnormalized_first_layer() {
        let mut amps = mz_amplitudes();
        amps.first_layer = vec![c(0.9, 0.0), c(0.9, 0.0)];
        let err = build_context(
            "bad",
            &[(2, Knowability::L3), (2, Knowability::L3)],
            amps,
            ProbabilityRule::BORN,
        )
        .unwrap_err();
        match err {
            Error::NormalizationViolation { sum, .. } => assert!((sum - 1.62).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unobservable_final_layer() {
        let err = build_context(
            "bad",
            &[(2, Knowability::L3), (2, Knowability::L2)],
            mz_amplitudes(),
            ProbabilityRule::BORN,
        )
        .unwrap_err();
        assert_eq!(err, Error::FinalLayerNotObservable { layer: 1, level: 2 });
    }

    #[test]
    fn rejects_shape_mismatch() {
        let err = build_context(
            "bad",
            &[(2, Knowability::L3), (3, Knowability::L3)],
            mz_amplitudes(),
            ProbabilityRule::BORN,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
        assert_eq!(
            build_context("e", &[], mz_amplitudes(), ProbabilityRule::BORN).unwrap_err(),
            Error::EmptyContext
        );
    }

    #[test]
    fn classical_rule_needs_real_propensities() {
        let err = build_context(
            "mz",
            &[(2, Knowability::L3), (2, Knowability::L3)],
            mz_amplitudes(),
            ProbabilityRule::Classical,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidAmplitude { .. }));

        let amps = AmplitudeAssignment::new(
            vec![c(0.5, 0.0), c(0.5, 0.0)],
            vec![AmplitudeAssignment::matrix(&[
                &[c(0.5, 0.0), c(0.5, 0.0)],
                &[c(0.25, 0.0), c(0.75, 0.0)],
            ])],
        );
        build_context(
            "classical",
            &[(2, Knowability::L3), (2, Knowability::L3)],
            amps,
            ProbabilityRule::Classical,
        )
        .unwrap();
    }

    #[test]
    fn warns_on_adjacent_unknowable_layers() {
        let h = FRAC_1_SQRT_2;
        let t = AmplitudeAssignment::matrix(&[&[c(h, 0.0), c(h, 0.0)], &[c(h, 0.0), c(-h, 0.0)]]);
        let ctx = build_context(
            "l1l1",
            &[
                (2, Knowability::L1),
                (2, Knowability::L1),
                (2, Knowability::L3),
            ],
            AmplitudeAssignment::new(vec![c(h, 0.0), c(h, 0.0)], vec![t.clone(), t]),
            ProbabilityRule::BORN,
        )
        .unwrap();
        assert_eq!(
            ctx.warnings(),
            &[ValidationWarning::AdjacentUnknowableLayers { first: 0, second: 1 }]
        );
    }

    #[test]
    fn knowability_serde_is_numeric() {
        assert_eq!(serde_json::to_string(&Knowability::L2).unwrap(), "2");
        assert_eq!(
            serde_json::from_str::<Knowability>("3").unwrap(),
            Knowability::L3
        );
        assert!(serde_json::from_str::<Knowability>("4").is_err());
    }

    #[test]
    fn label_syntax() {
        assert!(check_label("A1'").is_ok());
        assert!(check_label("~A3'").is_ok());
        assert!(check_label("A 1").is_err());
        assert!(check_label("c1").is_err());
        assert!(check_label("A|1").is_err());
    }
}
