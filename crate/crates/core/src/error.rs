use thiserror::Error;

use crate::context::Knowability;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("context has no layers")]
    EmptyContext,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("final layer {layer} has knowability level {level}; a context must end with a level-3 set")]
    FinalLayerNotObservable { layer: usize, level: u8 },

    #[error("normalization violated at {location}: sum of f(c) is {sum} (tolerance {tolerance:e})")]
    NormalizationViolation {
        location: String,
        sum: f64,
        tolerance: f64,
    },

    #[error("invalid amplitude at {location}: {reason}")]
    InvalidAmplitude { location: String, reason: String },

    #[error("invalid label {label:?}: {reason}")]
    InvalidLabel { label: String, reason: String },

    #[error("invalid knowability level {0}; expected 1, 2 or 3")]
    InvalidKnowability(u8),

    #[error("context has {paths} paths, above the limit of {limit}")]
    ContextTooLarge { paths: u128, limit: u64 },

    #[error("layer {layer} out of range for a context with {layers} layers")]
    LayerOutOfRange { layer: usize, layers: usize },

    #[error("outcome {outcome} out of range for layer {layer} of size {size}")]
    OutcomeOutOfRange {
        layer: usize,
        outcome: usize,
        size: usize,
    },

    #[error("outcome {outcome} of layer {layer} has zero propensity and cannot occur")]
    ImpossibleOutcome { layer: usize, outcome: usize },

    #[error("layer {layer} at knowability level {} cannot be observed", .level.level())]
    IllegalObservation { layer: usize, level: Knowability },

    #[error("event at n={n} arrives after n={last}")]
    OutOfOrderEvent { n: u64, last: u64 },

    #[error("layer {layer} is already resolved")]
    AlreadyResolved { layer: usize },

    #[error("layer {layer} at knowability level {} cannot be erased; only level-2 sets can", .level.level())]
    IllegalErase { layer: usize, level: Knowability },

    #[error("layer {layer} cannot move from knowability level {} to {}", .from.level(), .to.level())]
    IllegalPromotion {
        layer: usize,
        from: Knowability,
        to: Knowability,
    },

    #[error("knowability mismatch: {0}")]
    KnowabilityMismatch(String),

    #[error("rule contract violation: {0}")]
    RuleContractViolation(String),

    #[error("unsupported rule: {0}")]
    UnsupportedRule(String),

    #[error("unsupported shape ({m}, {m_prime}): {reason}")]
    UnsupportedShape {
        m: usize,
        m_prime: usize,
        reason: String,
    },

    #[error("padding to {target} alternatives is insufficient for {m} preceding alternatives")]
    PaddingInsufficient { m: usize, target: usize },

    #[error("padding target {target} is smaller than the current size {current}")]
    PaddingTargetTooSmall { target: usize, current: usize },

    #[error("no row-orthonormal completion of a {m}x{current} transition exists with {target} columns; at least {needed} are needed")]
    NoIsometricCompletion {
        m: usize,
        current: usize,
        target: usize,
        needed: usize,
    },

    #[error("{paths} paths exceed the enumeration limit of {limit}")]
    TooManyPaths { paths: u128, limit: u64 },

    #[error("projection onto alternative {index} with zero amplitude")]
    ZeroAmplitudeProjection { index: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("tensor construction supports exactly two layers, context has {0}")]
    UnsupportedLayerCount(usize),

    #[error("attributes are not declared simultaneously knowable")]
    NotSimultaneouslyKnowable,

    #[error("layer {layer} holds a collapsed bracket, which has no state-vector translation")]
    UntranslatableBracket { layer: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
