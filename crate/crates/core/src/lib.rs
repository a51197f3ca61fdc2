//! Knowability-aware probability evaluation over layered networks of
//! alternatives, with a feasibility lab for candidate probability rules.

pub mod cli;
pub mod context;
pub mod engine;
pub mod error;
pub mod feasibility;
pub mod format;
pub mod hilbert;
pub mod oracle;
pub mod random;
pub mod rule;
pub mod scenario;
pub mod state;

pub use context::{
    build_context, AlternativeSet, AmplitudeAssignment, ContextNetwork, Knowability,
    ValidationWarning,
};
pub use engine::{
    divergence_check, eval_auto, eval_classical, eval_delayed, eval_interference,
    OutcomeDistribution,
};
pub use error::{Error, Result};
pub use rule::ProbabilityRule;
pub use state::{initial_state, parse_canonical, Bracket, ContextEvent, EpistemicState, EventKind};
