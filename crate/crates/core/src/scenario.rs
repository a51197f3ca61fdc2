//! Scenario files: a context plus a timed list of events, and the built-in
//! interferometer demos.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::context::{build_context, AmplitudeAssignment, ContextNetwork, Knowability};
use crate::engine::{eval_auto, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::rule::ProbabilityRule;
use crate::state::{initial_state, ContextEvent, EpistemicState, EventKind};

pub const DEMOS: [&str; 5] = ["mz-a", "mz-b", "mz-c", "delayed-choice", "eraser"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub size: usize,
    pub knowability: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventName {
    Attain,
    Observe,
    Erase,
    Promote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub n: u64,
    pub kind: EventName,
    pub layer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    pub first_layer: Vec<Complex64>,
    pub transitions: Vec<Vec<Vec<Complex64>>>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

/// A scenario problem with the 1-based line it was traced to, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub error: Error,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.error),
            (Some(l), None) => write!(f, "line {l}: {}", self.error),
            _ => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub ctx: ContextNetwork,
    pub events: Vec<ContextEvent>,
}

impl EventSpec {
    fn to_event(&self) -> Result<ContextEvent> {
        let kind = match (self.kind, self.outcome) {
            (EventName::Observe, Some(outcome)) => EventKind::Observe {
                layer: self.layer,
                outcome,
            },
            (EventName::Observe, None) => {
                return Err(Error::Parse("observe events need an outcome".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Parse(format!(
                    "only observe events take an outcome, not {:?}",
                    self.kind
                )))
            }
            (EventName::Attain, None) => EventKind::Attain { layer: self.layer },
            (EventName::Erase, None) => EventKind::Erase { layer: self.layer },
            (EventName::Promote, None) => EventKind::PromoteKnowability {
                layer: self.layer,
                level: Knowability::L3,
            },
        };
        Ok(ContextEvent::new(self.n, kind))
    }

    fn from_event(ev: &ContextEvent) -> Self {
        let (kind, outcome) = match ev.kind {
            EventKind::Attain { .. } => (EventName::Attain, None),
            EventKind::Observe { outcome, .. } => (EventName::Observe, Some(outcome)),
            EventKind::Erase { .. } => (EventName::Erase, None),
            EventKind::PromoteKnowability { .. } => (EventName::Promote, None),
        };
        EventSpec {
            n: ev.n,
            kind,
            layer: ev.kind.layer(),
            outcome,
        }
    }
}

impl ScenarioFile {
    pub fn from_context(ctx: &ContextNetwork, events: &[ContextEvent]) -> Self {
        ScenarioFile {
            name: ctx.name().to_string(),
            layers: ctx
                .layers()
                .iter()
                .map(|l| LayerSpec {
                    size: l.size(),
                    knowability: l.knowability.level(),
                })
                .collect(),
            first_layer: ctx.first_layer().to_vec(),
            transitions: ctx
                .amplitudes()
                .transitions
                .iter()
                .map(|t| {
                    (0..t.nrows())
                        .map(|i| (0..t.ncols()).map(|j| t[(i, j)]).collect())
                        .collect()
                })
                .collect(),
            events: events.iter().map(EventSpec::from_event).collect(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files serialize")
    }
}

/// Parses and validates a scenario, replaying its events once so that an
/// illegal event is reported against its line.
pub fn parse_scenario(text: &str, rule: ProbabilityRule) -> std::result::Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError {
        line: Some(e.line()).filter(|&l| l > 0),
        column: Some(e.column()).filter(|&c| c > 0),
        error: Error::Parse(strip_position(&e.to_string())),
    })?;
    let anchor = |key: &str, index: Option<usize>, error: Error| ScenarioError {
        line: locate(text, key, index),
        column: None,
        error,
    };

    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, l) in file.layers.iter().enumerate() {
        let k = Knowability::from_level(l.knowability).map_err(|e| anchor("layers", Some(i), e))?;
        layers.push((l.size, k));
    }
    let mut transitions = Vec::with_capacity(file.transitions.len());
    for (i, t) in file.transitions.iter().enumerate() {
        let cols = t.first().map_or(0, Vec::len);
        if let Some(bad) = t.iter().position(|r| r.len() != cols) {
            return Err(anchor(
                "transitions",
                Some(i),
                Error::ShapeMismatch(format!("transition {i} row {bad} has a different length")),
            ));
        }
        transitions.push(nalgebra::DMatrix::from_fn(t.len(), cols, |r, c| t[r][c]));
    }
    let ctx = build_context(
        &file.name,
        &layers,
        AmplitudeAssignment::new(file.first_layer.clone(), transitions),
        rule,
    )
    .map_err(|e| {
        let key = match &e {
            Error::NormalizationViolation { location, .. }
            | Error::InvalidAmplitude { location, .. }
                if location.starts_with("first") =>
            {
                "first_layer"
            }
            Error::NormalizationViolation { .. } | Error::InvalidAmplitude { .. } => "transitions",
            _ => "layers",
        };
        anchor(key, None, e)
    })?;

    let mut events = Vec::with_capacity(file.events.len());
    let mut state = initial_state(&ctx);
    for (i, spec) in file.events.iter().enumerate() {
        let ev = spec.to_event().map_err(|e| anchor("events", Some(i), e))?;
        state = state
            .apply_event(&ctx, &ev)
            .map_err(|e| anchor("events", Some(i), e))?;
        events.push(ev);
    }
    Ok(Scenario { file, ctx, events })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Line of top-level `key`, or of element `index` of the array under it.
fn locate(text: &str, key: &str, index: Option<usize>) -> Option<usize> {
    let mut line = 1;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    let mut buf = String::new();
    let mut last_string = String::new();
    let mut current_key: Option<String> = None;
    let mut key_line = None;
    let mut in_target = false;
    let mut expect_element = false;
    let mut element = 0usize;

    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
        }
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
                last_string = std::mem::take(&mut buf);
            } else {
                buf.push(ch);
            }
            continue;
        }
        if in_target && depth == 2 && expect_element && !ch.is_whitespace() && ch != ']' {
            if Some(element) == index {
                return Some(line);
            }
            element += 1;
            expect_element = false;
        }
        match ch {
            '"' => in_string = true,
            ':' if depth == 1 => {
                current_key = Some(last_string.clone());
                if last_string == key {
                    key_line = Some(line);
                    if index.is_none() {
                        return key_line;
                    }
                }
            }
            ',' if depth == 1 => current_key = None,
            ',' if depth == 2 && in_target => expect_element = true,
            '{' | '[' => {
                if depth == 1 && ch == '[' && current_key.as_deref() == Some(key) {
                    in_target = true;
                    expect_element = true;
                }
                depth += 1;
            }
            '}' | ']' => {
                depth = depth.saturating_sub(1);
                if depth == 1 && in_target {
                    in_target = false;
                }
            }
            _ => {}
        }
    }
    key_line
}

/// One step of a replay: the state after an event (or the initial state) and
/// the distribution it implies for the final layer, if still open.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub n: Option<u64>,
    pub event: Option<String>,
    pub state: String,
    pub pending: Vec<usize>,
    pub distribution: Option<OutcomeDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub name: String,
    pub rule: ProbabilityRule,
    pub steps: Vec<TraceStep>,
    /// The distribution for the final layer from the last state in which it
    /// was still unresolved.
    pub distribution: Option<OutcomeDistribution>,
}

fn step(ctx: &ContextNetwork, state: &EpistemicState, ev: Option<&ContextEvent>) -> Result<TraceStep> {
    let k = ctx.num_layers() - 1;
    let distribution = match state.resolved_outcome(k) {
        Some(_) => None,
        None => Some(eval_auto(ctx, state, k)?),
    };
    Ok(TraceStep {
        n: ev.map(|e| e.n),
        event: ev.map(|e| e.kind.to_string()),
        state: state.canonical_string(),
        pending: state.pending_layers(),
        distribution,
    })
}

/// Replays `events` from the initial state.
pub fn run_events(ctx: &ContextNetwork, events: &[ContextEvent]) -> Result<Trace> {
    let mut state = initial_state(ctx);
    let mut steps = vec![step(ctx, &state, None)?];
    for ev in events {
        state = state.apply_event(ctx, ev)?;
        steps.push(step(ctx, &state, Some(ev))?);
    }
    let distribution = steps.iter().rev().find_map(|s| s.distribution.clone());
    Ok(Trace {
        name: ctx.name().to_string(),
        rule: ctx.rule(),
        steps,
        distribution,
    })
}

fn mz_amplitudes() -> (Vec<Complex64>, nalgebra::DMatrix<Complex64>) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    (
        vec![c(h, 0.0), c(h, 0.0)],
        AmplitudeAssignment::matrix(&[&[c(h, 0.0), c(0.0, h)], &[c(h, 0.0), c(0.0, -h)]]),
    )
}

/// The symmetric interferometer with the given path knowability.
pub fn mz_context(name: &str, path: Knowability) -> ContextNetwork {
    let (first, t) = mz_amplitudes();
    build_context(
        name,
        &[(2, path), (2, Knowability::L3)],
        AmplitudeAssignment::new(first, vec![t]),
        ProbabilityRule::BORN,
    )
    .expect("the symmetric interferometer is valid")
}

/// A built-in scenario by name.
pub fn demo(name: &str) -> Result<(ContextNetwork, Vec<ContextEvent>)> {
    let ev = ContextEvent::new;
    let observe = |layer, outcome| EventKind::Observe { layer, outcome };
    Ok(match name {
        // Detectors on both paths and at both exits.
        "mz-a" => (
            mz_context(name, Knowability::L3),
            vec![ev(1, observe(0, 0)), ev(2, observe(1, 0))],
        ),
        // The path is never knowable.
        "mz-b" => (
            mz_context(name, Knowability::L1),
            vec![ev(1, EventKind::Attain { layer: 0 }), ev(2, observe(1, 0))],
        ),
        // The exit is never knowable, so only the path set remains.
        "mz-c" => {
            let (first, _) = mz_amplitudes();
            let ctx = build_context(
                name,
                &[(2, Knowability::L3)],
                AmplitudeAssignment::new(first, vec![]),
                ProbabilityRule::BORN,
            )
            .expect("valid single set");
            (ctx, vec![ev(1, observe(0, 0))])
        }
        // The path may become known: it is read out after the exit.
        "delayed-choice" => (
            mz_context(name, Knowability::L2),
            vec![
                ev(1, EventKind::Attain { layer: 0 }),
                ev(
                    2,
                    EventKind::PromoteKnowability {
                        layer: 0,
                        level: Knowability::L3,
                    },
                ),
                ev(3, observe(1, 0)),
                ev(4, observe(0, 0)),
            ],
        ),
        // Path information is recorded and then irreversibly erased.
        "eraser" => (
            mz_context(name, Knowability::L2),
            vec![
                ev(1, EventKind::Attain { layer: 0 }),
                ev(2, EventKind::Erase { layer: 0 }),
                ev(3, observe(1, 0)),
            ],
        ),
        other => {
            return Err(Error::Parse(format!(
                "unknown demo '{other}', expected one of {}",
                DEMOS.join(", ")
            )))
        }
    })
}
