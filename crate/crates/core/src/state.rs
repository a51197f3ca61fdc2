//! Symbolic epistemic state of a running context and its event transitions.
//!
//! A state holds one bracket per layer. An unresolved bracket lists, for every
//! alternative that cannot be excluded, the sequences of amplitudes along which
//! it can be reached. A sequence containing a zero amplitude cannot occur and
//! is left out, as is an alternative with no remaining sequence.
//!
//! Canonical text renders sequences as space-separated symbols, parallel
//! sequences joined by ` + `, and brackets back to back:
//! `[(c1|A1) (c2|A2)][(c1 c11 + c2 c21|A1') (c1 c12 + c2 c22|A2')]`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::context::{ContextNetwork, Knowability};
use crate::error::{Error, Result};

/// One amplitude in a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// `c_j` of the first layer.
    Initial(usize),
    /// `c_{from,to}` on the transition into `layer` (`layer >= 1`).
    Transition { layer: usize, from: usize, to: usize },
}

impl Symbol {
    pub fn value(&self, ctx: &ContextNetwork) -> Complex64 {
        match *self {
            Symbol::Initial(j) => ctx.first_layer()[j],
            Symbol::Transition { layer, from, to } => ctx.transition_into(layer)[(from, to)],
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Symbol::Initial(j) => write!(f, "c{}", j + 1),
            Symbol::Transition { layer, from, to } => {
                let primes = "'".repeat(layer - 1);
                if from < 9 && to < 9 {
                    write!(f, "c{primes}{}{}", from + 1, to + 1)
                } else {
                    write!(f, "c{primes}{},{}", from + 1, to + 1)
                }
            }
        }
    }
}

/// A product of amplitudes along one sequence of events.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathTerm(pub Vec<Symbol>);

impl PathTerm {
    pub fn value(&self, ctx: &ContextNetwork) -> Complex64 {
        self.0
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.value(ctx))
    }
}

impl fmt::Display for PathTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alt {
    pub index: usize,
    pub label: String,
}

/// The association of an alternative with every sequence reaching it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub alt: Alt,
    pub terms: Vec<PathTerm>,
}

impl Entry {
    /// The amplitude model of the entry: products along sequences, summed.
    pub fn amplitude(&self, ctx: &ContextNetwork) -> Complex64 {
        self.terms.iter().map(|t| t.value(ctx)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bracket {
    /// One observed alternative, e.g. `[A1]`.
    Resolved(Alt),
    /// Alternatives that cannot be excluded yet, with their sequences.
    Unresolved(Vec<Entry>),
    /// Attained, but it is unknowable which alternative occurred, e.g. `[A1 A2]`.
    Collapsed(Vec<Alt>),
}

impl Bracket {
    pub fn is_resolved(&self) -> bool {
        matches!(self, Bracket::Resolved(_))
    }

    pub fn is_collapsed(&self) -> bool {
        matches!(self, Bracket::Collapsed(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Bracket::Resolved(_) => "resolved",
            Bracket::Unresolved(_) => "unresolved",
            Bracket::Collapsed(_) => "collapsed",
        }
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        match self {
            Bracket::Resolved(alt) => f.write_str(&alt.label)?,
            Bracket::Collapsed(alts) => {
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    f.write_str(&a.label)?;
                }
            }
            Bracket::Unresolved(entries) => {
                for (i, e) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    f.write_str("(")?;
                    for (t, term) in e.terms.iter().enumerate() {
                        if t > 0 {
                            f.write_str(" + ")?;
                        }
                        write!(f, "{term}")?;
                    }
                    write!(f, "|{})", e.alt.label)?;
                }
            }
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// The specimen attains one alternative of the layer.
    Attain { layer: usize },
    /// One alternative of the layer becomes known.
    Observe { layer: usize, outcome: usize },
    /// Path knowledge is irreversibly removed: level 2 drops to level 1.
    Erase { layer: usize },
    /// The layer's knowability rises, e.g. a beam splitter is removed.
    PromoteKnowability { layer: usize, level: Knowability },
}

impl EventKind {
    pub fn layer(&self) -> usize {
        match *self {
            EventKind::Attain { layer }
            | EventKind::Observe { layer, .. }
            | EventKind::Erase { layer }
            | EventKind::PromoteKnowability { layer, .. } => layer,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EventKind::Attain { layer } => write!(f, "attain({layer})"),
            EventKind::Observe { layer, outcome } => write!(f, "observe({layer}, {outcome})"),
            EventKind::Erase { layer } => write!(f, "erase({layer})"),
            EventKind::PromoteKnowability { layer, level } => {
                write!(f, "promote({layer}, {level})")
            }
        }
    }
}

/// An event at abstract epistemic time `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEvent {
    pub n: u64,
    pub kind: EventKind,
}

impl ContextEvent {
    pub fn new(n: u64, kind: EventKind) -> Self {
        ContextEvent { n, kind }
    }
}

/// The symbolic state of a context at some epistemic time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpistemicState {
    brackets: Vec<Bracket>,
    levels: Vec<Knowability>,
    attained: Vec<bool>,
    clock: Option<u64>,
}

/// The state before the specimen attains any alternative: every bracket
/// unresolved and carrying all sequences from the first layer.
pub fn initial_state(ctx: &ContextNetwork) -> EpistemicState {
    let n = ctx.num_layers();
    let mut state = EpistemicState {
        brackets: vec![Bracket::Unresolved(Vec::new()); n],
        levels: ctx.layers().iter().map(|l| l.knowability).collect(),
        attained: vec![false; n],
        clock: None,
    };
    state.refresh(ctx);
    state
}

impl EpistemicState {
    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }

    pub fn bracket(&self, k: usize) -> Option<&Bracket> {
        self.brackets.get(k)
    }

    /// Knowability of layer `k` after any erasure or promotion.
    pub fn level(&self, k: usize) -> Knowability {
        self.levels[k]
    }

    pub fn is_attained(&self, k: usize) -> bool {
        self.attained[k]
    }

    pub fn clock(&self) -> Option<u64> {
        self.clock
    }

    pub fn resolved_outcome(&self, k: usize) -> Option<usize> {
        match self.brackets.get(k) {
            Some(Bracket::Resolved(alt)) => Some(alt.index),
            _ => None,
        }
    }

    /// Level-2 layers still unresolved. They may stay so indefinitely.
    pub fn pending_layers(&self) -> Vec<usize> {
        self.brackets
            .iter()
            .enumerate()
            .filter(|(k, b)| matches!(b, Bracket::Unresolved(_)) && self.levels[*k] == Knowability::L2)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn canonical_string(&self) -> String {
        self.to_string()
    }

    pub fn apply_event(&self, ctx: &ContextNetwork, ev: &ContextEvent) -> Result<Self> {
        if let Some(last) = self.clock {
            if ev.n < last {
                return Err(Error::OutOfOrderEvent { n: ev.n, last });
            }
        }
        let layer = ev.kind.layer();
        if layer >= self.brackets.len() {
            return Err(Error::LayerOutOfRange {
                layer,
                layers: self.brackets.len(),
            });
        }
        if self.brackets[layer].is_resolved() {
            return Err(Error::AlreadyResolved { layer });
        }

        let mut next = self.clone();
        next.clock = Some(ev.n);
        match ev.kind {
            EventKind::Attain { layer } => next.attain_through(layer),
            EventKind::Observe { layer, outcome } => {
                let size = ctx.layers()[layer].size();
                if outcome >= size {
                    return Err(Error::OutcomeOutOfRange {
                        layer,
                        outcome,
                        size,
                    });
                }
                let level = next.levels[layer];
                if level != Knowability::L3 || next.brackets[layer].is_collapsed() {
                    return Err(Error::IllegalObservation { layer, level });
                }
                if layer > 0 {
                    next.attain_through(layer - 1);
                }
                let alt = match &next.brackets[layer] {
                    Bracket::Unresolved(entries) => entries
                        .iter()
                        .find(|e| e.alt.index == outcome)
                        .map(|e| e.alt.clone())
                        .ok_or(Error::ImpossibleOutcome { layer, outcome })?,
                    _ => unreachable!("checked above"),
                };
                next.brackets[layer] = Bracket::Resolved(alt);
                next.attained[layer] = true;
            }
            EventKind::Erase { layer } => {
                let level = next.levels[layer];
                if level != Knowability::L2 {
                    return Err(Error::IllegalErase { layer, level });
                }
                next.levels[layer] = Knowability::L1;
                if next.attained[layer] {
                    next.collapse(layer);
                }
            }
            EventKind::PromoteKnowability { layer, level } => {
                let from = next.levels[layer];
                if from != Knowability::L2 || level != Knowability::L3 {
                    return Err(Error::IllegalPromotion {
                        layer,
                        from,
                        to: level,
                    });
                }
                next.levels[layer] = level;
            }
        }
        next.refresh(ctx);
        Ok(next)
    }

    /// Attaining a layer implies every earlier layer was attained first.
    fn attain_through(&mut self, k: usize) {
        for m in 0..=k {
            if self.attained[m] {
                continue;
            }
            self.attained[m] = true;
            if self.levels[m] == Knowability::L1 {
                self.collapse(m);
            }
        }
    }

    fn collapse(&mut self, k: usize) {
        if let Bracket::Unresolved(entries) = &self.brackets[k] {
            let alts = entries.iter().map(|e| e.alt.clone()).collect();
            self.brackets[k] = Bracket::Collapsed(alts);
        }
    }

    fn refresh(&mut self, ctx: &ContextNetwork) {
        for k in 0..self.brackets.len() {
            if matches!(self.brackets[k], Bracket::Unresolved(_)) {
                let entries = self.entries_for(ctx, k);
                self.brackets[k] = Bracket::Unresolved(entries);
            }
        }
    }

    /// Sequences into layer `k`, starting after the nearest resolved layer
    /// upstream or at the first layer.
    fn entries_for(&self, ctx: &ContextNetwork, k: usize) -> Vec<Entry> {
        let start = (0..k)
            .rev()
            .find_map(|m| self.resolved_outcome(m).map(|j| (m, j)));
        let (mut paths, first): (Vec<(usize, Vec<Symbol>)>, usize) = match start {
            Some((r, j)) => (vec![(j, Vec::new())], r + 1),
            None => (
                ctx.first_layer()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
                    .map(|(j, _)| (j, vec![Symbol::Initial(j)]))
                    .collect(),
                1,
            ),
        };
        for m in first..=k {
            let t = ctx.transition_into(m);
            let mut next = Vec::with_capacity(paths.len() * t.ncols());
            for (from, syms) in &paths {
                for to in 0..t.ncols() {
                    if t[(*from, to)] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut s = syms.clone();
                    s.push(Symbol::Transition { layer: m, from: *from, to });
                    next.push((to, s));
                }
            }
            paths = next;
        }

        let labels = &ctx.layers()[k].labels;
        let mut entries: Vec<Entry> = labels
            .iter()
            .enumerate()
            .map(|(index, label)| Entry {
                alt: Alt {
                    index,
                    label: label.clone(),
                },
                terms: Vec::new(),
            })
            .collect();
        for (end, syms) in paths {
            entries[end].terms.push(PathTerm(syms));
        }
        entries.retain(|e| !e.terms.is_empty());
        entries
    }
}

impl fmt::Display for EpistemicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.brackets {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Parses canonical text back into brackets, resolving labels and symbols
/// against `ctx`.
///
/// A collapsed bracket that kept a single alternative prints like a resolved
/// one and parses as resolved.
pub fn parse_canonical(ctx: &ContextNetwork, text: &str) -> Result<Vec<Bracket>> {
    let mut brackets = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let body_start = rest
            .strip_prefix('[')
            .ok_or_else(|| Error::Parse(format!("expected '[' at {rest:?}")))?;
        let close = find_bracket_close(body_start)
            .ok_or_else(|| Error::Parse("unterminated bracket".into()))?;
        let body = &body_start[..close];
        let k = brackets.len();
        let layer = ctx
            .layers()
            .get(k)
            .ok_or_else(|| Error::Parse(format!("more brackets than the {} layers", ctx.num_layers())))?;
        let alt = |label: &str| -> Result<Alt> {
            layer
                .labels
                .iter()
                .position(|l| l == label)
                .map(|index| Alt {
                    index,
                    label: label.to_string(),
                })
                .ok_or_else(|| Error::Parse(format!("unknown label {label:?} in layer {k}")))
        };
        let body_trim = body.trim();
        if body_trim.starts_with('(') {
            let mut entries = Vec::new();
            let mut s = body_trim;
            while !s.is_empty() {
                let inner = s
                    .strip_prefix('(')
                    .ok_or_else(|| Error::Parse(format!("expected '(' at {s:?}")))?;
                let end = inner
                    .find(')')
                    .ok_or_else(|| Error::Parse("unterminated entry".into()))?;
                let (expr, label) = inner[..end]
                    .rsplit_once('|')
                    .ok_or_else(|| Error::Parse("entry without '|'".into()))?;
                let terms = expr
                    .split(" + ")
                    .map(|t| parse_term(t, k))
                    .collect::<Result<Vec<_>>>()?;
                entries.push(Entry {
                    alt: alt(label.trim())?,
                    terms,
                });
                s = inner[end + 1..].trim_start();
            }
            brackets.push(Bracket::Unresolved(entries));
        } else {
            let labels: Vec<&str> = body_trim.split_whitespace().collect();
            match labels.as_slice() {
                [] => return Err(Error::Parse(format!("empty bracket for layer {k}"))),
                [one] => brackets.push(Bracket::Resolved(alt(one)?)),
                many => brackets.push(Bracket::Collapsed(
                    many.iter().map(|l| alt(l)).collect::<Result<_>>()?,
                )),
            }
        }
        rest = body_start[close + 1..].trim_start();
    }
    Ok(brackets)
}

fn find_bracket_close(s: &str) -> Option<usize> {
    s.find(']')
}

/// A term of `n` factors in bracket `k` covers layers `k-n+1 ..= k`.
fn parse_term(text: &str, k: usize) -> Result<PathTerm> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let n = tokens.len();
    if n == 0 || n > k + 1 {
        return Err(Error::Parse(format!("term {text:?} has {n} factors for layer {k}")));
    }
    let first_layer = k + 1 - n;
    tokens
        .iter()
        .enumerate()
        .map(|(i, tok)| parse_symbol(tok, first_layer + i))
        .collect::<Result<Vec<_>>>()
        .map(PathTerm)
}

fn parse_symbol(tok: &str, layer: usize) -> Result<Symbol> {
    let bad = || Error::Parse(format!("bad symbol {tok:?} for layer {layer}"));
    let body = tok.strip_prefix('c').ok_or_else(bad)?;
    let index = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v >= 1)
            .map(|v| v - 1)
            .ok_or_else(bad)
    };
    if layer == 0 {
        return Ok(Symbol::Initial(index(body)?));
    }
    let primes = body.chars().take_while(|&c| c == '\'').count();
    if primes != layer - 1 {
        return Err(bad());
    }
    let digits = &body[primes..];
    let (from, to) = match digits.split_once(',') {
        Some((a, b)) => (index(a)?, index(b)?),
        None if digits.len() == 2 && digits.is_ascii() => (index(&digits[..1])?, index(&digits[1..])?),
        None => return Err(bad()),
    };
    Ok(Symbol::Transition { layer, from, to })
}
