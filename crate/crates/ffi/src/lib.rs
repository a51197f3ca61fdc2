//! C ABI over `knowctx`.
//!
//! Every fallible call returns a [`KcStatus`]; on failure the message is
//! available from [`kc_last_error`] on the same thread. Handles are opaque and
//! owned by the caller, who releases them with the matching `*_free`. Strings
//! handed out by the library are released with [`kc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use knowctx::context::{ContextNetwork, Knowability};
use knowctx::engine::{eval_auto, eval_classical, eval_delayed, eval_interference, OutcomeDistribution};
use knowctx::feasibility::{assess, FeasibilityReport, ShapeSpec, Verdict};
use knowctx::scenario::{demo, parse_scenario, run_events};
use knowctx::state::{initial_state, ContextEvent, EpistemicState, EventKind};
use knowctx::{Error, ProbabilityRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    /// The request is well formed but the model rejects it, e.g. an illegal
    /// event or an unnormalized context.
    Model = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcRuleKind {
    /// `f(x) = |x|^(2 gamma)`; gamma = 1 is the Born rule.
    Power = 0,
    /// `f(x) = x` on non-negative reals.
    Classical = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcMethod {
    Classical = 0,
    Interference = 1,
    Delayed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcEventKind {
    Attain = 0,
    Observe = 1,
    Erase = 2,
    /// Raises the layer to knowability level 3.
    Promote = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcVerdict {
    Feasible = 0,
    NoSolutionFound = 1,
    AnalyticallyInadmissible = 2,
}

/// An event on the epistemic clock. `outcome` is read only for observations.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KcEvent {
    pub n: u64,
    pub kind: KcEventKind,
    pub layer: usize,
    pub outcome: usize,
}

/// A context network together with the events of the scenario it came from.
pub struct KcContext {
    ctx: ContextNetwork,
    events: Vec<ContextEvent>,
}

pub struct KcState {
    state: EpistemicState,
}

pub struct KcReport {
    report: FeasibilityReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(KcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => KcStatus::Parse,
            Error::UnsupportedRule(_) | Error::UnsupportedShape { .. } | Error::RuleContractViolation(_) => {
                KcStatus::InvalidArgument
            }
            _ => KcStatus::Model,
        };
        Fail(status, e.to_string())
    }
}

type Outcome<T = ()> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> Outcome) -> KcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KcStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(KcStatus::NullArgument, format!("{name} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(KcStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Outcome<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Outcome {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn rule(kind: KcRuleKind, gamma: f64) -> Outcome<ProbabilityRule> {
    match kind {
        KcRuleKind::Classical => Ok(ProbabilityRule::Classical),
        KcRuleKind::Power => ProbabilityRule::gamma(gamma).map_err(Fail::from),
    }
}

fn owned_string(s: String) -> Outcome<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(KcStatus::Model, "string contains a NUL byte".into()))
}

unsafe fn write_probs(d: &OutcomeDistribution, out: *mut f64, capacity: usize, len: *mut usize) -> Outcome {
    put(len, d.probs.len(), "len")?;
    if capacity < d.probs.len() {
        return Err(Fail(
            KcStatus::BufferTooSmall,
            format!("{} entries needed, capacity {capacity}", d.probs.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(d.probs.as_ptr(), out, d.probs.len());
    Ok(())
}

/// The message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn kc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn kc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario document (JSON text) under the given rule.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_context_from_scenario(
    json: *const c_char,
    rule_kind: KcRuleKind,
    gamma: f64,
    out: *mut *mut KcContext,
) -> KcStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let rule = rule(rule_kind, gamma)?;
        let s = parse_scenario(text, rule).map_err(|e| Fail(KcStatus::Parse, e.to_string()))?;
        let h = Box::new(KcContext {
            ctx: s.ctx,
            events: s.events,
        });
        put(out, Box::into_raw(h), "out")
    })
}

/// One of the built-in scenarios: mz-a, mz-b, mz-c, delayed-choice, eraser.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_context_from_demo(name: *const c_char, out: *mut *mut KcContext) -> KcStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let (ctx, events) = demo(name).map_err(|e| Fail(KcStatus::InvalidArgument, e.to_string()))?;
        put(out, Box::into_raw(Box::new(KcContext { ctx, events })), "out")
    })
}

/// # Safety
/// `ctx` is null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn kc_context_free(ctx: *mut KcContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// # Safety
/// `ctx` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_context_layer_count(ctx: *const KcContext, out: *mut usize) -> KcStatus {
    guard(|| put(out, handle(ctx, "ctx")?.ctx.num_layers(), "out"))
}

/// # Safety
/// `ctx` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_context_layer_size(ctx: *const KcContext, layer: usize, out: *mut usize) -> KcStatus {
    guard(|| {
        let size = handle(ctx, "ctx")?.ctx.layer(layer)?.size();
        put(out, size, "out")
    })
}

/// Distribution over `layer` under one composition mode. Writes up to
/// `capacity` values to `out` and the layer size to `len`; a short buffer
/// gives `KC_STATUS_BUFFER_TOO_SMALL` with `len` still set.
///
/// # Safety
/// `ctx` is a live handle; `out` holds `capacity` doubles; `len` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_eval(
    ctx: *const KcContext,
    method: KcMethod,
    layer: usize,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> KcStatus {
    guard(|| {
        let c = &handle(ctx, "ctx")?.ctx;
        let d = match method {
            KcMethod::Classical => eval_classical(c, layer),
            KcMethod::Interference => eval_interference(c, layer),
            KcMethod::Delayed => eval_delayed(c, layer),
        }?;
        write_probs(&d, out, capacity, len)
    })
}

/// Replays the context's scenario events and returns the trace as JSON.
///
/// # Safety
/// `ctx` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_trace_json(ctx: *const KcContext, out: *mut *mut c_char) -> KcStatus {
    guard(|| {
        let h = handle(ctx, "ctx")?;
        let trace = run_events(&h.ctx, &h.events)?;
        let text = serde_json::to_string(&trace).map_err(|e| Fail(KcStatus::Model, e.to_string()))?;
        put(out, owned_string(text)?, "out")
    })
}

/// # Safety
/// `ctx` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_state_initial(ctx: *const KcContext, out: *mut *mut KcState) -> KcStatus {
    guard(|| {
        let state = initial_state(&handle(ctx, "ctx")?.ctx);
        put(out, Box::into_raw(Box::new(KcState { state })), "out")
    })
}

/// # Safety
/// `state` is null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn kc_state_free(state: *mut KcState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Applies `event` in place. On failure the state is unchanged.
///
/// # Safety
/// `ctx` and `state` are live handles.
#[no_mangle]
pub unsafe extern "C" fn kc_state_apply(ctx: *const KcContext, state: *mut KcState, event: KcEvent) -> KcStatus {
    guard(|| {
        let c = &handle(ctx, "ctx")?.ctx;
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        let layer = event.layer;
        let kind = match event.kind {
            KcEventKind::Attain => EventKind::Attain { layer },
            KcEventKind::Observe => EventKind::Observe {
                layer,
                outcome: event.outcome,
            },
            KcEventKind::Erase => EventKind::Erase { layer },
            KcEventKind::Promote => EventKind::PromoteKnowability {
                layer,
                level: Knowability::L3,
            },
        };
        s.state = s.state.apply_event(c, &ContextEvent::new(event.n, kind))?;
        Ok(())
    })
}

/// The canonical bracket string of `state`.
///
/// # Safety
/// `state` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_state_canonical(state: *const KcState, out: *mut *mut c_char) -> KcStatus {
    guard(|| {
        let text = handle(state, "state")?.state.canonical_string();
        put(out, owned_string(text)?, "out")
    })
}

/// Distribution over `layer` implied by `state`; same buffer contract as
/// [`kc_eval`].
///
/// # Safety
/// `ctx` and `state` are live handles; `out` holds `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn kc_state_eval(
    ctx: *const KcContext,
    state: *const KcState,
    layer: usize,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> KcStatus {
    guard(|| {
        let c = &handle(ctx, "ctx")?.ctx;
        let d = eval_auto(c, &handle(state, "state")?.state, layer)?;
        write_probs(&d, out, capacity, len)
    })
}

/// Decides whether a rule admits amplitudes for an `m` by `m_prime`
/// transition that normalize every first layer.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_feasibility_assess(
    m: usize,
    m_prime: usize,
    rule_kind: KcRuleKind,
    gamma: f64,
    restarts: usize,
    seed: u64,
    out: *mut *mut KcReport,
) -> KcStatus {
    guard(|| {
        let shape = ShapeSpec::new(m, m_prime)?;
        let report = assess(shape, rule(rule_kind, gamma)?, restarts, seed)?;
        put(out, Box::into_raw(Box::new(KcReport { report })), "out")
    })
}

/// # Safety
/// `report` is null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn kc_report_free(report: *mut KcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_report_verdict(report: *const KcReport, out: *mut KcVerdict) -> KcStatus {
    guard(|| {
        let v = match handle(report, "report")?.report.verdict {
            Verdict::Feasible { .. } => KcVerdict::Feasible,
            Verdict::NoSolutionFound { .. } => KcVerdict::NoSolutionFound,
            Verdict::AnalyticallyInadmissible { .. } => KcVerdict::AnalyticallyInadmissible,
        };
        put(out, v, "out")
    })
}

/// Best residual norm; NaN for analytic verdicts.
///
/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_report_residual(report: *const KcReport, out: *mut f64) -> KcStatus {
    guard(|| {
        let r = handle(report, "report")?.report.verdict.residual().unwrap_or(f64::NAN);
        put(out, r, "out")
    })
}

/// The full report as JSON.
///
/// # Safety
/// `report` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kc_report_json(report: *const KcReport, out: *mut *mut c_char) -> KcStatus {
    guard(|| {
        let r = &handle(report, "report")?.report;
        let text = serde_json::to_string(r).map_err(|e| Fail(KcStatus::Model, e.to_string()))?;
        put(out, owned_string(text)?, "out")
    })
}
