#ifndef KNOWCTX_H
#define KNOWCTX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KcStatus {
  KC_STATUS_OK = 0,
  KC_STATUS_NULL_ARGUMENT = 1,
  KC_STATUS_INVALID_UTF8 = 2,
  KC_STATUS_INVALID_ARGUMENT = 3,
  KC_STATUS_PARSE = 4,
  // The request is well formed but the model rejects it, e.g. an illegal
  // event or an unnormalized context.
  KC_STATUS_MODEL = 5,
  KC_STATUS_BUFFER_TOO_SMALL = 6,
  KC_STATUS_PANIC = 7,
} KcStatus;

typedef enum KcRuleKind {
  // `f(x) = |x|^(2 gamma)`; gamma = 1 is the Born rule.
  KC_RULE_KIND_POWER = 0,
  // `f(x) = x` on non-negative reals.
  KC_RULE_KIND_CLASSICAL = 1,
} KcRuleKind;

typedef enum KcMethod {
  KC_METHOD_CLASSICAL = 0,
  KC_METHOD_INTERFERENCE = 1,
  KC_METHOD_DELAYED = 2,
} KcMethod;

typedef enum KcEventKind {
  KC_EVENT_KIND_ATTAIN = 0,
  KC_EVENT_KIND_OBSERVE = 1,
  KC_EVENT_KIND_ERASE = 2,
  // Raises the layer to knowability level 3.
  KC_EVENT_KIND_PROMOTE = 3,
} KcEventKind;

typedef enum KcVerdict {
  KC_VERDICT_FEASIBLE = 0,
  KC_VERDICT_NO_SOLUTION_FOUND = 1,
  KC_VERDICT_ANALYTICALLY_INADMISSIBLE = 2,
} KcVerdict;

// A context network together with the events of the scenario it came from.
typedef struct KcContext KcContext;

typedef struct KcReport KcReport;

typedef struct KcState KcState;

// An event on the epistemic clock. `outcome` is read only for observations.
typedef struct KcEvent {
  uint64_t n;
  enum KcEventKind kind;
  size_t layer;
  size_t outcome;
} KcEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The message of the last failed call on this thread, or null. The pointer
// stays valid until the next library call on the same thread.
const char *kc_last_error(void);

// Library version as a static string.
const char *kc_version(void);

// # Safety
// `s` is null or a string returned by this library, not yet freed.
void kc_string_free(char *s);

// Parses a scenario document (JSON text) under the given rule.
//
// # Safety
// `json` is a NUL-terminated string; `out` is writable.
enum KcStatus kc_context_from_scenario(const char *json,
                                       enum KcRuleKind rule_kind,
                                       double gamma,
                                       struct KcContext **out);

// One of the built-in scenarios: mz-a, mz-b, mz-c, delayed-choice, eraser.
//
// # Safety
// `name` is a NUL-terminated string; `out` is writable.
enum KcStatus kc_context_from_demo(const char *name, struct KcContext **out);

// # Safety
// `ctx` is null or a live handle from this library.
void kc_context_free(struct KcContext *ctx);

// # Safety
// `ctx` is a live handle; `out` is writable.
enum KcStatus kc_context_layer_count(const struct KcContext *ctx, size_t *out);

// # Safety
// `ctx` is a live handle; `out` is writable.
enum KcStatus kc_context_layer_size(const struct KcContext *ctx, size_t layer, size_t *out);

// Distribution over `layer` under one composition mode. Writes up to
// `capacity` values to `out` and the layer size to `len`; a short buffer
// gives `KC_STATUS_BUFFER_TOO_SMALL` with `len` still set.
//
// # Safety
// `ctx` is a live handle; `out` holds `capacity` doubles; `len` is writable.
enum KcStatus kc_eval(const struct KcContext *ctx,
                      enum KcMethod method,
                      size_t layer,
                      double *out,
                      size_t capacity,
                      size_t *len);

// Replays the context's scenario events and returns the trace as JSON.
//
// # Safety
// `ctx` is a live handle; `out` is writable.
enum KcStatus kc_trace_json(const struct KcContext *ctx, char **out);

// # Safety
// `ctx` is a live handle; `out` is writable.
enum KcStatus kc_state_initial(const struct KcContext *ctx, struct KcState **out);

// # Safety
// `state` is null or a live handle from this library.
void kc_state_free(struct KcState *state);

// Applies `event` in place. On failure the state is unchanged.
//
// # Safety
// `ctx` and `state` are live handles.
enum KcStatus kc_state_apply(const struct KcContext *ctx,
                             struct KcState *state,
                             struct KcEvent event);

// The canonical bracket string of `state`.
//
// # Safety
// `state` is a live handle; `out` is writable.
enum KcStatus kc_state_canonical(const struct KcState *state, char **out);

// Distribution over `layer` implied by `state`; same buffer contract as
// [`kc_eval`].
//
// # Safety
// `ctx` and `state` are live handles; `out` holds `capacity` doubles.
enum KcStatus kc_state_eval(const struct KcContext *ctx,
                            const struct KcState *state,
                            size_t layer,
                            double *out,
                            size_t capacity,
                            size_t *len);

// Decides whether a rule admits amplitudes for an `m` by `m_prime`
// transition that normalize every first layer.
//
// # Safety
// `out` is writable.
enum KcStatus kc_feasibility_assess(size_t m,
                                    size_t m_prime,
                                    enum KcRuleKind rule_kind,
                                    double gamma,
                                    size_t restarts,
                                    uint64_t seed,
                                    struct KcReport **out);

// # Safety
// `report` is null or a live handle from this library.
void kc_report_free(struct KcReport *report);

// # Safety
// `report` is a live handle; `out` is writable.
enum KcStatus kc_report_verdict(const struct KcReport *report, enum KcVerdict *out);

// Best residual norm; NaN for analytic verdicts.
//
// # Safety
// `report` is a live handle; `out` is writable.
enum KcStatus kc_report_residual(const struct KcReport *report, double *out);

// The full report as JSON.
//
// # Safety
// `report` is a live handle; `out` is writable.
enum KcStatus kc_report_json(const struct KcReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KNOWCTX_H */
