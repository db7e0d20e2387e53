#ifndef DYNIT_H
#define DYNIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DYNIT_REGIME_GENERAL 0

#define DYNIT_REGIME_HIGH_POWER 1

/**
 * Simulation only: constant threshold, passed separately.
 */
#define DYNIT_REGIME_FIXED_IT 2

typedef enum DynitStatus {
  DYNIT_STATUS_OK = 0,
  DYNIT_STATUS_NULL_POINTER = 1,
  DYNIT_STATUS_DOMAIN = 2,
  DYNIT_STATUS_INVALID_SCENARIO = 3,
  DYNIT_STATUS_TRUNCATION = 4,
  DYNIT_STATUS_CONDITIONING = 5,
  DYNIT_STATUS_QUADRATURE = 6,
  DYNIT_STATUS_CONFIG = 7,
  DYNIT_STATUS_IO = 8,
  DYNIT_STATUS_TABLE = 9,
  DYNIT_STATUS_PANIC = 10,
} DynitStatus;

/**
 * Opaque model handle.
 */
typedef struct DynitModel DynitModel;

/**
 * Channel and demand parameters; rates are reciprocals of mean gains.
 */
typedef struct DynitScenario {
  double lambda_p;
  double lambda_pp;
  double lambda_sp;
  double lambda_ss;
  double lambda_ps;
  double sigma2;
  /**
   * Peak transmit power, linear.
   */
  double p_peak;
} DynitScenario;

typedef struct DynitCapacity {
  double mean_capacity;
  double closed_term;
  double i4_value;
  double quad_abs_err;
} DynitCapacity;

typedef struct DynitSimSummary {
  uint64_t n_samples;
  double mean_capacity;
  /**
   * Fraction of draws transmitting at peak power.
   */
  double peak_fraction;
  uint64_t constraint_violations;
} DynitSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never NULL.
 */
const char *dynit_status_string(enum DynitStatus status);

const char *dynit_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t dynit_last_error_message(char *buf, size_t len);

/**
 * Fills `out` with the reference channel set at the given demand rate and peak
 * power in dB.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum DynitStatus dynit_scenario_reference(double lambda_p, double p_db, struct DynitScenario *out);

/**
 * Builds a model. `tail_tol <= 0` selects the default truncation tolerance.
 *
 * # Safety
 * `scenario` must be NULL or point to a valid `DynitScenario`; `out` must be NULL
 * or valid for writes. On success `*out` owns a handle to release with
 * `dynit_model_free`.
 */
enum DynitStatus dynit_model_new(const struct DynitScenario *scenario,
                                 double tail_tol,
                                 struct DynitModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a handle from `dynit_model_new` not yet freed.
 */
void dynit_model_free(struct DynitModel *model);

/**
 * Scenario the model was built from (after clamping).
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_model_scenario(const struct DynitModel *model, struct DynitScenario *out);

/**
 * Number of demand terms kept after truncation.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_model_k_max(const struct DynitModel *model, size_t *out);

/**
 * Outage probability at SINR threshold `x` for `regime` (`DYNIT_REGIME_GENERAL` or
 * `DYNIT_REGIME_HIGH_POWER`).
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_outage(const struct DynitModel *model,
                              uint32_t regime,
                              double x,
                              double *out);

/**
 * Outage probability on `n` thresholds.
 *
 * # Safety
 * `xs` must point to `n` readable doubles and `out` to `n` writable doubles
 * (either may be NULL only when `n == 0`).
 */
enum DynitStatus dynit_outage_curve(const struct DynitModel *model,
                                    uint32_t regime,
                                    const double *xs,
                                    size_t n,
                                    double *out);

/**
 * Outage probability with a constant threshold `psi_fixed` (linear power).
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_outage_fixed_it(const struct DynitModel *model,
                                       double x,
                                       double psi_fixed,
                                       double *out);

/**
 * CDF of the interference-plus-noise threshold.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_psi_cdf(const struct DynitModel *model, double x, double *out);

/**
 * Density of the interference-plus-noise threshold, `x > 0`.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_psi_pdf(const struct DynitModel *model, double x, double *out);

/**
 * CDFs of the unclipped transmit power `t = ψ/g_sp` (`which = 0`), the clipped
 * transmit power (`1`) and the received power (`2`).
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_power_cdf(const struct DynitModel *model,
                                 uint32_t which,
                                 double x,
                                 double *out);

/**
 * Mean capacity in nats/s/Hz. `quad_tol` must lie in (0, 1e-4].
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_mean_capacity(const struct DynitModel *model,
                                     uint32_t regime,
                                     double quad_tol,
                                     struct DynitCapacity *out);

/**
 * Mean capacity with a constant threshold `psi_fixed` (linear power).
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_capacity_fixed_it(const struct DynitModel *model,
                                         double psi_fixed,
                                         double quad_tol,
                                         struct DynitCapacity *out);

/**
 * Monte Carlo summary over `n_samples` draws. `psi_fixed` is read only for
 * `DYNIT_REGIME_FIXED_IT`.
 *
 * # Safety
 * `model` must be NULL or a live handle; `out` NULL or valid for writes.
 */
enum DynitStatus dynit_simulate(const struct DynitModel *model,
                                uint32_t regime,
                                double psi_fixed,
                                uint64_t n_samples,
                                uint64_t seed,
                                struct DynitSimSummary *out);

/**
 * `Γ(0, x)` for `x > 0`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum DynitStatus dynit_upper_gamma0(double x, double *out);

/**
 * `eˣ·Γ(0, x)` for `x > 0`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum DynitStatus dynit_exp_scaled_gamma0(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNIT_H */
