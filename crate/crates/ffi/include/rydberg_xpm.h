#ifndef RYDBERG_XPM_H
#define RYDBERG_XPM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values match the `rxpm` exit codes.
 */
typedef enum RxpmStatus {
  RXPM_STATUS_OK = 0,
  /**
   * Null pointer, bad length, or an argument outside its domain.
   */
  RXPM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Integration, fitting, or a spectrum without a transparency window.
   */
  RXPM_STATUS_NUMERICAL = 3,
  RXPM_STATUS_INSUFFICIENT_STATISTICS = 4,
  RXPM_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  RXPM_STATUS_INTERNAL = 6,
} RxpmStatus;

/**
 * Opaque model handle.
 */
typedef struct RxpmModel RxpmModel;

typedef struct RxpmControlledPhase {
  double od0;
  double phase0;
  double od1;
  double phase1;
  double controlled_phase;
} RxpmControlledPhase;

typedef struct RxpmStokes {
  double s_hv;
  double s_da;
  double s_lr;
  /**
   * Polar angle on the Poincaré sphere.
   */
  double theta;
  /**
   * Azimuth, arg(c−/c+).
   */
  double phi;
} RxpmStokes;

typedef struct RxpmTomography {
  double azimuth_with_control;
  double azimuth_with_control_err;
  double azimuth_without_control;
  double azimuth_without_control_err;
  double visibility_with_control;
  double visibility_with_control_err;
  double controlled_phase;
  double controlled_phase_err;
  uint64_t postselected_repetitions;
} RxpmTomography;

/**
 * Fitted transmission model. Index order: od_peak, omega_c_mhz,
 * gamma_rg_mhz, delta_c_mhz.
 */
typedef struct RxpmFitResult {
  double params[4];
  double uncertainties[4];
  double reduced_chi_square;
  uint64_t iterations;
  /**
   * NaN when the fitted model has no transparency peak.
   */
  double fwhm_mhz;
} RxpmFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rxpm_version(void);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`). Returns the full message length
 * excluding the terminator, so a larger buffer can be retried.
 */
size_t rxpm_last_error_message(char *buf, size_t len);

/**
 * Model with every parameter at its default value.
 */
enum RxpmStatus rxpm_model_new_default(struct RxpmModel **model_out);

/**
 * Model from a JSON run configuration (same schema as the `rxpm` CLI).
 */
enum RxpmStatus rxpm_model_from_json(const char *json, struct RxpmModel **model_out);

/**
 * Releases a handle; null is ignored.
 */
void rxpm_model_free(struct RxpmModel *model);

/**
 * Complex susceptibility at signal detuning `delta_s_mhz`.
 */
enum RxpmStatus rxpm_chi(const struct RxpmModel *model,
                         double delta_s_mhz,
                         double *re_out,
                         double *im_out);

/**
 * Optical depth and phase of the whole medium.
 */
enum RxpmStatus rxpm_od_phase(const struct RxpmModel *model,
                              double delta_s_mhz,
                              double *od_out,
                              double *phase_out);

/**
 * Transmission and phase on `n` strictly increasing detunings.
 */
enum RxpmStatus rxpm_spectrum(const struct RxpmModel *model,
                              const double *delta_s_mhz,
                              size_t n,
                              double *transmission_out,
                              double *phase_out);

/**
 * Full width at half height of the transparency window.
 */
enum RxpmStatus rxpm_transmission_fwhm_mhz(const struct RxpmModel *model, double *fwhm_out);

/**
 * |C6/ħΔ_T|^(1/6) with the model's C6.
 */
enum RxpmStatus rxpm_blockade_radius_um(const struct RxpmModel *model,
                                        double delta_t_mhz,
                                        double *radius_out);

/**
 * Integrated response with zero and one stored excitation.
 */
enum RxpmStatus rxpm_controlled_phase(const struct RxpmModel *model,
                                      double delta_s_mhz,
                                      bool sign_reversed,
                                      struct RxpmControlledPhase *result_out);

/**
 * (2R_b/L)(φ_two-level − φ_EIT) at `delta_s_mhz`.
 */
enum RxpmStatus rxpm_hard_sphere_phase(const struct RxpmModel *model,
                                       double radius_um,
                                       double delta_s_mhz,
                                       double *phase_out);

/**
 * Normalized Stokes vector of the state c+ σ+ + c− σ−.
 */
enum RxpmStatus rxpm_stokes(double c_plus_re,
                            double c_plus_im,
                            double c_minus_re,
                            double c_minus_im,
                            struct RxpmStokes *stokes_out);

/**
 * Storage-and-retrieval efficiency after `delay_us`.
 */
enum RxpmStatus rxpm_retrieval_efficiency(const struct RxpmModel *model,
                                          double delay_us,
                                          double *efficiency_out);

/**
 * Monte Carlo tomography at the model's operating point, seeded by
 * `seed`.
 */
enum RxpmStatus rxpm_tomography(const struct RxpmModel *model,
                                uint64_t repetitions,
                                uint64_t seed,
                                struct RxpmTomography *result_out);

/**
 * Fits the transmission model to `n` points, starting from the model's
 * configured initial values.
 */
enum RxpmStatus rxpm_fit_transmission(const struct RxpmModel *model,
                                      const double *delta_s_mhz,
                                      const double *transmission,
                                      const double *sigma,
                                      size_t n,
                                      struct RxpmFitResult *result_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RYDBERG_XPM_H */
