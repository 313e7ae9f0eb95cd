#ifndef CHIRAL_CASIMIR_H
#define CHIRAL_CASIMIR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  // Rejected input (parameters, config, argument out of range).
  CC_STATUS_INVALID_INPUT = 2,
  // Quadrature, eigen or resolvent solve did not converge.
  CC_STATUS_NOT_CONVERGED = 3,
  // Internal invariant violated.
  CC_STATUS_INVARIANT = 4,
  // Rust panic caught at the boundary.
  CC_STATUS_PANIC = 5,
} CcStatus;

typedef enum CcOrientation {
  CC_ORIENTATION_AVERAGED = 0,
  CC_ORIENTATION_FIXED = 1,
} CcOrientation;

// Opaque parameter handle.
typedef struct CcParams CcParams;

// Momenta of one evaluation, internal units.
typedef struct CcMomentum {
  double p_perp[3];
  double p_par[3];
  double p_total[3];
  double p_kin[3];
  double p_abr[3];
  double p_sc_closed[3];
  double ledger_residual;
  // tr T/3 of the resolvent route in units of the bracket scale; NaN
  // for the analytic route.
  double fock_coefficient;
} CcMomentum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cc_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next library call on the same thread.
const char *cc_last_error_message(void);

// Module-qualified code of the last error (for example "params.DegenerateMasses"), or NULL.
const char *cc_last_error_code(void);

// Creates parameters in internal units (hbar = c = m_e = eps0 = 1).
// `charge <= 0` selects the elementary charge. `omega`, `b0` and `q0` point
// to three doubles each.
//
// # Safety
// Array pointers must reference three readable doubles; `out` must be writable.
enum CcStatus cc_params_new(double m_n,
                            double charge,
                            double chiral_c,
                            const double *omega,
                            const double *b0,
                            const double *q0,
                            struct CcParams **out);

// Creates parameters from the `molecule` block of a JSON run configuration.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum CcStatus cc_params_from_config(const char *json, struct CcParams **out);

// Sets C and B0 from dimensionless values (`curly_b` points to three doubles).
//
// # Safety
// `h` must come from a constructor and not be freed; `curly_b` must reference three doubles.
enum CcStatus cc_params_set_dimensionless(struct CcParams *h,
                                          double curly_c,
                                          const double *curly_b);

// Copies C, B0 and Q0 out of a handle. Any output pointer may be NULL.
//
// # Safety
// `h` must be live; non-null outputs must be writable (three doubles for vectors).
enum CcStatus cc_params_get(const struct CcParams *h, double *chiral_c, double *b0, double *q0);

// Releases a handle. NULL is ignored.
//
// # Safety
// `h` must come from a constructor and must not be used afterwards.
void cc_params_free(struct CcParams *h);

// Closed-form Casimir momentum.
//
// # Safety
// `h` must be live and `out` writable.
enum CcStatus cc_compute(const struct CcParams *h, enum CcOrientation o, struct CcMomentum *out);

// Casimir momentum with the transverse part from Fock-space resolvents at
// truncation `n_max` (other settings default).
//
// # Safety
// `h` must be live and `out` writable.
enum CcStatus cc_compute_fock(const struct CcParams *h,
                              uint32_t n_max,
                              enum CcOrientation o,
                              struct CcMomentum *out);

// Semiclassical momentum from the regularized frequency integral (default
// quadrature settings), written to three doubles.
//
// # Safety
// `h` must be live and `out` must reference three writable doubles.
enum CcStatus cc_sc_momentum(const struct CcParams *h, double *out);

// Work done on the magnetization over `n_steps` and the kinetic energy
// change, for a field switched on from zero to the handle's B0.
//
// # Safety
// `h` must be live and both outputs writable.
enum CcStatus cc_energy_balance(const struct CcParams *h,
                                enum CcOrientation o,
                                uint32_t n_steps,
                                double *work,
                                double *kinetic);

// Runs a JSON configuration and returns the CSV table in `*csv`
// (free with `cc_string_free`).
//
// # Safety
// `json` must be NUL-terminated; `csv` must be writable.
enum CcStatus cc_run_config(const char *json, char **csv);

// Frees a string returned by the library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void cc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHIRAL_CASIMIR_H */
