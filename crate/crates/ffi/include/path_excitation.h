#ifndef PATH_EXCITATION_H
#define PATH_EXCITATION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible function.
 */
typedef enum PeStatus {
  PE_STATUS_OK = 0,
  PE_STATUS_NULL_POINTER = 1,
  PE_STATUS_INVALID_UTF8 = 2,
  PE_STATUS_PARSE = 3,
  PE_STATUS_VALIDATION = 4,
  PE_STATUS_NEGATIVE_TIME = 5,
  PE_STATUS_NODAL_POINT = 6,
  PE_STATUS_INDEX_OUT_OF_RANGE = 7,
  PE_STATUS_RUNTIME = 8,
  PE_STATUS_PANIC = 9,
} PeStatus;

/*
 Opaque configuration handle.
 */
typedef struct PeSystem PeSystem;

/*
 Field values at one point. `v_tot` is NaN when `nodal` is true.
 */
typedef struct PeFieldSample {
  double p_tot;
  double j_tot;
  double v_tot;
  bool nodal;
} PeFieldSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread, or NULL. The pointer is
 valid until the next failing call on the same thread.
 */
const char *pe_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *pe_version(void);

/*
 Creates a handle with the default symmetric two-slit configuration.

 # Safety
 `out_system` must be a valid pointer to writable storage for one pointer.
 */
enum PeStatus pe_system_new_default(struct PeSystem **out_system);

/*
 Creates a handle from a JSON configuration (same schema as the CLI).

 # Safety
 `json` must be a NUL-terminated string; `out_system` must be writable.
 */
enum PeStatus pe_system_new_from_json(const char *json, struct PeSystem **out_system);

/*
 Releases a handle. NULL is ignored.

 # Safety
 `system` must come from one of the constructors and not be freed twice.
 */
void pe_system_free(struct PeSystem *system);

/*
 Number of configured slits; 0 for NULL.

 # Safety
 `system` must be NULL or a live handle.
 */
size_t pe_system_slit_count(const struct PeSystem *system);

/*
 Replaces the open-slit mask; bit `i` opens slit `i`.

 # Safety
 `system` must be a live handle.
 */
enum PeStatus pe_system_set_mask(struct PeSystem *system, uint64_t open_bits);

/*
 `sigma(t)` of one slit.

 # Safety
 `system` must be a live handle and `out_sigma` writable.
 */
enum PeStatus pe_sigma_t(const struct PeSystem *system,
                         size_t slit_index,
                         double t,
                         double *out_sigma);

/*
 Emergent field at `(x, t)` for the open slits. Nodal points are judged
 against `reference_peak`; pass a value `<= 0` to use the envelope bound of
 `P_tot(., t)`.

 # Safety
 `system` must be a live handle and `out_sample` writable.
 */
enum PeStatus pe_field_at(const struct PeSystem *system,
                          double x,
                          double t,
                          double reference_peak,
                          struct PeFieldSample *out_sample);

/*
 Evaluates the field on `n_points` uniform points of `[x_min, x_max]` at `t`.
 Each output array must hold `n_points` elements; `nodal` receives 0 or 1.

 # Safety
 All pointers must be valid for `n_points` writes.
 */
enum PeStatus pe_field_grid(const struct PeSystem *system,
                            double x_min,
                            double x_max,
                            size_t n_points,
                            double t,
                            double *p_tot,
                            double *j_tot,
                            double *v_tot,
                            uint8_t *nodal);

/*
 Oracle density `|Psi|^2` and current `(hbar/m) Im(Psi* dPsi/dx)`.

 # Safety
 `system` must be a live handle; output pointers writable.
 */
enum PeStatus pe_qm_current(const struct PeSystem *system,
                            double x,
                            double t,
                            double *out_density,
                            double *out_current);

/*
 Sorkin term `I_S` for the subset whose bit `i` selects slit `i`.

 # Safety
 `system` must be a live handle and `out_value` writable.
 */
enum PeStatus pe_interference_term(const struct PeSystem *system,
                                   uint64_t subset_bits,
                                   double x,
                                   double t,
                                   double *out_value);

/*
 Integrates one streamline with RK4. `out_aborted` is set to 1 when the
 trajectory hit a nodal point, in which case `out_x` holds the last position
 reached.

 # Safety
 `system` must be a live handle; output pointers writable.
 */
enum PeStatus pe_integrate(const struct PeSystem *system,
                           double x0,
                           double t0,
                           double t1,
                           double dt,
                           double *out_x,
                           uint8_t *out_aborted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATH_EXCITATION_H */
