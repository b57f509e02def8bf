#ifndef LIGHTCONE_H
#define LIGHTCONE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  LC_STATUS_PARSE_ERROR = 3,
  LC_STATUS_NUMERICAL_ERROR = 4,
  LC_STATUS_PANIC = 5,
} LcStatus;

// Opaque handle to a cross section.
typedef struct LcSection LcSection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread; do not free.
const char *lc_last_error_message(void);

// Library version as a static string.
const char *lc_version(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void lc_string_free(char *s);

// Releases a section. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void lc_section_free(struct LcSection *s);

// Round sphere `ω ≡ rho`.
//
// # Safety
// `out` must be valid for writes.
enum LcStatus lc_section_round(size_t bandlimit, double rho, struct LcSection **out);

// The STCMC section with associated 4-vector `z[0..4]`.
//
// # Safety
// `z` must point to 4 doubles and `out` must be valid for writes.
enum LcStatus lc_section_from_z(size_t bandlimit, const double *z, struct LcSection **out);

// Parses a section file (`{"bandlimit", "omega_coeffs", "meta"}`).
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writes.
enum LcStatus lc_section_from_json(const char *json, struct LcSection **out);

// Serializes a section in the section-file format.
//
// # Safety
// `s` must be a live section and `out` valid for writes.
enum LcStatus lc_section_to_json(const struct LcSection *s, char **out);

// Full geometry report as JSON, measured against the STCMC reference of the section.
//
// # Safety
// `s` must be a live section and `out` valid for writes.
enum LcStatus lc_section_report_json(const struct LcSection *s, char **out);

// Bandlimit of a section, or 0 for null.
//
// # Safety
// `s` must be null or a live section.
size_t lc_section_bandlimit(const struct LcSection *s);

// Area `∫ω²`.
//
// # Safety
// `s` must be a live section and `out` valid for writes.
enum LcStatus lc_section_area(const struct LcSection *s, double *out);

// L² norm of the trace-free part of the scalar second fundamental form.
//
// # Safety
// `s` must be a live section and `out` valid for writes.
enum LcStatus lc_section_tracefree_norm(const struct LcSection *s, double *out);

// Pinching constant against the STCMC section built from Z.
//
// # Safety
// `s` must be a live section and `out` valid for writes.
enum LcStatus lc_section_kappa(const struct LcSection *s, double *out);

// Associated 4-vector `(t, x, y, z)` written to `out[0..4]`.
//
// # Safety
// `s` must be a live section and `out` valid for 4 writes.
enum LcStatus lc_section_z_vector(const struct LcSection *s, double *out);

// Image of a section under the Lorentz matrix `m[0..16]` (row-major).
//
// # Safety
// `s` must be a live section, `m` must point to 16 doubles and `out` must be valid for writes.
enum LcStatus lc_section_apply_lorentz(const struct LcSection *s,
                                       const double *m,
                                       struct LcSection **out);

// Image of a section under the pure boost with velocity parameter `a[0..3]`.
//
// # Safety
// `s` must be a live section, `a` must point to 3 doubles and `out` must be valid for writes.
enum LcStatus lc_section_boost(const struct LcSection *s, const double *a, struct LcSection **out);

// Boosts a section until its first moments vanish. The applied
// transformation is written row-major to `lambda_out[0..16]` unless it is null.
//
// # Safety
// `s` must be a live section, `out` valid for writes and `lambda_out` null or valid for 16 writes.
enum LcStatus lc_section_balance(const struct LcSection *s,
                                 struct LcSection **out,
                                 double *lambda_out);

// Runs the null mean curvature flow and returns its time series as CSV.
// The final section is written to `final_out` unless it is null.
//
// # Safety
// `s` must be a live section, `csv_out` valid for writes and `final_out` null or valid for writes.
enum LcStatus lc_flow_run(const struct LcSection *s,
                          double dt,
                          double t_max,
                          bool normalized,
                          char **csv_out,
                          struct LcSection **final_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIGHTCONE_H */
