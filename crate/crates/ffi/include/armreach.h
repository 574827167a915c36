#ifndef ARMREACH_H
#define ARMREACH_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArmreachStatus {
  ARMREACH_STATUS_OK = 0,
  ARMREACH_STATUS_NULL_POINTER = 1,
  ARMREACH_STATUS_INVALID_ARGUMENT = 2,
  ARMREACH_STATUS_PRESSURE_OUT_OF_RANGE = 3,
  ARMREACH_STATUS_NOT_CONVERGED = 4,
  ARMREACH_STATUS_CONFIG = 5,
  ARMREACH_STATUS_BUFFER_TOO_SMALL = 6,
  ARMREACH_STATUS_INTERNAL = 7,
  ARMREACH_STATUS_PANIC = 8,
} ArmreachStatus;

/**
 * Arm design handle.
 */
typedef struct ArmreachDesign ArmreachDesign;

/**
 * Attainability report handle.
 */
typedef struct ArmreachReport ArmreachReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * Valid until the next call on the same thread.
 */
const char *armreach_last_error(void);

/**
 * Builtin design: `antagonistic`, `bellows_only` or `muscle_only`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ArmreachStatus armreach_design_builtin(const char *name, struct ArmreachDesign **out);

/**
 * Design from TOML text. Grid paths resolve against the working directory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ArmreachStatus armreach_design_from_toml(const char *text, struct ArmreachDesign **out);

/**
 * # Safety
 * `design` must come from this library and not be freed twice. Null is ignored.
 */
void armreach_design_free(struct ArmreachDesign *design);

/**
 * # Safety
 * `design` must be a valid handle or null (returns 0).
 */
size_t armreach_design_actuator_count(const struct ArmreachDesign *design);

/**
 * # Safety
 * `design` must be a valid handle or null (returns 0).
 */
size_t armreach_design_segments(const struct ArmreachDesign *design);

/**
 * Equilibrium shape for `pressures` (one per actuator) and a world-frame
 * `load` of three values. Writes `(x, y, theta)` for every node, base first,
 * into `poses` (capacity `poses_len` doubles, at least `3 * (segments + 1)`)
 * and the final residual norm into `residual`. A non-positive `tolerance`
 * selects the default.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum ArmreachStatus armreach_solve(const struct ArmreachDesign *design,
                                   const double *pressures,
                                   size_t pressure_count,
                                   const double *load,
                                   double tolerance,
                                   double *poses,
                                   size_t poses_len,
                                   double *residual);

/**
 * Attainability of a named task shape (`reach`, `s_curve`, `tip_curl`) under
 * `load`. `per_edge` of 0 selects the default sampling.
 *
 * # Safety
 * `design` must be valid, `name` NUL-terminated, `load` three doubles, `out` valid.
 */
enum ArmreachStatus armreach_analyze_named(const struct ArmreachDesign *design,
                                           const char *name,
                                           const double *load,
                                           bool consistent_shear,
                                           size_t per_edge,
                                           struct ArmreachReport **out);

/**
 * Attainability of an explicit shape given as `segments` twists of
 * `(length, shear, curvature)`, packed in `twists`.
 *
 * # Safety
 * `twists` must hold `twists_len` doubles; other pointers as above.
 */
enum ArmreachStatus armreach_analyze_twists(const struct ArmreachDesign *design,
                                            const double *twists,
                                            size_t twists_len,
                                            const double *load,
                                            bool consistent_shear,
                                            size_t per_edge,
                                            struct ArmreachReport **out);

/**
 * # Safety
 * `report` must be valid or null (returns NaN).
 */
double armreach_report_absolute(const struct ArmreachReport *report);

/**
 * # Safety
 * `report` must be valid or null (returns NaN).
 */
double armreach_report_relative(const struct ArmreachReport *report);

/**
 * # Safety
 * `report` must be valid or null (returns false).
 */
bool armreach_report_attainable(const struct ArmreachReport *report);

/**
 * # Safety
 * `report` must be valid or null (returns 0).
 */
size_t armreach_report_node_count(const struct ArmreachReport *report);

/**
 * Per-node absolute and relative distances; either output may be null.
 *
 * # Safety
 * Non-null outputs must hold `len` doubles.
 */
enum ArmreachStatus armreach_report_per_node(const struct ArmreachReport *report,
                                             double *absolute,
                                             double *relative,
                                             size_t len);

/**
 * # Safety
 * `report` must come from this library and not be freed twice. Null is ignored.
 */
void armreach_report_free(struct ArmreachReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARMREACH_H */
