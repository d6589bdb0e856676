#ifndef PHASEFRAC_H
#define PHASEFRAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_ARGUMENT = 2,
  PF_STATUS_CONFIG = 3,
  /**
   * The run finished early because an increment could not be solved. The
   * result object is still produced.
   */
  PF_STATUS_SOLVER_ABORTED = 4,
  PF_STATUS_IO = 5,
  PF_STATUS_NUMERICAL = 6,
  /**
   * The requested quantity does not exist for this run.
   */
  PF_STATUS_NOT_AVAILABLE = 7,
  PF_STATUS_PANIC = 8,
} PfStatus;

/**
 * Result of a finished run.
 */
typedef struct PfRun PfRun;

/**
 * Run specification: a preset or a parsed config file, plus overrides.
 */
typedef struct PfSpec PfSpec;

/**
 * One accepted increment.
 */
typedef struct PfIncrement {
  size_t increment;
  double time;
  double dt;
  size_t iterations;
  size_t cum_iterations;
  double u_applied_mm;
  double reaction_n;
  double crack_length_mm;
} PfIncrement;

/**
 * Headline numbers of a run. Fields without a value are NaN.
 */
typedef struct PfSummary {
  size_t increments;
  size_t cum_iterations;
  double wall_seconds;
  double peak_reaction_n;
  double critical_displacement_mm;
  double final_crack_length_mm;
  bool completed;
  bool history_monotone;
} PfSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next call into this library from the same thread.
 */
const char *pf_last_error(void);

/**
 * Creates the preset of `case` ("sent", "shear", "fatigue" or "dynamic").
 *
 * # Safety
 * `case_name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PfStatus pf_spec_preset(const char *case_name, struct PfSpec **out);

/**
 * Parses config text. Relative paths inside it resolve against `base_dir`,
 * which may be null for the working directory.
 *
 * # Safety
 * `text` and a non-null `base_dir` must be NUL-terminated strings; `out`
 * must be a valid pointer.
 */
enum PfStatus pf_spec_parse(const char *text, const char *base_dir, struct PfSpec **out);

/**
 * # Safety
 * `spec` must come from a `pf_spec_*` constructor (or be null) and not be
 * used afterwards.
 */
void pf_spec_free(struct PfSpec *spec);

/**
 * # Safety
 * `spec` must be a live spec and `scheme` a NUL-terminated string.
 */
enum PfStatus pf_spec_set_scheme(struct PfSpec *spec, const char *scheme);

/**
 * Reference increments of the ramp, or increments per cycle for fatigue.
 *
 * # Safety
 * `spec` must be a live spec.
 */
enum PfStatus pf_spec_set_increments(struct PfSpec *spec, size_t n);

/**
 * # Safety
 * `spec` must be a live spec.
 */
enum PfStatus pf_spec_set_adaptive(struct PfSpec *spec, bool on);

/**
 * Length scale over band element size.
 *
 * # Safety
 * `spec` must be a live spec.
 */
enum PfStatus pf_spec_set_refine(struct PfSpec *spec, double refine);

/**
 * # Safety
 * `spec` must be a live spec and `dir` a NUL-terminated string.
 */
enum PfStatus pf_spec_set_output(struct PfSpec *spec, const char *dir);

/**
 * Validates the spec, listing every problem in the error message.
 *
 * # Safety
 * `spec` must be a live spec.
 */
enum PfStatus pf_spec_validate(struct PfSpec *spec);

/**
 * Runs the case and writes its outputs. On [`PfStatus::SolverAborted`]
 * `*out` still receives the partial run.
 *
 * # Safety
 * `spec` must be a live spec and `out` a valid pointer.
 */
enum PfStatus pf_run(const struct PfSpec *spec, struct PfRun **out);

/**
 * # Safety
 * `run` must come from [`pf_run`] (or be null) and not be used afterwards.
 */
void pf_run_free(struct PfRun *run);

/**
 * Number of accepted increments.
 *
 * # Safety
 * `run` must be a live run and `out` a valid pointer.
 */
enum PfStatus pf_run_increments(const struct PfRun *run, size_t *out);

/**
 * Copies increment `index` (0-based).
 *
 * # Safety
 * `run` must be a live run and `out` a valid pointer.
 */
enum PfStatus pf_run_increment(const struct PfRun *run, size_t index, struct PfIncrement *out);

/**
 * # Safety
 * `run` must be a live run and `out` a valid pointer.
 */
enum PfStatus pf_run_summary(const struct PfRun *run, struct PfSummary *out);

/**
 * Cycles to failure of a fatigue run.
 *
 * # Safety
 * `run` must be a live run and `out` a valid pointer.
 */
enum PfStatus pf_run_cycles_to_failure(const struct PfRun *run, size_t *out);

/**
 * Rayleigh wave speed in m/s for `E` in MPa and density in kg/m^3.
 */
enum PfStatus pf_rayleigh_wave_speed(double young_mpa, double poisson, double density, double *out);

/**
 * Library version as a static string.
 */
const char *pf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEFRAC_H */
