#ifndef DCOPF_H
#define DCOPF_H

/* generated by cbindgen from crates/ffi; do not edit */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * The three security-constraint formulations.
 */
typedef enum DcopfFormulation {
  DcopfFormulation_Ptdf = 0,
  DcopfFormulation_PureTheta = 1,
  DcopfFormulation_Mixed = 2,
} DcopfFormulation;

/**
 * Status codes mirroring the CLI exit conventions.
 */
typedef enum DcopfStatusCode {
  DcopfStatusCode_Ok = 0,
  DcopfStatusCode_InvalidArgument = 1,
  DcopfStatusCode_ParseError = 2,
  DcopfStatusCode_SolveError = 3,
} DcopfStatusCode;

/**
 * Opaque parsed grid case.
 */
typedef struct DcopfCase DcopfCase;

/**
 * Opaque solved dispatch.
 */
typedef struct DcopfDispatch DcopfDispatch;

/**
 * Solver options; obtain defaults from [`dcopf_default_options`].
 */
typedef struct DcopfSolveOptions {
  /**
   * Scaled-residual convergence tolerance.
   */
  double tol;
  uint32_t max_iter;
  /**
   * Merge colocated generators before building (required by the pure
   * voltage angle formulation when a bus hosts several units).
   */
  bool merge_generators;
  /**
   * 1 solves a single-period OPF; larger values solve a SCED with this
   * many hourly periods.
   */
  uint32_t periods;
  /**
   * Seed for the SCED load-scaling draws.
   */
  uint64_t seed;
  /**
   * Default generator ramp as a fraction of pmax, MW/h.
   */
  double ramp_frac;
} DcopfSolveOptions;

/**
 * Structural sparsity summary of one built formulation.
 */
typedef struct DcopfSparsity {
  uintptr_t n_vars;
  uintptr_t n_cons;
  uintptr_t nnz_a;
  double density_a;
  uintptr_t nnz_aat_lower;
  uint64_t factor_ops;
} DcopfSparsity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL when the previous call
 * succeeded. Free with [`dcopf_string_free`].
 */
char *dcopf_last_error(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a dcopf function and not
 * yet freed; NULL is ignored.
 */
void dcopf_string_free(char *s);

/**
 * Library version string (static storage; do not free).
 */
const char *dcopf_version(void);

/**
 * Default solver options: tol 1e-8, 100 iterations, generator merging on,
 * single period.
 */
struct DcopfSolveOptions dcopf_default_options(void);

/**
 * Parse a case from MATPOWER-subset text or the JSON mirror.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum DcopfStatusCode dcopf_case_parse(const char *text, struct DcopfCase **out);

/**
 * Parse a case file from disk.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum DcopfStatusCode dcopf_case_parse_file(const char *path, struct DcopfCase **out);

/**
 * Free a case handle (NULL is ignored).
 *
 * # Safety
 * `case` must come from a dcopf parse function and not be used afterward.
 */
void dcopf_case_free(struct DcopfCase *case_);

/**
 * Element counts of a parsed case.
 *
 * # Safety
 * All pointers must be valid; `case` must be a live case handle.
 */
enum DcopfStatusCode dcopf_case_counts(const struct DcopfCase *case_,
                                       uintptr_t *buses,
                                       uintptr_t *branches,
                                       uintptr_t *generators);

/**
 * JSON mirror of a parsed case; free with [`dcopf_string_free`].
 *
 * # Safety
 * `case` must be a live case handle.
 */
char *dcopf_case_to_json(const struct DcopfCase *case_);

/**
 * Build and solve one formulation; on success `out` receives a dispatch
 * handle.
 *
 * # Safety
 * `case` must be a live case handle; `out` must be valid; `opts` may be
 * NULL for defaults.
 */
enum DcopfStatusCode dcopf_solve(const struct DcopfCase *case_,
                                 enum DcopfFormulation kind,
                                 const struct DcopfSolveOptions *opts,
                                 struct DcopfDispatch **out);

/**
 * Free a dispatch handle (NULL is ignored).
 *
 * # Safety
 * `d` must come from [`dcopf_solve`] and not be used afterward.
 */
void dcopf_dispatch_free(struct DcopfDispatch *d);

/**
 * Total dispatch cost in $ (objective plus constant cost terms).
 *
 * # Safety
 * `d` must be a live dispatch handle.
 */
double dcopf_dispatch_objective(const struct DcopfDispatch *d);

/**
 * Number of periods in the dispatch.
 *
 * # Safety
 * `d` must be a live dispatch handle.
 */
uintptr_t dcopf_dispatch_periods(const struct DcopfDispatch *d);

/**
 * Number of generators per period.
 *
 * # Safety
 * `d` must be a live dispatch handle.
 */
uintptr_t dcopf_dispatch_generators(const struct DcopfDispatch *d);

/**
 * Number of branches per period.
 *
 * # Safety
 * `d` must be a live dispatch handle.
 */
uintptr_t dcopf_dispatch_branches(const struct DcopfDispatch *d);

/**
 * Copy generator MW for one period into `buf` (length `len` ≥ generator
 * count).
 *
 * # Safety
 * `d` must be a live dispatch handle and `buf` must point to at least
 * `len` writable doubles.
 */
enum DcopfStatusCode dcopf_dispatch_generation(const struct DcopfDispatch *d,
                                               uintptr_t period,
                                               double *buf,
                                               uintptr_t len);

/**
 * Copy branch MW flows for one period into `buf` (length `len` ≥ branch
 * count).
 *
 * # Safety
 * `d` must be a live dispatch handle and `buf` must point to at least
 * `len` writable doubles.
 */
enum DcopfStatusCode dcopf_dispatch_flows(const struct DcopfDispatch *d,
                                          uintptr_t period,
                                          double *buf,
                                          uintptr_t len);

/**
 * Structural sparsity summary of one built (single-period) formulation.
 *
 * # Safety
 * `case` must be a live case handle; `out` must be valid.
 */
enum DcopfStatusCode dcopf_sparsity(const struct DcopfCase *case_,
                                    enum DcopfFormulation kind,
                                    bool merge_generators,
                                    struct DcopfSparsity *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DCOPF_H */
