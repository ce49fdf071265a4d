#ifndef POISSON_CORNERS_H
#define POISSON_CORNERS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_UTF8 = 2,
  PC_STATUS_PARSE = 3,
  PC_STATUS_EVALUATION = 4,
  PC_STATUS_INVALID_ARGUMENT = 5,
  PC_STATUS_LOAD = 6,
  PC_STATUS_COMMAND = 7,
  PC_STATUS_PANIC = 8,
} PcStatus;

// Report flavours accepted by [`pc_manifest_report`].
typedef enum PcCommand {
  PC_COMMAND_CHECK_SHEAF = 0,
  PC_COMMAND_CHECK_POISSON = 1,
  PC_COMMAND_FIBRE = 2,
  PC_COMMAND_STALK = 3,
} PcCommand;

// An antisymmetric bivector field.
typedef struct PcBivector PcBivector;

// A parsed expression.
typedef struct PcExpr PcExpr;

// A validated manifest.
typedef struct PcManifest PcManifest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *pc_last_error(void);

void pc_string_free(char *s);

// Parses `source` over `dimension` variables `x1..xn`.
enum PcStatus pc_expr_parse(const char *source, size_t dimension, struct PcExpr **out);

void pc_expr_free(struct PcExpr *e);

// Canonical form of `e`.
enum PcStatus pc_expr_canonicalize(const struct PcExpr *e, struct PcExpr **out);

// Printed form of `e`; free with [`pc_string_free`].
enum PcStatus pc_expr_to_string(const struct PcExpr *e, char **out);

// Canonical partial derivative in `x_var` (1-based).
enum PcStatus pc_expr_differentiate(const struct PcExpr *e, size_t var, struct PcExpr **out);

// Value of `e` at the point with `len` coordinates.
enum PcStatus pc_expr_evaluate(const struct PcExpr *e,
                               const double *coords,
                               size_t len,
                               double *out);

// Bivector on `R^n_k` from `count` upper-triangle entries
// `pi^{rows[t] cols[t]} = exprs[t]`; unlisted entries are zero.
enum PcStatus pc_bivector_new(size_t n,
                              size_t k,
                              const size_t *rows,
                              const size_t *cols,
                              const struct PcExpr *const *exprs,
                              size_t count,
                              struct PcBivector **out);

void pc_bivector_free(struct PcBivector *b);

// Canonical `{f, g}` under `pi`.
enum PcStatus pc_bracket(const struct PcExpr *f,
                         const struct PcExpr *g,
                         const struct PcBivector *pi,
                         struct PcExpr **out);

// Jacobi check of `pi`: `passed` is 1 when the Jacobi identity holds,
// `worst_defect` the largest sampled coordinate-triple defect.
enum PcStatus pc_check_poisson(const struct PcBivector *pi,
                               uint64_t seed,
                               int32_t *passed,
                               double *worst_defect);

// Loads and validates the JSON manifest at `path`.
enum PcStatus pc_manifest_load(const char *path, uint64_t seed, struct PcManifest **out);

void pc_manifest_free(struct PcManifest *m);

// Runs a report command on `m` and writes its text (or JSON when `json`
// is nonzero) to `report` and its exit code (0 or 1) to `exit_code`.
//
// `arg1` names the fibre product for `Fibre` and the section for `Stalk`;
// `arg2` is the point for `Stalk`. Both are ignored otherwise and may be
// null.
enum PcStatus pc_manifest_report(const struct PcManifest *m,
                                 enum PcCommand command,
                                 const char *arg1,
                                 const char *arg2,
                                 int32_t json,
                                 char **report,
                                 int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POISSON_CORNERS_H */
