#ifndef SHAPESR_H
#define SHAPESR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShapesrStatus {
  SHAPESR_STATUS_OK = 0,
  SHAPESR_STATUS_NULL_POINTER = 1,
  SHAPESR_STATUS_INVALID_UTF8 = 2,
  SHAPESR_STATUS_PARSE = 3,
  SHAPESR_STATUS_UNKNOWN_INSTANCE = 4,
  SHAPESR_STATUS_INVALID_ARGUMENT = 5,
  SHAPESR_STATUS_BUFFER_TOO_SMALL = 6,
  SHAPESR_STATUS_RUN_FAILED = 7,
  SHAPESR_STATUS_PANIC = 8,
} ShapesrStatus;

typedef enum ShapesrSplit {
  SHAPESR_SPLIT_TRAIN = 0,
  SHAPESR_SPLIT_TEST = 1,
} ShapesrSplit;

typedef enum ShapesrAlgorithm {
  SHAPESR_ALGORITHM_NSGA2 = 0,
  SHAPESR_ALGORITHM_NSGA3 = 1,
} ShapesrAlgorithm;

/*
 Generated train/test data of one instance.
 */
typedef struct ShapesrDataset ShapesrDataset;

/*
 Parsed expression tree.
 */
typedef struct ShapesrExpr ShapesrExpr;

/*
 Benchmark instance from the built-in catalog.
 */
typedef struct ShapesrInstance ShapesrInstance;

/*
 Summary of one finished search.
 */
typedef struct ShapesrRunResult ShapesrRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next failing call on the same thread.
 */
const char *shapesr_last_error(void);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void shapesr_string_free(char *s);

/*
 Parses the canonical prefix form, e.g. `(mul x0 (sin x1))`.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ShapesrStatus shapesr_expr_parse(const char *text, struct ShapesrExpr **out);

/*
 # Safety
 `expr` must be NULL or a live handle from this library.
 */
void shapesr_expr_free(struct ShapesrExpr *expr);

/*
 Canonical prefix form. Release with `shapesr_string_free`.

 # Safety
 `expr` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_expr_to_string(const struct ShapesrExpr *expr, char **out);

/*
 Number of nodes.

 # Safety
 `expr` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_expr_size(const struct ShapesrExpr *expr, size_t *out);

/*
 Evaluates at one point of `len` coordinates. Undefined results are NaN.

 # Safety
 `point` must hold `len` doubles; `out` must be writable.
 */
enum ShapesrStatus shapesr_expr_eval(const struct ShapesrExpr *expr,
                                     const double *point,
                                     size_t len,
                                     double *out);

/*
 Enclosure of the expression's range over the box `[lo[i], hi[i]]`.
 An empty result is reported as NaN bounds.

 # Safety
 `lo` and `hi` must hold `len` doubles; outputs must be writable.
 */
enum ShapesrStatus shapesr_expr_eval_interval(const struct ShapesrExpr *expr,
                                              const double *lo,
                                              const double *hi,
                                              size_t len,
                                              double *out_lo,
                                              double *out_hi);

/*
 Simplified symbolic partial derivative with respect to `x{var}`.

 # Safety
 `expr` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_expr_derivative(const struct ShapesrExpr *expr,
                                           size_t var,
                                           struct ShapesrExpr **out);

/*
 # Safety
 `expr` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_expr_simplify(const struct ShapesrExpr *expr, struct ShapesrExpr **out);

/*
 NMSE in percent, normalized by the population variance of `y`.

 # Safety
 `y` and `yhat` must hold `len` doubles; `out` must be writable.
 */
enum ShapesrStatus shapesr_nmse(const double *y, const double *yhat, size_t len, double *out);

/*
 Number of built-in benchmark instances.
 */
size_t shapesr_catalog_len(void);

/*
 Name of the `index`-th catalog instance. Release with `shapesr_string_free`.

 # Safety
 `out` must be writable.
 */
enum ShapesrStatus shapesr_catalog_name(size_t index, char **out);

/*
 Looks up an instance by name, case-insensitively.

 # Safety
 `name` must be a NUL-terminated string; `out` must be writable.
 */
enum ShapesrStatus shapesr_instance_get(const char *name, struct ShapesrInstance **out);

/*
 # Safety
 `instance` must be NULL or a live handle from this library.
 */
void shapesr_instance_free(struct ShapesrInstance *instance);

/*
 Number of input variables.

 # Safety
 `instance` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_instance_arity(const struct ShapesrInstance *instance, size_t *out);

/*
 Objective count: one data term plus one per constraint.

 # Safety
 `instance` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_instance_num_objectives(const struct ShapesrInstance *instance,
                                                   size_t *out);

/*
 Copy of the instance's ground-truth expression.

 # Safety
 `instance` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_instance_ground_truth(const struct ShapesrInstance *instance,
                                                 struct ShapesrExpr **out);

/*
 Generates the seeded train/test dataset of an instance.

 # Safety
 `instance` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_dataset_generate(const struct ShapesrInstance *instance,
                                            uint64_t seed,
                                            struct ShapesrDataset **out);

/*
 # Safety
 `dataset` must be NULL or a live handle from this library.
 */
void shapesr_dataset_free(struct ShapesrDataset *dataset);

/*
 Number of rows in `split`.

 # Safety
 `dataset` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_dataset_rows(const struct ShapesrDataset *dataset,
                                        enum ShapesrSplit split,
                                        size_t *out);

/*
 Copies the rows of `split`: inputs row-major into `inputs`
 (`rows * arity` doubles) and targets into `targets` (`rows` doubles).
 `capacity` is the number of rows the buffers can hold.

 # Safety
 `inputs` must hold `capacity * arity` doubles and `targets` `capacity`.
 */
enum ShapesrStatus shapesr_dataset_copy(const struct ShapesrDataset *dataset,
                                        enum ShapesrSplit split,
                                        double *inputs,
                                        double *targets,
                                        size_t capacity);

/*
 Objective vector of `expr` on the training rows: NMSE followed by one
 penalty per constraint. `written` receives the objective count.

 # Safety
 Handles must be live; `out` must hold `capacity` doubles.
 */
enum ShapesrStatus shapesr_evaluate(const struct ShapesrExpr *expr,
                                    const struct ShapesrInstance *instance,
                                    const struct ShapesrDataset *dataset,
                                    double *out,
                                    size_t capacity,
                                    size_t *written);

/*
 Runs one seeded search with default GP settings. `threads == 0` uses
 all cores.

 # Safety
 `instance` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_run(const struct ShapesrInstance *instance,
                               enum ShapesrAlgorithm algorithm,
                               uint64_t seed,
                               size_t population_size,
                               size_t max_evaluations,
                               size_t threads,
                               struct ShapesrRunResult **out);

/*
 # Safety
 `result` must be NULL or a live handle from this library.
 */
void shapesr_run_result_free(struct ShapesrRunResult *result);

/*
 Training and test NMSE of the reported model.

 # Safety
 `result` must be a live handle; outputs must be writable.
 */
enum ShapesrStatus shapesr_run_result_nmse(const struct ShapesrRunResult *result,
                                           double *train,
                                           double *test);

/*
 Feasibility flag, evaluations used and wall-clock seconds.

 # Safety
 `result` must be a live handle; outputs must be writable.
 */
enum ShapesrStatus shapesr_run_result_stats(const struct ShapesrRunResult *result,
                                            bool *feasible,
                                            size_t *evaluations,
                                            double *runtime_s);

/*
 Copies the constraint penalties of the reported model.

 # Safety
 `out` must hold `capacity` doubles; `written` must be writable.
 */
enum ShapesrStatus shapesr_run_result_penalties(const struct ShapesrRunResult *result,
                                                double *out,
                                                size_t capacity,
                                                size_t *written);

/*
 The reported model as a parsed expression handle.

 # Safety
 `result` must be a live handle; `out` must be writable.
 */
enum ShapesrStatus shapesr_run_result_model(const struct ShapesrRunResult *result,
                                            struct ShapesrExpr **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPESR_H */
