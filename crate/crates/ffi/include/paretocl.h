/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PARETOCL_H
#define PARETOCL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PclStatus {
  PCL_STATUS_OK = 0,
  PCL_STATUS_NULL_POINTER = 1,
  // A value failed validation (bad preference, τ ≤ 0, malformed text, ...).
  PCL_STATUS_INVALID_ARGUMENT = 2,
  PCL_STATUS_CONTRACT = 3,
  PCL_STATUS_NUMERIC = 4,
  PCL_STATUS_DEGENERATE_EMBEDDING = 5,
  PCL_STATUS_BATCH_SHAPE = 6,
  PCL_STATUS_ON_ORIGIN = 7,
  PCL_STATUS_IO = 8,
  PCL_STATUS_FORMAT = 9,
  PCL_STATUS_DATA = 10,
  PCL_STATUS_OUT_OF_RANGE = 11,
  PCL_STATUS_PANIC = 12,
} PclStatus;

typedef enum PclMode {
  PCL_MODE_BALANCE = 0,
  PCL_MODE_DESCENT = 1,
  PCL_MODE_LS = 2,
} PclMode;

typedef enum PclSolver {
  PCL_SOLVER_LS = 0,
  PCL_SOLVER_EPO = 1,
} PclSolver;

// Opaque trained model loaded from a checkpoint.
typedef struct PclModel PclModel;

// Opaque toy-lab trace.
typedef struct PclToyTrace PclToyTrace;

// One step of a toy-lab trace. `mu` is NaN when undefined.
typedef struct PclToyStep {
  size_t step;
  double f1;
  double f2;
  double mu;
  double ray_gap;
  double beta[2];
  enum PclMode mode;
} PclToyStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *pcl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *pcl_version(void);

// Non-uniformity μ of losses `l` under preference `r`, both of length `m`.
//
// # Safety
// `l` and `r` must point to `m` readable doubles; `out_mu` must be writable.
enum PclStatus pcl_non_uniformity(const double *l, const double *r, size_t m, double *out_mu);

// Writes 1 to `out_flag` when `a` Pareto-dominates `b` (both of length `m`), else 0.
//
// # Safety
// `a` and `b` must point to `m` readable doubles; `out_flag` must be writable.
enum PclStatus pcl_dominates(const double *a, const double *b, size_t m, int32_t *out_flag);

// Weights `(t, 1−t)` of the min-norm point between gradients of length `n`.
//
// # Safety
// `g1` and `g2` must point to `n` readable doubles; `out_beta` to 2 writable doubles.
enum PclStatus pcl_min_norm_weights(const double *g1, const double *g2, size_t n, double *out_beta);

// EPO combination weights for two non-negative losses `l[2]`, gradients of
// length `n` and preference `r[2]`.
//
// # Safety
// `l`, `r` and `out_beta` must point to 2 doubles, `g1`/`g2` to `n` doubles,
// and `out_mode` must be writable.
enum PclStatus pcl_epo_weights(const double *l,
                               const double *g1,
                               const double *g2,
                               size_t n,
                               const double *r,
                               double eps_balance,
                               double *out_beta,
                               enum PclMode *out_mode);

// Positive and negative contrastive losses of `rows` unit-norm embeddings
// (row-major, `dim` columns) with class `labels`. Rows are grouped by label
// in ascending label order. When non-NULL, `grad_pos`/`grad_neg` receive the
// `rows × dim` gradients in the input row order.
//
// # Safety
// `embeddings` must hold `rows·dim` doubles and `labels` `rows` entries;
// non-NULL gradient buffers must hold `rows·dim` doubles.
enum PclStatus pcl_contrastive_losses(const double *embeddings,
                                      const uint32_t *labels,
                                      size_t rows,
                                      size_t dim,
                                      double tau,
                                      double *out_pos,
                                      double *out_neg,
                                      double *grad_pos,
                                      double *grad_neg);

// Run LS or EPO on the `dim`-dimensional toy problem from a seeded random
// start of norm at most `max_radius`, with preference `(r1, 1−r1)`.
//
// # Safety
// `out_trace` must be writable; the handle is released with [`pcl_toy_trace_free`].
enum PclStatus pcl_toy_run(size_t dim,
                           enum PclSolver solver,
                           double r1,
                           size_t steps,
                           double step_size,
                           double eps_balance,
                           uint64_t init_seed,
                           double max_radius,
                           struct PclToyTrace **out_trace);

// Number of recorded steps, or 0 for NULL.
//
// # Safety
// `trace` must be NULL or a live handle.
size_t pcl_toy_trace_len(const struct PclToyTrace *trace);

// # Safety
// `trace` must be a live handle and `out_step` writable.
enum PclStatus pcl_toy_trace_step(const struct PclToyTrace *trace,
                                  size_t index,
                                  struct PclToyStep *out_step);

// Objective values after the last step.
//
// # Safety
// `trace` must be a live handle and `out_point` must hold 2 doubles.
enum PclStatus pcl_toy_trace_final_point(const struct PclToyTrace *trace, double *out_point);

// # Safety
// `trace` must be NULL or a handle from [`pcl_toy_run`] not yet freed.
void pcl_toy_trace_free(struct PclToyTrace *trace);

// Load a checkpoint written by `paretocl train`.
//
// # Safety
// `path` must be a NUL-terminated string and `out_model` writable; the
// handle is released with [`pcl_model_free`].
enum PclStatus pcl_model_load(const char *path, struct PclModel **out_model);

// Embedding dimension, or 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t pcl_model_embed_dim(const struct PclModel *model);

// Number of classes, or 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t pcl_model_num_classes(const struct PclModel *model);

// Unit-norm embedding of `text` (and optional `text2`, may be NULL) into
// `out`, which must hold exactly the embedding dimension.
//
// # Safety
// `model` must be a live handle, strings NUL-terminated, `out` writable for `out_len` doubles.
enum PclStatus pcl_model_embed(const struct PclModel *model,
                               const char *text1,
                               const char *text2,
                               double *out_embedding,
                               size_t out_len);

// Predicted class (ties to the smaller id). When `out_logits` is non-NULL it
// receives the logits and `logits_len` must equal the class count.
//
// # Safety
// `model` must be a live handle, strings NUL-terminated, `out_class` writable,
// and a non-NULL `out_logits` writable for `logits_len` doubles.
enum PclStatus pcl_model_predict(const struct PclModel *model,
                                 const char *text1,
                                 const char *text2,
                                 size_t *out_class,
                                 double *out_logits,
                                 size_t logits_len);

// # Safety
// `model` must be NULL or a handle from [`pcl_model_load`] not yet freed.
void pcl_model_free(struct PclModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARETOCL_H */
