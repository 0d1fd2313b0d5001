#ifndef ALM_SVM_H
#define ALM_SVM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define ALM_TASK_SVC 0

#define ALM_TASK_SVR 1

typedef enum AlmStatus {
  ALM_STATUS_OK = 0,
  ALM_STATUS_NULL_POINTER = 1,
  ALM_STATUS_INVALID_ARGUMENT = 2,
  ALM_STATUS_IO = 3,
  ALM_STATUS_PARSE = 4,
  ALM_STATUS_SOLVER = 5,
  ALM_STATUS_PANIC = 6,
} AlmStatus;

// Opaque dataset handle.
typedef struct AlmDataset AlmDataset;

// Opaque model handle.
typedef struct AlmModel AlmModel;

// Training options. Fill with [`alm_params_default`] and override fields.
typedef struct AlmParams {
  // `ALM_TASK_SVC` or `ALM_TASK_SVR`.
  int32_t task;
  // Penalty. Zero selects `550 / m` for classification and
  // `5 / n_features` for regression.
  double c;
  double epsilon;
  double sigma0;
  double sigma_max;
  double theta;
  uint32_t max_outer;
  double tol;
  // Append a constant feature; its weight is the last one.
  bool bias;
} AlmParams;

typedef struct AlmReport {
  size_t outer_iterations;
  size_t newton_iterations;
  size_t cg_iterations;
  double time_seconds;
  double kkt_residual;
  double relative_gap;
  double objective;
  bool converged;
} AlmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *alm_last_error(void);

// Library version as a static NUL-terminated string.
const char *alm_version(void);

// Writes the default options for `task` into `out`.
//
// # Safety
// `out` must be null or point to writable memory for one `AlmParams`.
enum AlmStatus alm_params_default(int32_t task, struct AlmParams *out);

// Reads a LIBSVM-format file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum AlmStatus alm_dataset_load(const char *path, struct AlmDataset **out);

// Builds a dataset from a row-major `rows x cols` matrix and `rows` labels.
// Zero entries are dropped.
//
// # Safety
// `x` must hold `rows * cols` values and `labels` `rows` values.
enum AlmStatus alm_dataset_from_dense(const double *x,
                                      const double *labels,
                                      size_t rows,
                                      size_t cols,
                                      struct AlmDataset **out);

// Number of samples; 0 for a null handle.
//
// # Safety
// `data` must be null or a live dataset handle.
size_t alm_dataset_rows(const struct AlmDataset *data);

// Number of features; 0 for a null handle.
//
// # Safety
// `data` must be null or a live dataset handle.
size_t alm_dataset_cols(const struct AlmDataset *data);

// # Safety
// `data` must be null or a handle not yet freed.
void alm_dataset_free(struct AlmDataset *data);

// Trains a model. `report` may be null.
//
// # Safety
// `data` and `params` must be live; `out` must be writable.
enum AlmStatus alm_train(const struct AlmDataset *data,
                         const struct AlmParams *params,
                         struct AlmModel **out,
                         struct AlmReport *report);

// Predicts every sample of `data` into `out[0..rows]`: labels in the
// original label space for classification, scores for regression.
//
// # Safety
// `out` must hold `len` writable values.
enum AlmStatus alm_model_predict(const struct AlmModel *model,
                                 const struct AlmDataset *data,
                                 double *out,
                                 size_t len);

// Predicts one dense sample of `n` features.
//
// # Safety
// `x` must hold `n` values; `out` must be writable.
enum AlmStatus alm_model_predict_dense(const struct AlmModel *model,
                                       const double *x,
                                       size_t n,
                                       double *out);

// Accuracy in percent for classification models, mean squared error for
// regression models.
//
// # Safety
// `out` must be writable.
enum AlmStatus alm_model_evaluate(const struct AlmModel *model,
                                  const struct AlmDataset *data,
                                  double *out);

// Number of weights, including the bias weight; 0 for a null handle.
//
// # Safety
// `model` must be null or a live model handle.
size_t alm_model_num_weights(const struct AlmModel *model);

// Copies the weights into `out`.
//
// # Safety
// `out` must hold `len` writable values.
enum AlmStatus alm_model_weights(const struct AlmModel *model, double *out, size_t len);

// # Safety
// `path` must be a NUL-terminated string.
enum AlmStatus alm_model_save(const struct AlmModel *model, const char *path);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum AlmStatus alm_model_load(const char *path, struct AlmModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void alm_model_free(struct AlmModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALM_SVM_H */
