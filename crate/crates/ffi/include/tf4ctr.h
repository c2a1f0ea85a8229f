#ifndef TF4CTR_H
#define TF4CTR_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Tf4Status {
  TF4_STATUS_OK = 0,
  TF4_STATUS_NULL_POINTER = 1,
  TF4_STATUS_INVALID_STRING = 2,
  TF4_STATUS_CONFIG = 3,
  TF4_STATUS_DATA = 4,
  TF4_STATUS_MISSING_CHECKPOINT = 5,
  TF4_STATUS_METRIC_UNDEFINED = 6,
  TF4_STATUS_INTERNAL = 7,
  TF4_STATUS_PANIC = 8,
} Tf4Status;

/**
 * Opaque experiment configuration.
 */
typedef struct Tf4Config Tf4Config;

/**
 * Opaque trained model.
 */
typedef struct Tf4Model Tf4Model;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *tf4_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tf4_version(void);

/**
 * New configuration holding the defaults.
 */
enum Tf4Status tf4_config_new(struct Tf4Config **out);

/**
 * Configuration read from a `key = value` file.
 */
enum Tf4Status tf4_config_from_file(const char *path, struct Tf4Config **out);

enum Tf4Status tf4_config_set(struct Tf4Config *cfg, const char *key, const char *value);

/**
 * Copies the value of `key` into `buf` (NUL-terminated, truncated to
 * `len`); `needed` receives the full length including the NUL.
 */
enum Tf4Status tf4_config_get(const struct Tf4Config *cfg,
                              const char *key,
                              char *buf,
                              size_t len,
                              size_t *needed);

void tf4_config_free(struct Tf4Config *cfg);

/**
 * Trains `cfg` into `out_dir`; on success `out` receives the best model.
 */
enum Tf4Status tf4_train(const struct Tf4Config *cfg, const char *out_dir, struct Tf4Model **out);

/**
 * Loads the best checkpoint of a run directory.
 */
enum Tf4Status tf4_model_load(const char *run_dir, struct Tf4Model **out);

enum Tf4Status tf4_model_num_fields(const struct Tf4Model *model, size_t *out);

/**
 * Click probabilities for `n_rows` encoded rows (`ids` is row-major
 * `n_rows × n_fields`, id 0 is out-of-vocabulary). Writes `n_rows` values.
 */
enum Tf4Status tf4_model_predict(const struct Tf4Model *model,
                                 const uint32_t *ids,
                                 size_t n_rows,
                                 size_t n_fields,
                                 double *out_scores);

void tf4_model_free(struct Tf4Model *model);

enum Tf4Status tf4_auc(const double *scores, const double *labels, size_t n, double *out);

/**
 * `present` is set to 0 when no group holds both classes.
 */
enum Tf4Status tf4_gauc(const double *scores,
                        const double *labels,
                        const uint32_t *groups,
                        size_t n,
                        double *out,
                        int32_t *present);

/**
 * Mean log loss of the label-aligned probabilities.
 */
enum Tf4Status tf4_loss_ctr(const double *y_hat, const double *labels, size_t n, double *out);

enum Tf4Status tf4_loss_focal(const double *y_hat,
                              const double *labels,
                              size_t n,
                              double gamma_f,
                              double *out);

/**
 * Twin focus loss terms for simple-head `y_s` and complex-head `y_c`.
 */
enum Tf4Status tf4_loss_tf(const double *y_s,
                           const double *y_c,
                           const double *labels,
                           size_t n,
                           double alpha,
                           double c,
                           double gamma,
                           double *out_simple,
                           double *out_complex,
                           double *out_tf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TF4CTR_H */
