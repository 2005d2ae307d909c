/* Generated by cbindgen from crates/ffi/src/lib.rs. */

#ifndef TEMPACT_H
#define TEMPACT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call. Numeric values match the command-line exit codes.
 */
typedef enum TaStatus {
  TA_STATUS_OK = 0,
  TA_STATUS_CONFIG = 2,
  TA_STATUS_DATA = 3,
  TA_STATUS_TRAINING = 4,
  TA_STATUS_CHECKPOINT = 5,
  TA_STATUS_IO = 6,
  /**
   * A required pointer was null or a size argument was inconsistent.
   */
  TA_STATUS_INVALID_ARGUMENT = 7,
  /**
   * A Rust panic was caught.
   */
  TA_STATUS_INTERNAL = 8,
} TaStatus;

/**
 * A loaded model.
 */
typedef struct TaModel TaModel;

/**
 * A sliding-window stream over one model.
 */
typedef struct TaStream TaStream;

/**
 * One emitted window.
 */
typedef struct TaWindowResult {
  size_t start_index;
  size_t end_index;
  size_t label;
  double latency_ms;
} TaWindowResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ta_last_error(void);

/**
 * Loads a checkpoint from `path` (UTF-8, NUL-terminated).
 *
 * # Safety
 * `path` must be a valid C string and `out_model` a writable pointer.
 */
enum TaStatus ta_model_load(const char *path, struct TaModel **out_model);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`ta_model_load`] and not be used afterwards.
 */
void ta_model_free(struct TaModel *model);

/**
 * Feature dimension the model expects, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ta_model_input_dim(const struct TaModel *model);

/**
 * Number of classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ta_model_num_classes(const struct TaModel *model);

/**
 * Classifies a clip of `frames` rows of `dim` features, row-major.
 * Writes the label and, if `out_log_probs` is not null, `num_classes`
 * log-probabilities.
 *
 * # Safety
 * `features` must hold `frames * dim` floats and `out_log_probs`, when not
 * null, room for `num_classes` floats.
 */
enum TaStatus ta_model_predict(const struct TaModel *model,
                               const float *features,
                               size_t frames,
                               size_t dim,
                               size_t *out_label,
                               float *out_log_probs,
                               size_t num_classes);

/**
 * Starts a stream over a copy of `model`; the model may be freed afterwards.
 *
 * # Safety
 * `model` must be a live handle and `out_stream` writable.
 */
enum TaStatus ta_stream_new(const struct TaModel *model,
                            size_t window,
                            size_t hop,
                            bool emit_on_change,
                            struct TaStream **out_stream);

/**
 * Pushes one frame of `dim` features. Sets `*out_emitted` and, when a
 * window was emitted, fills `out_result` and (if not null) `out_log_probs`.
 *
 * # Safety
 * `frame` must hold `dim` floats; `out_log_probs`, when not null, room for
 * `num_classes` floats.
 */
enum TaStatus ta_stream_push(struct TaStream *stream,
                             const float *frame,
                             size_t dim,
                             bool *out_emitted,
                             struct TaWindowResult *out_result,
                             float *out_log_probs,
                             size_t num_classes);

/**
 * Frames pushed so far, or 0 for a null handle.
 *
 * # Safety
 * `stream` must be null or a live handle.
 */
size_t ta_stream_frames_seen(const struct TaStream *stream);

/**
 * Releases a stream. Null is ignored.
 *
 * # Safety
 * `stream` must come from [`ta_stream_new`] and not be used afterwards.
 */
void ta_stream_free(struct TaStream *stream);

/**
 * Support-weighted F1 of `n` predictions over `num_classes` labels.
 *
 * # Safety
 * `truth` and `pred` must each hold `n` values.
 */
enum TaStatus ta_weighted_f1(const size_t *truth,
                             const size_t *pred,
                             size_t n,
                             size_t num_classes,
                             double *out_f1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEMPACT_H */
