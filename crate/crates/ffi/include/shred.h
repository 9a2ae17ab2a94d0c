#ifndef SHRED_H
#define SHRED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShredActivation {
  SHRED_ACTIVATION_RELU = 0,
  SHRED_ACTIVATION_TANH = 1,
} ShredActivation;

typedef enum ShredCell {
  SHRED_CELL_GRU = 0,
  SHRED_CELL_LSTM = 1,
} ShredCell;

typedef enum ShredCompressionKind {
  SHRED_COMPRESSION_KIND_NONE = 0,
  // Randomized SVD; uses `modes`.
  SHRED_COMPRESSION_KIND_SVD = 1,
  // Low-frequency 2-D Fourier truncation; uses `kx` and `ky`.
  SHRED_COMPRESSION_KIND_FOURIER = 2,
} ShredCompressionKind;

typedef enum ShredSensorKind {
  // The field is a reconstruction target only.
  SHRED_SENSOR_KIND_NONE = 0,
  // `count` distinct random grid points drawn with `seed`.
  SHRED_SENSOR_KIND_RANDOM = 1,
  // `count` fixed grid points; `locations` holds `count × spatial_ndim`
  // indices, one row per sensor.
  SHRED_SENSOR_KIND_STATIONARY = 2,
} ShredSensorKind;

// Result of every fallible call.
typedef enum ShredStatus {
  SHRED_STATUS_OK = 0,
  SHRED_STATUS_NULL_POINTER = 1,
  SHRED_STATUS_INVALID_ARGUMENT = 2,
  SHRED_STATUS_SHAPE = 3,
  SHRED_STATUS_NON_FINITE = 4,
  SHRED_STATUS_SINGULAR = 5,
  SHRED_STATUS_NUMERIC = 6,
  SHRED_STATUS_DIVERGENCE = 7,
  SHRED_STATUS_UNSUPPORTED = 8,
  SHRED_STATUS_FORMAT = 9,
  SHRED_STATUS_VERSION = 10,
  SHRED_STATUS_CONFIG = 11,
  SHRED_STATUS_IO = 12,
  // A Rust panic was caught at the boundary. The handle involved should
  // be treated as unusable.
  SHRED_STATUS_PANIC = 13,
} ShredStatus;

typedef struct ShredEngine ShredEngine;

// Data manager plus the datasets from its last `prepare`.
typedef struct ShredManager ShredManager;

typedef struct ShredModel ShredModel;

// Training settings. Start from [`shred_train_config_default`].
typedef struct ShredTrainConfig {
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  size_t patience;
  uint64_t seed;
  double sindy_regularization;
  size_t sindy_thres_epoch;
  double sindy_threshold;
  double sindy_ridge;
} ShredTrainConfig;

typedef struct ShredSensors {
  enum ShredSensorKind kind;
  size_t count;
  uint64_t seed;
  const size_t *locations;
} ShredSensors;

typedef struct ShredCompression {
  enum ShredCompressionKind kind;
  size_t modes;
  size_t kx;
  size_t ky;
} ShredCompression;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL if none.
// Valid until the next failing call on the same thread.
const char *shred_last_error(void);

// Library version as a static NUL-terminated string.
const char *shred_version(void);

struct ShredTrainConfig shred_train_config_default(void);

// Creates a manager. Split fractions must sum to 1. `parametric` data is
// shaped `trajectories × T × spatial...` and split by whole trajectories
// drawn with `seed`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum ShredStatus shred_manager_new(size_t lags,
                                   double train_size,
                                   double val_size,
                                   double test_size,
                                   bool parametric,
                                   uint64_t seed,
                                   struct ShredManager **out);

// Registers a field. `data` holds `prod(shape)` values.
//
// # Safety
// Pointers must be valid for the lengths implied by `ndim`, `shape` and
// `sensors`; `id` must be NUL-terminated.
enum ShredStatus shred_manager_add_field(struct ShredManager *manager,
                                         const char *id,
                                         const double *data,
                                         const size_t *shape,
                                         size_t ndim,
                                         struct ShredSensors sensors,
                                         struct ShredCompression compression);

// Adds Gaussian noise with standard deviation `std` to the sensor readings.
//
// # Safety
// `manager` must be a live handle or NULL.
enum ShredStatus shred_manager_inject_noise(struct ShredManager *manager,
                                            double std,
                                            uint64_t seed);

// Fits scalers and builds the train/val/test datasets.
//
// # Safety
// `manager` must be a live handle or NULL.
enum ShredStatus shred_manager_prepare(struct ShredManager *manager);

// Number of sensor columns (the model input width).
//
// # Safety
// `manager` must be a live handle or NULL; `out` must be writable.
enum ShredStatus shred_manager_input_width(const struct ShredManager *manager, size_t *out);

// Width of the concatenated compressed targets (the model output width).
// Requires a prepared manager.
//
// # Safety
// `manager` must be a live handle or NULL; `out` must be writable.
enum ShredStatus shred_manager_output_width(const struct ShredManager *manager, size_t *out);

// # Safety
// `manager` must come from [`shred_manager_new`] and not be used again.
void shred_manager_free(struct ShredManager *manager);

// Creates an untrained model. `decoder_layers` lists hidden widths.
//
// # Safety
// `decoder_layers` must hold `n_decoder_layers` entries; `out` must be writable.
enum ShredStatus shred_model_new(enum ShredCell cell,
                                 size_t input_size,
                                 size_t hidden_size,
                                 size_t num_layers,
                                 const size_t *decoder_layers,
                                 size_t n_decoder_layers,
                                 enum ShredActivation activation,
                                 size_t output_size,
                                 uint64_t seed,
                                 struct ShredModel **out);

// Trains on a prepared manager's datasets. Writes the best validation MSE
// to `val_mse` when it is not NULL.
//
// # Safety
// Handles must be live; `config` must point to a valid struct.
enum ShredStatus shred_model_fit(struct ShredModel *model,
                                 const struct ShredManager *manager,
                                 const struct ShredTrainConfig *config,
                                 double *val_mse);

// # Safety
// `model` must be live; `path` NUL-terminated.
enum ShredStatus shred_model_save(const struct ShredModel *model, const char *path);

// # Safety
// `path` NUL-terminated; `out` writable.
enum ShredStatus shred_model_load(const char *path, struct ShredModel **out);

// # Safety
// `model` must be live; `out` writable.
enum ShredStatus shred_model_latent_dim(const struct ShredModel *model, size_t *out);

// # Safety
// `model` must come from this library and not be used again.
void shred_model_free(struct ShredModel *model);

// Builds an engine from a prepared manager and a copy of `model`. The
// engine does not borrow either handle.
//
// # Safety
// Handles must be live; `out` writable.
enum ShredStatus shred_engine_new(const struct ShredManager *manager,
                                  const struct ShredModel *model,
                                  struct ShredEngine **out);

// Builds an engine from a checkpoint and the `preprocessing.json` written
// next to it by the command-line `train`.
//
// # Safety
// Paths NUL-terminated; `out` writable.
enum ShredStatus shred_engine_load(const char *checkpoint,
                                   const char *preprocessing,
                                   struct ShredEngine **out);

// # Safety
// `engine` must be live; `out` writable.
enum ShredStatus shred_engine_latent_dim(const struct ShredEngine *engine, size_t *out);

// Number of sensor columns the engine expects.
//
// # Safety
// `engine` must be live; `out` writable.
enum ShredStatus shred_engine_input_width(const struct ShredEngine *engine, size_t *out);

// # Safety
// `engine` must be live; `out` writable.
enum ShredStatus shred_engine_field_count(const struct ShredEngine *engine, size_t *out);

// Number of spatial points in field `index` (values per decoded snapshot).
//
// # Safety
// `engine` must be live; `out` writable.
enum ShredStatus shred_engine_field_size(const struct ShredEngine *engine,
                                         size_t index,
                                         size_t *out);

// Maps `rows × cols` raw readings to `rows × latent_dim` latents.
//
// # Safety
// `readings` must hold `rows · cols` values and `out` `out_len` values.
enum ShredStatus shred_engine_sensor_to_latent(const struct ShredEngine *engine,
                                               const double *readings,
                                               size_t rows,
                                               size_t cols,
                                               double *out,
                                               size_t out_len);

// Decodes `rows` latents and writes field `field` as `rows × field_size`.
//
// # Safety
// `latents` must hold `rows · latent_dim` values and `out` `out_len` values.
enum ShredStatus shred_engine_decode(const struct ShredEngine *engine,
                                     const double *latents,
                                     size_t rows,
                                     size_t field,
                                     double *out,
                                     size_t out_len);

// Rolls the model's latent forecaster `horizon` steps past the last row of
// `seed` (`rows × latent_dim`) and writes `horizon × latent_dim` values.
//
// # Safety
// `seed` must hold `rows · latent_dim` values and `out` `out_len` values.
enum ShredStatus shred_engine_forecast(const struct ShredEngine *engine,
                                       const double *seed,
                                       size_t rows,
                                       size_t horizon,
                                       double *out,
                                       size_t out_len);

// # Safety
// `engine` must come from this library and not be used again.
void shred_engine_free(struct ShredEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHRED_H */
