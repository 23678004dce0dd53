#ifndef RDNET_H
#define RDNET_H

/* Generated by cbindgen from rdnet-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI entry point.
 */
typedef enum RdnetStatus {
  RDNET_STATUS_OK = 0,
  RDNET_STATUS_NULL_ARGUMENT = 1,
  RDNET_STATUS_INVALID_ARGUMENT = 2,
  RDNET_STATUS_IO = 3,
  RDNET_STATUS_FORMAT = 4,
  RDNET_STATUS_INTERNAL = 5,
} RdnetStatus;

/**
 * Opaque channel-estimate handle.
 */
typedef struct RdnetChannel RdnetChannel;

/**
 * Opaque range-Doppler map handle.
 */
typedef struct RdnetMap RdnetMap;

/**
 * Opaque trained-model handle.
 */
typedef struct RdnetModel RdnetModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message for this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes, excluding the terminator.
 */
uintptr_t rdnet_last_error_message(char *buf, uintptr_t len);

/**
 * Synthesizes an N x M channel estimate for `n_targets` targets given as
 * parallel arrays (amplitude, normalized delay f1, normalized Doppler f2)
 * plus a common phase. `snr_db` = INFINITY means noise free; otherwise
 * AWGN is drawn from `noise_seed`.
 *
 * # Safety
 * `b`, `f1`, `f2` must point to `n_targets` doubles; `out` must be valid.
 */
enum RdnetStatus rdnet_channel_synthesize(uintptr_t n,
                                          uintptr_t m,
                                          uintptr_t n_targets,
                                          const double *b,
                                          const double *f1,
                                          const double *f2,
                                          double phi,
                                          double snr_db,
                                          uint64_t noise_seed,
                                          struct RdnetChannel **out);

/**
 * Frees a channel handle; a null pointer is a no-op.
 *
 * # Safety
 * `handle` must come from this library and not be freed twice.
 */
void rdnet_channel_free(struct RdnetChannel *handle);

/**
 * Row count (N) of a channel.
 *
 * # Safety
 * `handle` must be a live channel handle.
 */
uintptr_t rdnet_channel_rows(const struct RdnetChannel *handle);

/**
 * Column count (M) of a channel.
 *
 * # Safety
 * `handle` must be a live channel handle.
 */
uintptr_t rdnet_channel_cols(const struct RdnetChannel *handle);

/**
 * Copies the I and Q planes (row-major, N*M doubles each) out of a
 * channel handle. Either destination may be null to skip it.
 *
 * # Safety
 * Non-null destinations must hold at least N*M doubles.
 */
enum RdnetStatus rdnet_channel_planes(const struct RdnetChannel *handle,
                                      double *i_out,
                                      double *q_out);

/**
 * Computes the 2D periodogram of a channel. `window`: 0 = rectangular,
 * 1 = Hann. Output map has zp_k*N rows and zp_l*M columns.
 *
 * # Safety
 * `channel` must be live; `out` must be valid.
 */
enum RdnetStatus rdnet_periodogram(const struct RdnetChannel *channel,
                                   uintptr_t zp_k,
                                   uintptr_t zp_l,
                                   uint32_t window,
                                   struct RdnetMap **out);

/**
 * Frees a map handle; a null pointer is a no-op.
 *
 * # Safety
 * `handle` must come from this library and not be freed twice.
 */
void rdnet_map_free(struct RdnetMap *handle);

/**
 * Row count of a map.
 *
 * # Safety
 * `handle` must be a live map handle.
 */
uintptr_t rdnet_map_rows(const struct RdnetMap *handle);

/**
 * Column count of a map.
 *
 * # Safety
 * `handle` must be a live map handle.
 */
uintptr_t rdnet_map_cols(const struct RdnetMap *handle);

/**
 * Copies map values (row-major doubles) into `values_out`.
 *
 * # Safety
 * `values_out` must hold at least rows*cols doubles.
 */
enum RdnetStatus rdnet_map_values(const struct RdnetMap *handle, double *values_out);

/**
 * Loads a trained model checkpoint from a NUL-terminated UTF-8 path.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be valid.
 */
enum RdnetStatus rdnet_model_load(const char *path, struct RdnetModel **out);

/**
 * Frees a model handle; a null pointer is a no-op.
 *
 * # Safety
 * `handle` must come from this library and not be freed twice.
 */
void rdnet_model_free(struct RdnetModel *handle);

/**
 * Runs the model on a channel estimate; fails when the channel geometry
 * does not match the model.
 *
 * # Safety
 * `model` and `channel` must be live handles; `out` must be valid.
 */
enum RdnetStatus rdnet_model_predict(struct RdnetModel *model,
                                     const struct RdnetChannel *channel,
                                     struct RdnetMap **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDNET_H */
