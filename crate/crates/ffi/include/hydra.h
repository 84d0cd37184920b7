#ifndef HYDRA_H
#define HYDRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HydraStatus {
  HYDRA_STATUS_OK = 0,
  HYDRA_STATUS_NULL_ARGUMENT = 1,
  HYDRA_STATUS_INVALID_UTF8 = 2,
  HYDRA_STATUS_IO = 3,
  HYDRA_STATUS_PARSE = 4,
  HYDRA_STATUS_VALIDATION = 5,
  HYDRA_STATUS_CONFIG = 6,
  HYDRA_STATUS_TRAINING = 7,
  HYDRA_STATUS_SIMULATION = 8,
  HYDRA_STATUS_PANIC = 9,
} HydraStatus;

/**
 * A reuse prediction table.
 */
typedef struct HydraLrpt HydraLrpt;

/**
 * One trained per-layer reuse model.
 */
typedef struct HydraModel HydraModel;

/**
 * A parsed or generated access trace.
 */
typedef struct HydraTrace HydraTrace;

/**
 * Result of an LRPT lookup. `valid` is 0 for No-Reuse, in which case `rc`
 * and `ri` are meaningless. Otherwise `rc` is 0..3 for Cold..Hot and `ri`
 * 0..3 for Immediate..Remote.
 */
typedef struct HydraPrediction {
  uint8_t valid;
  uint8_t rc;
  uint8_t ri;
} HydraPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *hydra_last_error_message(void);

const char *hydra_version(void);

/**
 * Reads a trace file. Files ending in `.bin` use the binary format, anything
 * else CSV. A `<stem>.layers.csv` sidecar is picked up if present.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum HydraStatus hydra_trace_load(const char *path, struct HydraTrace **out);

/**
 * Generates a systolic-array trace from an accelerator spec in TOML.
 *
 * # Safety
 * `spec_toml` must be a NUL-terminated string and `out` writable.
 */
enum HydraStatus hydra_trace_generate_systolic(const char *spec_toml,
                                               uint64_t seed,
                                               struct HydraTrace **out);

/**
 * # Safety
 * `trace` must come from this library and `len` be writable.
 */
enum HydraStatus hydra_trace_len(const struct HydraTrace *trace, uint64_t *len);

/**
 * Number of layers; a trace without layer marks counts as one layer.
 *
 * # Safety
 * `trace` must come from this library and `count` be writable.
 */
enum HydraStatus hydra_trace_layer_count(const struct HydraTrace *trace, uint32_t *count);

/**
 * # Safety
 * `trace` must come from this library or be null; it must not be used again.
 */
void hydra_trace_free(struct HydraTrace *trace);

/**
 * Trains the reuse model of one layer. `hash_bits` of 0 trains on full line
 * addresses; otherwise lines are first folded with the given table hash.
 *
 * # Safety
 * `trace` must come from this library and `out` be writable.
 */
enum HydraStatus hydra_model_train(const struct HydraTrace *trace,
                                   uint32_t layer,
                                   uint32_t block_bits,
                                   uint64_t seed,
                                   uint32_t hash_bits,
                                   bool hash_splitmix,
                                   struct HydraModel **out);

/**
 * Fraction of reuse intervals the model's RI labels cover on its own layer.
 *
 * # Safety
 * `model` and `trace` must come from this library and `accuracy` be writable.
 */
enum HydraStatus hydra_model_accuracy(const struct HydraModel *model,
                                      const struct HydraTrace *trace,
                                      double *accuracy);

/**
 * Writes the model as CSV plus its JSON sidecar.
 *
 * # Safety
 * `model` must come from this library and `path` be a NUL-terminated string.
 */
enum HydraStatus hydra_model_export(const struct HydraModel *model, const char *path);

/**
 * # Safety
 * `model` must come from this library or be null; it must not be used again.
 */
void hydra_model_free(struct HydraModel *model);

/**
 * Creates an empty table with `2^hash_bits` entries.
 *
 * # Safety
 * `out` must be writable.
 */
enum HydraStatus hydra_lrpt_new(uint32_t hash_bits, bool hash_splitmix, struct HydraLrpt **out);

/**
 * Replaces the table contents with a model.
 *
 * # Safety
 * `lrpt` and `model` must come from this library.
 */
enum HydraStatus hydra_lrpt_load(struct HydraLrpt *lrpt, const struct HydraModel *model);

/**
 * # Safety
 * `lrpt` must come from this library and `out` be writable.
 */
enum HydraStatus hydra_lrpt_lookup(const struct HydraLrpt *lrpt,
                                   uint64_t address,
                                   struct HydraPrediction *out);

/**
 * Storage of the table in bytes at five bits per entry.
 *
 * # Safety
 * `lrpt` must come from this library and `bytes` be writable.
 */
enum HydraStatus hydra_lrpt_footprint(const struct HydraLrpt *lrpt, uint64_t *bytes);

/**
 * # Safety
 * `lrpt` must come from this library or be null; it must not be used again.
 */
void hydra_lrpt_free(struct HydraLrpt *lrpt);

/**
 * Runs one experiment described by a TOML config and returns the report as
 * JSON. Relative paths in the config resolve against the working directory.
 * Free the string with [`hydra_string_free`].
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `report_json` writable.
 */
enum HydraStatus hydra_run_experiment(const char *config_toml, char **report_json);

/**
 * # Safety
 * `s` must come from this library or be null; it must not be used again.
 */
void hydra_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYDRA_H */
