#ifndef CEBMDC_H
#define CEBMDC_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CebmdcColumnScope {
  CEBMDC_COLUMN_SCOPE_ALL = 0,
  CEBMDC_COLUMN_SCOPE_NUMERIC = 1,
  CEBMDC_COLUMN_SCOPE_CATEGORICAL = 2,
} CebmdcColumnScope;

typedef enum CebmdcMissingPolicy {
  CEBMDC_MISSING_POLICY_TREAT_AS_CATEGORY = 0,
  CEBMDC_MISSING_POLICY_DROP_ROW = 1,
  CEBMDC_MISSING_POLICY_FILL_NUMERIC = 2,
} CebmdcMissingPolicy;

typedef enum CebmdcStatus {
  CEBMDC_STATUS_OK = 0,
  CEBMDC_STATUS_NULL_ARGUMENT = 1,
  CEBMDC_STATUS_INVALID_UTF8 = 2,
  CEBMDC_STATUS_IO = 3,
  CEBMDC_STATUS_PARSE = 4,
  CEBMDC_STATUS_INVALID_ARGUMENT = 5,
  CEBMDC_STATUS_DATA = 6,
  CEBMDC_STATUS_BUFFER_TOO_SMALL = 7,
  CEBMDC_STATUS_PANIC = 8,
} CebmdcStatus;

/*
 Opaque dataset handle.
 */
typedef struct CebmdcDataset CebmdcDataset;

/*
 Opaque partition handle.
 */
typedef struct CebmdcPartition CebmdcPartition;

/*
 Pipeline settings. Start from [`cebmdc_pipeline_config_default`].
 */
typedef struct CebmdcPipelineConfig {
  double categorical_threshold;
  /*
   When nonzero the categorical threshold is searched for this many
   clusters and `categorical_threshold` is ignored.
   */
  size_t categorical_target_k;
  size_t numeric_k;
  uint64_t numeric_seed;
  size_t max_iterations;
  double convergence_tol;
  double ensemble_threshold_norm;
  /*
   Both zero means the default (m_c, m_n) weights.
   */
  double weight_categorical;
  double weight_numeric;
  enum CebmdcMissingPolicy missing_policy;
  /*
   Used by `DropRow`.
   */
  enum CebmdcColumnScope missing_scope;
  /*
   Used by `FillNumeric`.
   */
  double fill_value;
} CebmdcPipelineConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library defaults: threshold 1, k_n = 4, s_norm = 0.5, missing categorical
 cells treated as their own category.
 */
struct CebmdcPipelineConfig cebmdc_pipeline_config_default(void);

/*
 Message for the most recent failure on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *cebmdc_last_error_message(void);

/*
 # Safety
 `s` must be null or a string returned by this library, freed only once.
 */
void cebmdc_string_free(char *s);

/*
 Loads a CSV described by a schema sidecar.

 # Safety
 Paths must be valid NUL-terminated strings; `out` must be writable.
 */
enum CebmdcStatus cebmdc_dataset_load(const char *csv_path,
                                      const char *schema_path,
                                      struct CebmdcDataset **out_dataset);

/*
 # Safety
 `ds` must be null or a handle from this library, freed only once.
 */
void cebmdc_dataset_free(struct CebmdcDataset *ds);

/*
 Row count, attribute counts by kind.

 # Safety
 `ds` must be a live handle; out pointers may be null to skip a value.
 */
enum CebmdcStatus cebmdc_dataset_shape(const struct CebmdcDataset *ds,
                                       size_t *out_rows,
                                       size_t *out_categorical,
                                       size_t *out_numeric);

/*
 Runs the full pipeline. `exclude_column` (nullable) names a column, such
 as the class, left out of clustering. `out_report_json` (nullable)
 receives the run report as JSON.

 # Safety
 `ds` and `cfg` must be valid; out pointers must be writable or null where
 documented.
 */
enum CebmdcStatus cebmdc_run(const struct CebmdcDataset *ds,
                             const struct CebmdcPipelineConfig *cfg,
                             const char *exclude_column,
                             struct CebmdcPartition **out_partition,
                             char **out_report_json);

/*
 Clusters the categorical attributes alone with Squeezer. `weights` holds
 one weight per categorical attribute, or is null for unit weights.

 # Safety
 `weights` must point to `n_weights` doubles when non-null.
 */
enum CebmdcStatus cebmdc_squeezer(const struct CebmdcDataset *ds,
                                  const char *exclude_column,
                                  double threshold,
                                  const double *weights,
                                  size_t n_weights,
                                  struct CebmdcPartition **out_partition);

/*
 Accuracy r of a partition against a class column of `ds`.

 # Safety
 Handles must be live; `out_r` must be writable.
 */
enum CebmdcStatus cebmdc_accuracy(const struct CebmdcPartition *part,
                                  const struct CebmdcDataset *ds,
                                  const char *class_column,
                                  double *out_r);

/*
 # Safety
 `part` must be null or a handle from this library, freed only once.
 */
void cebmdc_partition_free(struct CebmdcPartition *part);

/*
 Number of labeled rows and clusters.

 # Safety
 `part` must be live; out pointers may be null to skip a value.
 */
enum CebmdcStatus cebmdc_partition_shape(const struct CebmdcPartition *part,
                                         size_t *out_len,
                                         size_t *out_k);

/*
 Copies tids and 1-based cluster labels, in dataset row order, into
 caller buffers of `capacity` entries. Either buffer may be null.

 # Safety
 Non-null buffers must hold `capacity` elements.
 */
enum CebmdcStatus cebmdc_partition_copy(const struct CebmdcPartition *part,
                                        uint64_t *tids,
                                        size_t *labels,
                                        size_t capacity);

/*
 Relabeling-invariant hash of the grouping, as 16 hex digits.

 # Safety
 `part` must be live; `out_fingerprint` must be writable.
 */
enum CebmdcStatus cebmdc_partition_fingerprint(const struct CebmdcPartition *part,
                                               char **out_fingerprint);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CEBMDC_H */
