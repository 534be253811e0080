/* C interface to the mvreplay shared library.
 *
 * All functions return MVR_OK on success; on failure they return an error
 * code and leave a description retrievable through mvr_last_error() (the
 * message is thread-local and valid until the next failing call on the same
 * thread). Objects are opaque handles created and destroyed through this
 * interface; strings returned through char** outputs are owned by the caller
 * and must be released with mvr_string_free().
 */
#ifndef MVREPLAY_H
#define MVREPLAY_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvr_status {
  MVR_OK = 0,
  MVR_ERROR_INVALID_ARGUMENT = 1,
  MVR_ERROR_IO = 2,
  MVR_ERROR_RUNTIME = 3,
} mvr_status;

typedef struct mvr_config mvr_config;   /* experiment description */
typedef struct mvr_metrics mvr_metrics; /* one or more result records */

typedef void (*mvr_log_callback)(const char* line, void* user_data);

const char* mvr_version(void);
const char* mvr_last_error(void);
void mvr_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

mvr_status mvr_config_create(mvr_config** out_config);
mvr_status mvr_config_from_json(const char* json_text, mvr_config** out_config);
/* Sets one field. The value is parsed as JSON when possible, otherwise taken
 * as a plain string ("mem_batch_size", "200"; "seeds", "[1,2,3]"; ...). */
mvr_status mvr_config_set(mvr_config* config, const char* key, const char* value);
mvr_status mvr_config_to_json(const mvr_config* config, char** out_json);
mvr_status mvr_config_hash(const mvr_config* config, char** out_hash);
void mvr_config_destroy(mvr_config* config);

/* --- experiments --------------------------------------------------------- */

/* Trains and evaluates across the config's seeds; persists records, traces
 * and checkpoints under the config's output directory. */
mvr_status mvr_run(const mvr_config* config, mvr_log_callback log, void* user_data,
                   mvr_metrics** out_metrics);

/* Cross-product sweep. grid_json maps field names to value arrays, e.g.
 * {"mem_batch_size": [10, 50, 200]}. */
mvr_status mvr_sweep(const mvr_config* config, const char* grid_json, mvr_log_callback log,
                     void* user_data, mvr_metrics** out_metrics);

/* Re-evaluates a stored checkpoint against the test split described by the
 * config. */
mvr_status mvr_evaluate_checkpoint(const char* checkpoint_path, const mvr_config* config,
                                   mvr_metrics** out_metrics);

/* Assembles a comparison table over all records under records_dir; returns
 * the text table and writes records_dir/report.csv. */
mvr_status mvr_report(const char* records_dir, char** out_table);

/* --- results ------------------------------------------------------------- */

mvr_status mvr_metrics_to_json(const mvr_metrics* metrics, char** out_json);
size_t mvr_metrics_count(const mvr_metrics* metrics);
/* Mean / population-std final average accuracy of record `index`. */
mvr_status mvr_metrics_accuracy(const mvr_metrics* metrics, size_t index, double* out_mean,
                                double* out_std);
void mvr_metrics_destroy(mvr_metrics* metrics);

#ifdef __cplusplus
}
#endif

#endif /* MVREPLAY_H */
