/* C interface to the biaslens audit library.
 *
 * Conventions:
 *   - Every fallible call returns a bl_status; BL_OK is 0.
 *   - On failure, bl_last_error() returns a message for the calling thread.
 *   - Strings returned through char** are owned by the caller and must be
 *     released with bl_string_free().
 *   - A bl_dataset is an opaque handle; release it with bl_dataset_free().
 */
#ifndef BIASLENS_H
#define BIASLENS_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define BL_API __declspec(dllexport)
#else
#define BL_API __attribute__((visibility("default")))
#endif

typedef struct bl_dataset bl_dataset;

typedef enum bl_status {
  BL_OK = 0,
  BL_ERR_IO = 1,         /* file missing or unreadable */
  BL_ERR_PARSE = 2,      /* malformed input or config */
  BL_ERR_ANALYSIS = 3,   /* valid input, analysis precondition failed */
  BL_ERR_ARGUMENT = 4,   /* null pointer or invalid argument */
  BL_ERR_INTERNAL = 5
} bl_status;

/* Library version string, static storage. */
BL_API const char* bl_version(void);

/* Message for the most recent failure on this thread, static until the next
 * failing call. Never NULL. */
BL_API const char* bl_last_error(void);

BL_API void bl_string_free(char* s);

/* Loads records (CSV), the factor schema (JSON), and optionally embeddings
 * (CSV or packed binary); embeddings_path may be NULL. */
BL_API bl_status bl_dataset_load(const char* records_path, const char* schema_path,
                                 const char* embeddings_path, bl_dataset** out);

BL_API void bl_dataset_free(bl_dataset* dataset);

/* Ingest-level checks; writes a JSON report. */
BL_API bl_status bl_dataset_validate(const bl_dataset* dataset, char** report_json);

/* Runs the audit pipeline per config_json (stages, seed, analysis
 * parameters), writing summary, manifest, and figures under out_dir. If
 * summary_json is non-NULL it receives the summary document. */
BL_API bl_status bl_run_audit(const bl_dataset* dataset, const char* config_json,
                              const char* out_dir, char** summary_json);

/* Expands a built-in scenario name ("independent", "confounded") into a full
 * generator config. */
BL_API bl_status bl_synth_scenario(const char* name, uint64_t n, uint64_t seed,
                                   char** config_json);

/* Generates a synthetic dataset from config_json and writes records.csv,
 * schema.json, embeddings.bin (when configured), truth.json, and
 * synth_config.json under out_dir. If file_list_json is non-NULL it receives
 * a JSON array of the written file names. */
BL_API bl_status bl_synth_generate(const char* config_json, const char* out_dir,
                                   char** file_list_json);

/* Scores an audit summary against a generator ground-truth document. */
BL_API bl_status bl_score_recovery(const char* truth_json, const char* summary_json,
                                   char** report_json);

/* Hadlock HC/AC/FL estimated fetal weight with the shipped coefficients.
 * Biometry in cm, result in grams. */
BL_API bl_status bl_hadlock_efw(double hc_cm, double ac_cm, double fl_cm, double* grams);

/* Growth-curve reference weight at scan time from birth weight, shipped
 * curve. GA in days, weights in grams. */
BL_API bl_status bl_reference_weight(double birth_weight_g, double ga_scan_days,
                                     double ga_delivery_days, double* grams);

#ifdef __cplusplus
}
#endif

#endif /* BIASLENS_H */
