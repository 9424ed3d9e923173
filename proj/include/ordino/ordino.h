/*
 * C interface to the ordino library.
 *
 * Every function returns an ordino_status; on failure the message is
 * available from ordino_last_error() on the calling thread. Objects are
 * opaque handles released with their *_free function. Strings returned
 * through char** are released with ordino_string_free().
 */
#ifndef ORDINO_H
#define ORDINO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ORDINO_API __declspec(dllexport)
#else
#define ORDINO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ordino_status {
  ORDINO_OK = 0,
  ORDINO_ERR_INVALID_ARGUMENT = 1,
  ORDINO_ERR_SHAPE_MISMATCH = 2,
  ORDINO_ERR_OUT_OF_RANGE = 3,
  ORDINO_ERR_NON_FINITE = 4,
  ORDINO_ERR_ZERO_FEATURE = 5,
  ORDINO_ERR_IO = 6,
  ORDINO_ERR_PARSE = 7,
  ORDINO_ERR_CONFIG = 8,
  ORDINO_ERR_DIVERGENCE = 9,
  ORDINO_ERR_INTERNAL = 10
} ordino_status;

typedef struct ordino_config ordino_config;
typedef struct ordino_checkpoint ordino_checkpoint;
typedef struct ordino_report ordino_report;
typedef struct ordino_matrix ordino_matrix;

enum { ORDINO_STAGE_BOTH = 0, ORDINO_STAGE_1 = 1, ORDINO_STAGE_2 = 2 };

ORDINO_API const char* ordino_version(void);
ORDINO_API const char* ordino_last_error(void);
ORDINO_API const char* ordino_status_name(int status);
ORDINO_API void ordino_string_free(char* s);

/* Configuration */
ORDINO_API int ordino_config_default(ordino_config** out);
ORDINO_API int ordino_config_load(const char* path, ordino_config** out);
ORDINO_API int ordino_config_parse(const char* json, ordino_config** out);
ORDINO_API int ordino_config_set_seed(ordino_config* cfg, uint64_t seed);
/* "morph" or "default": resets the per-stage loss weights. */
ORDINO_API int ordino_config_set_preset(ordino_config* cfg, const char* preset);
ORDINO_API int ordino_config_to_json(const ordino_config* cfg, char** out);
ORDINO_API int ordino_config_hash(const ordino_config* cfg, char** out);
ORDINO_API void ordino_config_free(ordino_config* cfg);

/* Writes the configured train and test sets as <out_dir>/{train,test}/ with
 * images/ and labels.csv. */
ORDINO_API int ordino_generate_data(const ordino_config* cfg, const char* out_dir);

/* Trains on the configured data. stage: ORDINO_STAGE_BOTH runs both stages;
 * ORDINO_STAGE_1 runs stage 1 only; ORDINO_STAGE_2 continues from init (a
 * stage-1 checkpoint, required). Writes train_log.jsonl, stage checkpoints,
 * report.json and similarity.csv into out_dir. out_report may be NULL. */
ORDINO_API int ordino_train(const ordino_config* cfg, const char* out_dir, int stage, const ordino_checkpoint* init,
                            ordino_report** out_report);

/* Checkpoints */
ORDINO_API int ordino_checkpoint_load(const char* path, ordino_checkpoint** out);
ORDINO_API int ordino_checkpoint_save(const ordino_checkpoint* ckpt, const char* path);
ORDINO_API int ordino_checkpoint_stage(const ordino_checkpoint* ckpt, int* out);
ORDINO_API int ordino_checkpoint_config(const ordino_checkpoint* ckpt, ordino_config** out);
ORDINO_API void ordino_checkpoint_free(ordino_checkpoint* ckpt);

/* Evaluates on the test split of data_cfg, or of the checkpoint's own
 * configuration when data_cfg is NULL. */
ORDINO_API int ordino_evaluate(const ordino_checkpoint* ckpt, const ordino_config* data_cfg, ordino_report** out);

/* Reports */
ORDINO_API int ordino_report_json(const ordino_report* rep, char** out);
/* name: "mae", "accuracy", "os" or "los:<K>". */
ORDINO_API int ordino_report_metric(const ordino_report* rep, const char* name, double* out);
/* Either path may be NULL. */
ORDINO_API int ordino_report_write(const ordino_report* rep, const char* json_path, const char* csv_path);
ORDINO_API int ordino_report_similarity(const ordino_report* rep, ordino_matrix** out);
ORDINO_API void ordino_report_free(ordino_report* rep);

/* Similarity matrices */
ORDINO_API int ordino_matrix_create(size_t size, const double* values, ordino_matrix** out);
ORDINO_API int ordino_matrix_load_csv(const char* path, ordino_matrix** out);
ORDINO_API int ordino_matrix_from_checkpoint(const ordino_checkpoint* ckpt, ordino_matrix** out);
ORDINO_API int ordino_matrix_size(const ordino_matrix* m, size_t* out);
ORDINO_API int ordino_matrix_get(const ordino_matrix* m, size_t i, size_t j, double* out);
ORDINO_API int ordino_matrix_save_csv(const ordino_matrix* m, const char* path);
ORDINO_API int ordino_ordinality_score(const ordino_matrix* m, double* out);
ORDINO_API int ordino_local_ordinality_score(const ordino_matrix* m, size_t window, double* out);
/* Binary PPM heatmap; cell is the pixel size of one entry (0 selects 8). */
ORDINO_API int ordino_plot_heatmap(const ordino_matrix* m, const char* ppm_path, size_t cell);
ORDINO_API void ordino_matrix_free(ordino_matrix* m);

/* Runs one two-stage experiment per grid cell and seed. kind: "few_shot",
 * "shift" or "ablation"; grid: comma-separated cells or NULL for the
 * standard axes. csv_path and csv_out may each be NULL. */
ORDINO_API int ordino_sweep(const ordino_config* base, const char* kind, const char* grid, size_t seeds,
                            const char* csv_path, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* ORDINO_H */
