/* C interface to the phgnn library. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Every function
 * returning phgnn_status leaves a message for phgnn_last_error() on failure. */
#ifndef PHGNN_H
#define PHGNN_H

#include <stddef.h>

#if defined(_WIN32)
#define PHGNN_API __declspec(dllexport)
#else
#define PHGNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum phgnn_status {
    PHGNN_OK = 0,
    PHGNN_ERR_INVALID_ARGUMENT = 1,
    PHGNN_ERR_SHAPE = 2,
    PHGNN_ERR_IO = 3,
    PHGNN_ERR_RUNTIME = 4
} phgnn_status;

typedef struct phgnn_config phgnn_config;
typedef struct phgnn_dataset phgnn_dataset;
typedef struct phgnn_model phgnn_model;
typedef struct phgnn_report phgnn_report;

/* Message of the last failure on the calling thread; empty after success. */
PHGNN_API const char* phgnn_last_error(void);

PHGNN_API phgnn_status phgnn_config_create(phgnn_config** out);
PHGNN_API phgnn_status phgnn_config_load(const char* path, phgnn_config** out);
/* Dotted key, e.g. "tune.epochs"; the value is parsed as JSON, else taken as a string. */
PHGNN_API phgnn_status phgnn_config_set(phgnn_config* config, const char* key, const char* value);
PHGNN_API phgnn_status phgnn_config_validate(const phgnn_config* config);
/* Borrowed pointers, valid until the next call on the same handle or its release. */
PHGNN_API phgnn_status phgnn_config_json(const phgnn_config* config, const char** out);
PHGNN_API phgnn_status phgnn_config_digest(const phgnn_config* config, const char** out);
PHGNN_API void phgnn_config_free(phgnn_config* config);

PHGNN_API phgnn_status phgnn_dataset_generate(const phgnn_config* config, phgnn_dataset** out);
PHGNN_API phgnn_status phgnn_dataset_load(const char* dir, phgnn_dataset** out);
/* Writes the whole directory or nothing; an existing directory needs force != 0. */
PHGNN_API phgnn_status phgnn_dataset_save(const phgnn_dataset* dataset, const char* dir, int force);
PHGNN_API phgnn_status phgnn_dataset_info(const phgnn_dataset* dataset, size_t* num_nodes, size_t* num_modalities,
                                          const char** summary);
PHGNN_API void phgnn_dataset_free(phgnn_dataset* dataset);

PHGNN_API phgnn_status phgnn_pretrain(const phgnn_dataset* dataset, const phgnn_config* config, phgnn_model** out);
/* Directory with encoder.json, loss_curve.txt and config.json. */
PHGNN_API phgnn_status phgnn_model_save(const phgnn_model* model, const char* dir, int force);
/* Accepts a directory written by phgnn_model_save or a checkpoint file. */
PHGNN_API phgnn_status phgnn_model_load(const char* path, phgnn_model** out);
PHGNN_API phgnn_status phgnn_model_checkpoint(const phgnn_model* model, const char** out);
PHGNN_API phgnn_status phgnn_model_loss_curve(const phgnn_model* model, const double** values, size_t* length);
PHGNN_API void phgnn_model_free(phgnn_model* model);

PHGNN_API phgnn_status phgnn_tune(const phgnn_dataset* dataset, const phgnn_model* model, const phgnn_config* config,
                                  phgnn_report** out);
PHGNN_API phgnn_status phgnn_ablate_prompts(const phgnn_dataset* dataset, const phgnn_model* model,
                                            const phgnn_config* config, phgnn_report** out);
PHGNN_API phgnn_status phgnn_ablate_modalities(const phgnn_dataset* dataset, const phgnn_config* config,
                                               phgnn_report** out);
PHGNN_API phgnn_status phgnn_compare_strategies(const phgnn_dataset* dataset, const phgnn_model* model,
                                                const phgnn_config* config, phgnn_report** out);
PHGNN_API phgnn_status phgnn_report_text(const phgnn_report* report, const char** out);
PHGNN_API phgnn_status phgnn_report_json(const phgnn_report* report, const char** out);
/* Directory with report.txt, report.json, config.json and, for tune, snapshots.json. */
PHGNN_API phgnn_status phgnn_report_save(const phgnn_report* report, const char* dir, int force);
PHGNN_API void phgnn_report_free(phgnn_report* report);

/* Rank-based ROC AUC with class 1 positive. */
PHGNN_API phgnn_status phgnn_auc(const double* scores, const int* labels, size_t n, double* out);
/* Tunable parameter count of a strategy for the configured model and input width. */
PHGNN_API phgnn_status phgnn_count_tunable(const phgnn_config* config, size_t input_dim, const char* strategy,
                                           size_t* out);

#ifdef __cplusplus
}
#endif

#endif
