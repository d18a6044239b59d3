/*
 * C API for the SLR training pipeline.
 *
 * The core is a C++ library; this header is the stable boundary intended
 * for CLI tools and foreign-language bindings. All entry points return a
 * status code; slr_last_error() returns a thread-local message for the most
 * recent failure on the calling thread. Strings returned through `char**`
 * out-parameters are heap-allocated and must be released with
 * slr_string_free().
 */
#ifndef SLR_CAPI_H
#define SLR_CAPI_H

#include <stdint.h>

#if defined(_WIN32)
#define SLR_API __declspec(dllexport)
#else
#define SLR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slr_status {
    SLR_OK = 0,
    SLR_ERR_RUNTIME = 1,       /* unexpected failure                     */
    SLR_ERR_CONFIG = 2,        /* bad configuration or flag value        */
    SLR_ERR_VALIDATION = 3,    /* malformed annotation or input data     */
    SLR_ERR_IO = 4,            /* file system or serialization failure   */
    SLR_ERR_CONTRADICTION = 5, /* annotation forbids every class         */
    SLR_ERR_PROTOTYPE = 6,     /* no usable class prototypes             */
    SLR_ERR_SHAPE = 7          /* tensor shape mismatch                  */
} slr_status;

SLR_API const char* slr_version(void);
SLR_API const char* slr_status_name(int status);

/* Message for the last failing call on this thread; empty if none. */
SLR_API const char* slr_last_error(void);

SLR_API void slr_string_free(char* s);

/* Fully materialized default run configuration as a JSON document. Any
 * subset of its fields is a valid configuration for the calls below;
 * missing fields take these defaults. */
SLR_API slr_status slr_default_config(char** json_out);

/* Synthetic dataset generation. params_json may be NULL or "{}" for
 * defaults; see slr_default_scene_params(). Writes images, ground truth,
 * annotations, distance maps and manifest.json under out_dir. Fails if a
 * dataset is already present unless force is nonzero. */
SLR_API slr_status slr_default_scene_params(char** json_out);
SLR_API slr_status slr_generate_dataset(const char* params_json, uint64_t root_seed, int n_train,
                                        int n_test, const char* out_dir, int force,
                                        char** manifest_path_out);

/* ------------------------------------------------------------------ */
/* Opaque handles                                                      */
/* ------------------------------------------------------------------ */

typedef struct slr_dataset slr_dataset;

SLR_API slr_status slr_dataset_open(const char* manifest_path, slr_dataset** out);
SLR_API void slr_dataset_close(slr_dataset* ds);
SLR_API slr_status slr_dataset_info(const slr_dataset* ds, char** json_out);

typedef struct slr_model slr_model;

SLR_API slr_status slr_model_load(const char* checkpoint_path, slr_model** out);
SLR_API slr_status slr_model_save(const slr_model* model, const char* checkpoint_path);
SLR_API void slr_model_free(slr_model* model);

/* ------------------------------------------------------------------ */
/* Pipeline                                                            */
/* ------------------------------------------------------------------ */

/* Full scaffolding run (warm-up, pseudo labels, re-training, evaluation).
 * Writes the run directory and returns the report JSON. */
SLR_API slr_status slr_run(const char* config_json, const slr_dataset* ds, const char* run_dir,
                           char** report_json_out);

/* Individual stages. Stage commands read and write the same artifact
 * formats the full run uses, so a composed run reproduces slr_run(). */
SLR_API slr_status slr_train_warmup(const char* config_json, const slr_dataset* ds,
                                    const char* run_dir, slr_model** model_out);
SLR_API slr_status slr_generate_pseudo(const char* config_json, const slr_dataset* ds,
                                       const slr_model* model, const char* out_dir,
                                       char** summary_json_out);
SLR_API slr_status slr_train_retrain(const char* config_json, const slr_dataset* ds,
                                     const char* pseudo_dir, const char* run_dir,
                                     slr_model** model_out);

/* Evaluation on the test split; metrics come back as JSON. The oracle
 * variant scores the ground truth against itself (harness sanity check). */
SLR_API slr_status slr_evaluate(const char* config_json, const slr_dataset* ds,
                                const slr_model* model, char** metrics_json_out);
SLR_API slr_status slr_evaluate_oracle(const char* config_json, const slr_dataset* ds,
                                       char** metrics_json_out);

/* Runs the named ablation variants over a seed list and writes an
 * aggregate CSV (one row per variant/seed plus per-variant medians and
 * directional summary rows). seeds_csv like "1,2,3"; variants_csv like
 * "none,C,F,RT,PL,DW" (NULL for all). */
SLR_API slr_status slr_ablate(const char* config_json, const slr_dataset* ds,
                              const char* seeds_csv, const char* variants_csv,
                              const char* out_dir, char** csv_path_out);

#ifdef __cplusplus
}
#endif

#endif /* SLR_CAPI_H */
