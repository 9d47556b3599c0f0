/*
 * Copyright 2026 The treematch authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
 * with the License. A copy of the License is located at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * or in the "license" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
 * OR CONDITIONS OF ANY KIND, either express or implied. See the License for the specific language governing permissions
 * and limitations under the License.
 */

/*
 * C API of the treematch shared library. All functions return tm_status;
 * non-zero means failure and tm_last_error() holds a message for the calling
 * thread. Handles are opaque; every *_free tolerates NULL.
 */

#ifndef TREEMATCH_TREEMATCH_H_
#define TREEMATCH_TREEMATCH_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tm_status {
    TM_OK = 0,
    TM_ERR_IO = 1,          /* missing/unreadable file or directory */
    TM_ERR_FORMAT = 2,      /* corrupt or wrong-version file */
    TM_ERR_INVALID_ARG = 3, /* bad argument or config validation failure */
    TM_ERR_INTERNAL = 4
} tm_status;

const char* tm_version(void);
/* Message for the most recent failure on this thread; never NULL. */
const char* tm_last_error(void);

typedef struct tm_model tm_model;

/* ---- model handle ---- */

tm_status tm_model_load(const char* model_dir, tm_model** out_model);
void tm_model_free(tm_model* model);

tm_status tm_model_depth(const tm_model* model, uint32_t* out_depth);
tm_status tm_model_num_labels(const tm_model* model, uint32_t* out_num_labels);
tm_status tm_model_default_beam(const tm_model* model, uint32_t* out_beam);

/*
 * Retrieve up to *io_count labels for a query string. On input *io_count is
 * the capacity of label_ids/scores; on output it is the number written.
 * beam = 0 uses the model default.
 */
tm_status tm_model_predict(const tm_model* model, const char* query_text, uint32_t beam,
                           uint32_t topk, uint32_t* label_ids, double* scores, uint32_t* io_count);

/* ---- pipeline commands (mirroring the CLI subcommands) ---- */

/* options strings use the config syntax: "key = value" lines */
tm_status tm_synth_data(const char* options_kv, const char* out_dataset_dir);

/*
 * options_kv may be NULL; recognized keys:
 *   split = column | random     train/test routing (default: no split)
 *   split.column, split.value   1-based column equal to value -> test pair
 *   split.test_fraction         share of whole queries sent to test (random)
 *   split.seed
 * A split writes test.tsv into the dataset directory.
 */
tm_status tm_ingest(const char* pairs_tsv_path, int64_t threshold, const char* options_kv,
                    const char* out_dataset_dir);

tm_status tm_fit_vectorizer(const char* corpus_path, const char* options_kv,
                            const char* out_vocab_path);

tm_status tm_build_tree(const char* dataset_dir, const char* vocab_path, const char* options_kv,
                        const char* out_chain_path);

/* config_path may be NULL when options_kv carries the whole config */
tm_status tm_train(const char* config_path, const char* options_kv, const char* out_model_dir);

tm_status tm_prune(const char* model_dir, double epsilon, const char* out_model_dir);

tm_status tm_predict_file(const char* model_dir, const char* queries_path, uint32_t beam,
                          uint32_t topk, int32_t threads, const char* out_predictions_path);

/* exactly one of model_dir / predictions_path must be non-NULL */
tm_status tm_evaluate(const char* model_dir, const char* predictions_path, const char* test_tsv,
                      uint32_t beam, uint32_t topk, uint32_t num_labels, int32_t threads,
                      const char* out_report_prefix);

tm_status tm_evaluate_bm25(const char* label_corpus_path, const char* test_tsv, double k1, double b,
                           uint32_t topk, const char* out_report_prefix);

tm_status tm_bench(const char* model_dir, const char* queries_path, uint32_t beam, uint32_t topk,
                   uint32_t warmup, uint32_t repetitions, const char* out_report_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TREEMATCH_TREEMATCH_H_ */
