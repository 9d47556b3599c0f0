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

#pragma once

#include <string>

#include "treematch/dataset.hpp"
#include "treematch/eval.hpp"
#include "treematch/model.hpp"

namespace treematch {

// Declarative run configuration: '#'-comment, 'key = value' lines. Unknown
// keys are rejected by run_train; every violated field is reported at once.
struct PipelineConfig {
    StringMap kv;

    static PipelineConfig parse(std::string_view content);
    static PipelineConfig load(const std::string& path);
    // later entries win; used for CLI flag overrides
    void merge(const PipelineConfig& overrides);
    std::string serialize() const;
};

// Trains end to end from a dataset directory: fit vectorizer, transform,
// PIFA, build tree, layered training, and writes the model directory with
// manifest + train_stats.kv. Deterministic for a fixed config and seed.
// Recognized keys (defaults in parentheses):
//   dataset_dir                       required
//   seed (7), threads (0 = auto)
//   vectorizer.max_unigrams (100000), vectorizer.max_bigrams (200000),
//   vectorizer.max_char_trigrams (100000), vectorizer.lowercase (true),
//   vectorizer.punctuation (ASCII punctuation)
//   tree.branching (32), tree.max_leaf (100), tree.kmeans_max_iters (50),
//   tree.kmeans_tol (1e-4), tree.embeddings (pifa | path to CSR file)
//   train.lambda (1.0), train.loss (squared-hinge | logistic),
//   train.solver_max_iters (100), train.solver_tol (0.1),
//   train.neg_sampling (tfn), train.prune_epsilon (0.0)
//   model.activation (l3-hinge | sigmoid), model.default_beam (10)
void run_train(const PipelineConfig& config, const std::string& out_model_dir);

// Predicts a queries file (one query per line) to a predictions TSV plus a
// .manifest.json sidecar. beam = 0 uses the model default.
void run_predict(const std::string& model_dir, const std::string& queries_path, uint32_t beam,
                 uint32_t topk, int threads, const std::string& out_path);

// Evaluates either a predictions file or a model against a test TSV; writes
// <out_prefix>.txt and <out_prefix>.kv and returns the report.
EvalReport run_eval_model(const std::string& model_dir, const std::string& test_tsv, uint32_t beam,
                          uint32_t topk, int threads, const std::string& out_prefix);
EvalReport run_eval_predictions(const std::string& predictions_path, const std::string& test_tsv,
                                index_t num_labels, const std::string& out_prefix);

// BM25 baseline over a label corpus file (one label document per line).
EvalReport run_eval_bm25(const std::string& label_corpus_path, const std::string& test_tsv,
                         const Bm25Params& params, uint32_t topk, const std::string& out_prefix);

// Re-prunes a model directory into a new one; the effective threshold is the
// max of the model's existing epsilon and the requested one.
void run_prune(const std::string& model_dir, double epsilon, const std::string& out_model_dir);

// Single-thread latency benchmark; writes <out_path> as a kv report.
EvalReport run_bench(const std::string& model_dir, const std::string& queries_path, uint32_t beam,
                     uint32_t topk, uint32_t warmup, uint32_t repetitions,
                     const std::string& out_path);

// Writes <out_path>.manifest.json recording the command, its effective
// config and input provenance; every file-producing command emits one.
void write_run_manifest(const std::string& out_path, const std::string& command,
                        const StringMap& config, const StringMap& inputs);

}  // namespace treematch
