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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treematch/inference.hpp"
#include "treematch/sparse.hpp"

namespace treematch {

// On-disk dataset directory:
//   queries.txt     one raw training query per line
//   truth.txt       line i: comma-separated internal label ids for query i
//   labels.tsv      internal id -> external label id (and optional text ref)
//   label_text.txt  optional, one label document per line (BM25 / featurization)
//   test.tsv        optional, query text <TAB> comma-separated internal ids
//   manifest.json
struct Dataset {
    std::vector<std::string> queries;
    CsrMatrix relevance;  // queries x labels, binary
    std::vector<std::string> label_names;
    std::optional<std::vector<std::string>> label_text;

    index_t num_labels() const { return relevance.cols; }
};

struct TestSet {
    std::vector<std::string> queries;
    std::vector<std::vector<index_t>> truths;
};

// Train/test routing for ingested pairs. ByColumn emulates a time-horizon
// split: pairs whose 1-based `column` equals `value` become test pairs.
// Random sends a fraction of whole queries to the test side.
struct SplitSpec {
    enum class Mode { None, ByColumn, Random } mode = Mode::None;
    uint32_t column = 4;
    std::string value;
    double test_fraction = 0.1;
    uint64_t seed = 7;
};

// Aggregates duplicate (query, label) pairs by summing their counts (column 3,
// default 1), keeps pairs whose aggregate reaches `threshold`, and assigns
// contiguous internal ids in first-appearance order. Malformed lines raise
// FormatError with the line number; zero surviving pairs raise InvalidArgError.
// With a split, test-side pairs go to `out_test` instead (ids from the train
// map; labels never seen in training are dropped from test truth sets, so
// affected queries may end up with empty truths).
Dataset ingest_pairs(const std::string& pairs_tsv_path, int64_t threshold);
Dataset ingest_pairs(const std::string& pairs_tsv_path, int64_t threshold, const SplitSpec& split,
                     TestSet* out_test);

// `inputs` records provenance (source paths/hashes) in the manifest.
void save_dataset(const Dataset& data, const std::string& dir,
                  const std::map<std::string, std::string>& inputs = {});
Dataset load_dataset(const std::string& dir);

TestSet load_test_tsv(const std::string& path, index_t num_labels);
void save_test_tsv(const TestSet& test, const std::string& path);

// Predictions file: one "query_id <TAB> label_id <TAB> score" line per result,
// query ids ascending, scores non-increasing within a query.
void save_predictions(std::span<const Prediction> predictions, const std::string& path);
std::vector<Prediction> load_predictions(const std::string& path, size_t num_queries);

// Synthetic corpus with controlled lexical/semantic gaps: labels live in
// topics and carry a token signature; queries sample signature tokens and may
// swap each for a synonym surface form that never appears in any label text.
// Semantic test queries are fully synonym-substituted, so lexical matching
// gets no signal on them while trained models do.
struct SynthParams {
    index_t num_labels = 5000;
    uint32_t num_train = 20000;
    uint32_t num_test = 2000;
    uint32_t num_topics = 100;
    uint32_t tokens_per_topic = 40;
    uint32_t label_tokens_min = 6;
    uint32_t label_tokens_max = 10;
    uint32_t query_tokens_min = 3;
    uint32_t query_tokens_max = 6;
    double train_synonym_rate = 0.35;    // per-token synonym swap in train queries
    double test_semantic_fraction = 0.5; // fully synonym-substituted test queries
    double sibling_positive_rate = 0.5;  // chance of an extra same-topic positive
    uint64_t seed = 7;
};

struct SynthData {
    Dataset train;
    TestSet test;
};

SynthData synth_generate(const SynthParams& params);
void synth_write(const SynthData& data, const SynthParams& params, const std::string& dir);

}  // namespace treematch
