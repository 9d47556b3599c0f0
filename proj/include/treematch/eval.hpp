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
#include <span>
#include <string>
#include <vector>

#include "treematch/inference.hpp"
#include "treematch/vectorizer.hpp"

namespace treematch {

// |top_k(predicted) ∩ truth| / |truth|. Truth ids need not be sorted; they
// must be non-empty (recall is undefined for an empty truth set).
double recall_at_k(const Prediction& predicted, std::span<const index_t> truth, uint32_t k);

struct EvalReport {
    std::map<uint32_t, double> recall_at;
    uint64_t queries_evaluated = 0;
    uint64_t queries_skipped_empty_truth = 0;
    double latency_ms_median = 0.0;
    double latency_ms_p99 = 0.0;
    double throughput_qps = 0.0;  // defined as 1000 / median latency in ms
    StringMap config_echo;
};

// Macro-averaged Recall@k over queries; queries with empty truth are
// excluded from the average and counted.
EvalReport evaluate_recall(std::span<const Prediction> predictions,
                           std::span<const std::vector<index_t>> truths,
                           std::span<const uint32_t> ks);

struct Bm25Params {
    double k1 = 0.5;
    double b = 0.45;
};

// Okapi-BM25 over unigram tokens, sharing the vectorizer's normalization.
//   idf(t)    = ln((N - df + 0.5)/(df + 0.5) + 1)
//   score(q,d)= sum_{t in q} idf(t) * tf(t,d)*(k1+1) / (tf(t,d) + k1*(1 - b + b*len(d)/avgdl))
// The sum runs over the query token list, so repeated tokens contribute once
// per occurrence.
class InvertedIndex {
public:
    static InvertedIndex build(const std::vector<std::string>& docs, const VectorizerConfig& norm,
                               Bm25Params params = {});

    // Top-k documents by BM25 score; ties broken by lower doc id. Documents
    // matching no query token never appear.
    Prediction topk(std::string_view query, uint32_t k) const;

    double idf(std::string_view token) const;  // 0 for unindexed tokens
    uint64_t num_docs() const { return doc_len_.size(); }
    double avgdl() const { return avgdl_; }
    const Bm25Params& params() const { return params_; }

private:
    struct Posting {
        index_t doc;
        uint32_t tf;
    };
    VectorizerConfig norm_;
    Bm25Params params_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<uint32_t> doc_len_;
    double avgdl_ = 0.0;
};

// Single-thread, single-query wall-clock timing including featurization.
// `repetitions` full passes over the query list are measured after `warmup`
// untimed queries; at least 100 measured queries are required.
EvalReport bench_latency(const Model& model, std::span<const std::string> queries, uint32_t beam,
                         uint32_t topk, uint32_t warmup = 100, uint32_t repetitions = 1);
EvalReport bench_latency(const InvertedIndex& index, std::span<const std::string> queries,
                         uint32_t topk, uint32_t warmup = 100, uint32_t repetitions = 1);

std::string report_to_kv(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace treematch
