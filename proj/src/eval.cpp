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

#include "treematch/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "treematch/ioutil.hpp"

namespace treematch {

double recall_at_k(const Prediction& predicted, std::span<const index_t> truth, uint32_t k) {
    if (truth.empty()) throw InvalidArgError("recall_at_k: empty truth set");
    std::vector<index_t> sorted(truth.begin(), truth.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    size_t upto = std::min<size_t>(k, predicted.labels.size());
    size_t hits = 0;
    for (size_t i = 0; i < upto; ++i) {
        if (std::binary_search(sorted.begin(), sorted.end(), predicted.labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(sorted.size());
}

EvalReport evaluate_recall(std::span<const Prediction> predictions,
                           std::span<const std::vector<index_t>> truths,
                           std::span<const uint32_t> ks) {
    if (predictions.size() != truths.size())
        throw InvalidArgError("evaluate_recall: prediction/truth count mismatch");
    EvalReport report;
    std::map<uint32_t, double> sums;
    for (uint32_t k : ks) sums[k] = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (truths[i].empty()) {
            report.queries_skipped_empty_truth += 1;
            continue;
        }
        report.queries_evaluated += 1;
        for (uint32_t k : ks) sums[k] += recall_at_k(predictions[i], truths[i], k);
    }
    for (uint32_t k : ks) {
        report.recall_at[k] =
            report.queries_evaluated ? sums[k] / static_cast<double>(report.queries_evaluated) : 0.0;
    }
    return report;
}

InvertedIndex InvertedIndex::build(const std::vector<std::string>& docs, const VectorizerConfig& norm,
                                   Bm25Params params) {
    if (docs.empty()) throw InvalidArgError("bm25: empty corpus");
    InvertedIndex index;
    index.norm_ = norm;
    index.params_ = params;
    index.doc_len_.reserve(docs.size());
    uint64_t total_len = 0;
    std::vector<std::pair<std::string, uint32_t>> counts;
    for (index_t doc = 0; doc < docs.size(); ++doc) {
        auto tokens = tokenize(normalize_text(docs[doc], norm));
        index.doc_len_.push_back(static_cast<uint32_t>(tokens.size()));
        total_len += tokens.size();
        std::sort(tokens.begin(), tokens.end());
        counts.clear();
        for (const auto& t : tokens) {
            if (!counts.empty() && counts.back().first == t) {
                counts.back().second += 1;
            } else {
                counts.emplace_back(t, 1);
            }
        }
        for (auto& [tok, tf] : counts) index.postings_[tok].push_back({doc, tf});
    }
    index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(docs.size());
    return index;
}

double InvertedIndex::idf(std::string_view token) const {
    auto it = postings_.find(std::string(token));
    if (it == postings_.end()) return 0.0;
    double n = static_cast<double>(doc_len_.size());
    double df = static_cast<double>(it->second.size());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

Prediction InvertedIndex::topk(std::string_view query, uint32_t k) const {
    auto tokens = tokenize(normalize_text(query, norm_));
    std::vector<double> scores(doc_len_.size(), 0.0);
    std::vector<index_t> touched;
    const double n = static_cast<double>(doc_len_.size());
    for (const auto& t : tokens) {
        auto it = postings_.find(t);
        if (it == postings_.end()) continue;
        const auto& plist = it->second;
        double df = static_cast<double>(plist.size());
        double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const Posting& p : plist) {
            double tf = static_cast<double>(p.tf);
            double denom = tf + params_.k1 * (1.0 - params_.b +
                                              params_.b * doc_len_[p.doc] / avgdl_);
            if (scores[p.doc] == 0.0) touched.push_back(p.doc);
            scores[p.doc] += idf * tf * (params_.k1 + 1.0) / denom;
        }
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    std::sort(touched.begin(), touched.end(), [&](index_t a, index_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    if (touched.size() > k) touched.resize(k);
    Prediction out;
    out.labels.assign(touched.begin(), touched.end());
    out.scores.reserve(touched.size());
    for (index_t d : touched) out.scores.push_back(scores[d]);
    return out;
}

namespace {

EvalReport summarize_latencies(std::vector<double>& ms) {
    std::sort(ms.begin(), ms.end());
    EvalReport report;
    size_t n = ms.size();
    report.latency_ms_median = (n % 2 == 1) ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    size_t p99 = static_cast<size_t>(std::ceil(0.99 * static_cast<double>(n)));
    report.latency_ms_p99 = ms[std::min(n - 1, p99 == 0 ? 0 : p99 - 1)];
    report.throughput_qps = report.latency_ms_median > 0.0 ? 1000.0 / report.latency_ms_median : 0.0;
    report.queries_evaluated = n;
    return report;
}

template <typename RunQuery>
EvalReport bench_loop(std::span<const std::string> queries, uint32_t warmup, uint32_t repetitions,
                      RunQuery&& run) {
    if (queries.empty()) throw InvalidArgError("bench_latency: no queries");
    uint64_t measured = static_cast<uint64_t>(queries.size()) * std::max(1u, repetitions);
    if (measured < 100) throw InvalidArgError("bench_latency: need at least 100 measured queries");
    for (uint32_t i = 0; i < warmup; ++i) run(queries[i % queries.size()]);
    std::vector<double> ms;
    ms.reserve(measured);
    for (uint32_t rep = 0; rep < std::max(1u, repetitions); ++rep) {
        for (const auto& q : queries) {
            auto t0 = std::chrono::steady_clock::now();
            run(q);
            auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }
    return summarize_latencies(ms);
}

}  // namespace

EvalReport bench_latency(const Model& model, std::span<const std::string> queries, uint32_t beam,
                         uint32_t topk, uint32_t warmup, uint32_t repetitions) {
    QueryWorkspace ws;
    volatile double sink = 0.0;  // keep the result live
    auto report = bench_loop(queries, warmup, repetitions, [&](const std::string& q) {
        Prediction p = predict_text(model, q, beam, topk, ws);
        if (!p.scores.empty()) sink = p.scores[0];
    });
    (void)sink;
    report.config_echo["beam"] = std::to_string(beam);
    report.config_echo["topk"] = std::to_string(topk);
    return report;
}

EvalReport bench_latency(const InvertedIndex& index, std::span<const std::string> queries,
                         uint32_t topk, uint32_t warmup, uint32_t repetitions) {
    volatile double sink = 0.0;
    auto report = bench_loop(queries, warmup, repetitions, [&](const std::string& q) {
        Prediction p = index.topk(q, topk);
        if (!p.scores.empty()) sink = p.scores[0];
    });
    (void)sink;
    report.config_echo["topk"] = std::to_string(topk);
    return report;
}

std::string report_to_kv(const EvalReport& report) {
    std::ostringstream os;
    for (const auto& [k, v] : report.recall_at) os << "recall@" << k << " = " << format_double(v) << '\n';
    os << "queries_evaluated = " << report.queries_evaluated << '\n';
    os << "queries_skipped_empty_truth = " << report.queries_skipped_empty_truth << '\n';
    if (report.latency_ms_median > 0.0) {
        os << "latency_ms_median = " << format_double(report.latency_ms_median) << '\n';
        os << "latency_ms_p99 = " << format_double(report.latency_ms_p99) << '\n';
        os << "throughput_qps = " << format_double(report.throughput_qps) << '\n';
    }
    for (const auto& [k, v] : report.config_echo) os << "config." << k << " = " << v << '\n';
    return os.str();
}

std::string report_to_text(const EvalReport& report) {
    std::ostringstream os;
    os << "evaluation report\n";
    os << "  queries evaluated: " << report.queries_evaluated << "\n";
    os << "  queries skipped (empty truth): " << report.queries_skipped_empty_truth << "\n";
    for (const auto& [k, v] : report.recall_at) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "  recall@%-4u %8.4f\n", k, v);
        os << buf;
    }
    if (report.latency_ms_median > 0.0) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "  latency median %.4f ms/q, p99 %.4f ms/q, throughput %.2f q/s\n",
                      report.latency_ms_median, report.latency_ms_p99, report.throughput_qps);
        os << buf;
    }
    for (const auto& [k, v] : report.config_echo) os << "  config " << k << " = " << v << "\n";
    return os.str();
}

}  // namespace treematch
