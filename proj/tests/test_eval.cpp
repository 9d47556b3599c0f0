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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "treematch/eval.hpp"

using namespace treematch;

namespace {
Prediction pred(std::vector<index_t> labels) {
    Prediction p;
    p.labels = std::move(labels);
    p.scores.resize(p.labels.size());
    double s = 1.0;
    for (auto& v : p.scores) {
        v = s;
        s *= 0.9;
    }
    return p;
}
}  // namespace

TEST_CASE("recall_at_k definition") {
    std::vector<index_t> truth = {1, 2};
    CHECK(recall_at_k(pred({1, 3}), truth, 2) == doctest::Approx(0.5));
    CHECK(recall_at_k(pred({2, 1, 9}), truth, 3) == doctest::Approx(1.0));
    CHECK(recall_at_k(pred({7, 8, 9}), truth, 3) == doctest::Approx(0.0));
    CHECK_THROWS_AS(recall_at_k(pred({1}), std::vector<index_t>{}, 1), InvalidArgError);
}

TEST_CASE("recall_at_k agrees with the set-arithmetic oracle on random pairs") {
    Rng rng(51);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<index_t> labels;
        size_t n = 1 + rand_below(rng, 20);
        while (labels.size() < n) {
            index_t l = static_cast<index_t>(rand_below(rng, 40));
            if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
        }
        std::vector<index_t> truth;
        size_t m = 1 + rand_below(rng, 6);
        while (truth.size() < m) {
            index_t l = static_cast<index_t>(rand_below(rng, 40));
            if (std::find(truth.begin(), truth.end(), l) == truth.end()) truth.push_back(l);
        }
        uint32_t k = 1 + static_cast<uint32_t>(rand_below(rng, 25));
        auto p = pred(labels);
        std::vector<index_t> topk(p.labels.begin(),
                                  p.labels.begin() + std::min<size_t>(k, p.labels.size()));
        CHECK(recall_at_k(p, truth, k) ==
              doctest::Approx(oracles::recall_oracle(topk, truth)).epsilon(1e-12));
    }
}

TEST_CASE("recall is non-decreasing in k") {
    Rng rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = pred({static_cast<index_t>(rand_below(rng, 10)),
                       static_cast<index_t>(10 + rand_below(rng, 10)),
                       static_cast<index_t>(20 + rand_below(rng, 10))});
        std::vector<index_t> truth = {p.labels[2], 99};
        double prev = 0.0;
        for (uint32_t k = 1; k <= 5; ++k) {
            double r = recall_at_k(p, truth, k);
            CHECK(r >= prev);
            prev = r;
        }
    }
}

TEST_CASE("evaluate_recall macro-averages and counts empty-truth queries") {
    std::vector<Prediction> preds = {pred({0, 1}), pred({2}), pred({5})};
    std::vector<std::vector<index_t>> truths = {{0}, {}, {4}};
    uint32_t ks[] = {1, 2};
    auto report = evaluate_recall(preds, truths, ks);
    CHECK(report.queries_evaluated == 2);
    CHECK(report.queries_skipped_empty_truth == 1);
    CHECK(report.recall_at[1] == doctest::Approx(0.5));
}

TEST_CASE("bm25 idf matches the plug-in oracle on a one-doc corpus") {
    auto index = InvertedIndex::build({"case"}, VectorizerConfig{});
    CHECK(index.idf("case") == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));
    CHECK(index.idf("absent") == 0.0);
    CHECK(index.params().k1 == doctest::Approx(0.5));
    CHECK(index.params().b == doctest::Approx(0.45));
}

TEST_CASE("bm25 ignores tokens absent from the corpus") {
    auto index = InvertedIndex::build({"red shoes", "blue shoes"}, VectorizerConfig{});
    auto p = index.topk("zebra", 5);
    CHECK(p.labels.empty());
    auto q = index.topk("zebra shoes", 5);
    CHECK(q.labels.size() == 2);
}

TEST_CASE("bm25 gives identical scores to identical documents") {
    auto index = InvertedIndex::build({"red shoes", "red shoes"}, VectorizerConfig{});
    auto p = index.topk("red", 2);
    REQUIRE(p.labels.size() == 2);
    CHECK(p.scores[0] == p.scores[1]);
    CHECK(p.labels[0] < p.labels[1]);  // tie -> lower doc id first
}

TEST_CASE("bm25 tf monotonicity with b=0") {
    Bm25Params params;
    params.b = 0.0;
    auto index = InvertedIndex::build({"cat", "cat cat", "cat cat cat"}, VectorizerConfig{}, params);
    auto p = index.topk("cat", 3);
    REQUIRE(p.labels.size() == 3);
    CHECK(p.labels == std::vector<index_t>{2, 1, 0});
    CHECK(p.scores[0] > p.scores[1]);
    CHECK(p.scores[1] > p.scores[2]);
}

TEST_CASE("bm25 scores are invariant to document insertion order") {
    std::vector<std::string> docs = {"red shoes", "blue hat cap", "green shoes boots sandals",
                                     "red hat hat"};
    auto a = InvertedIndex::build(docs, VectorizerConfig{});
    std::vector<std::string> shuffled = {docs[2], docs[0], docs[3], docs[1]};
    std::vector<index_t> to_shuffled = {1, 3, 0, 2};  // original id -> shuffled id
    auto b = InvertedIndex::build(shuffled, VectorizerConfig{});
    auto pa = a.topk("red shoes hat", 4);
    auto pb = b.topk("red shoes hat", 4);
    REQUIRE(pa.labels.size() == pb.labels.size());
    std::map<index_t, double> score_b;
    for (size_t i = 0; i < pb.labels.size(); ++i) score_b[pb.labels[i]] = pb.scores[i];
    for (size_t i = 0; i < pa.labels.size(); ++i) {
        index_t mapped = to_shuffled[pa.labels[i]];
        REQUIRE(score_b.count(mapped) == 1);
        CHECK(pa.scores[i] == doctest::Approx(score_b[mapped]).epsilon(1e-12));
    }
}

TEST_CASE("bm25 rejects an empty corpus") {
    CHECK_THROWS_AS(InvertedIndex::build({}, VectorizerConfig{}), InvalidArgError);
}

TEST_CASE("adding a non-matching document preserves ranks (avgdl held fixed)") {
    std::vector<std::string> docs = {"red shoes", "blue hat cap", "green shoes boots sandals",
                                     "red hat hat"};
    // avgdl = (2+3+4+3)/4 = 3; append a 3-token doc with no query tokens
    auto before = InvertedIndex::build(docs, VectorizerConfig{});
    docs.push_back("zig zag zog");
    auto after = InvertedIndex::build(docs, VectorizerConfig{});
    CHECK(after.avgdl() == doctest::Approx(before.avgdl()));
    auto pa = before.topk("red shoes hat", 5);
    auto pb = after.topk("red shoes hat", 5);
    REQUIRE(pa.labels.size() == pb.labels.size());
    CHECK(pa.labels == pb.labels);  // same matched docs, same rank order
}

TEST_CASE("bench_latency reports consistent median/throughput and enforces minimums") {
    Rng rng(61);
    Model m = oracles::random_model(rng, 64, 4, 8, 32, 4, Activation::Sigmoid);
    // bench needs a vectorizer: give the model a tiny vocab whose dim matches
    VectorizerConfig vc;
    vc.max_unigrams = 28;
    vc.max_bigrams = 0;
    vc.max_char_trigrams = 3;
    std::vector<std::string> corpus;
    for (int i = 0; i < 28; ++i) corpus.push_back("tok" + std::to_string(i));
    m.vocab = Vocabulary::fit(corpus, vc);
    REQUIRE(m.vocab.dim() == 32);

    std::vector<std::string> queries;
    for (int i = 0; i < 50; ++i) queries.push_back("tok" + std::to_string(i % 28) + " tok3");

    CHECK_THROWS_AS(bench_latency(m, queries, 2, 5, 0, 1), InvalidArgError);  // 50 < 100 measured

    auto report = bench_latency(m, queries, 2, 5, 10, 4);  // 200 measured
    CHECK(report.queries_evaluated == 200);
    CHECK(report.latency_ms_median > 0.0);
    CHECK(report.latency_ms_p99 >= report.latency_ms_median);
    CHECK(report.throughput_qps ==
          doctest::Approx(1000.0 / report.latency_ms_median).epsilon(1e-9));

    auto kv = report_to_kv(report);
    CHECK(kv.find("latency_ms_median") != std::string::npos);
    CHECK(kv.find("throughput_qps") != std::string::npos);
}

TEST_CASE("bench_latency: wider beams cost more, medians are stable run-to-run") {
    Rng rng(67);
    Model m = oracles::random_model(rng, 2000, 8, 50, 64, 8, Activation::Sigmoid);
    VectorizerConfig vc;
    vc.max_unigrams = 60;
    vc.max_bigrams = 0;
    vc.max_char_trigrams = 3;
    std::vector<std::string> corpus;
    for (int i = 0; i < 60; ++i) corpus.push_back("tok" + std::to_string(i));
    m.vocab = Vocabulary::fit(corpus, vc);
    REQUIRE(m.vocab.dim() == 64);

    std::vector<std::string> queries;
    for (int i = 0; i < 100; ++i)
        queries.push_back("tok" + std::to_string(i % 60) + " tok" + std::to_string((i * 7) % 60) +
                          " tok" + std::to_string((i * 13) % 60));

    auto narrow = bench_latency(m, queries, 1, 10, 20, 2);
    auto wide = bench_latency(m, queries, 50, 10, 20, 2);
    CHECK(narrow.latency_ms_median < wide.latency_ms_median);

    // stability is measured on a workload big enough that timer noise and
    // cache state do not dominate the median
    auto run1 = bench_latency(m, queries, 25, 10, 50, 6);
    auto run2 = bench_latency(m, queries, 25, 10, 50, 6);
    double rel = std::fabs(run2.latency_ms_median - run1.latency_ms_median) /
                 std::max(run1.latency_ms_median, 1e-12);
    CHECK(rel < 0.2);  // run-to-run median stability
}
