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

#include <filesystem>
#include <numeric>

#include "oracles.hpp"
#include "treematch/indexer.hpp"

using namespace treematch;

namespace {

CsrMatrix from_rows(index_t cols, const std::vector<std::vector<double>>& dense) {
    CsrMatrix m;
    m.cols = cols;
    for (const auto& row : dense) {
        std::vector<index_t> idx;
        std::vector<double> val;
        for (index_t c = 0; c < cols && c < row.size(); ++c) {
            if (row[c] != 0.0) {
                idx.push_back(c);
                val.push_back(row[c]);
            }
        }
        m.append_row(idx, val);
    }
    return m;
}

// label-count balance among siblings and leaf-capacity bound
void check_chain_shape(const ClusterChain& chain, index_t L, uint32_t B, uint32_t max_leaf) {
    chain.validate();
    CHECK(chain.num_labels() == L);
    auto widths = plan_layer_widths(L, B, max_leaf);
    REQUIRE(chain.depth() == widths.size());
    for (uint32_t t = 1; t <= chain.depth(); ++t) CHECK(chain.width(t) == widths[t - 1]);

    // labels per node at each layer: propagate down
    std::vector<std::vector<uint64_t>> counts(chain.depth() + 1);
    counts[chain.depth()].assign(L, 1);
    for (uint32_t t = chain.depth(); t >= 1; --t) {
        counts[t - 1].assign(t == 1 ? 1 : chain.width(t - 1), 0);
        for (index_t node = 0; node < chain.width(t); ++node) {
            counts[t - 1][chain.parent(t, node)] += counts[t][node];
        }
    }
    CHECK(counts[0][0] == L);  // chain consistency: all labels reach the root
    for (uint32_t t = 1; t < chain.depth(); ++t) {
        uint64_t lo = UINT64_MAX, hi = 0;
        for (uint64_t c : counts[t]) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        CHECK(hi - lo <= 1);  // balance among the whole layer implies among siblings
        if (t + 1 == chain.depth()) CHECK(hi <= max_leaf);
    }
}

}  // namespace

TEST_CASE("pifa: single positive gives the normalized instance") {
    CsrMatrix X = from_rows(2, {{0.6, 0.8}});
    CsrMatrix Y = from_rows(1, {{1.0}});
    auto Z = pifa_embeddings(X, Y);
    REQUIRE(Z.rows == 1);
    CHECK(Z.row_values(0)[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(Z.row_values(0)[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pifa: two orthogonal positives average and renormalize") {
    CsrMatrix X = from_rows(2, {{1.0, 0.0}, {0.0, 1.0}});
    CsrMatrix Y = from_rows(1, {{1.0}, {1.0}});
    auto Z = pifa_embeddings(X, Y);
    CHECK(Z.row_values(0)[0] == doctest::Approx(0.7071067811865475).epsilon(1e-9));
    CHECK(Z.row_values(0)[1] == doctest::Approx(0.7071067811865475).epsilon(1e-9));
}

TEST_CASE("pifa: label with no positives is a zero row") {
    CsrMatrix X = from_rows(2, {{1.0, 0.0}});
    CsrMatrix Y = from_rows(2, {{1.0, 0.0}});
    auto Z = pifa_embeddings(X, Y);
    CHECK(Z.row_nnz(0) == 1);
    CHECK(Z.row_nnz(1) == 0);
}

TEST_CASE("pifa: shape mismatch raises") {
    CsrMatrix X = from_rows(2, {{1.0, 0.0}});
    CsrMatrix Y = from_rows(1, {{1.0}, {1.0}});
    CHECK_THROWS_AS(pifa_embeddings(X, Y), InvalidArgError);
}

TEST_CASE("balanced kmeans matches brute force on the 4-point instance") {
    CsrMatrix rows = from_rows(2, {{1.0, 0.0}, {0.99, 0.141}, {0.0, 1.0}, {0.141, 0.99}});
    rows.l2_normalize_rows();
    auto expected = oracles::brute_force_balanced_2partition(rows);
    // the oracle should itself group {0,1} vs {2,3}
    CHECK(expected[0] == expected[1]);
    CHECK(expected[2] == expected[3]);
    CHECK(expected[0] != expected[2]);
    for (uint64_t seed : {1u, 7u, 23u, 99u}) {
        auto got = balanced_spherical_kmeans(rows, 2, {}, seed);
        CHECK(got[0] == got[1]);
        CHECK(got[2] == got[3]);
        CHECK(got[0] != got[2]);
    }
}

TEST_CASE("balanced kmeans: identical rows split evenly and reproducibly") {
    CsrMatrix rows = from_rows(2, {{1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}});
    auto a = balanced_spherical_kmeans(rows, 2, {}, 5);
    auto b = balanced_spherical_kmeans(rows, 2, {}, 5);
    CHECK(a == b);
    index_t c0 = static_cast<index_t>(std::count(a.begin(), a.end(), 0u));
    CHECK(c0 == 3);
}

TEST_CASE("balanced kmeans: m == groups puts each row alone") {
    CsrMatrix rows = from_rows(3, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    auto a = balanced_spherical_kmeans(rows, 3, {}, 1);
    std::vector<index_t> sorted(a);
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<index_t>{0, 1, 2});
}

TEST_CASE("balanced kmeans rejects fewer rows than groups") {
    CsrMatrix rows = from_rows(2, {{1, 0}});
    CHECK_THROWS_AS(balanced_spherical_kmeans(rows, 2, {}, 1), InvalidArgError);
}

TEST_CASE("balanced kmeans: zero rows round-robin after nonzero rows") {
    CsrMatrix rows = from_rows(2, {{1, 0}, {}, {0, 1}, {}, {1, 0}, {}});
    auto a = balanced_spherical_kmeans(rows, 2, {}, 3);
    index_t c0 = static_cast<index_t>(std::count(a.begin(), a.end(), 0u));
    CHECK(c0 == 3);
}

TEST_CASE("kmeans objective: assigned sequence improves and beats random baseline") {
    Rng data_rng(13);
    int monotone_ok = 0, beats_random = 0, trials = 25;
    for (int trial = 0; trial < trials; ++trial) {
        CsrMatrix rows;
        rows.cols = 24;
        index_t m = 40 + static_cast<index_t>(rand_below(data_rng, 40));
        for (index_t r = 0; r < m; ++r) {
            auto v = oracles::random_unit_vector(data_rng, rows.cols, 3 + rand_below(data_rng, 4));
            rows.append_row(v.indices, v.values);
        }
        KmeansStats stats;
        KmeansParams params;
        params.tol = 1e-7;
        auto assign = balanced_spherical_kmeans(rows, 4, params, 1000 + trial, &stats);

        bool monotone = true;
        for (size_t i = 1; i < stats.unconstrained.size(); ++i) {
            if (stats.unconstrained[i] < stats.unconstrained[i - 1] - 1e-12) monotone = false;
            // exact invariant: recomputing centroids never hurts the previous
            // assignment, so the next pre-balance objective dominates it
            CHECK(stats.unconstrained[i] >= stats.assigned[i - 1] - 1e-12);
        }
        for (size_t i = 0; i < stats.assigned.size(); ++i) {
            CHECK(stats.assigned[i] <= stats.unconstrained[i] + 1e-12);
        }
        if (monotone) ++monotone_ok;

        // random balanced assignment baseline: same group sizes, shuffled
        Rng shuffle_rng(999 + trial);
        std::vector<index_t> random_assign(assign);
        shuffle_vec(random_assign, shuffle_rng);
        auto objective = [&](const std::vector<index_t>& a) {
            std::vector<std::vector<double>> cents(4, std::vector<double>(rows.cols, 0.0));
            for (index_t r = 0; r < m; ++r) {
                auto idx = rows.row_indices(r);
                auto val = rows.row_values(r);
                for (size_t i = 0; i < idx.size(); ++i) cents[a[r]][idx[i]] += val[i];
            }
            for (auto& c : cents) {
                double s = 0.0;
                for (double v : c) s += v * v;
                if (s > 0)
                    for (double& v : c) v /= std::sqrt(s);
            }
            double obj = 0.0;
            for (index_t r = 0; r < m; ++r) {
                auto idx = rows.row_indices(r);
                auto val = rows.row_values(r);
                for (size_t i = 0; i < idx.size(); ++i) obj += cents[a[r]][idx[i]] * val[i];
            }
            return obj;
        };
        if (objective(assign) >= objective(random_assign)) ++beats_random;
    }
    // the pre-balance sequence is a heuristic trend (the balance projection
    // can nudge centroids), so it is checked statistically over the seeds
    CHECK(monotone_ok >= static_cast<int>(0.9 * trials));
    CHECK(beats_random >= static_cast<int>(0.95 * trials));
}

TEST_CASE("plan_layer_widths reproduces the documented depth rule") {
    // 100M labels, B=32, max_leaf=100 -> depth 5 with the expected widths
    auto w = plan_layer_widths(100000000ull, 32, 100);
    CHECK(w == std::vector<uint64_t>{32, 1024, 32768, 1048576, 100000000ull});
    CHECK(plan_layer_widths(8, 2, 2) == std::vector<uint64_t>{2, 4, 8});
    CHECK(plan_layer_widths(7, 2, 100) == std::vector<uint64_t>{7});
    CHECK(plan_layer_widths(1, 32, 1) == std::vector<uint64_t>{1});
}

TEST_CASE("build_tree: single-layer chain when L <= max_leaf") {
    Rng rng(2);
    CsrMatrix Z;
    Z.cols = 8;
    for (int r = 0; r < 5; ++r) {
        auto v = oracles::random_unit_vector(rng, Z.cols, 3);
        Z.append_row(v.indices, v.values);
    }
    TreeConfig cfg;
    cfg.branching = 4;
    cfg.max_leaf = 10;
    auto chain = build_tree(Z, cfg);
    CHECK(chain.depth() == 1);
    CHECK(chain.width(1) == 5);
    for (index_t l = 0; l < 5; ++l) CHECK(chain.parent(1, l) == 0);
}

TEST_CASE("build_tree: L=8, B=2, max_leaf=2 gives widths (2,4,8)") {
    Rng rng(4);
    CsrMatrix Z;
    Z.cols = 6;
    for (int r = 0; r < 8; ++r) {
        auto v = oracles::random_unit_vector(rng, Z.cols, 2 + rand_below(rng, 3));
        Z.append_row(v.indices, v.values);
    }
    TreeConfig cfg;
    cfg.branching = 2;
    cfg.max_leaf = 2;
    cfg.seed = 11;
    auto chain = build_tree(Z, cfg);
    check_chain_shape(chain, 8, 2, 2);
}

TEST_CASE("build_tree invariants hold on random pifa-style inputs") {
    Rng rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        index_t L = 30 + static_cast<index_t>(rand_below(rng, 400));
        CsrMatrix Z;
        Z.cols = 40;
        for (index_t r = 0; r < L; ++r) {
            if (rand_below(rng, 20) == 0) {
                Z.append_row({}, {});  // cold-start label
            } else {
                auto v = oracles::random_unit_vector(rng, Z.cols, 2 + rand_below(rng, 5));
                Z.append_row(v.indices, v.values);
            }
        }
        TreeConfig cfg;
        cfg.branching = 2 + static_cast<uint32_t>(rand_below(rng, 7));
        cfg.max_leaf = 3 + static_cast<uint32_t>(rand_below(rng, 20));
        cfg.seed = 500 + trial;
        auto chain = build_tree(Z, cfg);
        check_chain_shape(chain, L, cfg.branching, cfg.max_leaf);
    }
}

TEST_CASE("build_tree is deterministic for a fixed seed, any thread count") {
    Rng rng(77);
    CsrMatrix Z;
    Z.cols = 32;
    for (int r = 0; r < 300; ++r) {
        auto v = oracles::random_unit_vector(rng, Z.cols, 4);
        Z.append_row(v.indices, v.values);
    }
    TreeConfig a;
    a.branching = 4;
    a.max_leaf = 10;
    a.seed = 9;
    a.threads = 1;
    TreeConfig b = a;
    b.threads = 8;
    auto c1 = build_tree(Z, a);
    auto c2 = build_tree(Z, b);
    auto c3 = build_tree(Z, a);
    CHECK(c1 == c2);
    CHECK(c1 == c3);

    TreeConfig other = a;
    other.seed = 10;
    auto c4 = build_tree(Z, other);
    // different seed is allowed to give a different tree (not asserted equal)
    check_chain_shape(c4, 300, 4, 10);
}

TEST_CASE("build_tree rejects an empty label set") {
    CsrMatrix Z;
    Z.cols = 4;
    CHECK_THROWS_AS(build_tree(Z, TreeConfig{}), InvalidArgError);
}

TEST_CASE("cluster chain files round-trip") {
    Rng rng(31);
    CsrMatrix Z;
    Z.cols = 16;
    for (int r = 0; r < 60; ++r) {
        auto v = oracles::random_unit_vector(rng, Z.cols, 3);
        Z.append_row(v.indices, v.values);
    }
    TreeConfig cfg;
    cfg.branching = 3;
    cfg.max_leaf = 5;
    auto chain = build_tree(Z, cfg);
    auto path = (std::filesystem::temp_directory_path() / "tm_chain_test.bin").string();
    chain.save(path);
    CHECK(ClusterChain::load(path) == chain);
}
