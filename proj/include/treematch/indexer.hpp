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

#include <cstdint>
#include <vector>

#include "treematch/cluster_chain.hpp"
#include "treematch/sparse.hpp"

namespace treematch {

struct KmeansParams {
    uint32_t max_iters = 50;
    double tol = 1e-4;  // stop when the mean assigned cosine improves by less
};

// Per-iteration objectives, mainly for property tests. `unconstrained` is the
// mean best-centroid cosine measured before the balance projection;
// `assigned` is the mean cosine to the centroid each row ended up with.
struct KmeansStats {
    std::vector<double> unconstrained;
    std::vector<double> assigned;
};

struct TreeConfig {
    uint32_t branching = 32;
    uint32_t max_leaf = 100;
    uint64_t seed = 7;
    KmeansParams kmeans;
    int threads = 1;
};

// Label embeddings by positive-instance feature aggregation: row l is the
// normalized sum of the feature vectors of l's positive instances; labels
// with no positives get an all-zero row. X rows are expected l2-normalized.
CsrMatrix pifa_embeddings(const CsrMatrix& X, const CsrMatrix& Y, int threads = 1);

// Splits rows into `groups` clusters of sizes differing by at most one.
// Iterates greedy rank-ordered assignment to the highest-cosine centroid
// under the balance constraint, then recomputes centroids as normalized group
// means, until the objective improvement drops below tol. Centroids are
// seeded k-means++ style on cosine distance. All-zero rows are dealt
// round-robin to the smallest groups after the nonzero rows are placed.
std::vector<index_t> balanced_spherical_kmeans(const CsrMatrix& rows, index_t groups,
                                               const KmeansParams& params, uint64_t seed,
                                               KmeansStats* stats = nullptr);

// Top-down recursive balanced B-ary partitioning of the label embeddings
// into a ClusterChain whose leaf clusters hold at most max_leaf labels.
// Deterministic given config.seed regardless of thread count.
ClusterChain build_tree(const CsrMatrix& Z, const TreeConfig& cfg);

}  // namespace treematch
