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
#include "treematch/solver.hpp"
#include "treematch/sparse.hpp"

namespace treematch {

enum class NegSampling : uint8_t { Tfn = 0 };

struct TrainConfig {
    double lambda = 1.0;
    Loss loss = Loss::SquaredHinge;
    uint32_t solver_max_iters = 100;
    double solver_tol = 0.1;
    NegSampling neg_sampling = NegSampling::Tfn;
    double prune_epsilon = 0.0;
    int threads = 1;
    uint64_t seed = 7;
};

// W(1..D); layer t is the d x K_t weight matrix, columns pruned to |w| > eps.
using LayeredWeights = std::vector<CscMatrix>;

// Induced layer label matrices Y(1..D): Y(D) = binarize(Y) and
// Y(t-1) = binarize(Y(t) * C(t)). Element [t-1] of the result is Y(t).
std::vector<CsrMatrix> induce_label_chain(const CsrMatrix& Y, const ClusterChain& chain);

// Teacher-forcing negatives: the mask at layer t is exactly Y(t-1); the
// active instances of a child are those whose ground-truth parent cluster is
// relevant, everything else is excluded from the subproblem.
CsrMatrix tfn_mask(const CsrMatrix& y_parent);

struct LayerTrainStats {
    uint64_t columns = 0;
    uint64_t empty_columns = 0;  // children whose active set was empty
    uint64_t total_active = 0;   // sum of active-set sizes over columns
    uint64_t nnz = 0;            // stored weights after pruning
    uint64_t solver_iters = 0;
    double objective = 0.0;  // sum of per-column primal objectives (pre-prune)
};

// Learns all layers top-down; columns within a layer are independent
// subproblems solved in parallel and pruned immediately with
// config.prune_epsilon. Output is identical for any thread count.
LayeredWeights train(const CsrMatrix& X, const CsrMatrix& Y, const ClusterChain& chain,
                     const TrainConfig& config, std::vector<LayerTrainStats>* stats = nullptr);

// Hard thresholding: keeps entries with |w| strictly greater than epsilon.
void prune(LayeredWeights& weights, double epsilon);

uint64_t total_nnz(const LayeredWeights& weights);

}  // namespace treematch
