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

#include <string_view>
#include <vector>

#include "treematch/model.hpp"

namespace treematch {

// Node relevance transform: sigmoid(v) = 1/(1+exp(-v));
// l3-hinge(v) = 1 - clamp(1-v, 0, 1)^3 (0 at v<=0, 1 at v>=1).
double activate(Activation a, double margin);
// log of the above, numerically stable; -inf where the activation is 0.
double log_activate(Activation a, double margin);

struct Prediction {
    std::vector<index_t> labels;  // unique, at most k
    std::vector<double> scores;   // non-increasing, aligned with labels
};

struct SearchStats {
    uint64_t margin_evals = 0;
};

// Reusable per-thread scratch: a dense scatter of the query vector plus beam
// buffers. One instance per thread; never shared concurrently.
class QueryWorkspace {
public:
    void load(const SparseVector& x, index_t dim);
    void clear();
    const double* dense() const { return dense_.data(); }

    struct Entry {
        index_t node;
        double logscore;
    };
    std::vector<Entry> curr, next;

private:
    std::vector<double> dense_;
    std::vector<index_t> touched_;
};

// Greedy level-wise beam search: children of the surviving beam are scored as
// parent_score * activate(w . x), the top-b clusters survive per level (ties
// to the lower id), and the leaf level returns the top-k labels. Scores
// accumulate in log space and are exponentiated at output.
Prediction beam_search(const SparseVector& x, const Model& model, uint32_t beam, uint32_t topk,
                       QueryWorkspace& ws, SearchStats* stats = nullptr);
Prediction beam_search(const SparseVector& x, const Model& model, uint32_t beam, uint32_t topk);

// Scores every label by its full ancestor-path product and returns the exact
// top-k. Test oracle for beam_search; cost is O(L * D) margins, so use on
// models small enough for full traversal.
Prediction exact_predict(const SparseVector& x, const Model& model, uint32_t topk);

// Element-wise beam_search over queries, parallel across queries only.
std::vector<Prediction> batch_predict(std::span<const SparseVector> queries, const Model& model,
                                      uint32_t beam, uint32_t topk, int threads);

// Featurize-then-search convenience used by the CLI surface and benchmarks.
Prediction predict_text(const Model& model, std::string_view text, uint32_t beam, uint32_t topk,
                        QueryWorkspace& ws);

}  // namespace treematch
