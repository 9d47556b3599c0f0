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

#include "treematch/inference.hpp"

#include <algorithm>
#include <cmath>

#include "treematch/parallel.hpp"

namespace treematch {

double activate(Activation a, double margin) {
    if (a == Activation::Sigmoid) return 1.0 / (1.0 + std::exp(-margin));
    double z = 1.0 - margin;
    z = std::clamp(z, 0.0, 1.0);
    return 1.0 - z * z * z;
}

double log_activate(Activation a, double margin) {
    if (a == Activation::Sigmoid) {
        // log(sigmoid(v)), stable on both tails
        return margin >= 0.0 ? -std::log1p(std::exp(-margin)) : margin - std::log1p(std::exp(margin));
    }
    return std::log(activate(a, margin));
}

void QueryWorkspace::load(const SparseVector& x, index_t dim) {
    if (dense_.size() < dim) dense_.resize(dim, 0.0);
    touched_.assign(x.indices.begin(), x.indices.end());
    for (size_t i = 0; i < x.indices.size(); ++i) dense_[x.indices[i]] = x.values[i];
}

void QueryWorkspace::clear() {
    for (index_t f : touched_) dense_[f] = 0.0;
    touched_.clear();
}

namespace {

inline double column_margin(const CscMatrix& W, index_t col, const double* xdense) {
    double s = 0.0;
    auto idx = W.col_indices(col);
    auto val = W.col_values(col);
    for (size_t i = 0; i < idx.size(); ++i) s += xdense[idx[i]] * val[i];
    return s;
}

inline void keep_top(std::vector<QueryWorkspace::Entry>& v, size_t k) {
    auto better = [](const QueryWorkspace::Entry& a, const QueryWorkspace::Entry& b) {
        if (a.logscore != b.logscore) return a.logscore > b.logscore;
        return a.node < b.node;
    };
    if (v.size() > k) {
        std::nth_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(k), v.end(), better);
        v.resize(k);
    }
    std::sort(v.begin(), v.end(), better);
}

}  // namespace

Prediction beam_search(const SparseVector& x, const Model& model, uint32_t beam, uint32_t topk,
                       QueryWorkspace& ws, SearchStats* stats) {
    if (beam < 1 || topk < 1) throw InvalidArgError("beam_search: beam and k must be >= 1");
    if (x.dim != model.dim())
        throw InvalidArgError("beam_search: query dim does not match model dim");
    const uint32_t depth = model.depth();
    ws.load(x, model.dim());
    const double* xd = ws.dense();

    ws.curr.assign(1, {0, 0.0});
    for (uint32_t t = 1; t <= depth; ++t) {
        const CscMatrix& W = model.weights[t - 1];
        ws.next.clear();
        for (const auto& e : ws.curr) {
            for (index_t child : model.chain.children(t, e.node)) {
                double margin = column_margin(W, child, xd);
                if (stats) stats->margin_evals += 1;
                ws.next.push_back({child, e.logscore + log_activate(model.activation, margin)});
            }
        }
        keep_top(ws.next, t == depth ? topk : beam);
        std::swap(ws.curr, ws.next);
    }
    ws.clear();

    Prediction out;
    out.labels.reserve(ws.curr.size());
    out.scores.reserve(ws.curr.size());
    for (const auto& e : ws.curr) {
        out.labels.push_back(e.node);
        out.scores.push_back(std::exp(e.logscore));
    }
    return out;
}

Prediction beam_search(const SparseVector& x, const Model& model, uint32_t beam, uint32_t topk) {
    QueryWorkspace ws;
    return beam_search(x, model, beam, topk, ws, nullptr);
}

Prediction exact_predict(const SparseVector& x, const Model& model, uint32_t topk) {
    if (topk < 1) throw InvalidArgError("exact_predict: k must be >= 1");
    if (x.dim != model.dim())
        throw InvalidArgError("exact_predict: query dim does not match model dim");
    const uint32_t depth = model.depth();
    const index_t L = model.num_labels();
    QueryWorkspace ws;
    ws.load(x, model.dim());
    const double* xd = ws.dense();

    std::vector<index_t> path(depth + 1);
    std::vector<QueryWorkspace::Entry> all(L);
    for (index_t l = 0; l < L; ++l) {
        path[depth] = l;
        for (uint32_t t = depth; t >= 2; --t) path[t - 1] = model.chain.parent(t, path[t]);
        double ls = 0.0;
        for (uint32_t t = 1; t <= depth; ++t) {
            double margin = column_margin(model.weights[t - 1], path[t], xd);
            ls += log_activate(model.activation, margin);
        }
        all[l] = {l, ls};
    }
    ws.clear();
    keep_top(all, topk);

    Prediction out;
    out.labels.reserve(all.size());
    out.scores.reserve(all.size());
    for (const auto& e : all) {
        out.labels.push_back(e.node);
        out.scores.push_back(std::exp(e.logscore));
    }
    return out;
}

std::vector<Prediction> batch_predict(std::span<const SparseVector> queries, const Model& model,
                                      uint32_t beam, uint32_t topk, int threads) {
    std::vector<Prediction> out(queries.size());
    int workers = resolve_threads(threads);
    std::vector<QueryWorkspace> ws(workers);
    parallel_for(0, queries.size(), workers,
                 [&](int tid, uint64_t i) { out[i] = beam_search(queries[i], model, beam, topk, ws[tid]); });
    return out;
}

Prediction predict_text(const Model& model, std::string_view text, uint32_t beam, uint32_t topk,
                        QueryWorkspace& ws) {
    return beam_search(model.vocab.transform(text), model, beam, topk, ws);
}

}  // namespace treematch
