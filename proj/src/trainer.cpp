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

#include "treematch/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "treematch/parallel.hpp"
#include "treematch/rng.hpp"

namespace treematch {

std::vector<CsrMatrix> induce_label_chain(const CsrMatrix& Y, const ClusterChain& chain) {
    if (Y.cols != chain.num_labels())
        throw InvalidArgError("induce_label_chain: Y has " + std::to_string(Y.cols) +
                              " labels, chain has " + std::to_string(chain.num_labels()));
    const uint32_t depth = chain.depth();
    std::vector<CsrMatrix> ys(depth);

    // Y(D): binarized copy of Y
    CsrMatrix& bottom = ys[depth - 1];
    bottom = Y;
    std::fill(bottom.values.begin(), bottom.values.end(), 1.0);

    std::vector<index_t> mapped;
    for (uint32_t t = depth; t >= 2; --t) {
        const CsrMatrix& upper = ys[t - 1];
        CsrMatrix& lower = ys[t - 2];
        lower.cols = chain.width(t - 1);
        for (index_t r = 0; r < upper.rows; ++r) {
            mapped.clear();
            for (index_t node : upper.row_indices(r)) mapped.push_back(chain.parent(t, node));
            std::sort(mapped.begin(), mapped.end());
            mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());
            std::vector<double> ones(mapped.size(), 1.0);
            lower.append_row(mapped, ones);
        }
    }
    return ys;
}

CsrMatrix tfn_mask(const CsrMatrix& y_parent) { return y_parent; }

LayeredWeights train(const CsrMatrix& X, const CsrMatrix& Y, const ClusterChain& chain,
                     const TrainConfig& config, std::vector<LayerTrainStats>* stats) {
    if (X.rows != Y.rows) throw InvalidArgError("train: X and Y row counts differ");
    if (config.lambda <= 0.0) throw InvalidArgError("train: lambda must be > 0");
    if (config.prune_epsilon < 0.0) throw InvalidArgError("train: prune_epsilon must be >= 0");

    const uint32_t depth = chain.depth();
    auto ys = induce_label_chain(Y, chain);

    // Y(0): one column flagging instances that carry any label at all.
    CsrMatrix y_root;
    y_root.cols = 1;
    {
        const index_t zero = 0;
        const double one = 1.0;
        for (index_t r = 0; r < X.rows; ++r) {
            if (ys[0].row_nnz(r) > 0) {
                y_root.append_row({&zero, 1}, {&one, 1});
            } else {
                y_root.append_row({}, {});
            }
        }
    }

    if (stats) stats->assign(depth, LayerTrainStats{});
    LayeredWeights weights(depth);
    int workers = resolve_threads(config.threads);
    std::vector<std::vector<double>> wbuf(workers);

    for (uint32_t t = 1; t <= depth; ++t) {
        const CsrMatrix mask = tfn_mask(t == 1 ? y_root : ys[t - 2]);
        const CscMatrix mask_csc = transpose_to_csc(mask);
        const CscMatrix yt_csc = transpose_to_csc(ys[t - 1]);
        const index_t cols = chain.width(t);

        std::vector<std::vector<index_t>> col_idx(cols);
        std::vector<std::vector<double>> col_val(cols);
        std::vector<double> col_obj(stats ? cols : 0, 0.0);
        std::atomic<uint64_t> empty_cols{0}, total_active{0}, solver_iters{0};

        parallel_for(0, cols, workers, [&](int tid, uint64_t l) {
            const index_t child = static_cast<index_t>(l);
            const index_t parent = chain.parent(t, child);
            auto active = mask_csc.col_indices(parent);
            auto positives = yt_csc.col_indices(child);

            std::vector<int8_t> signs(active.size(), -1);
            size_t pi = 0;
            for (size_t a = 0; a < active.size(); ++a) {
                while (pi < positives.size() && positives[pi] < active[a]) ++pi;
                if (pi < positives.size() && positives[pi] == active[a]) signs[a] = 1;
            }

            SolverParams sp;
            sp.lambda = config.lambda;
            sp.loss = config.loss;
            sp.max_iters = config.solver_max_iters;
            sp.tol = config.solver_tol;
            sp.seed = mix_seed(config.seed, t, l);
            auto res = solve_binary(X, active, signs, sp, wbuf[tid]);

            if (res.empty_active_set) empty_cols.fetch_add(1, std::memory_order_relaxed);
            total_active.fetch_add(active.size(), std::memory_order_relaxed);
            solver_iters.fetch_add(res.iters, std::memory_order_relaxed);
            if (stats) {
                col_obj[child] =
                    primal_objective(X, active, signs, config.lambda, config.loss, wbuf[tid]);
            }

            // prune immediately: keep |w| > epsilon. The solution's support is
            // confined to features of the active rows, so only scan those.
            std::vector<index_t> support;
            for (index_t row : active) {
                auto idx = X.row_indices(row);
                support.insert(support.end(), idx.begin(), idx.end());
            }
            std::sort(support.begin(), support.end());
            support.erase(std::unique(support.begin(), support.end()), support.end());
            auto& ci = col_idx[child];
            auto& cv = col_val[child];
            const auto& w = wbuf[tid];
            for (index_t f : support) {
                if (std::fabs(w[f]) > config.prune_epsilon) {
                    ci.push_back(f);
                    cv.push_back(w[f]);
                }
            }
        });

        CscMatrix& W = weights[t - 1];
        W.rows = X.cols;
        W.cols = cols;
        W.colptr.assign(static_cast<size_t>(cols) + 1, 0);
        for (index_t c = 0; c < cols; ++c) W.colptr[c + 1] = W.colptr[c] + col_idx[c].size();
        W.indices.reserve(W.colptr.back());
        W.values.reserve(W.colptr.back());
        for (index_t c = 0; c < cols; ++c) {
            W.indices.insert(W.indices.end(), col_idx[c].begin(), col_idx[c].end());
            W.values.insert(W.values.end(), col_val[c].begin(), col_val[c].end());
            col_idx[c].clear();
            col_idx[c].shrink_to_fit();
            col_val[c].clear();
            col_val[c].shrink_to_fit();
        }

        if (stats) {
            auto& st = (*stats)[t - 1];
            st.columns = cols;
            st.empty_columns = empty_cols.load();
            st.total_active = total_active.load();
            st.solver_iters = solver_iters.load();
            st.nnz = W.nnz();
            for (double o : col_obj) st.objective += o;  // fixed order, thread-independent
        }
    }
    return weights;
}

void prune(LayeredWeights& weights, double epsilon) {
    if (epsilon < 0.0) throw InvalidArgError("prune: epsilon must be >= 0");
    for (CscMatrix& W : weights) {
        CscMatrix out;
        out.rows = W.rows;
        out.cols = W.cols;
        out.colptr.assign(static_cast<size_t>(W.cols) + 1, 0);
        out.indices.reserve(W.nnz());
        out.values.reserve(W.nnz());
        for (index_t c = 0; c < W.cols; ++c) {
            auto idx = W.col_indices(c);
            auto val = W.col_values(c);
            for (size_t i = 0; i < idx.size(); ++i) {
                if (std::fabs(val[i]) > epsilon) {
                    out.indices.push_back(idx[i]);
                    out.values.push_back(val[i]);
                }
            }
            out.colptr[c + 1] = out.indices.size();
        }
        out.indices.shrink_to_fit();
        out.values.shrink_to_fit();
        W = std::move(out);
    }
}

uint64_t total_nnz(const LayeredWeights& weights) {
    uint64_t n = 0;
    for (const auto& W : weights) n += W.nnz();
    return n;
}

}  // namespace treematch
