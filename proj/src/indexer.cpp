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

#include "treematch/indexer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treematch/parallel.hpp"
#include "treematch/rng.hpp"

namespace treematch {

CsrMatrix pifa_embeddings(const CsrMatrix& X, const CsrMatrix& Y, int threads) {
    if (X.rows != Y.rows) throw InvalidArgError("pifa_embeddings: X and Y row counts differ");
    const index_t L = Y.cols;
    const index_t d = X.cols;
    CscMatrix ycsc = transpose_to_csc(Y);

    std::vector<std::vector<index_t>> out_idx(L);
    std::vector<std::vector<double>> out_val(L);

    int workers = resolve_threads(threads);
    std::vector<std::vector<double>> dense_buf(workers, std::vector<double>(d, 0.0));
    parallel_for(0, L, workers, [&](int tid, uint64_t l) {
        auto rows = ycsc.col_indices(static_cast<index_t>(l));
        auto weights = ycsc.col_values(static_cast<index_t>(l));
        if (rows.empty()) return;
        auto& dense = dense_buf[tid];
        std::vector<index_t> touched;
        for (size_t r = 0; r < rows.size(); ++r) {
            auto idx = X.row_indices(rows[r]);
            auto val = X.row_values(rows[r]);
            for (size_t i = 0; i < idx.size(); ++i) {
                if (dense[idx[i]] == 0.0) touched.push_back(idx[i]);
                dense[idx[i]] += weights[r] * val[i];
            }
        }
        std::sort(touched.begin(), touched.end());
        double norm2 = 0.0;
        for (index_t f : touched) norm2 += dense[f] * dense[f];
        double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        auto& oi = out_idx[l];
        auto& ov = out_val[l];
        for (index_t f : touched) {
            if (dense[f] != 0.0) {
                oi.push_back(f);
                ov.push_back(dense[f] * inv);
            }
            dense[f] = 0.0;
        }
    });

    CsrMatrix Z;
    Z.cols = d;
    for (index_t l = 0; l < L; ++l) Z.append_row(out_idx[l], out_val[l]);
    return Z;
}

namespace {

struct Candidate {
    double cos;
    index_t row;
    index_t group;
};

// Dense centroid bank over a (usually compacted) feature space.
struct Centroids {
    index_t groups;
    index_t dim;
    std::vector<double> data;

    Centroids(index_t g, index_t d) : groups(g), dim(d), data(static_cast<size_t>(g) * d, 0.0) {}
    double* at(index_t g) { return data.data() + static_cast<size_t>(g) * dim; }
    const double* at(index_t g) const { return data.data() + static_cast<size_t>(g) * dim; }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    void add_row(index_t g, const CsrMatrix& m, index_t r) {
        double* c = at(g);
        auto idx = m.row_indices(r);
        auto val = m.row_values(r);
        for (size_t i = 0; i < idx.size(); ++i) c[idx[i]] += val[i];
    }

    void normalize(index_t g) {
        double* c = at(g);
        double s = 0.0;
        for (index_t i = 0; i < dim; ++i) s += c[i] * c[i];
        if (s > 0.0) {
            double inv = 1.0 / std::sqrt(s);
            for (index_t i = 0; i < dim; ++i) c[i] *= inv;
        }
    }

    double cosine(index_t g, const CsrMatrix& m, index_t r) const {
        const double* c = at(g);
        double s = 0.0;
        auto idx = m.row_indices(r);
        auto val = m.row_values(r);
        for (size_t i = 0; i < idx.size(); ++i) s += c[idx[i]] * val[i];
        return s;
    }
};

}  // namespace

std::vector<index_t> balanced_spherical_kmeans(const CsrMatrix& rows, index_t groups,
                                               const KmeansParams& params, uint64_t seed,
                                               KmeansStats* stats) {
    const index_t m = rows.rows;
    if (groups < 1) throw InvalidArgError("balanced_spherical_kmeans: need at least one group");
    if (m < groups) throw InvalidArgError("balanced_spherical_kmeans: fewer rows than groups");

    std::vector<index_t> assign(m, 0);
    if (groups == 1) return assign;

    std::vector<index_t> nz, zr;
    for (index_t r = 0; r < m; ++r) (rows.row_nnz(r) > 0 ? nz : zr).push_back(r);

    std::vector<index_t> sizes(groups, 0);
    Rng rng(seed);

    if (!nz.empty()) {
        Centroids centroids(groups, rows.cols);
        // k-means++ seeding on cosine distance
        std::vector<double> best_cos(nz.size(), -1.0);
        index_t first = static_cast<index_t>(rand_below(rng, nz.size()));
        centroids.add_row(0, rows, nz[first]);
        index_t seeds = std::min<index_t>(groups, static_cast<index_t>(nz.size()));
        for (index_t g = 1; g < seeds; ++g) {
            std::vector<double> w(nz.size());
            double total = 0.0;
            for (size_t i = 0; i < nz.size(); ++i) {
                double c = centroids.cosine(g - 1, rows, nz[i]);
                best_cos[i] = std::max(best_cos[i], c);
                double dist = std::max(0.0, 1.0 - best_cos[i]);
                w[i] = dist * dist;
                total += w[i];
            }
            size_t pick = total > 0.0 ? rand_weighted(rng, w, total)
                                      : (static_cast<size_t>(first) + g) % nz.size();
            centroids.add_row(g, rows, nz[pick]);
        }

        const index_t base = static_cast<index_t>(nz.size() / groups);
        const index_t extra = static_cast<index_t>(nz.size() % groups);
        std::vector<Candidate> cand;
        cand.reserve(nz.size() * static_cast<size_t>(groups));
        std::vector<double> cos(nz.size() * static_cast<size_t>(groups));

        double prev_obj = -std::numeric_limits<double>::infinity();
        for (uint32_t iter = 0; iter < std::max(1u, params.max_iters); ++iter) {
            double unconstrained = 0.0;
            cand.clear();
            for (size_t i = 0; i < nz.size(); ++i) {
                double best = -std::numeric_limits<double>::infinity();
                for (index_t g = 0; g < groups; ++g) {
                    double c = centroids.cosine(g, rows, nz[i]);
                    cos[i * groups + g] = c;
                    best = std::max(best, c);
                    cand.push_back({c, static_cast<index_t>(i), g});
                }
                unconstrained += best;
            }
            std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
                if (a.cos != b.cos) return a.cos > b.cos;
                if (a.row != b.row) return a.row < b.row;
                return a.group < b.group;
            });

            // greedy rank-ordered assignment under the balance constraint:
            // a group may grow to base+1 only while fewer than `extra` have
            std::fill(sizes.begin(), sizes.end(), 0);
            std::vector<index_t> local(nz.size(), groups);
            index_t full = 0;
            size_t placed = 0;
            for (const Candidate& c : cand) {
                if (placed == nz.size()) break;
                if (local[c.row] != groups) continue;
                index_t s = sizes[c.group];
                bool ok = s < base || (s == base && full < extra);
                if (!ok) continue;
                local[c.row] = c.group;
                sizes[c.group] += 1;
                if (sizes[c.group] == base + 1) full += 1;
                ++placed;
            }

            double obj = 0.0;
            for (size_t i = 0; i < nz.size(); ++i) obj += cos[i * groups + local[i]];
            obj /= static_cast<double>(nz.size());
            unconstrained /= static_cast<double>(nz.size());
            if (stats) {
                stats->unconstrained.push_back(unconstrained);
                stats->assigned.push_back(obj);
            }
            for (size_t i = 0; i < nz.size(); ++i) assign[nz[i]] = local[i];
            if (obj - prev_obj < params.tol) break;
            prev_obj = obj;

            centroids.zero();
            for (size_t i = 0; i < nz.size(); ++i) centroids.add_row(local[i], rows, nz[i]);
            for (index_t g = 0; g < groups; ++g) centroids.normalize(g);
        }
        std::fill(sizes.begin(), sizes.end(), 0);
        for (index_t r : nz) sizes[assign[r]] += 1;
    }

    // zero rows round-robin onto the currently smallest groups
    for (index_t r : zr) {
        index_t best = 0;
        for (index_t g = 1; g < groups; ++g) {
            if (sizes[g] < sizes[best]) best = g;
        }
        assign[r] = best;
        sizes[best] += 1;
    }
    return assign;
}

namespace {

// Rows of Z restricted to `members`, with feature ids compacted to the union
// of their nonzero columns. Keeps k-means centroid banks small on subtrees.
CsrMatrix gather_compact(const CsrMatrix& Z, std::span<const index_t> members) {
    std::vector<index_t> feats;
    for (index_t r : members) {
        auto idx = Z.row_indices(r);
        feats.insert(feats.end(), idx.begin(), idx.end());
    }
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
    CsrMatrix out;
    out.cols = static_cast<index_t>(feats.size());
    std::vector<index_t> remapped;
    for (index_t r : members) {
        auto idx = Z.row_indices(r);
        auto val = Z.row_values(r);
        remapped.clear();
        for (index_t f : idx) {
            remapped.push_back(static_cast<index_t>(
                std::lower_bound(feats.begin(), feats.end(), f) - feats.begin()));
        }
        out.append_row(remapped, val);
    }
    return out;
}

}  // namespace

ClusterChain build_tree(const CsrMatrix& Z, const TreeConfig& cfg) {
    const index_t L = Z.rows;
    if (L == 0) throw InvalidArgError("build_tree: empty label set");
    if (cfg.branching < 2) throw InvalidArgError("build_tree: branching must be >= 2");
    if (cfg.max_leaf < 1) throw InvalidArgError("build_tree: max_leaf must be >= 1");

    auto widths = plan_layer_widths(L, cfg.branching, cfg.max_leaf);
    const uint32_t depth = static_cast<uint32_t>(widths.size());

    std::vector<std::vector<index_t>> parents(depth);
    std::vector<index_t> elements(L);
    for (index_t i = 0; i < L; ++i) elements[i] = i;

    struct Range {
        offset_t begin, end;
    };
    std::vector<Range> groups{{0, L}};

    for (uint32_t layer = 1; layer < depth; ++layer) {
        std::vector<std::vector<Range>> child_ranges(groups.size());
        parallel_for(0, groups.size(), cfg.threads, [&](int, uint64_t p) {
            const Range g = groups[p];
            const index_t m = static_cast<index_t>(g.end - g.begin);
            const index_t fanout = std::min<index_t>(cfg.branching, m);
            std::span<index_t> slice(elements.data() + g.begin, m);
            std::vector<index_t> assign;
            if (fanout <= 1) {
                assign.assign(m, 0);
            } else if (m <= cfg.branching) {
                assign.resize(m);
                for (index_t i = 0; i < m; ++i) assign[i] = i;
            } else {
                CsrMatrix sub = gather_compact(Z, slice);
                assign = balanced_spherical_kmeans(sub, fanout, cfg.kmeans,
                                                   mix_seed(cfg.seed, layer, p));
            }
            // stable partition by child id
            std::vector<index_t> counts(fanout, 0);
            for (index_t a : assign) counts[a] += 1;
            std::vector<offset_t> starts(fanout + 1, 0);
            for (index_t c = 0; c < fanout; ++c) starts[c + 1] = starts[c] + counts[c];
            std::vector<index_t> reordered(m);
            std::vector<offset_t> cursor(starts.begin(), starts.end() - 1);
            for (index_t i = 0; i < m; ++i) reordered[cursor[assign[i]]++] = slice[i];
            std::copy(reordered.begin(), reordered.end(), slice.begin());
            auto& out = child_ranges[p];
            out.reserve(fanout);
            for (index_t c = 0; c < fanout; ++c) {
                out.push_back({g.begin + starts[c], g.begin + starts[c + 1]});
            }
        });

        std::vector<Range> next;
        auto& layer_parents = parents[layer - 1];
        for (size_t p = 0; p < child_ranges.size(); ++p) {
            for (const Range& r : child_ranges[p]) {
                layer_parents.push_back(static_cast<index_t>(p));
                next.push_back(r);
            }
        }
        groups = std::move(next);
        if (groups.size() != widths[layer - 1]) {
            throw InvalidArgError("build_tree: internal width mismatch at layer " +
                                  std::to_string(layer));
        }
    }

    // bottom layer: label -> leaf cluster
    auto& leaf_parents = parents[depth - 1];
    leaf_parents.assign(L, 0);
    for (size_t g = 0; g < groups.size(); ++g) {
        for (offset_t i = groups[g].begin; i < groups[g].end; ++i) {
            leaf_parents[elements[i]] = static_cast<index_t>(g);
        }
    }
    return ClusterChain(std::move(parents));
}

}  // namespace treematch
