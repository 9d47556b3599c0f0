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

#include "treematch/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treematch/rng.hpp"

namespace treematch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sparse_dot_dense(const CsrMatrix& X, index_t row, const std::vector<double>& w) {
    double s = 0.0;
    auto idx = X.row_indices(row);
    auto val = X.row_values(row);
    for (size_t i = 0; i < idx.size(); ++i) s += w[idx[i]] * val[i];
    return s;
}

inline void axpy_row(double a, const CsrMatrix& X, index_t row, std::vector<double>& w) {
    auto idx = X.row_indices(row);
    auto val = X.row_values(row);
    for (size_t i = 0; i < idx.size(); ++i) w[idx[i]] += a * val[i];
}

// L2-regularized squared-hinge SVM, dual coordinate descent with shrinking.
// The primal is scaled by 1/lambda into the standard C-form with C = 1/lambda
// (so the dual diagonal is lambda/2 and alpha is unbounded above).
SolverResult solve_sqhinge_dual(const CsrMatrix& X, std::span<const index_t> active,
                                std::span<const int8_t> signs, const SolverParams& params,
                                std::vector<double>& w) {
    const size_t m = active.size();
    const double diag = params.lambda / 2.0;
    Rng rng(params.seed);

    std::vector<double> alpha(m, 0.0);
    std::vector<double> qd(m);
    std::vector<size_t> index(m);
    for (size_t s = 0; s < m; ++s) {
        index[s] = s;
        double xx = 0.0;
        auto val = X.row_values(active[s]);
        for (double v : val) xx += v * v;
        qd[s] = diag + xx;
    }

    // only the lower bound can shrink here: squared hinge has no alpha cap
    double pgmax_old = kInf;
    size_t active_size = m;
    SolverResult res;
    while (res.iters < params.max_iters) {
        double pgmax_new = -kInf, pgmin_new = kInf;
        shuffle_range(index.begin(), index.begin() + static_cast<ptrdiff_t>(active_size), rng);

        for (size_t s = 0; s < active_size; ++s) {
            size_t i = index[s];
            index_t row = active[i];
            double yi = signs[i];
            double g = yi * sparse_dot_dense(X, row, w) - 1.0 + alpha[i] * diag;

            double pg = 0.0;
            if (alpha[i] == 0.0) {
                if (g > pgmax_old) {
                    // shrink: this coordinate is pinned at its bound for now
                    --active_size;
                    std::swap(index[s], index[active_size]);
                    --s;
                    continue;
                }
                if (g < 0.0) pg = g;
            } else {
                pg = g;
            }

            pgmax_new = std::max(pgmax_new, pg);
            pgmin_new = std::min(pgmin_new, pg);

            if (std::fabs(pg) > 1.0e-12) {
                double alpha_old = alpha[i];
                alpha[i] = std::max(alpha[i] - g / qd[i], 0.0);
                axpy_row((alpha[i] - alpha_old) * yi, X, row, w);
            }
        }

        res.iters += 1;
        if (pgmax_new - pgmin_new <= params.tol) {
            if (active_size == m) break;
            active_size = m;
            pgmax_old = kInf;
            continue;
        }
        pgmax_old = pgmax_new <= 0.0 ? kInf : pgmax_new;
    }
    return res;
}

// L2-regularized logistic regression, dual coordinate descent with a
// per-coordinate Newton inner loop.
SolverResult solve_logistic_dual(const CsrMatrix& X, std::span<const index_t> active,
                                 std::span<const int8_t> signs, const SolverParams& params,
                                 std::vector<double>& w) {
    const size_t m = active.size();
    const double upper = 1.0 / params.lambda;  // C
    const size_t max_inner = 100;
    double innereps = 1e-2;
    const double innereps_min = std::min(1e-8, params.tol);
    Rng rng(params.seed);

    std::vector<double> alpha(2 * m);
    std::vector<double> xtx(m);
    std::vector<size_t> index(m);
    for (size_t s = 0; s < m; ++s) {
        index[s] = s;
        alpha[2 * s] = std::min(0.001 * upper, 1e-8);
        alpha[2 * s + 1] = upper - alpha[2 * s];
        double xx = 0.0;
        auto val = X.row_values(active[s]);
        for (double v : val) xx += v * v;
        xtx[s] = xx;
        axpy_row(signs[s] * alpha[2 * s], X, active[s], w);
    }

    SolverResult res;
    while (res.iters < params.max_iters) {
        shuffle_range(index.begin(), index.end(), rng);
        size_t newton_total = 0;
        double gmax = 0.0;
        for (size_t s = 0; s < m; ++s) {
            size_t i = index[s];
            index_t row = active[i];
            double yi = signs[i];
            double a = xtx[i];
            double b = yi * sparse_dot_dense(X, row, w);

            size_t ind1 = 2 * i, ind2 = 2 * i + 1;
            double sign = 1.0;
            if (0.5 * a * (alpha[ind2] - alpha[ind1]) + b < 0.0) {
                std::swap(ind1, ind2);
                sign = -1.0;
            }

            double alpha_old = alpha[ind1];
            double z = alpha_old;
            if (upper - z < 0.5 * upper) z = 0.1 * z;
            double gp = a * (z - alpha_old) + sign * b + std::log(z / (upper - z));
            gmax = std::max(gmax, std::fabs(gp));

            size_t inner = 0;
            while (inner <= max_inner) {
                if (std::fabs(gp) < innereps) break;
                double gpp = a + upper / (upper - z) / z;
                double zn = z - gp / gpp;
                if (zn <= 0.0) {
                    z *= 0.1;
                } else {
                    z = zn;
                }
                gp = a * (z - alpha_old) + sign * b + std::log(z / (upper - z));
                ++newton_total;
                ++inner;
            }
            if (inner > 0) {
                alpha[ind1] = z;
                alpha[ind2] = upper - z;
                axpy_row(sign * (z - alpha_old) * yi, X, row, w);
            }
        }
        res.iters += 1;
        if (gmax < params.tol) break;
        if (newton_total <= m / 10) innereps = std::max(innereps_min, 0.1 * innereps);
    }
    return res;
}

}  // namespace

SolverResult solve_binary(const CsrMatrix& X, std::span<const index_t> active,
                          std::span<const int8_t> signs, const SolverParams& params,
                          std::vector<double>& w) {
    if (params.lambda <= 0.0) throw InvalidArgError("solve_binary: lambda must be > 0");
    if (active.size() != signs.size()) throw InvalidArgError("solve_binary: active/signs size mismatch");
    w.assign(X.cols, 0.0);
    if (active.empty()) {
        SolverResult res;
        res.empty_active_set = true;
        return res;
    }
    if (params.loss == Loss::SquaredHinge) return solve_sqhinge_dual(X, active, signs, params, w);
    return solve_logistic_dual(X, active, signs, params, w);
}

double primal_objective(const CsrMatrix& X, std::span<const index_t> active,
                        std::span<const int8_t> signs, double lambda, Loss loss,
                        std::span<const double> w) {
    double obj = 0.0;
    for (size_t s = 0; s < active.size(); ++s) {
        double wx = 0.0;
        auto idx = X.row_indices(active[s]);
        auto val = X.row_values(active[s]);
        for (size_t i = 0; i < idx.size(); ++i) wx += w[idx[i]] * val[i];
        double margin = signs[s] * wx;
        if (loss == Loss::SquaredHinge) {
            double slack = std::max(0.0, 1.0 - margin);
            obj += slack * slack;
        } else {
            obj += margin > 0.0 ? std::log1p(std::exp(-margin))
                                : -margin + std::log1p(std::exp(margin));
        }
    }
    double norm2 = 0.0;
    for (double v : w) norm2 += v * v;
    return obj + 0.5 * lambda * norm2;
}

}  // namespace treematch
