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
#include <span>
#include <vector>

#include "treematch/sparse.hpp"

namespace treematch {

enum class Loss : uint8_t { SquaredHinge = 0, Logistic = 1 };

struct SolverParams {
    double lambda = 1.0;  // L2 regularization coefficient (> 0)
    Loss loss = Loss::SquaredHinge;
    uint32_t max_iters = 100;
    double tol = 0.1;  // stop when max - min projected gradient falls below
    uint64_t seed = 0;  // epoch permutation seed
};

struct SolverResult {
    uint32_t iters = 0;
    bool empty_active_set = false;
};

// Dual coordinate descent for the binary subproblem over the active rows of X
//
//   min_w  sum_i L(y_i, w.x_i) + (lambda/2) ||w||^2
//
// with L the squared hinge (or logistic) loss and y_i in {-1, +1} given by
// `signs`, aligned with `active`. Writes the dense solution into w (resized
// to X.cols and zeroed here). An empty active set yields the zero vector and
// sets empty_active_set.
SolverResult solve_binary(const CsrMatrix& X, std::span<const index_t> active,
                          std::span<const int8_t> signs, const SolverParams& params,
                          std::vector<double>& w);

// Primal objective of the problem above at w; shared by training statistics
// and the solver tests.
double primal_objective(const CsrMatrix& X, std::span<const index_t> active,
                        std::span<const int8_t> signs, double lambda, Loss loss,
                        std::span<const double> w);

}  // namespace treematch
