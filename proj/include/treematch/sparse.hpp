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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treematch/common.hpp"

namespace treematch {

using index_t = uint32_t;
using offset_t = uint64_t;

// One l2-normalizable feature vector: strictly ascending indices, no stored
// zeros, values aligned with indices.
struct SparseVector {
    index_t dim = 0;
    std::vector<index_t> indices;
    std::vector<double> values;

    size_t nnz() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }

    // Divides by the Euclidean norm; empty vectors stay empty.
    void l2_normalize() {
        double n = norm();
        if (n > 0.0) {
            for (double& v : values) v /= n;
        }
    }

    bool operator==(const SparseVector&) const = default;
};

struct CsrMatrix {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<offset_t> indptr;  // size rows + 1
    std::vector<index_t> indices;  // column ids, ascending within each row
    std::vector<double> values;

    CsrMatrix() : indptr(1, 0) {}

    offset_t nnz() const { return indptr.empty() ? 0 : indptr.back(); }

    std::span<const index_t> row_indices(index_t r) const {
        return {indices.data() + indptr[r], indices.data() + indptr[r + 1]};
    }
    std::span<const double> row_values(index_t r) const {
        return {values.data() + indptr[r], values.data() + indptr[r + 1]};
    }
    size_t row_nnz(index_t r) const { return static_cast<size_t>(indptr[r + 1] - indptr[r]); }

    void append_row(std::span<const index_t> idx, std::span<const double> val);
    void append_row(const SparseVector& v);

    SparseVector row_copy(index_t r) const;

    // Divides every row by its Euclidean norm; all-zero rows are left alone.
    void l2_normalize_rows();

    bool operator==(const CsrMatrix&) const = default;
};

struct CscMatrix {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<offset_t> colptr;  // size cols + 1
    std::vector<index_t> indices;  // row ids, ascending within each column
    std::vector<double> values;

    CscMatrix() : colptr(1, 0) {}

    offset_t nnz() const { return colptr.empty() ? 0 : colptr.back(); }

    std::span<const index_t> col_indices(index_t c) const {
        return {indices.data() + colptr[c], indices.data() + colptr[c + 1]};
    }
    std::span<const double> col_values(index_t c) const {
        return {values.data() + colptr[c], values.data() + colptr[c + 1]};
    }
    size_t col_nnz(index_t c) const { return static_cast<size_t>(colptr[c + 1] - colptr[c]); }

    bool operator==(const CscMatrix&) const = default;
};

// Column-major view of a CSR matrix (counting sort by column; stable, so rows
// stay ascending within each column).
CscMatrix transpose_to_csc(const CsrMatrix& m);

double dot(const SparseVector& a, const SparseVector& b);

// Binary container format shared by CSR and CSC files (magic differs).
void save_csr(const CsrMatrix& m, const std::string& path);
CsrMatrix load_csr(const std::string& path);
void save_csc(const CscMatrix& m, const std::string& path);
CscMatrix load_csc(const std::string& path);

// SVMLight-style multi-label text format:
//   line 1:  <rows> <cols> <labels>
//   line i:  l1,l2,...  f:v f:v ...     (label list may be empty)
// Feature ids must be ascending within a line.
struct LabeledMatrix {
    CsrMatrix features;  // rows x cols
    CsrMatrix labels;    // rows x num_labels, binary (values 1.0)
};
LabeledMatrix load_svmlight(const std::string& path);
void save_svmlight(const LabeledMatrix& data, const std::string& path);

}  // namespace treematch
