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

#include "treematch/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "treematch/ioutil.hpp"

namespace treematch {

void CsrMatrix::append_row(std::span<const index_t> idx, std::span<const double> val) {
    if (idx.size() != val.size()) throw InvalidArgError("append_row: index/value size mismatch");
    for (size_t i = 0; i + 1 < idx.size(); ++i) {
        if (idx[i] >= idx[i + 1]) throw InvalidArgError("append_row: indices not strictly ascending");
    }
    if (!idx.empty() && idx.back() >= cols) throw InvalidArgError("append_row: index out of range");
    indices.insert(indices.end(), idx.begin(), idx.end());
    values.insert(values.end(), val.begin(), val.end());
    indptr.push_back(indices.size());
    rows += 1;
}

void CsrMatrix::append_row(const SparseVector& v) {
    if (v.dim != cols) throw InvalidArgError("append_row: vector dim does not match matrix cols");
    append_row(v.indices, v.values);
}

SparseVector CsrMatrix::row_copy(index_t r) const {
    SparseVector v;
    v.dim = cols;
    auto idx = row_indices(r);
    auto val = row_values(r);
    v.indices.assign(idx.begin(), idx.end());
    v.values.assign(val.begin(), val.end());
    return v;
}

void CsrMatrix::l2_normalize_rows() {
    for (index_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (offset_t i = indptr[r]; i < indptr[r + 1]; ++i) s += values[i] * values[i];
        if (s > 0.0) {
            double inv = 1.0 / std::sqrt(s);
            for (offset_t i = indptr[r]; i < indptr[r + 1]; ++i) values[i] *= inv;
        }
    }
}

CscMatrix transpose_to_csc(const CsrMatrix& m) {
    CscMatrix out;
    out.rows = m.rows;
    out.cols = m.cols;
    out.colptr.assign(static_cast<size_t>(m.cols) + 1, 0);
    for (index_t c : m.indices) out.colptr[static_cast<size_t>(c) + 1] += 1;
    for (size_t c = 0; c < m.cols; ++c) out.colptr[c + 1] += out.colptr[c];
    out.indices.resize(m.nnz());
    out.values.resize(m.nnz());
    std::vector<offset_t> cursor(out.colptr.begin(), out.colptr.end() - 1);
    for (index_t r = 0; r < m.rows; ++r) {
        for (offset_t i = m.indptr[r]; i < m.indptr[r + 1]; ++i) {
            offset_t dst = cursor[m.indices[i]]++;
            out.indices[dst] = r;
            out.values[dst] = m.values[i];
        }
    }
    return out;
}

double dot(const SparseVector& a, const SparseVector& b) {
    double s = 0.0;
    size_t i = 0, j = 0;
    while (i < a.indices.size() && j < b.indices.size()) {
        if (a.indices[i] == b.indices[j]) {
            s += a.values[i] * b.values[j];
            ++i;
            ++j;
        } else if (a.indices[i] < b.indices[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return s;
}

namespace {

constexpr char kCsrMagic[8] = {'T', 'M', 'C', 'S', 'R', '0', '0', '1'};
constexpr char kCscMagic[8] = {'T', 'M', 'C', 'S', 'C', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_vec(std::ofstream& os, const std::vector<T>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_pod(std::ifstream& is, T& v, const std::string& path) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError("truncated file: " + path);
}

template <typename T>
void read_vec(std::ifstream& is, std::vector<T>& v, size_t n, const std::string& path) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw FormatError("truncated file: " + path);
}

template <typename Mat>
void save_compressed(const Mat& m, const std::vector<offset_t>& ptr, const char* magic,
                     const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(magic, 8);
    write_pod(os, static_cast<uint64_t>(m.rows));
    write_pod(os, static_cast<uint64_t>(m.cols));
    write_pod(os, static_cast<uint64_t>(m.nnz()));
    write_vec(os, ptr);
    write_vec(os, m.indices);
    write_vec(os, m.values);
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace

void save_csr(const CsrMatrix& m, const std::string& path) { save_compressed(m, m.indptr, kCsrMagic, path); }
void save_csc(const CscMatrix& m, const std::string& path) { save_compressed(m, m.colptr, kCscMagic, path); }

namespace {

void load_header(std::ifstream& is, const char* magic, const std::string& path, uint64_t& rows,
                 uint64_t& cols, uint64_t& nnz) {
    char got[8];
    is.read(got, 8);
    if (!is || std::memcmp(got, magic, 8) != 0) throw FormatError("bad magic in " + path);
    read_pod(is, rows, path);
    read_pod(is, cols, path);
    read_pod(is, nnz, path);
}

}  // namespace

CsrMatrix load_csr(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    uint64_t rows, cols, nnz;
    load_header(is, kCsrMagic, path, rows, cols, nnz);
    CsrMatrix m;
    m.rows = static_cast<index_t>(rows);
    m.cols = static_cast<index_t>(cols);
    read_vec(is, m.indptr, static_cast<size_t>(rows) + 1, path);
    read_vec(is, m.indices, static_cast<size_t>(nnz), path);
    read_vec(is, m.values, static_cast<size_t>(nnz), path);
    if (m.indptr.back() != nnz) throw FormatError("inconsistent indptr in " + path);
    return m;
}

CscMatrix load_csc(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    uint64_t rows, cols, nnz;
    load_header(is, kCscMagic, path, rows, cols, nnz);
    CscMatrix m;
    m.rows = static_cast<index_t>(rows);
    m.cols = static_cast<index_t>(cols);
    read_vec(is, m.colptr, static_cast<size_t>(cols) + 1, path);
    read_vec(is, m.indices, static_cast<size_t>(nnz), path);
    read_vec(is, m.values, static_cast<size_t>(nnz), path);
    if (m.colptr.back() != nnz) throw FormatError("inconsistent colptr in " + path);
    return m;
}

LabeledMatrix load_svmlight(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw FormatError(path + ": missing header line");
    uint64_t n = 0, d = 0, L = 0;
    {
        std::istringstream hs(line);
        if (!(hs >> n >> d >> L)) throw FormatError(path + ":1: expected '<rows> <cols> <labels>'");
    }
    LabeledMatrix out;
    out.features.cols = static_cast<index_t>(d);
    out.labels.cols = static_cast<index_t>(L);
    std::vector<index_t> fidx, lidx;
    std::vector<double> fval, lval;
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        fidx.clear();
        fval.clear();
        lidx.clear();
        lval.clear();
        size_t pos = 0;
        // label list runs to the first space (may be empty)
        size_t sp = line.find_first_of(" \t");
        std::string label_part = line.substr(0, sp);
        if (label_part.find(':') != std::string::npos) {
            // no labels on this line; everything is features
            label_part.clear();
            sp = 0;
        }
        if (!label_part.empty()) {
            size_t start = 0;
            while (start <= label_part.size()) {
                size_t comma = label_part.find(',', start);
                std::string tok = label_part.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                if (!tok.empty()) {
                    char* endp = nullptr;
                    unsigned long v = std::strtoul(tok.c_str(), &endp, 10);
                    if (endp == tok.c_str() || *endp != '\0' || v >= L)
                        throw FormatError(path + ":" + std::to_string(lineno) + ": bad label '" + tok + "'");
                    lidx.push_back(static_cast<index_t>(v));
                }
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        pos = (sp == std::string::npos) ? line.size() : sp;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos >= line.size()) break;
            size_t colon = line.find(':', pos);
            if (colon == std::string::npos)
                throw FormatError(path + ":" + std::to_string(lineno) + ": expected feature:value");
            char* endp = nullptr;
            unsigned long f = std::strtoul(line.c_str() + pos, &endp, 10);
            if (endp != line.c_str() + colon || f >= d)
                throw FormatError(path + ":" + std::to_string(lineno) + ": bad feature id");
            double v = std::strtod(line.c_str() + colon + 1, &endp);
            if (endp == line.c_str() + colon + 1)
                throw FormatError(path + ":" + std::to_string(lineno) + ": bad feature value");
            if (!fidx.empty() && f <= fidx.back())
                throw FormatError(path + ":" + std::to_string(lineno) + ": feature ids must be strictly ascending");
            if (v != 0.0) {
                fidx.push_back(static_cast<index_t>(f));
                fval.push_back(v);
            }
            pos = static_cast<size_t>(endp - line.c_str());
        }
        std::sort(lidx.begin(), lidx.end());
        lidx.erase(std::unique(lidx.begin(), lidx.end()), lidx.end());
        lval.assign(lidx.size(), 1.0);
        out.features.append_row(fidx, fval);
        out.labels.append_row(lidx, lval);
    }
    if (out.features.rows != n)
        throw FormatError(path + ": header declares " + std::to_string(n) + " rows, found " +
                          std::to_string(out.features.rows));
    return out;
}

void save_svmlight(const LabeledMatrix& data, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << data.features.rows << ' ' << data.features.cols << ' ' << data.labels.cols << '\n';
    char buf[64];
    for (index_t r = 0; r < data.features.rows; ++r) {
        auto lab = data.labels.row_indices(r);
        for (size_t i = 0; i < lab.size(); ++i) {
            if (i) os << ',';
            os << lab[i];
        }
        auto idx = data.features.row_indices(r);
        auto val = data.features.row_values(r);
        for (size_t i = 0; i < idx.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %u:%.17g", idx[i], val[i]);
            os << buf;
        }
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace treematch
