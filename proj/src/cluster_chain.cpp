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

#include "treematch/cluster_chain.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "treematch/ioutil.hpp"

namespace treematch {

ClusterChain::ClusterChain(std::vector<std::vector<index_t>> parents) : parents_(std::move(parents)) {
    if (parents_.empty()) throw InvalidArgError("ClusterChain: no layers");
    build_adjacency();
    validate();
}

void ClusterChain::build_adjacency() {
    child_offsets_.clear();
    child_ids_.clear();
    child_offsets_.reserve(parents_.size());
    child_ids_.reserve(parents_.size());
    for (size_t t = 0; t < parents_.size(); ++t) {
        size_t parent_count = t == 0 ? 1 : parents_[t - 1].size();
        std::vector<offset_t> off(parent_count + 1, 0);
        for (index_t p : parents_[t]) {
            if (p >= parent_count) throw InvalidArgError("ClusterChain: parent id out of range");
            off[p + 1] += 1;
        }
        for (size_t i = 0; i < parent_count; ++i) off[i + 1] += off[i];
        std::vector<index_t> ids(parents_[t].size());
        std::vector<offset_t> cursor(off.begin(), off.end() - 1);
        for (index_t node = 0; node < parents_[t].size(); ++node) {
            ids[cursor[parents_[t][node]]++] = node;
        }
        child_offsets_.push_back(std::move(off));
        child_ids_.push_back(std::move(ids));
    }
}

index_t ClusterChain::max_width() const {
    size_t w = 0;
    for (const auto& layer : parents_) w = std::max(w, layer.size());
    return static_cast<index_t>(w);
}

index_t ClusterChain::max_children() const {
    offset_t best = 0;
    for (const auto& off : child_offsets_) {
        for (size_t p = 0; p + 1 < off.size(); ++p) best = std::max(best, off[p + 1] - off[p]);
    }
    return static_cast<index_t>(best);
}

void ClusterChain::validate() const {
    for (size_t t = 0; t < parents_.size(); ++t) {
        const auto& off = child_offsets_[t];
        offset_t lo = UINT64_MAX, hi = 0;
        for (size_t p = 0; p + 1 < off.size(); ++p) {
            offset_t c = off[p + 1] - off[p];
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        if (lo == 0) throw InvalidArgError("ClusterChain: empty cluster at layer " + std::to_string(t + 1));
        if (hi - lo > 1)
            throw InvalidArgError("ClusterChain: unbalanced children at layer " + std::to_string(t + 1));
        if (parents_[t].empty()) throw InvalidArgError("ClusterChain: empty layer");
    }
}

namespace {
constexpr char kChainMagic[8] = {'T', 'M', 'C', 'H', 'N', '0', '0', '1'};
}

void ClusterChain::save(const std::string& path) const {
    ensure_parent_dir(path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kChainMagic, 8);
    uint32_t d = depth();
    os.write(reinterpret_cast<const char*>(&d), sizeof(d));
    for (const auto& layer : parents_) {
        uint64_t k = layer.size();
        os.write(reinterpret_cast<const char*>(&k), sizeof(k));
        os.write(reinterpret_cast<const char*>(layer.data()),
                 static_cast<std::streamsize>(layer.size() * sizeof(index_t)));
    }
    if (!os) throw IoError("write failed: " + path);
}

ClusterChain ClusterChain::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kChainMagic, 8) != 0) throw FormatError("bad magic in " + path);
    uint32_t d = 0;
    is.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!is || d == 0) throw FormatError("bad depth in " + path);
    std::vector<std::vector<index_t>> parents(d);
    for (uint32_t t = 0; t < d; ++t) {
        uint64_t k = 0;
        is.read(reinterpret_cast<char*>(&k), sizeof(k));
        if (!is || k == 0) throw FormatError("bad layer size in " + path);
        parents[t].resize(k);
        is.read(reinterpret_cast<char*>(parents[t].data()),
                static_cast<std::streamsize>(k * sizeof(index_t)));
        if (!is) throw FormatError("truncated layer in " + path);
    }
    return ClusterChain(std::move(parents));
}

std::vector<uint64_t> plan_layer_widths(uint64_t num_labels, uint32_t branching, uint32_t max_leaf) {
    if (num_labels == 0) throw InvalidArgError("plan_layer_widths: no labels");
    if (branching < 2) throw InvalidArgError("plan_layer_widths: branching must be >= 2");
    if (max_leaf < 1) throw InvalidArgError("plan_layer_widths: max_leaf must be >= 1");
    // smallest e >= 0 with L <= max_leaf * B^e (saturating, overflow-proof)
    auto sat_mul = [](uint64_t a, uint32_t b) {
        return a > UINT64_MAX / b ? UINT64_MAX : a * b;
    };
    uint32_t e = 0;
    uint64_t capacity = max_leaf;
    while (capacity < num_labels) {
        capacity = sat_mul(capacity, branching);
        ++e;
    }
    uint32_t depth = e + 1;
    std::vector<uint64_t> widths;
    widths.reserve(depth);
    uint64_t w = 1;
    for (uint32_t t = 1; t < depth; ++t) {
        w = sat_mul(w, branching);
        widths.push_back(std::min(w, num_labels));
    }
    widths.push_back(num_labels);
    return widths;
}

}  // namespace treematch
