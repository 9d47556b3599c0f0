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
#include <string>
#include <vector>

#include "treematch/sparse.hpp"

namespace treematch {

// Label tree topology as the list of cluster indicator matrices C(1..D),
// each stored as a child->parent id array. Layer t has K_t nodes; K_0 = 1
// (the implicit root) and K_D = L (the labels themselves). Immutable after
// construction.
class ClusterChain {
public:
    ClusterChain() = default;
    explicit ClusterChain(std::vector<std::vector<index_t>> parents);

    uint32_t depth() const { return static_cast<uint32_t>(parents_.size()); }
    index_t num_labels() const { return width(depth()); }

    // Node count K_t at layer t in [1, D].
    index_t width(uint32_t layer) const { return static_cast<index_t>(parents_[layer - 1].size()); }

    // Parent id (at layer t-1) of a node at layer t.
    index_t parent(uint32_t layer, index_t node) const { return parents_[layer - 1][node]; }

    // Children of a node at layer `layer - 1`, listed ascending.
    std::span<const index_t> children(uint32_t layer, index_t parent_node) const {
        const auto& off = child_offsets_[layer - 1];
        const auto& ids = child_ids_[layer - 1];
        return {ids.data() + off[parent_node], ids.data() + off[parent_node + 1]};
    }

    index_t max_width() const;
    index_t max_children() const;  // over all layers and parents

    // Throws InvalidArgError when any structural invariant fails: one parent
    // per node, parents in range, child counts per parent differing by more
    // than one within a layer, or an empty parent.
    void validate() const;

    void save(const std::string& path) const;
    static ClusterChain load(const std::string& path);

    bool operator==(const ClusterChain& other) const { return parents_ == other.parents_; }

private:
    std::vector<std::vector<index_t>> parents_;       // [t-1][node] -> parent
    std::vector<std::vector<offset_t>> child_offsets_;  // adjacency per layer
    std::vector<std::vector<index_t>> child_ids_;

    void build_adjacency();
};

// Planned layer widths K_1..K_D for L labels under branching B and leaf
// capacity max_leaf: D = max(1, ceil(log_B(L / max_leaf)) + 1) computed in
// integer arithmetic, K_t = min(B^t, L) for t < D, K_D = L.
std::vector<uint64_t> plan_layer_widths(uint64_t num_labels, uint32_t branching, uint32_t max_leaf);

}  // namespace treematch
