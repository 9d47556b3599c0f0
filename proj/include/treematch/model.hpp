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

#include <map>
#include <string>

#include "treematch/cluster_chain.hpp"
#include "treematch/trainer.hpp"
#include "treematch/vectorizer.hpp"

namespace treematch {

enum class Activation : uint8_t { Sigmoid = 0, L3Hinge = 1 };

Activation activation_from_string(const std::string& name);
std::string activation_to_string(Activation a);

// A complete retrieval model: vectorizer reference, tree topology, layered
// weights, the activation used at scoring time and the default beam width.
// Immutable at inference time and shareable across threads.
struct Model {
    Vocabulary vocab;
    ClusterChain chain;
    LayeredWeights weights;
    Activation activation = Activation::L3Hinge;
    uint32_t default_beam = 10;
    double prune_epsilon = 0.0;  // effective threshold already applied

    uint32_t depth() const { return chain.depth(); }
    index_t num_labels() const { return chain.num_labels(); }
    // Feature dimensionality; equals vocab.dim() on any validated model but
    // also holds for weight-only models used in tests and benchmarks.
    index_t dim() const { return weights.empty() ? vocab.dim() : weights[0].rows; }

    // Throws InvalidArgError when layer shapes disagree with the chain or
    // the vectorizer dimensionality.
    void validate() const;
};

using StringMap = std::map<std::string, std::string>;

// Model directory layout (all files versioned by magic):
//   manifest.json   format/version, shapes, activation, file hashes,
//                   config echo and input provenance
//   vocabulary.txt  TMVOCAB 1
//   chain.bin       TMCHN001
//   weights.<t>.csc TMCSC001, t = 1..D
void save_model(const Model& model, const std::string& dir, const StringMap& config_echo = {},
                const StringMap& inputs = {});

Model load_model(const std::string& dir);

// Parsed manifest extras for callers that need the echoed config.
StringMap load_model_config_echo(const std::string& dir);

}  // namespace treematch
