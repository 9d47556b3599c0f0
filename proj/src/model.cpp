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

#include "treematch/model.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "treematch/ioutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace treematch {

Activation activation_from_string(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "l3-hinge") return Activation::L3Hinge;
    throw InvalidArgError("unknown activation '" + name + "' (expected sigmoid or l3-hinge)");
}

std::string activation_to_string(Activation a) {
    return a == Activation::Sigmoid ? "sigmoid" : "l3-hinge";
}

void Model::validate() const {
    if (weights.size() != chain.depth())
        throw InvalidArgError("model: weight layer count does not match chain depth");
    for (uint32_t t = 1; t <= chain.depth(); ++t) {
        const CscMatrix& W = weights[t - 1];
        if (W.cols != chain.width(t))
            throw InvalidArgError("model: layer " + std::to_string(t) + " has " +
                                  std::to_string(W.cols) + " columns, chain width is " +
                                  std::to_string(chain.width(t)));
        if (W.rows != vocab.dim())
            throw InvalidArgError("model: layer " + std::to_string(t) +
                                  " row count does not match vectorizer dim");
    }
}

namespace {

std::string weights_name(uint32_t t) { return "weights." + std::to_string(t) + ".csc"; }

}  // namespace

void save_model(const Model& model, const std::string& dir, const StringMap& config_echo,
                const StringMap& inputs) {
    model.validate();
    fs::create_directories(dir);
    const fs::path base(dir);

    model.vocab.save((base / "vocabulary.txt").string());
    model.chain.save((base / "chain.bin").string());
    for (uint32_t t = 1; t <= model.depth(); ++t) {
        save_csc(model.weights[t - 1], (base / weights_name(t)).string());
    }

    json files = json::object();
    auto record = [&](const std::string& name) {
        files[name] = hash_hex(fnv1a64_file((base / name).string()));
    };
    record("vocabulary.txt");
    record("chain.bin");
    for (uint32_t t = 1; t <= model.depth(); ++t) record(weights_name(t));

    json widths = json::array();
    for (uint32_t t = 1; t <= model.depth(); ++t) widths.push_back(model.chain.width(t));

    json manifest = {
        {"format", "treematch-model"},
        {"version", 1},
        {"tool_version", kVersion},
        {"depth", model.depth()},
        {"dim", model.dim()},
        {"num_labels", model.num_labels()},
        {"layer_widths", widths},
        {"activation", activation_to_string(model.activation)},
        {"default_beam", model.default_beam},
        {"prune_epsilon", model.prune_epsilon},
        {"files", files},
        {"config", json(config_echo)},
        {"inputs", json(inputs)},
    };
    write_text((base / "manifest.json").string(), manifest.dump(2) + "\n");
}

namespace {

json load_manifest(const std::string& dir) {
    const fs::path path = fs::path(dir) / "manifest.json";
    std::ifstream is(path);
    if (!is) throw IoError("cannot open model manifest: " + path.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("corrupt model manifest " + path.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "treematch-model")
        throw FormatError(path.string() + ": not a treematch model manifest");
    if (manifest.value("version", 0) != 1)
        throw FormatError(path.string() + ": unsupported model version");
    return manifest;
}

}  // namespace

Model load_model(const std::string& dir) {
    json manifest = load_manifest(dir);
    const fs::path base(dir);

    for (auto& [name, hash] : manifest.at("files").items()) {
        std::string actual = hash_hex(fnv1a64_file((base / name).string()));
        if (actual != hash.get<std::string>())
            throw FormatError(dir + ": hash mismatch for " + name + " (model directory corrupt)");
    }

    Model model;
    model.vocab = Vocabulary::load((base / "vocabulary.txt").string());
    model.chain = ClusterChain::load((base / "chain.bin").string());
    uint32_t depth = manifest.at("depth").get<uint32_t>();
    if (depth != model.chain.depth()) throw FormatError(dir + ": manifest depth mismatch");
    model.weights.reserve(depth);
    for (uint32_t t = 1; t <= depth; ++t) {
        model.weights.push_back(load_csc((base / weights_name(t)).string()));
    }
    model.activation = activation_from_string(manifest.at("activation").get<std::string>());
    model.default_beam = manifest.at("default_beam").get<uint32_t>();
    model.prune_epsilon = manifest.value("prune_epsilon", 0.0);
    model.validate();
    return model;
}

StringMap load_model_config_echo(const std::string& dir) {
    json manifest = load_manifest(dir);
    StringMap out;
    if (manifest.contains("config")) {
        for (auto& [k, v] : manifest.at("config").items()) out[k] = v.get<std::string>();
    }
    return out;
}

}  // namespace treematch
