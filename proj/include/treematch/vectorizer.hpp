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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "treematch/sparse.hpp"

namespace treematch {

struct VectorizerConfig {
    uint32_t max_unigrams = 1'000'000;
    uint32_t max_bigrams = 3'000'000;
    uint32_t max_char_trigrams = 200'000;
    bool lowercase = true;
    // Characters replaced by spaces during normalization. ASCII punctuation
    // by default; configurable, but may not contain whitespace.
    std::string punctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
};

// Lowercases (ASCII), maps configured punctuation to spaces, collapses
// whitespace runs and trims. Bytes >= 0x80 pass through untouched.
std::string normalize_text(std::string_view raw, const VectorizerConfig& cfg);

// Splits normalized text on whitespace runs; never yields empty tokens.
std::vector<std::string> tokenize(std::string_view normalized);

// Adjacent word n-grams joined with '#'; empty when fewer than n tokens.
std::vector<std::string> word_ngrams(std::span<const std::string> tokens, uint32_t n);

// Boundary-padded character trigrams: each word w becomes "#w#" and every
// contiguous 3-byte window is emitted, so a word of length k yields exactly
// k trigrams (one for single-character words).
std::vector<std::string> char_trigrams(std::span<const std::string> tokens);

enum class TokenFamily : uint8_t { Unigram = 0, Bigram = 1, CharTrigram = 2 };

// Frequency-capped n-gram vocabulary with per-family budgets, document
// frequencies and one shared OOV slot (always the last feature id).
// Immutable after fit/load; safe for concurrent readers.
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary fit(const std::function<bool(std::string&)>& next_doc, const VectorizerConfig& cfg);
    static Vocabulary fit(const std::vector<std::string>& docs, const VectorizerConfig& cfg);

    // normalize -> tokenize -> {unigrams, bigrams, char trigrams}; unseen
    // tokens hit the OOV slot; weights are tf * idf with
    // idf = ln((n_docs+1)/(df+1)) + 1 (idf of OOV is 1); l2-normalized.
    SparseVector transform(std::string_view raw) const;

    index_t dim() const { return static_cast<index_t>(df_.size()) + 1; }
    index_t oov_id() const { return static_cast<index_t>(df_.size()); }
    uint64_t n_docs() const { return n_docs_; }
    uint64_t doc_freq(index_t feature) const { return df_[feature]; }
    double idf(index_t feature) const { return idf_[feature]; }
    index_t family_size(TokenFamily f) const { return family_size_[static_cast<size_t>(f)]; }
    TokenFamily family_of(index_t feature) const;
    const VectorizerConfig& config() const { return config_; }

    std::optional<index_t> lookup(TokenFamily f, std::string_view token) const;

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    bool operator==(const Vocabulary& other) const;

private:
    struct StringHash {
        using is_transparent = void;
        size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    using TokenMap = std::unordered_map<std::string, index_t, StringHash, std::equal_to<>>;

    VectorizerConfig config_;
    uint64_t n_docs_ = 0;
    TokenMap maps_[3];
    index_t family_size_[3] = {0, 0, 0};
    std::vector<std::string> token_by_id_;  // id order, for serialization
    std::vector<uint64_t> df_;
    std::vector<double> idf_;  // size dim(); last entry is the OOV idf (1.0)

    void rebuild_idf();
};

}  // namespace treematch
