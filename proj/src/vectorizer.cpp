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

#include "treematch/vectorizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "treematch/ioutil.hpp"

namespace treematch {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Applies fn(family, token) for every n-gram of the normalized text, in
// pipeline order: unigrams, bigrams, then char trigrams.
template <typename Fn>
void for_each_ngram(const std::vector<std::string>& tokens, Fn&& fn) {
    for (const auto& t : tokens) fn(TokenFamily::Unigram, std::string_view(t));
    std::string joined;
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        joined.assign(tokens[i]);
        joined.push_back('#');
        joined.append(tokens[i + 1]);
        fn(TokenFamily::Bigram, std::string_view(joined));
    }
    std::string padded;
    for (const auto& t : tokens) {
        padded.assign(1, '#');
        padded.append(t);
        padded.push_back('#');
        for (size_t i = 0; i + 3 <= padded.size(); ++i) {
            fn(TokenFamily::CharTrigram, std::string_view(padded).substr(i, 3));
        }
    }
}

}  // namespace

std::string normalize_text(std::string_view raw, const VectorizerConfig& cfg) {
    std::array<bool, 256> strip{};
    for (unsigned char c : cfg.punctuation) strip[c] = true;
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        unsigned char uc = static_cast<unsigned char>(ch);
        char c = ch;
        if (strip[uc]) c = ' ';
        if (cfg.lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < normalized.size()) {
        while (i < normalized.size() && is_space(normalized[i])) ++i;
        size_t j = i;
        while (j < normalized.size() && !is_space(normalized[j])) ++j;
        if (j > i) tokens.emplace_back(normalized.substr(i, j - i));
        i = j;
    }
    return tokens;
}

std::vector<std::string> word_ngrams(std::span<const std::string> tokens, uint32_t n) {
    if (n == 0) throw InvalidArgError("word_ngrams: n must be >= 1");
    std::vector<std::string> out;
    if (tokens.size() < n) return out;
    out.reserve(tokens.size() - n + 1);
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (size_t j = 1; j < n; ++j) {
            g.push_back('#');
            g.append(tokens[i + j]);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<std::string> char_trigrams(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    std::string padded;
    for (const auto& t : tokens) {
        padded.assign(1, '#');
        padded.append(t);
        padded.push_back('#');
        for (size_t i = 0; i + 3 <= padded.size(); ++i) out.emplace_back(padded.substr(i, 3));
    }
    return out;
}

Vocabulary Vocabulary::fit(const std::function<bool(std::string&)>& next_doc, const VectorizerConfig& cfg) {
    for (char c : cfg.punctuation) {
        if (is_space(c)) throw InvalidArgError("punctuation set may not contain whitespace");
    }
    Vocabulary v;
    v.config_ = cfg;

    std::unordered_map<std::string, uint64_t> df[3];
    std::vector<std::string_view> seen;  // per-doc distinct tokens of one family
    std::string doc;
    while (next_doc(doc)) {
        v.n_docs_ += 1;
        auto tokens = tokenize(normalize_text(doc, cfg));
        std::array<std::vector<std::string>, 3> fam;
        fam[0] = tokens;
        fam[1] = word_ngrams(tokens, 2);
        fam[2] = char_trigrams(tokens);
        for (int f = 0; f < 3; ++f) {
            seen.clear();
            for (const auto& t : fam[f]) seen.push_back(t);
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            for (auto t : seen) df[f][std::string(t)] += 1;
        }
    }
    if (v.n_docs_ == 0) throw InvalidArgError("fit: empty corpus");

    const uint32_t budgets[3] = {cfg.max_unigrams, cfg.max_bigrams, cfg.max_char_trigrams};
    for (int f = 0; f < 3; ++f) {
        std::vector<std::pair<std::string, uint64_t>> ranked(df[f].begin(), df[f].end());
        // most frequent first, ties broken lexicographically ascending
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        size_t keep = std::min<size_t>(budgets[f], ranked.size());
        v.family_size_[f] = static_cast<index_t>(keep);
        for (size_t i = 0; i < keep; ++i) {
            index_t id = static_cast<index_t>(v.df_.size());
            v.maps_[f].emplace(ranked[i].first, id);
            v.token_by_id_.push_back(std::move(ranked[i].first));
            v.df_.push_back(ranked[i].second);
        }
    }
    v.rebuild_idf();
    return v;
}

Vocabulary Vocabulary::fit(const std::vector<std::string>& docs, const VectorizerConfig& cfg) {
    size_t i = 0;
    return fit(
        [&](std::string& out) {
            if (i >= docs.size()) return false;
            out = docs[i++];
            return true;
        },
        cfg);
}

void Vocabulary::rebuild_idf() {
    idf_.resize(df_.size() + 1);
    for (size_t f = 0; f < df_.size(); ++f) {
        idf_[f] = std::log(static_cast<double>(n_docs_ + 1) / static_cast<double>(df_[f] + 1)) + 1.0;
    }
    idf_[df_.size()] = 1.0;  // OOV
}

TokenFamily Vocabulary::family_of(index_t feature) const {
    if (feature < family_size_[0]) return TokenFamily::Unigram;
    if (feature < static_cast<index_t>(family_size_[0]) + family_size_[1]) return TokenFamily::Bigram;
    return TokenFamily::CharTrigram;
}

std::optional<index_t> Vocabulary::lookup(TokenFamily f, std::string_view token) const {
    const auto& m = maps_[static_cast<size_t>(f)];
    auto it = m.find(token);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

SparseVector Vocabulary::transform(std::string_view raw) const {
    auto tokens = tokenize(normalize_text(raw, config_));
    std::unordered_map<index_t, uint32_t> tf;
    for_each_ngram(tokens, [&](TokenFamily f, std::string_view tok) {
        // a family with no kept tokens is disabled, not an OOV source
        if (family_size_[static_cast<size_t>(f)] == 0) return;
        auto it = maps_[static_cast<size_t>(f)].find(tok);
        index_t id = (it == maps_[static_cast<size_t>(f)].end()) ? oov_id() : it->second;
        tf[id] += 1;
    });
    SparseVector out;
    out.dim = dim();
    out.indices.reserve(tf.size());
    for (const auto& [id, _] : tf) out.indices.push_back(id);
    std::sort(out.indices.begin(), out.indices.end());
    out.values.reserve(out.indices.size());
    for (index_t id : out.indices) out.values.push_back(static_cast<double>(tf[id]) * idf_[id]);
    out.l2_normalize();
    return out;
}

void Vocabulary::save(const std::string& path) const {
    ensure_parent_dir(path);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "TMVOCAB 1\n";
    os << "n_docs " << n_docs_ << '\n';
    os << "lowercase " << (config_.lowercase ? 1 : 0) << '\n';
    os << "punctuation " << config_.punctuation << '\n';
    os << "budgets " << config_.max_unigrams << ' ' << config_.max_bigrams << ' '
       << config_.max_char_trigrams << '\n';
    os << "families " << family_size_[0] << ' ' << family_size_[1] << ' ' << family_size_[2] << '\n';
    for (size_t i = 0; i < token_by_id_.size(); ++i) {
        os << token_by_id_[i] << '\t' << df_[i] << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string line;
    auto expect_line = [&](const char* what) -> std::string& {
        if (!std::getline(is, line)) throw FormatError(path + ": truncated (" + what + ")");
        return line;
    };
    if (expect_line("magic") != "TMVOCAB 1") throw FormatError(path + ": bad magic, expected 'TMVOCAB 1'");

    Vocabulary v;
    std::istringstream ss;
    auto parse_kv = [&](const char* key) -> std::istringstream& {
        expect_line(key);
        ss.clear();
        ss.str(line);
        std::string k;
        ss >> k;
        if (k != key) throw FormatError(path + ": expected '" + key + "', got '" + k + "'");
        return ss;
    };
    parse_kv("n_docs") >> v.n_docs_;
    int lower = 1;
    parse_kv("lowercase") >> lower;
    v.config_.lowercase = lower != 0;
    expect_line("punctuation");
    if (line.rfind("punctuation", 0) != 0) throw FormatError(path + ": expected 'punctuation'");
    v.config_.punctuation = line.size() > 12 ? line.substr(12) : std::string();
    parse_kv("budgets") >> v.config_.max_unigrams >> v.config_.max_bigrams >> v.config_.max_char_trigrams;
    parse_kv("families") >> v.family_size_[0] >> v.family_size_[1] >> v.family_size_[2];
    if (!ss) throw FormatError(path + ": bad families line");

    uint64_t total = static_cast<uint64_t>(v.family_size_[0]) + v.family_size_[1] + v.family_size_[2];
    v.token_by_id_.reserve(total);
    v.df_.reserve(total);
    index_t id = 0;
    for (int f = 0; f < 3; ++f) {
        for (index_t i = 0; i < v.family_size_[f]; ++i, ++id) {
            expect_line("token record");
            size_t tab = line.rfind('\t');
            if (tab == std::string::npos) throw FormatError(path + ": bad token record '" + line + "'");
            std::string tok = line.substr(0, tab);
            uint64_t df = std::strtoull(line.c_str() + tab + 1, nullptr, 10);
            if (df == 0) throw FormatError(path + ": zero document frequency for '" + tok + "'");
            v.maps_[f].emplace(tok, id);
            v.token_by_id_.push_back(std::move(tok));
            v.df_.push_back(df);
        }
    }
    v.rebuild_idf();
    return v;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
    return n_docs_ == other.n_docs_ && token_by_id_ == other.token_by_id_ && df_ == other.df_ &&
           family_size_[0] == other.family_size_[0] && family_size_[1] == other.family_size_[1] &&
           family_size_[2] == other.family_size_[2] && config_.lowercase == other.config_.lowercase &&
           config_.punctuation == other.config_.punctuation;
}

}  // namespace treematch
