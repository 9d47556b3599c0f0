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

#include "treematch/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "treematch/ioutil.hpp"
#include "treematch/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace treematch {

namespace {

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    for (;;) {
        size_t tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

std::vector<index_t> parse_id_list(const std::string& s, index_t limit, const std::string& where) {
    std::vector<index_t> ids;
    size_t start = 0;
    while (start <= s.size() && !s.empty()) {
        size_t comma = s.find(',', start);
        std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) {
            char* endp = nullptr;
            unsigned long v = std::strtoul(tok.c_str(), &endp, 10);
            if (endp == tok.c_str() || *endp != '\0')
                throw FormatError(where + ": bad label id '" + tok + "'");
            if (limit && v >= limit)
                throw FormatError(where + ": label id " + tok + " out of range");
            ids.push_back(static_cast<index_t>(v));
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

}  // namespace

Dataset ingest_pairs(const std::string& pairs_tsv_path, int64_t threshold) {
    return ingest_pairs(pairs_tsv_path, threshold, SplitSpec{}, nullptr);
}

Dataset ingest_pairs(const std::string& pairs_tsv_path, int64_t threshold, const SplitSpec& split,
                     TestSet* out_test) {
    if (split.mode != SplitSpec::Mode::None && out_test == nullptr)
        throw InvalidArgError("ingest: a split needs an output test set");
    std::ifstream is(pairs_tsv_path);
    if (!is) throw IoError("cannot open: " + pairs_tsv_path);

    struct PairKey {
        uint32_t query;
        std::string label;
        bool operator==(const PairKey&) const = default;
    };
    struct PairKeyHash {
        size_t operator()(const PairKey& k) const {
            return std::hash<std::string>{}(k.label) * 1000003u ^ k.query;
        }
    };
    struct Side {
        std::vector<PairKey> order;
        std::unordered_map<PairKey, int64_t, PairKeyHash> counts;

        void add(const PairKey& key, int64_t count) {
            auto [it, first_seen] = counts.try_emplace(key, 0);
            if (first_seen) order.push_back(key);
            it->second += count;
        }
    };

    std::vector<std::string> query_texts;
    std::unordered_map<std::string, uint32_t> query_ids;
    Side train, test;

    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto parts = split_tab(line);
        // columns beyond the third are carried for split routing and ignored
        if (parts.size() < 2 || parts[0].empty() || parts[1].empty())
            throw FormatError(pairs_tsv_path + ":" + std::to_string(lineno) +
                              ": expected 'query<TAB>label[<TAB>count]'");
        int64_t count = 1;
        if (parts.size() >= 3 && !parts[2].empty()) {
            char* endp = nullptr;
            count = std::strtoll(parts[2].c_str(), &endp, 10);
            if (endp == parts[2].c_str() || *endp != '\0')
                throw FormatError(pairs_tsv_path + ":" + std::to_string(lineno) + ": bad count '" +
                                  parts[2] + "'");
        }
        auto [qit, fresh] = query_ids.try_emplace(parts[0], static_cast<uint32_t>(query_texts.size()));
        if (fresh) query_texts.push_back(parts[0]);
        PairKey key{qit->second, parts[1]};

        bool to_test = false;
        if (split.mode == SplitSpec::Mode::ByColumn) {
            to_test = split.column >= 1 && split.column <= parts.size() &&
                      parts[split.column - 1] == split.value;
        } else if (split.mode == SplitSpec::Mode::Random) {
            // whole queries move to the test side, deterministically by text
            uint64_t h = splitmix64(mix_seed(split.seed, fnv1a64(parts[0])));
            to_test = (static_cast<double>(h >> 11) * 0x1.0p-53) < split.test_fraction;
        }
        (to_test ? test : train).add(key, count);
    }

    Dataset out;
    std::unordered_map<std::string, index_t> label_ids;
    std::vector<std::vector<index_t>> per_query(query_texts.size());
    size_t kept = 0;
    for (const PairKey& key : train.order) {
        if (train.counts[key] < threshold) continue;
        auto [lit, fresh] = label_ids.try_emplace(key.label, static_cast<index_t>(out.label_names.size()));
        if (fresh) out.label_names.push_back(key.label);
        per_query[key.query].push_back(lit->second);
        ++kept;
    }
    if (kept == 0) throw InvalidArgError("ingest: no pairs at or above threshold " + std::to_string(threshold));

    // drop queries that ended up with no train pairs from the train matrix,
    // keeping ids contiguous over the surviving ones
    std::vector<uint32_t> train_query_of;
    out.relevance.cols = static_cast<index_t>(out.label_names.size());
    for (uint32_t q = 0; q < query_texts.size(); ++q) {
        auto& ids = per_query[q];
        if (ids.empty()) continue;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        std::vector<double> ones(ids.size(), 1.0);
        out.relevance.append_row(ids, ones);
        out.queries.push_back(query_texts[q]);
        train_query_of.push_back(q);
    }

    if (out_test) {
        out_test->queries.clear();
        out_test->truths.clear();
        std::unordered_map<uint32_t, size_t> test_row;
        for (const PairKey& key : test.order) {
            if (test.counts[key] < threshold) continue;
            auto [it, fresh] = test_row.try_emplace(key.query, out_test->queries.size());
            if (fresh) {
                out_test->queries.push_back(query_texts[key.query]);
                out_test->truths.emplace_back();
            }
            auto lit = label_ids.find(key.label);  // unseen labels drop out
            if (lit != label_ids.end()) out_test->truths[it->second].push_back(lit->second);
        }
        for (auto& t : out_test->truths) {
            std::sort(t.begin(), t.end());
            t.erase(std::unique(t.begin(), t.end()), t.end());
        }
    }
    return out;
}

void save_dataset(const Dataset& data, const std::string& dir,
                  const std::map<std::string, std::string>& inputs) {
    fs::create_directories(dir);
    const fs::path base(dir);
    {
        std::ostringstream os;
        for (const auto& q : data.queries) os << q << '\n';
        write_text((base / "queries.txt").string(), os.str());
    }
    {
        std::ostringstream os;
        for (index_t r = 0; r < data.relevance.rows; ++r) {
            auto ids = data.relevance.row_indices(r);
            for (size_t i = 0; i < ids.size(); ++i) {
                if (i) os << ',';
                os << ids[i];
            }
            os << '\n';
        }
        write_text((base / "truth.txt").string(), os.str());
    }
    {
        std::ostringstream os;
        for (size_t l = 0; l < data.label_names.size(); ++l) os << l << '\t' << data.label_names[l] << '\n';
        write_text((base / "labels.tsv").string(), os.str());
    }
    if (data.label_text) {
        std::ostringstream os;
        for (const auto& t : *data.label_text) os << t << '\n';
        write_text((base / "label_text.txt").string(), os.str());
    }
    json manifest = {
        {"format", "treematch-dataset"},
        {"version", 1},
        {"tool_version", kVersion},
        {"num_queries", data.queries.size()},
        {"num_labels", data.label_names.size()},
        {"files",
         {{"queries.txt", hash_hex(fnv1a64_file((base / "queries.txt").string()))},
          {"truth.txt", hash_hex(fnv1a64_file((base / "truth.txt").string()))},
          {"labels.tsv", hash_hex(fnv1a64_file((base / "labels.tsv").string()))}}},
        {"inputs", json(inputs)},
    };
    write_text((base / "manifest.json").string(), manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
    const fs::path base(dir);
    Dataset out;
    out.queries = read_lines((base / "queries.txt").string());

    auto label_lines = read_lines((base / "labels.tsv").string());
    out.label_names.reserve(label_lines.size());
    for (const auto& line : label_lines) {
        if (line.empty()) continue;
        auto parts = split_tab(line);
        if (parts.size() < 2) throw FormatError(dir + "/labels.tsv: bad line '" + line + "'");
        out.label_names.push_back(parts[1]);
    }

    auto truth_lines = read_lines((base / "truth.txt").string());
    if (truth_lines.size() != out.queries.size())
        throw FormatError(dir + ": truth.txt and queries.txt line counts differ");
    out.relevance.cols = static_cast<index_t>(out.label_names.size());
    for (size_t i = 0; i < truth_lines.size(); ++i) {
        auto ids = parse_id_list(truth_lines[i], out.relevance.cols,
                                 dir + "/truth.txt:" + std::to_string(i + 1));
        std::vector<double> ones(ids.size(), 1.0);
        out.relevance.append_row(ids, ones);
    }

    if (fs::exists(base / "label_text.txt")) {
        out.label_text = read_lines((base / "label_text.txt").string());
        if (out.label_text->size() != out.label_names.size())
            throw FormatError(dir + ": label_text.txt and labels.tsv line counts differ");
    }
    return out;
}

TestSet load_test_tsv(const std::string& path, index_t num_labels) {
    TestSet out;
    auto lines = read_lines(path);
    size_t lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (line.empty()) continue;
        auto parts = split_tab(line);
        if (parts.size() != 2)
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected 'query<TAB>id,id,...'");
        out.queries.push_back(parts[0]);
        out.truths.push_back(parse_id_list(parts[1], num_labels, path + ":" + std::to_string(lineno)));
    }
    return out;
}

void save_test_tsv(const TestSet& test, const std::string& path) {
    std::ostringstream os;
    for (size_t i = 0; i < test.queries.size(); ++i) {
        os << test.queries[i] << '\t';
        for (size_t j = 0; j < test.truths[i].size(); ++j) {
            if (j) os << ',';
            os << test.truths[i][j];
        }
        os << '\n';
    }
    write_text(path, os.str());
}

void save_predictions(std::span<const Prediction> predictions, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (size_t q = 0; q < predictions.size(); ++q) {
        const auto& p = predictions[q];
        for (size_t i = 0; i < p.labels.size(); ++i) {
            os << q << '\t' << p.labels[i] << '\t' << format_double(p.scores[i]) << '\n';
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

std::vector<Prediction> load_predictions(const std::string& path, size_t num_queries) {
    std::vector<Prediction> out(num_queries);
    auto lines = read_lines(path);
    size_t lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (line.empty()) continue;
        auto parts = split_tab(line);
        if (parts.size() != 3)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'qid<TAB>label<TAB>score'");
        char* endp = nullptr;
        unsigned long q = std::strtoul(parts[0].c_str(), &endp, 10);
        if (endp == parts[0].c_str() || q >= num_queries)
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad query id");
        unsigned long l = std::strtoul(parts[1].c_str(), &endp, 10);
        double s = std::strtod(parts[2].c_str(), nullptr);
        out[q].labels.push_back(static_cast<index_t>(l));
        out[q].scores.push_back(s);
    }
    return out;
}

namespace {

// Deterministic token surfaces. Label-side tokens appear in label text;
// synonym surfaces appear only in queries. Adjacent topics share half their
// token pool, so cluster routing has genuine ambiguity.
std::string topic_token(uint32_t global) { return "w" + std::to_string(global); }
std::string synonym_token(uint32_t global) { return "z" + std::to_string(global); }
std::string unique_token(index_t label) { return "id" + std::to_string(label); }
std::string unique_synonym(index_t label) { return "zid" + std::to_string(label); }

}  // namespace

SynthData synth_generate(const SynthParams& p) {
    if (p.num_labels == 0 || p.num_topics == 0) throw InvalidArgError("synth: need labels and topics");
    if (p.label_tokens_max > p.tokens_per_topic)
        throw InvalidArgError("synth: label_tokens_max exceeds tokens_per_topic");
    if (p.label_tokens_min > p.label_tokens_max || p.query_tokens_min > p.query_tokens_max)
        throw InvalidArgError("synth: bad token range");

    Rng rng(splitmix64(p.seed));

    const index_t L = p.num_labels;
    auto topic_of = [&](index_t l) {
        return static_cast<uint32_t>((static_cast<uint64_t>(l) * p.num_topics) / L);
    };
    // topic t draws its pool from a ring of global token ids with a stride of
    // half a pool, so neighbouring topics overlap in half their tokens
    const uint32_t stride = std::max(1u, p.tokens_per_topic / 2);
    const uint32_t global_vocab = p.num_topics * stride;
    auto global_token = [&](uint32_t topic, uint32_t i) {
        return (topic * stride + i) % global_vocab;
    };

    // per-label signature: global token ids drawn from its topic's pool
    std::vector<std::vector<uint32_t>> signature(L);
    std::vector<std::vector<index_t>> topic_members(p.num_topics);
    {
        std::vector<uint32_t> pool(p.tokens_per_topic);
        for (index_t l = 0; l < L; ++l) {
            uint32_t topic = topic_of(l);
            topic_members[topic].push_back(l);
            for (uint32_t i = 0; i < p.tokens_per_topic; ++i) pool[i] = global_token(topic, i);
            shuffle_vec(pool, rng);
            uint32_t k = p.label_tokens_min +
                         static_cast<uint32_t>(rand_below(rng, p.label_tokens_max - p.label_tokens_min + 1));
            signature[l].assign(pool.begin(), pool.begin() + k);
            std::sort(signature[l].begin(), signature[l].end());
        }
    }

    SynthData data;
    data.train.label_names.reserve(L);
    std::vector<std::string> label_text;
    label_text.reserve(L);
    for (index_t l = 0; l < L; ++l) {
        data.train.label_names.push_back("L" + std::to_string(l));
        std::string text = unique_token(l);
        for (uint32_t tok : signature[l]) {
            text.push_back(' ');
            text.append(topic_token(tok));
        }
        label_text.push_back(std::move(text));
    }
    data.train.label_text = std::move(label_text);

    // A query about label l: a sample of its signature tokens, each possibly
    // in synonym form. `force_synonyms` produces a purely semantic query with
    // zero lexical overlap with any label text. Extra positives are other
    // labels genuinely matching the picked tokens, so the multi-label signal
    // stays consistent with the query's features.
    auto make_query = [&](index_t l, double synonym_rate, bool force_synonyms,
                          std::vector<index_t>& positives) {
        uint32_t topic = topic_of(l);
        const auto& sig = signature[l];
        uint32_t want = p.query_tokens_min +
                        static_cast<uint32_t>(rand_below(rng, p.query_tokens_max - p.query_tokens_min + 1));
        want = std::min<uint32_t>(want, static_cast<uint32_t>(sig.size()));
        std::vector<uint32_t> picked(sig.begin(), sig.end());
        shuffle_vec(picked, rng);
        picked.resize(want);
        std::string text;
        for (uint32_t tok : picked) {
            if (!text.empty()) text.push_back(' ');
            bool use_syn = force_synonyms || rand_unit(rng) < synonym_rate;
            text.append(use_syn ? synonym_token(tok) : topic_token(tok));
        }
        // the label-identifying token also has a query-only synonym surface,
        // so purely semantic queries can still pinpoint the label
        if (force_synonyms) {
            if (rand_unit(rng) < 0.6) {
                if (!text.empty()) text.push_back(' ');
                text.append(unique_synonym(l));
            }
        } else if (rand_unit(rng) < 0.4) {
            if (!text.empty()) text.push_back(' ');
            text.append(rand_unit(rng) < synonym_rate ? unique_synonym(l) : unique_token(l));
        }
        positives.clear();
        positives.push_back(l);
        if (rand_unit(rng) < p.sibling_positive_rate) {
            const auto& members = topic_members[topic];
            const uint32_t need = want <= 3 ? want : (want + 1) / 2 + 1;
            index_t probe = static_cast<index_t>(rand_below(rng, members.size()));
            for (size_t step = 0; step < members.size() && positives.size() < 2; ++step) {
                index_t cand = members[(probe + step) % members.size()];
                if (cand == l) continue;
                uint32_t shared = 0;
                for (uint32_t tok : picked) {
                    if (std::binary_search(signature[cand].begin(), signature[cand].end(), tok))
                        ++shared;
                }
                if (shared >= need) positives.push_back(cand);
            }
        }
        std::sort(positives.begin(), positives.end());
        positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
        return text;
    };

    data.train.relevance.cols = L;
    std::vector<index_t> positives;
    // cycle a reshuffled label order so every label gets train coverage
    std::vector<index_t> order(L);
    for (index_t l = 0; l < L; ++l) order[l] = l;
    for (uint32_t i = 0; i < p.num_train; ++i) {
        if (i % L == 0) shuffle_vec(order, rng);
        index_t l = order[i % L];
        data.train.queries.push_back(make_query(l, p.train_synonym_rate, false, positives));
        std::vector<double> ones(positives.size(), 1.0);
        data.train.relevance.append_row(positives, ones);
    }

    for (uint32_t i = 0; i < p.num_test; ++i) {
        index_t l = static_cast<index_t>(rand_below(rng, L));
        bool semantic = rand_unit(rng) < p.test_semantic_fraction;
        data.test.queries.push_back(make_query(l, p.train_synonym_rate, semantic, positives));
        data.test.truths.push_back(positives);
    }
    return data;
}

void synth_write(const SynthData& data, const SynthParams& params, const std::string& dir) {
    save_dataset(data.train, dir);
    const fs::path base(dir);
    save_test_tsv(data.test, (base / "test.tsv").string());
    json extra = {
        {"generator", "synth"},
        {"num_labels", params.num_labels},
        {"num_train", params.num_train},
        {"num_test", params.num_test},
        {"num_topics", params.num_topics},
        {"tokens_per_topic", params.tokens_per_topic},
        {"train_synonym_rate", params.train_synonym_rate},
        {"test_semantic_fraction", params.test_semantic_fraction},
        {"sibling_positive_rate", params.sibling_positive_rate},
        {"seed", params.seed},
    };
    write_text((base / "synth_params.json").string(), extra.dump(2) + "\n");
}

}  // namespace treematch
