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

#include "treematch/treematch.h"

#include <cstdio>
#include <filesystem>
#include <cstring>
#include <fstream>
#include <string>

#include "treematch/indexer.hpp"
#include "treematch/ioutil.hpp"
#include "treematch/inference.hpp"
#include "treematch/pipeline.hpp"

using namespace treematch;

struct tm_model {
    Model impl;
};

namespace {

// fixed storage so the error path never allocates and TLS teardown order
// cannot matter
thread_local char t_last_error[1024] = "ok";

tm_status fail(tm_status code, const std::string& msg) {
    std::snprintf(t_last_error, sizeof(t_last_error), "%s", msg.c_str());
    return code;
}

template <typename Fn>
tm_status guarded(Fn&& fn) {
    try {
        fn();
        return TM_OK;
    } catch (const IoError& e) {
        return fail(TM_ERR_IO, e.what());
    } catch (const FormatError& e) {
        return fail(TM_ERR_FORMAT, e.what());
    } catch (const InvalidArgError& e) {
        return fail(TM_ERR_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return fail(TM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(TM_ERR_INTERNAL, "unknown error");
    }
}

tm_status require(bool ok, const char* what) {
    return ok ? TM_OK : fail(TM_ERR_INVALID_ARG, std::string("null argument: ") + what);
}

PipelineConfig parse_options(const char* options_kv) {
    return options_kv ? PipelineConfig::parse(options_kv) : PipelineConfig{};
}

}  // namespace

extern "C" {

const char* tm_version(void) { return kVersion; }

const char* tm_last_error(void) { return t_last_error; }

tm_status tm_model_load(const char* model_dir, tm_model** out_model) {
    if (tm_status s = require(model_dir && out_model, "model_dir/out_model")) return s;
    return guarded([&] {
        auto* handle = new tm_model{load_model(model_dir)};
        *out_model = handle;
    });
}

void tm_model_free(tm_model* model) { delete model; }

tm_status tm_model_depth(const tm_model* model, uint32_t* out_depth) {
    if (tm_status s = require(model && out_depth, "model/out_depth")) return s;
    *out_depth = model->impl.depth();
    return TM_OK;
}

tm_status tm_model_num_labels(const tm_model* model, uint32_t* out_num_labels) {
    if (tm_status s = require(model && out_num_labels, "model/out_num_labels")) return s;
    *out_num_labels = model->impl.num_labels();
    return TM_OK;
}

tm_status tm_model_default_beam(const tm_model* model, uint32_t* out_beam) {
    if (tm_status s = require(model && out_beam, "model/out_beam")) return s;
    *out_beam = model->impl.default_beam;
    return TM_OK;
}

tm_status tm_model_predict(const tm_model* model, const char* query_text, uint32_t beam,
                           uint32_t topk, uint32_t* label_ids, double* scores, uint32_t* io_count) {
    if (tm_status s = require(model && query_text && label_ids && scores && io_count,
                              "model/query_text/label_ids/scores/io_count"))
        return s;
    return guarded([&] {
        thread_local QueryWorkspace ws;
        uint32_t b = beam == 0 ? model->impl.default_beam : beam;
        Prediction p = predict_text(model->impl, query_text, b, topk, ws);
        uint32_t n = static_cast<uint32_t>(std::min<size_t>(*io_count, p.labels.size()));
        for (uint32_t i = 0; i < n; ++i) {
            label_ids[i] = p.labels[i];
            scores[i] = p.scores[i];
        }
        *io_count = n;
    });
}

tm_status tm_synth_data(const char* options_kv, const char* out_dataset_dir) {
    if (tm_status s = require(out_dataset_dir, "out_dataset_dir")) return s;
    return guarded([&] {
        PipelineConfig cfg = parse_options(options_kv);
        SynthParams p;
        auto geti = [&](const char* key, auto def) {
            auto it = cfg.kv.find(key);
            if (it == cfg.kv.end()) return def;
            return static_cast<decltype(def)>(std::stoull(it->second));
        };
        auto getd = [&](const char* key, double def) {
            auto it = cfg.kv.find(key);
            return it == cfg.kv.end() ? def : std::stod(it->second);
        };
        p.num_labels = geti("labels", p.num_labels);
        p.num_train = geti("train", p.num_train);
        p.num_test = geti("test", p.num_test);
        p.num_topics = geti("topics", p.num_topics);
        p.tokens_per_topic = geti("tokens_per_topic", p.tokens_per_topic);
        p.train_synonym_rate = getd("train_synonym_rate", p.train_synonym_rate);
        p.test_semantic_fraction = getd("test_semantic_fraction", p.test_semantic_fraction);
        p.sibling_positive_rate = getd("sibling_positive_rate", p.sibling_positive_rate);
        p.seed = geti("seed", p.seed);
        synth_write(synth_generate(p), p, out_dataset_dir);
    });
}

tm_status tm_ingest(const char* pairs_tsv_path, int64_t threshold, const char* options_kv,
                    const char* out_dataset_dir) {
    if (tm_status s = require(pairs_tsv_path && out_dataset_dir, "pairs_tsv_path/out_dataset_dir"))
        return s;
    return guarded([&] {
        PipelineConfig cfg = parse_options(options_kv);
        SplitSpec split;
        auto it = cfg.kv.find("split");
        if (it != cfg.kv.end() && !it->second.empty() && it->second != "none") {
            if (it->second == "column") {
                split.mode = SplitSpec::Mode::ByColumn;
            } else if (it->second == "random") {
                split.mode = SplitSpec::Mode::Random;
            } else {
                throw InvalidArgError("ingest: split must be column, random or none");
            }
        }
        it = cfg.kv.find("split.column");
        if (it != cfg.kv.end()) split.column = static_cast<uint32_t>(std::stoul(it->second));
        it = cfg.kv.find("split.value");
        if (it != cfg.kv.end()) split.value = it->second;
        it = cfg.kv.find("split.test_fraction");
        if (it != cfg.kv.end()) split.test_fraction = std::stod(it->second);
        it = cfg.kv.find("split.seed");
        if (it != cfg.kv.end()) split.seed = std::stoull(it->second);

        // hash before building the map: throwing inside a braced initializer
        // leaks its subobjects on this compiler
        std::string pairs_hash = hash_hex(fnv1a64_file(pairs_tsv_path));
        StringMap inputs{{"pairs", pairs_tsv_path},
                         {"pairs_hash", pairs_hash},
                         {"threshold", std::to_string(threshold)}};
        for (const auto& [k, v] : cfg.kv) inputs[k] = v;

        TestSet test;
        bool with_split = split.mode != SplitSpec::Mode::None;
        Dataset data = ingest_pairs(pairs_tsv_path, threshold, split, with_split ? &test : nullptr);
        save_dataset(data, out_dataset_dir, inputs);
        if (with_split) {
            save_test_tsv(test, (std::filesystem::path(out_dataset_dir) / "test.tsv").string());
        }
    });
}

tm_status tm_fit_vectorizer(const char* corpus_path, const char* options_kv,
                            const char* out_vocab_path) {
    if (tm_status s = require(corpus_path && out_vocab_path, "corpus_path/out_vocab_path")) return s;
    return guarded([&] {
        PipelineConfig cfg = parse_options(options_kv);
        VectorizerConfig vc;
        auto it = cfg.kv.find("max_unigrams");
        if (it != cfg.kv.end()) vc.max_unigrams = static_cast<uint32_t>(std::stoul(it->second));
        it = cfg.kv.find("max_bigrams");
        if (it != cfg.kv.end()) vc.max_bigrams = static_cast<uint32_t>(std::stoul(it->second));
        it = cfg.kv.find("max_char_trigrams");
        if (it != cfg.kv.end()) vc.max_char_trigrams = static_cast<uint32_t>(std::stoul(it->second));
        it = cfg.kv.find("lowercase");
        if (it != cfg.kv.end()) vc.lowercase = it->second == "true" || it->second == "1";
        it = cfg.kv.find("punctuation");
        if (it != cfg.kv.end()) vc.punctuation = it->second;

        std::ifstream is(corpus_path);
        if (!is) throw IoError(std::string("cannot open: ") + corpus_path);
        auto vocab = Vocabulary::fit(
            [&](std::string& doc) {
                if (!std::getline(is, doc)) return false;
                if (!doc.empty() && doc.back() == '\r') doc.pop_back();
                return true;
            },
            vc);
        vocab.save(out_vocab_path);
        std::string corpus_hash = hash_hex(fnv1a64_file(corpus_path));
        write_run_manifest(out_vocab_path, "fit-vectorizer", cfg.kv,
                           {{"corpus", corpus_path}, {"corpus_hash", corpus_hash}});
    });
}

tm_status tm_build_tree(const char* dataset_dir, const char* vocab_path, const char* options_kv,
                        const char* out_chain_path) {
    if (tm_status s = require(dataset_dir && vocab_path && out_chain_path,
                              "dataset_dir/vocab_path/out_chain_path"))
        return s;
    return guarded([&] {
        PipelineConfig cfg = parse_options(options_kv);
        TreeConfig tc;
        auto it = cfg.kv.find("branching");
        if (it != cfg.kv.end()) tc.branching = static_cast<uint32_t>(std::stoul(it->second));
        it = cfg.kv.find("max_leaf");
        if (it != cfg.kv.end()) tc.max_leaf = static_cast<uint32_t>(std::stoul(it->second));
        it = cfg.kv.find("seed");
        if (it != cfg.kv.end()) tc.seed = std::stoull(it->second);
        it = cfg.kv.find("threads");
        if (it != cfg.kv.end()) tc.threads = std::stoi(it->second);

        Dataset data = load_dataset(dataset_dir);
        Vocabulary vocab = Vocabulary::load(vocab_path);
        CsrMatrix X;
        X.cols = vocab.dim();
        for (const auto& q : data.queries) X.append_row(vocab.transform(q));
        CsrMatrix Z;
        it = cfg.kv.find("embeddings");
        if (it != cfg.kv.end() && it->second != "pifa") {
            Z = load_csr(it->second);
            Z.l2_normalize_rows();
        } else {
            Z = pifa_embeddings(X, data.relevance, tc.threads);
        }
        build_tree(Z, tc).save(out_chain_path);
        StringMap echo = cfg.kv;
        echo.erase("threads");
        std::string vocab_hash = hash_hex(fnv1a64_file(vocab_path));
        write_run_manifest(out_chain_path, "build-tree", echo,
                           {{"dataset_dir", dataset_dir},
                            {"vocab", vocab_path},
                            {"vocab_hash", vocab_hash}});
    });
}

tm_status tm_train(const char* config_path, const char* options_kv, const char* out_model_dir) {
    if (tm_status s = require(out_model_dir, "out_model_dir")) return s;
    return guarded([&] {
        PipelineConfig cfg;
        if (config_path) cfg = PipelineConfig::load(config_path);
        cfg.merge(parse_options(options_kv));
        run_train(cfg, out_model_dir);
    });
}

tm_status tm_prune(const char* model_dir, double epsilon, const char* out_model_dir) {
    if (tm_status s = require(model_dir && out_model_dir, "model_dir/out_model_dir")) return s;
    return guarded([&] { run_prune(model_dir, epsilon, out_model_dir); });
}

tm_status tm_predict_file(const char* model_dir, const char* queries_path, uint32_t beam,
                          uint32_t topk, int32_t threads, const char* out_predictions_path) {
    if (tm_status s = require(model_dir && queries_path && out_predictions_path,
                              "model_dir/queries_path/out_predictions_path"))
        return s;
    return guarded([&] { run_predict(model_dir, queries_path, beam, topk, threads, out_predictions_path); });
}

tm_status tm_evaluate(const char* model_dir, const char* predictions_path, const char* test_tsv,
                      uint32_t beam, uint32_t topk, uint32_t num_labels, int32_t threads,
                      const char* out_report_prefix) {
    if (tm_status s = require(test_tsv && out_report_prefix, "test_tsv/out_report_prefix")) return s;
    if ((model_dir == nullptr) == (predictions_path == nullptr))
        return fail(TM_ERR_INVALID_ARG, "evaluate: pass exactly one of model_dir or predictions_path");
    return guarded([&] {
        if (model_dir) {
            run_eval_model(model_dir, test_tsv, beam, topk, threads, out_report_prefix);
        } else {
            run_eval_predictions(predictions_path, test_tsv, num_labels, out_report_prefix);
        }
    });
}

tm_status tm_evaluate_bm25(const char* label_corpus_path, const char* test_tsv, double k1, double b,
                           uint32_t topk, const char* out_report_prefix) {
    if (tm_status s = require(label_corpus_path && test_tsv && out_report_prefix,
                              "label_corpus_path/test_tsv/out_report_prefix"))
        return s;
    return guarded([&] {
        Bm25Params params;
        params.k1 = k1;
        params.b = b;
        run_eval_bm25(label_corpus_path, test_tsv, params, topk, out_report_prefix);
    });
}

tm_status tm_bench(const char* model_dir, const char* queries_path, uint32_t beam, uint32_t topk,
                   uint32_t warmup, uint32_t repetitions, const char* out_report_path) {
    if (tm_status s = require(model_dir && queries_path && out_report_path,
                              "model_dir/queries_path/out_report_path"))
        return s;
    return guarded(
        [&] { run_bench(model_dir, queries_path, beam, topk, warmup, repetitions, out_report_path); });
}

}  // extern "C"
