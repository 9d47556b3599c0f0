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

// Command-line frontend. Talks to the engine exclusively through the C API
// in treematch/treematch.h, the same surface external callers get.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treematch/treematch.h"

namespace {

// exit codes: 0 ok, 1 usage, 2 io, 3 format, 4 invalid argument, 5 internal
int exit_code(tm_status s) {
    switch (s) {
        case TM_OK:
            return 0;
        case TM_ERR_IO:
            return 2;
        case TM_ERR_FORMAT:
            return 3;
        case TM_ERR_INVALID_ARG:
            return 4;
        default:
            return 5;
    }
}

int finish(tm_status s) {
    if (s != TM_OK) std::cerr << "error: " << tm_last_error() << "\n";
    return exit_code(s);
}

std::string kv_line(const std::string& key, const std::string& value) {
    return key + " = " + value + "\n";
}

void print_file(const std::string& path) {
    std::ifstream is(path);
    if (is) std::cout << is.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treematch: tree-based extreme multi-label engine for semantic matching"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tm_version()));

    int threads = 0;
    app.add_option("--threads", threads, "worker threads for all commands (0 = auto)")
        ->capture_default_str();

    // ---- synth-data ----
    auto* synth = app.add_subcommand("synth-data", "generate the bundled synthetic dataset");
    std::string synth_out;
    uint64_t sd_labels = 5000, sd_train = 20000, sd_test = 2000, sd_topics = 100, sd_seed = 7;
    uint64_t sd_tokens = 40;
    double sd_syn = 0.35, sd_sem = 0.5, sd_sib = 0.5;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--labels", sd_labels, "number of labels")->capture_default_str();
    synth->add_option("--train", sd_train, "number of training queries")->capture_default_str();
    synth->add_option("--test", sd_test, "number of test queries")->capture_default_str();
    synth->add_option("--topics", sd_topics, "number of topics")->capture_default_str();
    synth->add_option("--tokens-per-topic", sd_tokens)->capture_default_str();
    synth->add_option("--train-synonym-rate", sd_syn)->capture_default_str();
    synth->add_option("--test-semantic-fraction", sd_sem)->capture_default_str();
    synth->add_option("--sibling-positive-rate", sd_sib)->capture_default_str();
    synth->add_option("--seed", sd_seed)->capture_default_str();

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "build a dataset directory from a pairs TSV");
    std::string ingest_pairs, ingest_out;
    int64_t ingest_threshold = 1;
    ingest->add_option("--pairs", ingest_pairs, "TSV: query<TAB>label[<TAB>count]")->required();
    ingest->add_option("--out", ingest_out, "output dataset directory")->required();
    ingest->add_option("--threshold", ingest_threshold, "minimum aggregated count")
        ->capture_default_str();
    std::string ingest_split, ingest_split_value;
    uint64_t ingest_split_column = 4, ingest_split_seed = 7;
    double ingest_split_fraction = 0.1;
    ingest->add_option("--split", ingest_split, "train/test routing: column or random");
    ingest->add_option("--split-column", ingest_split_column, "1-based column for --split column")
        ->capture_default_str();
    ingest->add_option("--split-value", ingest_split_value, "column value that marks test pairs");
    ingest->add_option("--split-fraction", ingest_split_fraction, "test share for --split random")
        ->capture_default_str();
    ingest->add_option("--split-seed", ingest_split_seed)->capture_default_str();

    // ---- fit-vectorizer ----
    auto* fitv = app.add_subcommand("fit-vectorizer", "fit the n-gram TF-IDF vocabulary");
    std::string fitv_corpus, fitv_out, fitv_punct;
    uint64_t fitv_uni = 1000000, fitv_bi = 3000000, fitv_tri = 200000;
    bool fitv_no_lower = false;
    fitv->add_option("--corpus", fitv_corpus, "text corpus, one document per line")->required();
    fitv->add_option("--out", fitv_out, "output vocabulary file")->required();
    fitv->add_option("--max-unigrams", fitv_uni)->capture_default_str();
    fitv->add_option("--max-bigrams", fitv_bi)->capture_default_str();
    fitv->add_option("--max-char-trigrams", fitv_tri)->capture_default_str();
    fitv->add_flag("--no-lowercase", fitv_no_lower, "keep case as-is");
    fitv->add_option("--punctuation", fitv_punct, "characters stripped to spaces");

    // ---- build-tree ----
    auto* btree = app.add_subcommand("build-tree", "build the hierarchical label tree");
    std::string bt_dataset, bt_vocab, bt_out, bt_embeddings;
    uint64_t bt_branching = 32, bt_max_leaf = 100, bt_seed = 7;
    btree->add_option("--dataset", bt_dataset, "dataset directory")->required();
    btree->add_option("--vocab", bt_vocab, "fitted vocabulary file")->required();
    btree->add_option("--out", bt_out, "output chain file")->required();
    btree->add_option("--branching", bt_branching)->capture_default_str();
    btree->add_option("--max-leaf", bt_max_leaf)->capture_default_str();
    btree->add_option("--seed", bt_seed)->capture_default_str();
    btree->add_option("--embeddings", bt_embeddings,
                      "pifa (default) or a CSR file of label embeddings");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train a model end to end");
    std::string tr_config, tr_dataset, tr_out;
    std::vector<std::string> tr_set;
    train->add_option("--config", tr_config, "pipeline config file (key = value lines)");
    train->add_option("--dataset", tr_dataset, "dataset directory (overrides config)");
    train->add_option("--out", tr_out, "output model directory")->required();
    train->add_option("--set", tr_set, "extra overrides, e.g. --set train.lambda=0.5");

    // ---- prune ----
    auto* prune = app.add_subcommand("prune", "hard-threshold model weights");
    std::string pr_model, pr_out;
    double pr_eps = 0.0;
    prune->add_option("--model", pr_model)->required();
    prune->add_option("--epsilon", pr_eps)->required();
    prune->add_option("--out", pr_out, "output model directory")->required();

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "retrieve top-k labels for a queries file");
    std::string pd_model, pd_queries, pd_out;
    uint64_t pd_beam = 0, pd_topk = 10;
    predict->add_option("--model", pd_model)->required();
    predict->add_option("--queries", pd_queries, "one query per line")->required();
    predict->add_option("--out", pd_out, "output predictions TSV")->required();
    predict->add_option("--beam", pd_beam, "beam width (0 = model default)")->capture_default_str();
    predict->add_option("--topk", pd_topk)->capture_default_str();

    // ---- evaluate ----
    auto* eval = app.add_subcommand("evaluate", "Recall@k against a test TSV");
    std::string ev_model, ev_predictions, ev_test, ev_out, ev_bm25_corpus;
    uint64_t ev_beam = 0, ev_topk = 100, ev_num_labels = 0;
    double ev_k1 = 0.5, ev_b = 0.45;
    eval->add_option("--model", ev_model, "model directory");
    eval->add_option("--predictions", ev_predictions, "predictions TSV (alternative to --model)");
    eval->add_option("--bm25-corpus", ev_bm25_corpus, "label corpus file: run the BM25 baseline");
    eval->add_option("--test", ev_test, "test TSV: query<TAB>id,id,...")->required();
    eval->add_option("--out", ev_out, "report path prefix")->required();
    eval->add_option("--beam", ev_beam, "beam width (0 = model default)")->capture_default_str();
    eval->add_option("--topk", ev_topk, "retrieve this many labels")->capture_default_str();
    eval->add_option("--num-labels", ev_num_labels, "label count (predictions mode)");
    eval->add_option("--k1", ev_k1, "BM25 k1")->capture_default_str();
    eval->add_option("--b", ev_b, "BM25 b")->capture_default_str();

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "single-thread latency benchmark");
    std::string bn_model, bn_queries, bn_out;
    uint64_t bn_beam = 0, bn_topk = 100, bn_warmup = 100, bn_reps = 1;
    bench->add_option("--model", bn_model)->required();
    bench->add_option("--queries", bn_queries)->required();
    bench->add_option("--out", bn_out, "output report file")->required();
    bench->add_option("--beam", bn_beam)->capture_default_str();
    bench->add_option("--topk", bn_topk)->capture_default_str();
    bench->add_option("--warmup", bn_warmup)->capture_default_str();
    bench->add_option("--repetitions", bn_reps)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        std::ostringstream kv;
        kv << kv_line("labels", std::to_string(sd_labels)) << kv_line("train", std::to_string(sd_train))
           << kv_line("test", std::to_string(sd_test)) << kv_line("topics", std::to_string(sd_topics))
           << kv_line("tokens_per_topic", std::to_string(sd_tokens))
           << kv_line("train_synonym_rate", std::to_string(sd_syn))
           << kv_line("test_semantic_fraction", std::to_string(sd_sem))
           << kv_line("sibling_positive_rate", std::to_string(sd_sib))
           << kv_line("seed", std::to_string(sd_seed));
        return finish(tm_synth_data(kv.str().c_str(), synth_out.c_str()));
    }
    if (ingest->parsed()) {
        std::ostringstream kv;
        if (!ingest_split.empty()) {
            kv << kv_line("split", ingest_split)
               << kv_line("split.column", std::to_string(ingest_split_column))
               << kv_line("split.test_fraction", std::to_string(ingest_split_fraction))
               << kv_line("split.seed", std::to_string(ingest_split_seed));
            if (!ingest_split_value.empty()) kv << kv_line("split.value", ingest_split_value);
        }
        return finish(
            tm_ingest(ingest_pairs.c_str(), ingest_threshold, kv.str().c_str(), ingest_out.c_str()));
    }
    if (fitv->parsed()) {
        std::ostringstream kv;
        kv << kv_line("max_unigrams", std::to_string(fitv_uni))
           << kv_line("max_bigrams", std::to_string(fitv_bi))
           << kv_line("max_char_trigrams", std::to_string(fitv_tri))
           << kv_line("lowercase", fitv_no_lower ? "false" : "true");
        if (!fitv_punct.empty()) kv << kv_line("punctuation", fitv_punct);
        return finish(tm_fit_vectorizer(fitv_corpus.c_str(), kv.str().c_str(), fitv_out.c_str()));
    }
    if (btree->parsed()) {
        std::ostringstream kv;
        kv << kv_line("branching", std::to_string(bt_branching))
           << kv_line("max_leaf", std::to_string(bt_max_leaf))
           << kv_line("seed", std::to_string(bt_seed))
           << kv_line("threads", std::to_string(threads));
        if (!bt_embeddings.empty()) kv << kv_line("embeddings", bt_embeddings);
        return finish(
            tm_build_tree(bt_dataset.c_str(), bt_vocab.c_str(), kv.str().c_str(), bt_out.c_str()));
    }
    if (train->parsed()) {
        std::ostringstream kv;
        if (!tr_dataset.empty()) kv << kv_line("dataset_dir", tr_dataset);
        kv << kv_line("threads", std::to_string(threads));
        for (const auto& s : tr_set) {
            auto eq = s.find('=');
            if (eq == std::string::npos) {
                std::cerr << "error: --set expects key=value, got '" << s << "'\n";
                return 1;
            }
            kv << kv_line(s.substr(0, eq), s.substr(eq + 1));
        }
        const char* cfg = tr_config.empty() ? nullptr : tr_config.c_str();
        return finish(tm_train(cfg, kv.str().c_str(), tr_out.c_str()));
    }
    if (prune->parsed()) {
        return finish(tm_prune(pr_model.c_str(), pr_eps, pr_out.c_str()));
    }
    if (predict->parsed()) {
        return finish(tm_predict_file(pd_model.c_str(), pd_queries.c_str(),
                                      static_cast<uint32_t>(pd_beam), static_cast<uint32_t>(pd_topk),
                                      threads, pd_out.c_str()));
    }
    if (eval->parsed()) {
        tm_status s;
        if (!ev_bm25_corpus.empty()) {
            s = tm_evaluate_bm25(ev_bm25_corpus.c_str(), ev_test.c_str(), ev_k1, ev_b,
                                 static_cast<uint32_t>(ev_topk), ev_out.c_str());
        } else {
            const char* model = ev_model.empty() ? nullptr : ev_model.c_str();
            const char* preds = ev_predictions.empty() ? nullptr : ev_predictions.c_str();
            s = tm_evaluate(model, preds, ev_test.c_str(), static_cast<uint32_t>(ev_beam),
                            static_cast<uint32_t>(ev_topk), static_cast<uint32_t>(ev_num_labels),
                            threads, ev_out.c_str());
        }
        if (s == TM_OK) print_file(ev_out + ".txt");
        return finish(s);
    }
    if (bench->parsed()) {
        tm_status s = tm_bench(bn_model.c_str(), bn_queries.c_str(), static_cast<uint32_t>(bn_beam),
                               static_cast<uint32_t>(bn_topk), static_cast<uint32_t>(bn_warmup),
                               static_cast<uint32_t>(bn_reps), bn_out.c_str());
        if (s == TM_OK) print_file(bn_out);
        return finish(s);
    }
    return 1;
}
