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

#include "treematch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "treematch/indexer.hpp"
#include "treematch/ioutil.hpp"
#include "treematch/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace treematch {

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view content) {
    PipelineConfig cfg;
    size_t lineno = 0;
    size_t pos = 0;
    while (pos <= content.size()) {
        size_t nl = content.find('\n', pos);
        std::string_view line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                                 : nl - pos);
        pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty())
            throw FormatError("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv[key] = value;
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

void PipelineConfig::merge(const PipelineConfig& overrides) {
    for (const auto& [k, v] : overrides.kv) kv[k] = v;
}

std::string PipelineConfig::serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    return os.str();
}

namespace {

// Typed view over PipelineConfig that records every violation and rejects
// unknown keys, so one failed run lists all problems at once.
class ConfigReader {
public:
    explicit ConfigReader(const PipelineConfig& cfg) : cfg_(cfg) {}

    std::string get_string(const std::string& key, const std::string& def) {
        used_.push_back(key);
        auto it = cfg_.kv.find(key);
        return it == cfg_.kv.end() ? def : it->second;
    }

    std::string require_string(const std::string& key) {
        used_.push_back(key);
        auto it = cfg_.kv.find(key);
        if (it == cfg_.kv.end() || it->second.empty()) {
            errors_.push_back(key + ": required");
            return {};
        }
        return it->second;
    }

    int64_t get_int(const std::string& key, int64_t def, int64_t lo, int64_t hi) {
        used_.push_back(key);
        auto it = cfg_.kv.find(key);
        if (it == cfg_.kv.end()) return def;
        char* endp = nullptr;
        int64_t v = std::strtoll(it->second.c_str(), &endp, 10);
        if (endp == it->second.c_str() || *endp != '\0') {
            errors_.push_back(key + ": not an integer ('" + it->second + "')");
            return def;
        }
        if (v < lo || v > hi) {
            errors_.push_back(key + ": out of range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
            return def;
        }
        return v;
    }

    double get_double(const std::string& key, double def, double lo, double hi) {
        used_.push_back(key);
        auto it = cfg_.kv.find(key);
        if (it == cfg_.kv.end()) return def;
        char* endp = nullptr;
        double v = std::strtod(it->second.c_str(), &endp);
        if (endp == it->second.c_str() || *endp != '\0') {
            errors_.push_back(key + ": not a number ('" + it->second + "')");
            return def;
        }
        if (v < lo || v > hi) {
            errors_.push_back(key + ": out of range");
            return def;
        }
        return v;
    }

    bool get_bool(const std::string& key, bool def) {
        used_.push_back(key);
        auto it = cfg_.kv.find(key);
        if (it == cfg_.kv.end()) return def;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        errors_.push_back(key + ": expected true/false");
        return def;
    }

    void finish(const PipelineConfig& cfg) {
        for (const auto& [k, _] : cfg.kv) {
            if (std::find(used_.begin(), used_.end(), k) == used_.end())
                errors_.push_back(k + ": unknown key");
        }
        if (!errors_.empty()) {
            std::string msg = "invalid config:";
            for (const auto& e : errors_) msg += "\n  " + e;
            throw InvalidArgError(msg);
        }
    }

    void add_error(const std::string& msg) { errors_.push_back(msg); }

private:
    const PipelineConfig& cfg_;
    std::vector<std::string> used_;
    std::vector<std::string> errors_;
};

std::vector<Prediction> predict_lines(const Model& model, const std::vector<std::string>& lines,
                                      uint32_t beam, uint32_t topk, int threads) {
    std::vector<SparseVector> xs(lines.size());
    parallel_for(0, lines.size(), threads,
                 [&](int, uint64_t i) { xs[i] = model.vocab.transform(lines[i]); });
    return batch_predict(xs, model, beam, topk, threads);
}

}  // namespace

void run_train(const PipelineConfig& config, const std::string& out_model_dir) {
    ConfigReader r(config);
    // either a text dataset directory, or pre-vectorized features plus a
    // fitted vocabulary (SVMLight text or the binary CSR pair)
    const std::string dataset_dir = r.get_string("dataset_dir", "");
    const std::string data_svmlight = r.get_string("data.svmlight", "");
    const std::string data_x_csr = r.get_string("data.x_csr", "");
    const std::string data_y_csr = r.get_string("data.y_csr", "");
    const std::string vocab_file = r.get_string("vectorizer.file", "");
    const bool numeric_input = !data_svmlight.empty() || !data_x_csr.empty();
    if (dataset_dir.empty() && !numeric_input)
        r.add_error("dataset_dir: required (or data.svmlight / data.x_csr + data.y_csr)");
    if (numeric_input && vocab_file.empty())
        r.add_error("vectorizer.file: required with pre-vectorized data");
    if (!data_x_csr.empty() && data_y_csr.empty())
        r.add_error("data.y_csr: required with data.x_csr");
    if (!data_svmlight.empty() && !data_x_csr.empty())
        r.add_error("data.svmlight: conflicts with data.x_csr");
    const uint64_t seed = static_cast<uint64_t>(r.get_int("seed", 7, 0, INT64_MAX));
    const int threads = static_cast<int>(r.get_int("threads", 0, 0, 4096));

    VectorizerConfig vc;
    vc.max_unigrams = static_cast<uint32_t>(r.get_int("vectorizer.max_unigrams", 100000, 0, UINT32_MAX));
    vc.max_bigrams = static_cast<uint32_t>(r.get_int("vectorizer.max_bigrams", 200000, 0, UINT32_MAX));
    vc.max_char_trigrams =
        static_cast<uint32_t>(r.get_int("vectorizer.max_char_trigrams", 100000, 0, UINT32_MAX));
    vc.lowercase = r.get_bool("vectorizer.lowercase", true);
    vc.punctuation = r.get_string("vectorizer.punctuation", vc.punctuation);

    TreeConfig tc;
    tc.branching = static_cast<uint32_t>(r.get_int("tree.branching", 32, 2, 1 << 20));
    tc.max_leaf = static_cast<uint32_t>(r.get_int("tree.max_leaf", 100, 1, INT32_MAX));
    tc.kmeans.max_iters = static_cast<uint32_t>(r.get_int("tree.kmeans_max_iters", 50, 1, 100000));
    tc.kmeans.tol = r.get_double("tree.kmeans_tol", 1e-4, 0.0, 1.0);
    tc.seed = seed;
    tc.threads = threads;
    const std::string embeddings = r.get_string("tree.embeddings", "pifa");

    TrainConfig trc;
    trc.lambda = r.get_double("train.lambda", 1.0, 1e-12, 1e12);
    const std::string loss = r.get_string("train.loss", "squared-hinge");
    if (loss == "squared-hinge") {
        trc.loss = Loss::SquaredHinge;
    } else if (loss == "logistic") {
        trc.loss = Loss::Logistic;
    } else {
        r.add_error("train.loss: expected squared-hinge or logistic");
    }
    trc.solver_max_iters = static_cast<uint32_t>(r.get_int("train.solver_max_iters", 100, 1, 1000000));
    trc.solver_tol = r.get_double("train.solver_tol", 0.1, 0.0, 1e6);
    const std::string neg = r.get_string("train.neg_sampling", "tfn");
    if (neg != "tfn") r.add_error("train.neg_sampling: only tfn is supported");
    trc.prune_epsilon = r.get_double("train.prune_epsilon", 0.0, 0.0, 1e12);
    trc.threads = threads;
    trc.seed = seed;

    const std::string activation = r.get_string("model.activation", "l3-hinge");
    if (activation != "l3-hinge" && activation != "sigmoid")
        r.add_error("model.activation: expected l3-hinge or sigmoid");
    const uint32_t default_beam = static_cast<uint32_t>(r.get_int("model.default_beam", 10, 1, 1 << 20));
    r.finish(config);

    Model model;
    CsrMatrix X;
    CsrMatrix Y;
    StringMap inputs;
    if (numeric_input) {
        model.vocab = Vocabulary::load(vocab_file);
        if (!data_svmlight.empty()) {
            auto xy = load_svmlight(data_svmlight);
            X = std::move(xy.features);
            Y = std::move(xy.labels);
            inputs["data.svmlight"] = data_svmlight;
            inputs["data_hash"] = hash_hex(fnv1a64_file(data_svmlight));
        } else {
            X = load_csr(data_x_csr);
            Y = load_csr(data_y_csr);
            inputs["data.x_csr"] = data_x_csr;
            inputs["data.y_csr"] = data_y_csr;
            inputs["x_hash"] = hash_hex(fnv1a64_file(data_x_csr));
            inputs["y_hash"] = hash_hex(fnv1a64_file(data_y_csr));
        }
        if (X.cols != model.vocab.dim())
            throw InvalidArgError("train: feature dim " + std::to_string(X.cols) +
                                  " does not match vectorizer dim " +
                                  std::to_string(model.vocab.dim()));
        // rows are expected unit-norm; only touch ones that are not, so
        // already-normalized input stays bit-identical
        for (index_t r = 0; r < X.rows; ++r) {
            double s = 0.0;
            for (offset_t i = X.indptr[r]; i < X.indptr[r + 1]; ++i) s += X.values[i] * X.values[i];
            if (s > 0.0 && std::fabs(s - 1.0) > 1e-12) {
                double inv = 1.0 / std::sqrt(s);
                for (offset_t i = X.indptr[r]; i < X.indptr[r + 1]; ++i) X.values[i] *= inv;
            }
        }
        std::fill(Y.values.begin(), Y.values.end(), 1.0);
    } else {
        Dataset data = load_dataset(dataset_dir);
        if (data.queries.empty()) throw InvalidArgError("train: dataset has no queries");
        model.vocab = Vocabulary::fit(data.queries, vc);
        std::vector<SparseVector> xs(data.queries.size());
        parallel_for(0, data.queries.size(), threads,
                     [&](int, uint64_t i) { xs[i] = model.vocab.transform(data.queries[i]); });
        X.cols = model.vocab.dim();
        for (const auto& v : xs) X.append_row(v);
        Y = std::move(data.relevance);
        inputs["dataset_dir"] = dataset_dir;
        inputs["queries_hash"] =
            hash_hex(fnv1a64_file((fs::path(dataset_dir) / "queries.txt").string()));
        inputs["truth_hash"] = hash_hex(fnv1a64_file((fs::path(dataset_dir) / "truth.txt").string()));
    }

    CsrMatrix Z;
    if (embeddings == "pifa") {
        Z = pifa_embeddings(X, Y, threads);
    } else {
        Z = load_csr(embeddings);
        if (Z.rows != Y.cols)
            throw InvalidArgError("tree.embeddings: row count does not match label count");
        Z.l2_normalize_rows();
    }
    model.chain = build_tree(Z, tc);

    std::vector<LayerTrainStats> stats;
    model.weights = train(X, Y, model.chain, trc, &stats);
    model.activation = activation_from_string(activation);
    model.default_beam = default_beam;
    model.prune_epsilon = trc.prune_epsilon;

    // echoed config: the effective values, minus execution details (threads)
    StringMap echo = config.kv;
    echo.erase("threads");
    save_model(model, out_model_dir, echo, inputs);

    std::ostringstream st;
    for (size_t t = 0; t < stats.size(); ++t) {
        st << "layer." << (t + 1) << ".columns = " << stats[t].columns << '\n';
        st << "layer." << (t + 1) << ".empty_columns = " << stats[t].empty_columns << '\n';
        st << "layer." << (t + 1) << ".total_active = " << stats[t].total_active << '\n';
        st << "layer." << (t + 1) << ".nnz = " << stats[t].nnz << '\n';
        st << "layer." << (t + 1) << ".solver_iters = " << stats[t].solver_iters << '\n';
        st << "layer." << (t + 1) << ".objective = " << format_double(stats[t].objective) << '\n';
    }
    write_text((fs::path(out_model_dir) / "train_stats.kv").string(), st.str());
}

void run_predict(const std::string& model_dir, const std::string& queries_path, uint32_t beam,
                 uint32_t topk, int threads, const std::string& out_path) {
    Model model = load_model(model_dir);
    if (beam == 0) beam = model.default_beam;
    auto lines = read_lines(queries_path);
    auto preds = predict_lines(model, lines, beam, topk, threads);
    if (out_path.size() > 4 && out_path.compare(out_path.size() - 4, 4, ".csr") == 0) {
        // sorted sparse rows in the binary container format
        CsrMatrix rows;
        rows.cols = model.num_labels();
        std::vector<std::pair<index_t, double>> entries;
        for (const auto& p : preds) {
            entries.clear();
            for (size_t i = 0; i < p.labels.size(); ++i) entries.push_back({p.labels[i], p.scores[i]});
            std::sort(entries.begin(), entries.end());
            std::vector<index_t> idx;
            std::vector<double> val;
            for (auto& [l, s] : entries) {
                idx.push_back(l);
                val.push_back(s);
            }
            rows.append_row(idx, val);
        }
        save_csr(rows, out_path);
    } else {
        save_predictions(preds, out_path);
    }
    StringMap cfg{{"beam", std::to_string(beam)}, {"topk", std::to_string(topk)}};
    std::string queries_hash = hash_hex(fnv1a64_file(queries_path));
    StringMap inputs{{"model_dir", model_dir},
                     {"queries", queries_path},
                     {"queries_hash", queries_hash}};
    write_run_manifest(out_path, "predict", cfg, inputs);
}

namespace {

EvalReport finish_eval(EvalReport report, const StringMap& echo, const StringMap& inputs,
                       const std::string& out_prefix) {
    report.config_echo = echo;
    write_text(out_prefix + ".kv", report_to_kv(report));
    write_text(out_prefix + ".txt", report_to_text(report));
    write_run_manifest(out_prefix, "evaluate", echo, inputs);
    return report;
}

constexpr uint32_t kDefaultKs[] = {10, 50, 100};

}  // namespace

EvalReport run_eval_model(const std::string& model_dir, const std::string& test_tsv, uint32_t beam,
                          uint32_t topk, int threads, const std::string& out_prefix) {
    Model model = load_model(model_dir);
    if (beam == 0) beam = model.default_beam;
    TestSet test = load_test_tsv(test_tsv, model.num_labels());
    auto preds = predict_lines(model, test.queries, beam, topk, threads);
    EvalReport report = evaluate_recall(preds, test.truths, kDefaultKs);
    StringMap echo{{"mode", "model"},
                   {"beam", std::to_string(beam)},
                   {"topk", std::to_string(topk)}};
    std::string test_hash = hash_hex(fnv1a64_file(test_tsv));
    StringMap inputs{{"model_dir", model_dir}, {"test", test_tsv}, {"test_hash", test_hash}};
    return finish_eval(std::move(report), echo, inputs, out_prefix);
}

EvalReport run_eval_predictions(const std::string& predictions_path, const std::string& test_tsv,
                                index_t num_labels, const std::string& out_prefix) {
    TestSet test = load_test_tsv(test_tsv, num_labels);
    auto preds = load_predictions(predictions_path, test.queries.size());
    EvalReport report = evaluate_recall(preds, test.truths, kDefaultKs);
    StringMap echo{{"mode", "predictions"}};
    std::string predictions_hash = hash_hex(fnv1a64_file(predictions_path));
    std::string test_hash = hash_hex(fnv1a64_file(test_tsv));
    StringMap inputs{{"predictions", predictions_path},
                     {"predictions_hash", predictions_hash},
                     {"test", test_tsv},
                     {"test_hash", test_hash}};
    return finish_eval(std::move(report), echo, inputs, out_prefix);
}

EvalReport run_eval_bm25(const std::string& label_corpus_path, const std::string& test_tsv,
                         const Bm25Params& params, uint32_t topk, const std::string& out_prefix) {
    auto docs = read_lines(label_corpus_path);
    auto index = InvertedIndex::build(docs, VectorizerConfig{}, params);
    TestSet test = load_test_tsv(test_tsv, static_cast<index_t>(docs.size()));
    std::vector<Prediction> preds(test.queries.size());
    parallel_for(0, test.queries.size(), 0,
                 [&](int, uint64_t i) { preds[i] = index.topk(test.queries[i], topk); });
    EvalReport report = evaluate_recall(preds, test.truths, kDefaultKs);
    StringMap echo{{"mode", "bm25"},
                   {"k1", format_double(params.k1)},
                   {"b", format_double(params.b)},
                   {"topk", std::to_string(topk)}};
    std::string corpus_hash = hash_hex(fnv1a64_file(label_corpus_path));
    std::string test_hash = hash_hex(fnv1a64_file(test_tsv));
    StringMap inputs{{"corpus", label_corpus_path},
                     {"corpus_hash", corpus_hash},
                     {"test", test_tsv},
                     {"test_hash", test_hash}};
    return finish_eval(std::move(report), echo, inputs, out_prefix);
}

void run_prune(const std::string& model_dir, double epsilon, const std::string& out_model_dir) {
    if (epsilon < 0.0) throw InvalidArgError("prune: epsilon must be >= 0");
    Model model = load_model(model_dir);
    StringMap echo = load_model_config_echo(model_dir);
    prune(model.weights, epsilon);
    model.prune_epsilon = std::max(model.prune_epsilon, epsilon);
    echo["train.prune_epsilon"] = format_double(model.prune_epsilon);
    StringMap inputs{{"model_dir", model_dir}};
    save_model(model, out_model_dir, echo, inputs);
}

EvalReport run_bench(const std::string& model_dir, const std::string& queries_path, uint32_t beam,
                     uint32_t topk, uint32_t warmup, uint32_t repetitions,
                     const std::string& out_path) {
    Model model = load_model(model_dir);
    if (beam == 0) beam = model.default_beam;
    auto lines = read_lines(queries_path);
    EvalReport report = bench_latency(model, lines, beam, topk, warmup, repetitions);
    write_text(out_path, report_to_kv(report));
    std::string queries_hash = hash_hex(fnv1a64_file(queries_path));
    write_run_manifest(out_path, "bench",
                       {{"beam", std::to_string(beam)},
                        {"topk", std::to_string(topk)},
                        {"warmup", std::to_string(warmup)},
                        {"repetitions", std::to_string(repetitions)}},
                       {{"model_dir", model_dir},
                        {"queries", queries_path},
                        {"queries_hash", queries_hash}});
    return report;
}

void write_run_manifest(const std::string& out_path, const std::string& command,
                        const StringMap& config, const StringMap& inputs) {
    json manifest = {
        {"format", "treematch-run"},
        {"version", 1},
        {"tool_version", kVersion},
        {"command", command},
        {"config", json(config)},
        {"inputs", json(inputs)},
    };
    write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

}  // namespace treematch
