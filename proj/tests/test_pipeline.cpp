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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "treematch/indexer.hpp"
#include "treematch/ioutil.hpp"
#include "treematch/pipeline.hpp"

using namespace treematch;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "tm_pipeline_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// small synthetic dataset + train config shared by the round-trip tests
fs::path make_tiny_dataset(const std::string& name, uint64_t seed = 3) {
    auto dir = fresh_dir(name);
    SynthParams p;
    p.num_labels = 120;
    p.num_train = 900;
    p.num_test = 150;
    p.num_topics = 8;
    p.seed = seed;
    synth_write(synth_generate(p), p, dir.string());
    return dir;
}

PipelineConfig tiny_train_config(const fs::path& dataset) {
    PipelineConfig cfg;
    cfg.kv["dataset_dir"] = dataset.string();
    cfg.kv["tree.branching"] = "4";
    cfg.kv["tree.max_leaf"] = "12";
    cfg.kv["model.activation"] = "sigmoid";
    cfg.kv["seed"] = "11";
    cfg.kv["vectorizer.max_unigrams"] = "2000";
    cfg.kv["vectorizer.max_bigrams"] = "2000";
    cfg.kv["vectorizer.max_char_trigrams"] = "2000";
    return cfg;
}

}  // namespace

TEST_CASE("pipeline config parses, merges and reports bad lines") {
    auto cfg = PipelineConfig::parse("# comment\n a = 1 \n\nb.c = two words \n");
    CHECK(cfg.kv.at("a") == "1");
    CHECK(cfg.kv.at("b.c") == "two words");
    CHECK_THROWS_AS(PipelineConfig::parse("novalue\n"), FormatError);

    PipelineConfig over;
    over.kv["a"] = "2";
    cfg.merge(over);
    CHECK(cfg.kv.at("a") == "2");
}

TEST_CASE("run_train lists every config violation at once") {
    PipelineConfig cfg;
    cfg.kv["train.lambda"] = "not-a-number";
    cfg.kv["tree.branching"] = "1";
    cfg.kv["mystery.key"] = "x";
    // dataset_dir missing as well
    try {
        run_train(cfg, fresh_dir("cfg_errors").string());
        FAIL("expected InvalidArgError");
    } catch (const InvalidArgError& e) {
        std::string msg = e.what();
        CHECK(msg.find("dataset_dir") != std::string::npos);
        CHECK(msg.find("train.lambda") != std::string::npos);
        CHECK(msg.find("tree.branching") != std::string::npos);
        CHECK(msg.find("mystery.key") != std::string::npos);
    }
}

TEST_CASE("ingest aggregates counts, dedupes and assigns dense ids") {
    auto dir = fresh_dir("ingest");
    auto pairs = dir / "pairs.tsv";
    write_file(pairs,
               "red shoes\tB001\t2\n"
               "red shoes\tB001\t1\n"   // duplicate pair: counts aggregate
               "blue hat\tB002\n"       // implicit count 1
               "blue hat\tB003\t0\n"    // below threshold after aggregation
               "green sock\tB004\t5\n");
    auto data = ingest_pairs(pairs.string(), 1);
    CHECK(data.queries.size() == 3);
    CHECK(data.num_labels() == 3);  // B003 dropped
    CHECK(data.relevance.nnz() == 3);
    CHECK(data.label_names == std::vector<std::string>{"B001", "B002", "B004"});

    // threshold 3 keeps only aggregated counts >= 3
    auto data3 = ingest_pairs(pairs.string(), 3);
    CHECK(data3.num_labels() == 2);  // B001 (2+1) and B004 (5)

    CHECK_THROWS_AS(ingest_pairs(pairs.string(), 100), InvalidArgError);

    auto bad = dir / "bad.tsv";
    write_file(bad, "only one column\n");
    try {
        ingest_pairs(bad.string(), 1);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":1") != std::string::npos);  // line number
    }
}

TEST_CASE("ingest split-by-column routes marked pairs to the test side") {
    auto dir = fresh_dir("ingest_split");
    auto pairs = dir / "pairs.tsv";
    write_file(pairs,
               "red shoes\tB001\t2\tm1\n"
               "red shoes\tB001\t1\tm2\n"     // same pair, later period -> test
               "blue hat\tB002\t1\tm1\n"
               "blue hat\tB001\t1\tm2\n"      // test pair, label known from train
               "green sock\tB009\t1\tm2\n"    // test-only query, label unseen in train
               "green sock\tB002\t1\tm1\n");
    SplitSpec split;
    split.mode = SplitSpec::Mode::ByColumn;
    split.column = 4;
    split.value = "m2";
    TestSet test;
    auto data = ingest_pairs(pairs.string(), 1, split, &test);

    CHECK(data.queries == std::vector<std::string>{"red shoes", "blue hat", "green sock"});
    CHECK(data.label_names == std::vector<std::string>{"B001", "B002"});
    REQUIRE(test.queries.size() == 3);
    // "red shoes" test truth: B001 (id 0); "blue hat": B001; "green sock": B009 unseen -> empty
    for (size_t i = 0; i < test.queries.size(); ++i) {
        if (test.queries[i] == "green sock") {
            CHECK(test.truths[i].empty());
        } else {
            CHECK(test.truths[i] == std::vector<index_t>{0});
        }
    }
}

TEST_CASE("ingest random split moves whole queries deterministically") {
    auto dir = fresh_dir("ingest_rsplit");
    auto pairs = dir / "pairs.tsv";
    std::ostringstream os;
    for (int q = 0; q < 200; ++q) {
        os << "query number " << q << "\tB" << (q % 50) << "\t1\n";
        os << "query number " << q << "\tB" << ((q + 7) % 50) << "\t1\n";
    }
    write_file(pairs, os.str());
    SplitSpec split;
    split.mode = SplitSpec::Mode::Random;
    split.test_fraction = 0.2;
    split.seed = 3;
    TestSet test1, test2;
    auto d1 = ingest_pairs(pairs.string(), 1, split, &test1);
    auto d2 = ingest_pairs(pairs.string(), 1, split, &test2);
    CHECK(d1.queries == d2.queries);
    CHECK(test1.queries == test2.queries);
    CHECK(test1.truths == test2.truths);
    // fraction lands near 20%, and no query sits on both sides
    CHECK(test1.queries.size() > 20);
    CHECK(test1.queries.size() < 60);
    CHECK(d1.queries.size() + test1.queries.size() == 200);
    for (const auto& q : test1.queries) {
        CHECK(std::find(d1.queries.begin(), d1.queries.end(), q) == d1.queries.end());
    }
}

TEST_CASE("dataset directory round-trips") {
    auto dir = fresh_dir("ds_roundtrip");
    SynthParams p;
    p.num_labels = 40;
    p.num_train = 200;
    p.num_test = 30;
    p.num_topics = 4;
    auto data = synth_generate(p);
    synth_write(data, p, dir.string());
    auto loaded = load_dataset(dir.string());
    CHECK(loaded.queries == data.train.queries);
    CHECK(loaded.relevance == data.train.relevance);
    CHECK(loaded.label_names == data.train.label_names);
    REQUIRE(loaded.label_text.has_value());
    CHECK(*loaded.label_text == *data.train.label_text);

    auto test = load_test_tsv((dir / "test.tsv").string(), 40);
    CHECK(test.queries == data.test.queries);
    CHECK(test.truths == data.test.truths);
}

TEST_CASE("synth generation is deterministic per seed and honors the semantic fraction") {
    SynthParams p;
    p.num_labels = 60;
    p.num_train = 300;
    p.num_test = 400;
    p.num_topics = 6;
    p.seed = 42;
    auto a = synth_generate(p);
    auto b = synth_generate(p);
    CHECK(a.train.queries == b.train.queries);
    CHECK(a.test.queries == b.test.queries);
    CHECK(a.train.relevance == b.train.relevance);

    // semantic queries contain no label-side surface (tokens start with 'z')
    size_t semantic = 0;
    for (const auto& q : a.test.queries) {
        bool all_syn = true;
        for (const auto& tok : tokenize(q)) {
            if (tok[0] != 'z') all_syn = false;
        }
        if (all_syn) ++semantic;
    }
    double frac = static_cast<double>(semantic) / a.test.queries.size();
    CHECK(frac > 0.4);
    CHECK(frac < 0.6);

    // synonym surfaces never appear in label text
    for (const auto& text : *a.train.label_text) {
        for (const auto& tok : tokenize(text)) CHECK(tok[0] != 'z');
    }
}

TEST_CASE("train -> save -> load -> predict round trip is bit-exact") {
    auto dataset = make_tiny_dataset("roundtrip_ds");
    auto model_dir = fresh_dir("roundtrip_model");
    run_train(tiny_train_config(dataset), model_dir.string());

    Model loaded = load_model(model_dir.string());
    loaded.validate();

    // in-memory retrain with the same config gives identical predictions
    auto model_dir2 = fresh_dir("roundtrip_model2");
    run_train(tiny_train_config(dataset), model_dir2.string());

    auto test = load_test_tsv((dataset / "test.tsv").string(), loaded.num_labels());
    Model loaded2 = load_model(model_dir2.string());
    QueryWorkspace ws;
    for (size_t i = 0; i < 25 && i < test.queries.size(); ++i) {
        auto p1 = predict_text(loaded, test.queries[i], 4, 10, ws);
        auto p2 = predict_text(loaded2, test.queries[i], 4, 10, ws);
        CHECK(p1.labels == p2.labels);
        CHECK(p1.scores == p2.scores);  // bit-for-bit
    }

    // model directory files are byte-identical across the two runs
    for (const auto& entry : fs::directory_iterator(model_dir)) {
        auto name = entry.path().filename().string();
        CAPTURE(name);
        CHECK(slurp(entry.path()) == slurp(model_dir2 / name));
    }
}

TEST_CASE("run_predict writes parseable predictions and a manifest sidecar") {
    auto dataset = make_tiny_dataset("predict_ds", 5);
    auto model_dir = fresh_dir("predict_model");
    run_train(tiny_train_config(dataset), model_dir.string());

    auto queries = fresh_dir("predict_out") / "queries.txt";
    auto test = load_test_tsv((dataset / "test.tsv").string(), 0);
    {
        std::ofstream os(queries);
        for (size_t i = 0; i < 40; ++i) os << test.queries[i] << "\n";
    }
    auto out = queries.parent_path() / "preds.tsv";
    run_predict(model_dir.string(), queries.string(), 0, 10, 2, out.string());
    CHECK(fs::exists(out));
    CHECK(fs::exists(out.string() + ".manifest.json"));

    // rerunning with a different thread count gives a byte-identical file
    auto out2 = queries.parent_path() / "preds2.tsv";
    run_predict(model_dir.string(), queries.string(), 0, 10, 1, out2.string());
    CHECK(slurp(out) == slurp(out2));
    auto preds = load_predictions(out.string(), 40);
    size_t nonempty = 0;
    for (const auto& p : preds) {
        if (!p.labels.empty()) ++nonempty;
        for (size_t i = 1; i < p.scores.size(); ++i) CHECK(p.scores[i] <= p.scores[i - 1]);
    }
    CHECK(nonempty == 40);

    // evaluating the file equals evaluating the model in memory
    auto test_tsv = fresh_dir("predict_eval") / "test_head.tsv";
    {
        std::ofstream os(test_tsv);
        std::ifstream is(dataset / "test.tsv");
        std::string line;
        for (size_t i = 0; i < 40 && std::getline(is, line); ++i) os << line << "\n";
    }
    Model model = load_model(model_dir.string());
    auto from_file = run_eval_predictions(out.string(), test_tsv.string(), model.num_labels(),
                                          (test_tsv.parent_path() / "rep_file").string());
    auto from_model = run_eval_model(model_dir.string(), test_tsv.string(), 0, 10, 2,
                                     (test_tsv.parent_path() / "rep_model").string());
    CHECK(from_file.recall_at[10] == doctest::Approx(from_model.recall_at[10]).epsilon(1e-12));
}

TEST_CASE("run_prune composes: prune(e1) then prune(e2) == prune(max)") {
    auto dataset = make_tiny_dataset("prune_ds", 9);
    auto model_dir = fresh_dir("prune_model");
    run_train(tiny_train_config(dataset), model_dir.string());

    auto a1 = fresh_dir("prune_a1");
    auto a2 = fresh_dir("prune_a2");
    auto b = fresh_dir("prune_b");
    run_prune(model_dir.string(), 0.05, a1.string());
    run_prune(a1.string(), 0.12, a2.string());
    run_prune(model_dir.string(), 0.12, b.string());

    Model ma = load_model(a2.string());
    Model mb = load_model(b.string());
    REQUIRE(ma.weights.size() == mb.weights.size());
    for (size_t t = 0; t < ma.weights.size(); ++t) CHECK(ma.weights[t] == mb.weights[t]);
    CHECK(ma.prune_epsilon == mb.prune_epsilon);

    // nnz and file sizes shrink monotonically with epsilon
    Model m0 = load_model(model_dir.string());
    CHECK(total_nnz(ma.weights) <= total_nnz(m0.weights));
    uint64_t size_orig = 0, size_pruned = 0;
    for (uint32_t t = 1; t <= m0.depth(); ++t) {
        auto name = "weights." + std::to_string(t) + ".csc";
        size_orig += fs::file_size(model_dir / name);
        size_pruned += fs::file_size(b / name);
    }
    CHECK(size_pruned <= size_orig);
}

TEST_CASE("corrupt model directories are rejected with a format error") {
    auto dataset = make_tiny_dataset("corrupt_ds", 13);
    auto model_dir = fresh_dir("corrupt_model");
    run_train(tiny_train_config(dataset), model_dir.string());

    // flip a byte in a weights file: hash check must catch it
    auto victim = model_dir / "weights.1.csc";
    auto bytes = slurp(victim);
    bytes[bytes.size() / 2] ^= 0x40;
    write_file(victim, bytes);
    CHECK_THROWS_AS(load_model(model_dir.string()), FormatError);

    CHECK_THROWS_AS(load_model(fresh_dir("no_model").string()), IoError);
}

TEST_CASE("train accepts pre-vectorized data: svmlight equals the text pipeline") {
    auto dataset = make_tiny_dataset("svm_ds", 23);
    auto text_model_dir = fresh_dir("svm_text_model");
    auto cfg = tiny_train_config(dataset);
    run_train(cfg, text_model_dir.string());

    // export the exact features the text pipeline would compute
    Model text_model = load_model(text_model_dir.string());
    auto vocab_path = fresh_dir("svm_files") / "vocab.txt";
    text_model.vocab.save(vocab_path.string());
    Dataset data = load_dataset(dataset.string());
    LabeledMatrix xy;
    xy.features.cols = text_model.vocab.dim();
    for (const auto& q : data.queries) xy.features.append_row(text_model.vocab.transform(q));
    xy.labels = data.relevance;
    auto svm_path = vocab_path.parent_path() / "train.svm";
    save_svmlight(xy, svm_path.string());

    PipelineConfig ncfg;
    ncfg.kv["data.svmlight"] = svm_path.string();
    ncfg.kv["vectorizer.file"] = vocab_path.string();
    ncfg.kv["tree.branching"] = cfg.kv["tree.branching"];
    ncfg.kv["tree.max_leaf"] = cfg.kv["tree.max_leaf"];
    ncfg.kv["model.activation"] = cfg.kv["model.activation"];
    ncfg.kv["seed"] = cfg.kv["seed"];
    auto svm_model_dir = fresh_dir("svm_model");
    run_train(ncfg, svm_model_dir.string());

    Model svm_model = load_model(svm_model_dir.string());
    REQUIRE(svm_model.weights.size() == text_model.weights.size());
    CHECK(svm_model.chain == text_model.chain);
    for (size_t t = 0; t < svm_model.weights.size(); ++t) {
        CHECK(svm_model.weights[t] == text_model.weights[t]);
    }

    // binary CSR pair route gives the same model too
    auto x_path = vocab_path.parent_path() / "x.csr";
    auto y_path = vocab_path.parent_path() / "y.csr";
    save_csr(xy.features, x_path.string());
    save_csr(xy.labels, y_path.string());
    PipelineConfig ccfg = ncfg;
    ccfg.kv.erase("data.svmlight");
    ccfg.kv["data.x_csr"] = x_path.string();
    ccfg.kv["data.y_csr"] = y_path.string();
    auto csr_model_dir = fresh_dir("csr_model");
    run_train(ccfg, csr_model_dir.string());
    Model csr_model = load_model(csr_model_dir.string());
    for (size_t t = 0; t < csr_model.weights.size(); ++t) {
        CHECK(csr_model.weights[t] == text_model.weights[t]);
    }

    // missing vocabulary with numeric data is a config violation
    PipelineConfig bad = ncfg;
    bad.kv.erase("vectorizer.file");
    CHECK_THROWS_AS(run_train(bad, fresh_dir("svm_bad").string()), InvalidArgError);
}

TEST_CASE("train accepts a prebuilt label-embedding file for tree construction") {
    auto dataset = make_tiny_dataset("emb_ds", 31);
    auto base_dir = fresh_dir("emb_base");
    auto cfg = tiny_train_config(dataset);
    run_train(cfg, base_dir.string());
    Model base = load_model(base_dir.string());

    // exporting the pifa embeddings and feeding them back reproduces the tree
    Dataset data = load_dataset(dataset.string());
    CsrMatrix X;
    X.cols = base.vocab.dim();
    for (const auto& q : data.queries) X.append_row(base.vocab.transform(q));
    auto Z = pifa_embeddings(X, data.relevance);
    auto z_path = fresh_dir("emb_files") / "labels.csr";
    save_csr(Z, z_path.string());

    PipelineConfig ecfg = cfg;
    ecfg.kv["tree.embeddings"] = z_path.string();
    auto emb_dir = fresh_dir("emb_model");
    run_train(ecfg, emb_dir.string());
    Model emb = load_model(emb_dir.string());
    CHECK(emb.chain == base.chain);
    for (size_t t = 0; t < emb.weights.size(); ++t) CHECK(emb.weights[t] == base.weights[t]);

    // wrong row count is rejected
    CsrMatrix bad = Z;
    bad.rows -= 1;
    bad.indptr.pop_back();
    auto bad_path = z_path.parent_path() / "bad.csr";
    save_csr(bad, bad_path.string());
    PipelineConfig bcfg = cfg;
    bcfg.kv["tree.embeddings"] = bad_path.string();
    CHECK_THROWS_AS(run_train(bcfg, fresh_dir("emb_bad").string()), InvalidArgError);
}

TEST_CASE("run_predict emits sorted sparse rows when asked for the binary format") {
    auto dataset = make_tiny_dataset("csrpred_ds", 29);
    auto model_dir = fresh_dir("csrpred_model");
    run_train(tiny_train_config(dataset), model_dir.string());

    auto dir = fresh_dir("csrpred_out");
    auto queries = dir / "queries.txt";
    auto test = load_test_tsv((dataset / "test.tsv").string(), 0);
    {
        std::ofstream os(queries);
        for (size_t i = 0; i < 20; ++i) os << test.queries[i] << "\n";
    }
    auto tsv_out = dir / "preds.tsv";
    auto csr_out = dir / "preds.csr";
    run_predict(model_dir.string(), queries.string(), 4, 10, 1, tsv_out.string());
    run_predict(model_dir.string(), queries.string(), 4, 10, 1, csr_out.string());

    auto tsv = load_predictions(tsv_out.string(), 20);
    auto mat = load_csr(csr_out.string());
    REQUIRE(mat.rows == 20);
    for (index_t q = 0; q < 20; ++q) {
        auto idx = mat.row_indices(q);
        auto val = mat.row_values(q);
        REQUIRE(idx.size() == tsv[q].labels.size());
        for (size_t i = 0; i < tsv[q].labels.size(); ++i) {
            auto it = std::find(idx.begin(), idx.end(), tsv[q].labels[i]);
            REQUIRE(it != idx.end());
            CHECK(val[it - idx.begin()] == tsv[q].scores[i]);
        }
    }
}

TEST_CASE("fnv1a64 hashing is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hash_hex(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
}
