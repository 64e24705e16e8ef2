#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "sgcn/data.hpp"

using namespace sgcn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "sgcn_data_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
    fs::path p = temp_dir() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

} // namespace

TEST_CASE("label sets") {
    LabelSet top4 = LabelSet::pdtb_top4();
    CHECK(top4.labels == std::vector<std::string>{"Comparison", "Contingency", "Expansion",
                                                  "Temporal"});
    CHECK(LabelSet::cdtb_9().size() == 9);
    CHECK(top4.index_of("Expansion") == 2);
    CHECK(top4.index_of("Nope") == -1);
    CHECK_THROWS_AS(LabelSet::custom({"only-one"}), ConfigError);
}

TEST_CASE("load_relations happy path and sense skipping") {
    fs::path p = write_file("rel_ok.jsonl",
        R"({"id":"e1","arg1_tokens":["a"],"arg2_tokens":["b"],"sense":"Temporal"})" "\n"
        R"({"id":"e2","arg1_tokens":["c","d"],"arg2_tokens":["e"],"sense":"AltLex-ish-unknown"})" "\n"
        R"({"id":"e3","arg1_tokens":["f"],"arg2_tokens":["g"],"sense":"Expansion"})" "\n");
    RelationLoadStats stats;
    auto records = load_relations(p.string(), LabelSet::pdtb_top4(), &stats);
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "e1"); // file order preserved
    CHECK(records[1].id == "e3");
    CHECK(stats.skipped_unknown_sense == 1);

    // Idempotent: loading again gives the same records.
    auto again = load_relations(p.string(), LabelSet::pdtb_top4());
    CHECK(again.size() == records.size());
    CHECK(again[1].arg2_tokens == records[1].arg2_tokens);
}

TEST_CASE("load_relations errors name the offending line") {
    fs::path p = write_file("rel_bad.jsonl",
        R"({"id":"e1","arg1_tokens":["a"],"arg2_tokens":["b"],"sense":"Temporal"})" "\n"
        "{not json}\n"
        R"({"id":"e3","arg1_tokens":["f"],"arg2_tokens":["g"],"sense":"Expansion"})" "\n");
    CHECK_THROWS_WITH_AS(load_relations(p.string(), LabelSet::pdtb_top4()),
                         doctest::Contains(":2"), DataError);

    fs::path empty_arg = write_file("rel_empty_arg.jsonl",
        R"({"id":"e1","arg1_tokens":[],"arg2_tokens":["b"],"sense":"Temporal"})" "\n");
    CHECK_THROWS_AS(load_relations(empty_arg.string(), LabelSet::pdtb_top4()), DataError);

    fs::path all_skipped = write_file("rel_none.jsonl",
        R"({"id":"e1","arg1_tokens":["a"],"arg2_tokens":["b"],"sense":"Mystery"})" "\n");
    CHECK_THROWS_AS(load_relations(all_skipped.string(), LabelSet::pdtb_top4()), DataError);

    CHECK_THROWS_AS(load_relations((temp_dir() / "missing.jsonl").string(),
                                   LabelSet::pdtb_top4()),
                    IoError);
}

TEST_CASE("load_embeddings parses, counts and seeds OOV") {
    fs::path p = write_file("emb_ok.txt",
        "the 0.1 0.2\n"
        "cat 0.3 0.4\n"
        "the 9.9 9.9\n"      // duplicate: first wins
        "broken 1.0\n"        // wrong arity
        "also broken 1 2 3\n" // wrong arity
        "dog -0.5 0.25\n");
    EmbeddingLoadStats stats;
    EmbeddingTable t = load_embeddings(p.string(), 2, 42, true, &stats);
    CHECK(t.vocab_size() == 3);
    CHECK(t.matrix.rows() == 5); // 3 tokens + OOV + PAD
    CHECK(stats.duplicate_tokens == 1);
    CHECK(stats.malformed_lines == 2);
    CHECK(t.matrix(t.lookup("the"), 0) == 0.1);
    CHECK(t.matrix(t.lookup("the"), 1) == 0.2);
    CHECK(t.lookup("unseen") == t.oov_index());
    for (int j = 0; j < 2; ++j) {
        CHECK(t.matrix(t.oov_index(), j) >= -0.05);
        CHECK(t.matrix(t.oov_index(), j) <= 0.05);
        CHECK(t.matrix(t.pad_index(), j) == 0.0);
    }

    // Same seed, same OOV row.
    EmbeddingTable t2 = load_embeddings(p.string(), 2, 42);
    CHECK(t.matrix(t.oov_index(), 0) == t2.matrix(t2.oov_index(), 0));

    CHECK_THROWS_AS(load_embeddings((temp_dir() / "no_such.txt").string(), 2, 1), IoError);
    fs::path junk = write_file("emb_junk.txt", "a b c\nx y\n");
    CHECK_THROWS_AS(load_embeddings(junk.string(), 2, 1), DataError);
}

TEST_CASE("synthetic corpus is balanced, deterministic and trigger-pure") {
    SyntheticSpec spec;
    spec.pairs = 4;
    spec.vocab = 24;
    spec.classes = 2;
    spec.seed = 5;
    SyntheticCorpus c = gen_synthetic(spec);
    REQUIRE(c.records.size() == 4);
    std::map<std::string, int> per_class;
    for (auto& r : c.records) ++per_class[r.sense];
    CHECK(per_class["Class0"] == 2);
    CHECK(per_class["Class1"] == 2);

    SyntheticCorpus c2 = gen_synthetic(spec);
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        CHECK(c.records[i].arg1_tokens == c2.records[i].arg1_tokens);
        CHECK(c.records[i].arg2_tokens == c2.records[i].arg2_tokens);
    }
    CHECK(c.embedding_lines == c2.embedding_lines);

    CHECK_THROWS_AS(gen_synthetic(SyntheticSpec{4, 24, 1, 0}), ConfigError);  // classes < 2
    CHECK_THROWS_AS(gen_synthetic(SyntheticSpec{4, 19, 2, 0}), ConfigError);  // vocab too small
}

TEST_CASE("trigger pairs co-occur only under their own label") {
    SyntheticSpec spec;
    spec.pairs = 2000;
    spec.vocab = 200;
    spec.classes = 4;
    spec.seed = 99;
    SyntheticCorpus c = gen_synthetic(spec);

    auto contains = [](const std::vector<std::string>& tokens, const std::string& t) {
        for (const auto& x : tokens)
            if (x == t) return true;
        return false;
    };
    for (int k = 0; k < spec.classes; ++k) {
        const auto& [t1, t2] = c.trigger_pairs[k];
        std::string label = "Class" + std::to_string(k);
        int cooccur = 0, in_label = 0;
        for (const auto& r : c.records) {
            bool both = contains(r.arg1_tokens, t1) && contains(r.arg2_tokens, t2);
            if (r.sense == label) {
                ++in_label;
                CHECK(both); // planted in every record of its class
            } else {
                CHECK(!both); // never co-occurs elsewhere
            }
            cooccur += both;
        }
        CHECK(cooccur == in_label);
        CHECK(in_label == 500);
    }
}

TEST_CASE("checkpoint round trip preserves logits bitwise") {
    SyntheticSpec spec;
    spec.pairs = 6;
    spec.vocab = 30;
    spec.classes = 3;
    spec.seed = 777;
    spec.d_e = 6;
    SyntheticCorpus c = gen_synthetic(spec);
    fs::path emb = temp_dir() / "ckpt_emb.txt";
    write_lines(emb.string(), c.embedding_lines);
    EmbeddingTable table = load_embeddings(emb.string(), spec.d_e, 1);

    ModelDims dims;
    dims.d_e = spec.d_e;
    dims.hidden = 4;
    dims.d_g = 3;
    dims.h_mlp = 3;
    dims.classes = 3;
    Rng rng(2);
    SgcnModel model = SgcnModel::init(table, dims, rng);

    fs::path ckpt = temp_dir() / "model.ckpt.json";
    save_checkpoint(model, c.labels, CheckpointMeta{777, 5}, ckpt.string());
    LoadedCheckpoint loaded = load_checkpoint(ckpt.string());
    CHECK(loaded.labels == c.labels);
    CHECK(loaded.meta.seed == 777);
    CHECK(loaded.meta.epoch == 5);

    for (int trial = 0; trial < 10; ++trial) {
        const RelationRecord& r = c.records[trial % c.records.size()];
        Tape t1, t2;
        BoundModel a(t1, model), b(t2, loaded.model);
        Tensor la = a.forward(r.arg1_tokens, r.arg2_tokens).logits;
        Tensor lb = b.forward(r.arg1_tokens, r.arg2_tokens).logits;
        CHECK(la.values() == lb.values()); // bitwise
    }

    // Every parameter round-trips bitwise.
    auto before = model.params();
    auto after = loaded.model.params();
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(before[i].tensor->values() == after[i].tensor->values());
}

TEST_CASE("checkpoint rejects truncation, version and dimension mismatches") {
    SyntheticSpec spec;
    spec.pairs = 4;
    spec.vocab = 20;
    spec.classes = 2;
    spec.seed = 3;
    spec.d_e = 4;
    SyntheticCorpus c = gen_synthetic(spec);
    fs::path emb = temp_dir() / "rej_emb.txt";
    write_lines(emb.string(), c.embedding_lines);
    EmbeddingTable table = load_embeddings(emb.string(), spec.d_e, 1);

    ModelDims dims;
    dims.d_e = spec.d_e;
    dims.hidden = 4;
    dims.d_g = 3;
    dims.h_mlp = 3;
    dims.classes = 2;
    Rng rng(4);
    SgcnModel model = SgcnModel::init(table, dims, rng);
    fs::path ckpt = temp_dir() / "rej.ckpt.json";
    save_checkpoint(model, c.labels, CheckpointMeta{}, ckpt.string());

    // Truncated file: schema error, no partial model.
    std::ifstream in(ckpt);
    std::string full((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    write_file("trunc.ckpt.json", full.substr(0, full.size() / 2));
    CHECK_THROWS_AS(load_checkpoint((temp_dir() / "trunc.ckpt.json").string()), DataError);

    // Version mismatch names both versions.
    std::string versioned = full;
    versioned.replace(versioned.find("\"format_version\":1"), 18, "\"format_version\":9");
    write_file("ver.ckpt.json", versioned);
    CHECK_THROWS_WITH_AS(load_checkpoint((temp_dir() / "ver.ckpt.json").string()),
                         doctest::Contains("9"), ConfigError);

    // Session expecting H=8 rejects an H=4 checkpoint.
    ModelDims expect = dims;
    expect.hidden = 8;
    CHECK_THROWS_AS(load_checkpoint(ckpt.string(), expect), ConfigError);

    // A missing parameter is a schema error.
    std::string missing = full;
    auto pos = missing.find("\"mlp.b2\"");
    missing.replace(pos, 8, "\"mlp.xx\"");
    write_file("miss.ckpt.json", missing);
    CHECK_THROWS_WITH_AS(load_checkpoint((temp_dir() / "miss.ckpt.json").string()),
                         doctest::Contains("mlp.b2"), DataError);
}

TEST_CASE("interaction csv format") {
    Tensor m(3, 2, {0.5, -0.25, 1.0, 0.0, -1.0, 0.125});
    fs::path p = temp_dir() / "m.csv";
    write_interaction_csv(m, p.string());
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    CHECK(line == "3,2");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 1);
    }
    CHECK(rows == 3);
}

TEST_CASE("relation round trip through write_relations") {
    std::vector<RelationRecord> records = {
        {"a", {"x", "y"}, {"z"}, "Class0"},
        {"b", {"p"}, {"q", "r"}, "Class1"},
    };
    fs::path p = temp_dir() / "roundtrip.jsonl";
    write_relations(p.string(), records);
    auto loaded = load_relations(p.string(), LabelSet::custom({"Class0", "Class1"}));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].arg1_tokens == records[0].arg1_tokens);
    CHECK(loaded[1].arg2_tokens == records[1].arg2_tokens);
    CHECK(loaded[1].sense == "Class1");
}
