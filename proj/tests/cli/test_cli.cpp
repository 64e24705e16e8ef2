// Drives the installed CLI binary end to end: happy paths, config echo,
// label-set mismatch and usage failures with their exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "sgcn/data.hpp"
#include "sgcn/graph.hpp"
#include "sgcn/model.hpp"
#include "sgcn/train.hpp"

using namespace sgcn;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

fs::path work_dir() {
    fs::path dir = fs::temp_directory_path() / "sgcn_cli_tests";
    fs::create_directories(dir);
    return dir;
}

CliResult run_cli(const std::string& args) {
    fs::path out = work_dir() / "last_output.txt";
    std::string cmd = std::string(SGCN_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {code, text};
}

// One tiny corpus + trained checkpoint shared across the cases below.
struct Fixture {
    fs::path dir = work_dir() / "fixture";
    fs::path checkpoint = dir / "model.json";

    Fixture() {
        fs::create_directories(dir);
        CliResult gen = run_cli(
            "gen-synthetic --pairs 80 --dev-pairs 20 --test-pairs 12 --classes 2 --vocab 40"
            " --embed-dim 12 --seed 11 --out-dir " + dir.string());
        REQUIRE(gen.exit_code == 0);
        CliResult train = run_cli(
            "train --train " + (dir / "train.jsonl").string() +
            " --dev " + (dir / "dev.jsonl").string() +
            " --embeddings " + (dir / "embeddings.txt").string() +
            " --labels custom:" + (dir / "labels.txt").string() +
            " --embed-dim 12 --hidden 6 --gcn-size 5 --mlp-hidden 4 --epochs 2 --batch 16"
            " --seed 3 --checkpoint " + checkpoint.string() +
            " --out " + (dir / "log.tsv").string());
        REQUIRE(train.exit_code == 0);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

} // namespace

TEST_CASE("train echoes the full resolved configuration and writes outputs") {
    Fixture& f = fixture();
    CHECK(fs::exists(f.checkpoint));
    CHECK(fs::exists(f.dir / "log.tsv"));

    // Defaults appear in the echo even when not on the command line.
    CliResult r = run_cli("train --train x.jsonl --dev y.jsonl --embeddings none.txt");
    CHECK(r.output.find("lr = 0.01") != std::string::npos);
    CHECK(r.output.find("decay = 0.9") != std::string::npos);
    CHECK(r.output.find("clip-lo = -5") != std::string::npos);
    CHECK(r.output.find("hidden = 128") != std::string::npos);
    CHECK(r.output.find("gcn-size = 100") != std::string::npos);
    CHECK(r.output.find("mlp-hidden = 64") != std::string::npos);
    CHECK(r.output.find("batch = 64") != std::string::npos);
}

TEST_CASE("config file values sit between defaults and flags") {
    fs::path ini = work_dir() / "opts.ini";
    std::ofstream(ini) << "[train]\nhidden=16\nlr=0.005\n";
    CliResult r = run_cli("--config " + ini.string() +
                          " train --train x.jsonl --dev y.jsonl --embeddings none.txt"
                          " --lr 0.02");
    CHECK(r.output.find("hidden = 16") != std::string::npos);  // from the file
    CHECK(r.output.find("lr = 0.02") != std::string::npos);    // flag beats file
    CHECK(r.output.find("gcn-size = 100") != std::string::npos); // default remains
}

TEST_CASE("missing embedding file exits 2 naming the path") {
    CliResult r = run_cli("train --train a.jsonl --dev b.jsonl --embeddings /no/such/file.txt");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("/no/such/file.txt") != std::string::npos);
}

TEST_CASE("unknown flags are usage errors") {
    CliResult r = run_cli("train --frobnicate 3");
    CHECK(r.exit_code == 2);
}

TEST_CASE("evaluate prints a report and writes matching JSON") {
    Fixture& f = fixture();
    fs::path json_path = work_dir() / "report.json";
    CliResult r = run_cli("evaluate --checkpoint " + f.checkpoint.string() +
                          " --test " + (f.dir / "test.jsonl").string() +
                          " --json " + json_path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("accuracy") != std::string::npos);
    CHECK(r.output.find("macro-F1") != std::string::npos);

    // The JSON report equals what the library computes on the same inputs.
    LoadedCheckpoint ckpt = load_checkpoint(f.checkpoint.string());
    auto test_set = load_relations((f.dir / "test.jsonl").string(), ckpt.labels);
    EvalReport expect = evaluate(ckpt.model, test_set, ckpt.labels, parse_task(ckpt.meta.task));

    std::ifstream in(json_path);
    nlohmann::json doc;
    in >> doc;
    CHECK(doc.at("accuracy").get<double>() == expect.accuracy);
    CHECK(doc.at("macro_f1").get<double>() == expect.macro_f1);
    CHECK(doc.at("total").get<int>() == expect.total);
}

TEST_CASE("evaluate rejects a mismatched label set with exit 2") {
    Fixture& f = fixture();
    CliResult r = run_cli("evaluate --checkpoint " + f.checkpoint.string() +
                          " --test " + (f.dir / "test.jsonl").string() +
                          " --labels pdtb_top4");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("label set") != std::string::npos);
}

TEST_CASE("inspect writes CSV matrices that match the library computation") {
    Fixture& f = fixture();
    LoadedCheckpoint ckpt = load_checkpoint(f.checkpoint.string());
    auto test_set = load_relations((f.dir / "test.jsonl").string(), ckpt.labels);
    fs::path one = work_dir() / "one.jsonl";
    write_relations(one.string(), {test_set[0]});

    fs::path out_dir = work_dir() / "inspect_out";
    CliResult r = run_cli("inspect-interactions --checkpoint " + f.checkpoint.string() +
                          " --input " + one.string() + " --out-dir " + out_dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("argmax") != std::string::npos);

    // Recompute M independently from the encoder outputs.
    Tape tape;
    BoundModel bm(tape, ckpt.model);
    ForwardPass fp = bm.forward(test_set[0].arg1_tokens, test_set[0].arg2_tokens);
    Tensor expect = interaction_matrix(fp.h1, fp.h2);

    std::ifstream csv(out_dir / "M.csv");
    std::string header;
    REQUIRE(std::getline(csv, header));
    CHECK(header == std::to_string(expect.rows()) + "," + std::to_string(expect.cols()));
    for (int i = 0; i < expect.rows(); ++i) {
        std::string line;
        REQUIRE(std::getline(csv, line));
        std::istringstream fields(line);
        std::string cell;
        for (int j = 0; j < expect.cols(); ++j) {
            REQUIRE(std::getline(fields, cell, ','));
            CHECK(std::stod(cell) == doctest::Approx(expect(i, j)).epsilon(1e-15));
            CHECK(std::abs(std::stod(cell)) <= 1.0 + 1e-12);
        }
    }

    // A multi-record input is a configuration error.
    CliResult multi = run_cli("inspect-interactions --checkpoint " + f.checkpoint.string() +
                              " --input " + (f.dir / "test.jsonl").string() +
                              " --out-dir " + out_dir.string());
    CHECK(multi.exit_code == 2);
}

TEST_CASE("one-vs-all training produces a binary checkpoint that evaluates") {
    Fixture& f = fixture();
    fs::path ckpt_path = work_dir() / "ova.json";
    CliResult train = run_cli(
        "train --train " + (f.dir / "train.jsonl").string() +
        " --dev " + (f.dir / "dev.jsonl").string() +
        " --embeddings " + (f.dir / "embeddings.txt").string() +
        " --labels custom:" + (f.dir / "labels.txt").string() +
        " --task one-vs-all:Class1 --balance-negatives"
        " --embed-dim 12 --hidden 6 --gcn-size 5 --mlp-hidden 4 --epochs 2 --batch 16"
        " --seed 3 --checkpoint " + ckpt_path.string());
    CHECK(train.exit_code == 0);

    LoadedCheckpoint ckpt = load_checkpoint(ckpt_path.string());
    CHECK(ckpt.model.dims.classes == 2);
    CHECK(ckpt.meta.task == "one-vs-all:Class1");

    CliResult eval = run_cli("evaluate --checkpoint " + ckpt_path.string() +
                             " --test " + (f.dir / "test.jsonl").string());
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("Class1") != std::string::npos);
    CHECK(eval.output.find("rest") != std::string::npos);
}

TEST_CASE("sweep needs at least two sizes") {
    Fixture& f = fixture();
    CliResult r = run_cli("sweep-gcn-size --sizes 50"
                          " --train " + (f.dir / "train.jsonl").string() +
                          " --dev " + (f.dir / "dev.jsonl").string() +
                          " --embeddings " + (f.dir / "embeddings.txt").string() +
                          " --labels custom:" + (f.dir / "labels.txt").string() +
                          " --embed-dim 12 --epochs 1");
    CHECK(r.exit_code == 2);
}

TEST_CASE("identical seeds give byte-identical checkpoints through the CLI") {
    Fixture& f = fixture();
    auto train_once = [&](const std::string& tag) {
        fs::path ck = work_dir() / ("det_" + tag + ".json");
        CliResult r = run_cli("train --train " + (f.dir / "train.jsonl").string() +
                              " --dev " + (f.dir / "dev.jsonl").string() +
                              " --embeddings " + (f.dir / "embeddings.txt").string() +
                              " --labels custom:" + (f.dir / "labels.txt").string() +
                              " --embed-dim 12 --hidden 6 --gcn-size 5 --mlp-hidden 4"
                              " --epochs 2 --batch 16 --seed 77 --checkpoint " + ck.string());
        REQUIRE(r.exit_code == 0);
        std::ifstream in(ck, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    CHECK(train_once("a") == train_once("b"));
}
