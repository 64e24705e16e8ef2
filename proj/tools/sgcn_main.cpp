// Command-line front end: train, evaluate, inspect-interactions,
// gen-synthetic and sweep-gcn-size.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgcn/data.hpp"
#include "sgcn/train.hpp"

namespace fs = std::filesystem;
using namespace sgcn;

namespace {

struct Options {
    std::string train_path, dev_path, test_path, input_path, embeddings_path;
    std::string labels_spec = "pdtb_top4";
    std::string eval_labels_spec; // evaluate: optional cross-check against the checkpoint
    std::string task_spec = "multi-class";
    int hidden = 128;
    int gcn_size = 100;
    int mlp_hidden = 64;
    int embed_dim = 300;
    int batch = 64;
    int epochs = 30;
    double lr = 1e-2;
    double decay = 0.9;
    double clip_lo = -5.0;
    double clip_hi = 5.0;
    std::uint64_t seed = 42;
    std::string checkpoint_path, out_path, json_path, out_dir = ".";
    bool balance_negatives = false;
    bool finetune_embeddings = false;
    bool no_lowercase = false;
    bool zero_forget_bias = false;
    // gen-synthetic
    int pairs = 2000;
    int dev_pairs = 400;
    int test_pairs = 0;
    int classes = 4;
    int vocab = 200;
    int min_tokens = 3;
    int max_tokens = 6;
    double embed_scale = 0.5;
    double trigger_corr = 0.9;
    double trigger_scale = 1.0;
    // sweep
    std::vector<int> sizes = {50, 100, 150, 200};
};

LabelSet resolve_labels(const std::string& spec) {
    if (spec == "pdtb_top4") return LabelSet::pdtb_top4();
    if (spec == "cdtb_9") return LabelSet::cdtb_9();
    const std::string prefix = "custom:";
    if (spec.rfind(prefix, 0) == 0) {
        std::string path = spec.substr(prefix.size());
        std::ifstream in(path);
        if (!in) throw ConfigError("labels: cannot open custom label file '" + path + "'");
        std::vector<std::string> labels;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) labels.push_back(line);
        }
        return LabelSet::custom(std::move(labels));
    }
    throw ConfigError("labels must be pdtb_top4, cdtb_9 or custom:<file>, got '" + spec + "'");
}

void echo_kv(const char* key, const std::string& value) {
    std::cout << "  " << key << " = " << value << "\n";
}
void echo_kv(const char* key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", value);
    echo_kv(key, std::string(buf));
}
template <typename T>
void echo_kv(const char* key, T value) {
    echo_kv(key, std::to_string(value));
}
void echo_kv(const char* key, bool value) {
    echo_kv(key, std::string(value ? "true" : "false"));
}

void echo_train_config(const Options& o, const char* command) {
    std::cout << "resolved config (" << command << "):\n";
    echo_kv("train", o.train_path);
    echo_kv("dev", o.dev_path);
    echo_kv("test", o.test_path);
    echo_kv("embeddings", o.embeddings_path);
    echo_kv("labels", o.labels_spec);
    echo_kv("task", o.task_spec);
    echo_kv("hidden", o.hidden);
    echo_kv("gcn-size", o.gcn_size);
    echo_kv("mlp-hidden", o.mlp_hidden);
    echo_kv("embed-dim", o.embed_dim);
    echo_kv("batch", o.batch);
    echo_kv("epochs", o.epochs);
    echo_kv("lr", o.lr);
    echo_kv("decay", o.decay);
    echo_kv("clip-lo", o.clip_lo);
    echo_kv("clip-hi", o.clip_hi);
    echo_kv("seed", o.seed);
    echo_kv("checkpoint", o.checkpoint_path);
    echo_kv("out", o.out_path);
    echo_kv("balance-negatives", o.balance_negatives);
    echo_kv("finetune-embeddings", o.finetune_embeddings);
    echo_kv("lowercase", !o.no_lowercase);
    echo_kv("forget-bias-one", !o.zero_forget_bias);
}

struct TrainInputs {
    LabelSet labels;
    TaskSpec task;
    EmbeddingTable table;
    std::vector<RelationRecord> train_set, dev_set;
    TrainConfig cfg;
    std::uint64_t init_seed = 0;
};

TrainInputs prepare_training(const Options& o) {
    TrainInputs in;
    in.labels = resolve_labels(o.labels_spec);
    in.task = parse_task(o.task_spec);
    if (o.train_path.empty() || o.dev_path.empty())
        throw ConfigError("train: --train and --dev are required");
    if (o.embeddings_path.empty()) throw ConfigError("train: --embeddings is required");

    Rng root(o.seed);
    std::uint64_t emb_seed = root.next_u64();
    in.init_seed = root.next_u64();
    std::uint64_t loop_seed = root.next_u64();

    EmbeddingLoadStats emb_stats;
    in.table = load_embeddings(o.embeddings_path, o.embed_dim, emb_seed, !o.no_lowercase,
                               &emb_stats);
    if (emb_stats.malformed_lines || emb_stats.duplicate_tokens)
        std::cout << "embeddings: skipped " << emb_stats.malformed_lines << " malformed and "
                  << emb_stats.duplicate_tokens << " duplicate lines\n";
    std::cout << "embeddings: " << in.table.vocab_size() << " tokens, d_e = "
              << in.table.d_e << "\n";

    RelationLoadStats train_stats, dev_stats;
    in.train_set = load_relations(o.train_path, in.labels, &train_stats);
    in.dev_set = load_relations(o.dev_path, in.labels, &dev_stats);
    if (train_stats.skipped_unknown_sense || dev_stats.skipped_unknown_sense)
        std::cout << "relations: skipped " << train_stats.skipped_unknown_sense << " train and "
                  << dev_stats.skipped_unknown_sense << " dev records with senses outside '"
                  << in.labels.name << "'\n";
    std::cout << "relations: " << in.train_set.size() << " train, " << in.dev_set.size()
              << " dev\n";

    in.cfg.lr = o.lr;
    in.cfg.decay = o.decay;
    in.cfg.clip_lo = o.clip_lo;
    in.cfg.clip_hi = o.clip_hi;
    in.cfg.batch = o.batch;
    in.cfg.epochs = o.epochs;
    in.cfg.seed = loop_seed;
    in.cfg.task = in.task;
    in.cfg.balance_negatives = o.balance_negatives;
    in.cfg.validate();
    return in;
}

SgcnModel build_model(const Options& o, const TrainInputs& in, int gcn_size) {
    ModelDims dims;
    dims.d_e = o.embed_dim;
    dims.hidden = o.hidden;
    dims.d_g = gcn_size;
    dims.h_mlp = o.mlp_hidden;
    dims.classes = static_cast<int>(effective_labels(in.labels, in.task).size());
    Rng init_rng(in.init_seed);
    return SgcnModel::init(in.table, dims, init_rng, !o.zero_forget_bias,
                           o.finetune_embeddings);
}

void print_report(const EvalReport& r) {
    std::printf("%-16s %9s %9s %9s\n", "class", "precision", "recall", "F1");
    for (std::size_t k = 0; k < r.labels.size(); ++k)
        std::printf("%-16s %9.4f %9.4f %9.4f\n", r.labels[k].c_str(), r.precision[k],
                    r.recall[k], r.f1[k]);
    std::printf("macro-F1 %.4f  accuracy %.4f  (%d examples)\n", r.macro_f1, r.accuracy,
                r.total);
    std::printf("confusion (rows gold, cols predicted):\n");
    for (const auto& row : r.confusion) {
        for (int v : row) std::printf(" %6d", v);
        std::printf("\n");
    }
}

nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t k = 0; k < r.labels.size(); ++k)
        per_class.push_back({{"label", r.labels[k]},
                             {"precision", r.precision[k]},
                             {"recall", r.recall[k]},
                             {"f1", r.f1[k]}});
    return nlohmann::json{{"per_class", per_class},
                          {"macro_f1", r.macro_f1},
                          {"accuracy", r.accuracy},
                          {"total", r.total},
                          {"confusion", r.confusion}};
}

int cmd_train(const Options& o) {
    echo_train_config(o, "train");
    TrainInputs in = prepare_training(o);
    SgcnModel model = build_model(o, in, o.gcn_size);

    std::ofstream log_file;
    std::ostringstream log_buf;
    TrainResult result = train(model, in.train_set, in.dev_set, in.labels, in.cfg, &log_buf);
    std::cout << "epoch\tlr\ttrain-loss\tdev-acc\tdev-F1\tdegree-floor-hits\n"
              << log_buf.str();
    if (!o.out_path.empty()) {
        std::ofstream out(o.out_path);
        if (!out) throw IoError("train: cannot write log '" + o.out_path + "'");
        out << log_buf.str();
    }

    std::printf("best epoch %d with dev metric %.6f\n", result.best_epoch, result.best_metric);
    if (!o.checkpoint_path.empty()) {
        CheckpointMeta meta{o.seed, result.best_epoch, format_task(in.task)};
        save_checkpoint(result.model, in.labels, meta, o.checkpoint_path);
        std::cout << "checkpoint written to " << o.checkpoint_path << "\n";
    }
    if (!o.test_path.empty()) {
        auto test_set = load_relations(o.test_path, in.labels);
        EvalReport r = evaluate(result.model, test_set, in.labels, in.task);
        std::cout << "test-set report:\n";
        print_report(r);
    }
    return 0;
}

int cmd_evaluate(const Options& o) {
    std::cout << "resolved config (evaluate):\n";
    echo_kv("checkpoint", o.checkpoint_path);
    echo_kv("test", o.test_path);
    echo_kv("labels", o.eval_labels_spec.empty() ? std::string("<from checkpoint>")
                                                 : o.eval_labels_spec);
    echo_kv("json", o.json_path);

    if (o.checkpoint_path.empty() || o.test_path.empty())
        throw ConfigError("evaluate: --checkpoint and --test are required");
    LoadedCheckpoint ckpt = load_checkpoint(o.checkpoint_path);
    // An explicit --labels must agree with the checkpoint.
    if (!o.eval_labels_spec.empty()) {
        LabelSet requested = resolve_labels(o.eval_labels_spec);
        if (!(requested == ckpt.labels))
            throw ConfigError("evaluate: label set '" + requested.name +
                              "' does not match checkpoint label set '" + ckpt.labels.name + "'");
    }
    TaskSpec task = parse_task(ckpt.meta.task);

    auto test_set = load_relations(o.test_path, ckpt.labels);
    EvalReport r = evaluate(ckpt.model, test_set, ckpt.labels, task);
    print_report(r);
    if (!o.json_path.empty()) {
        std::ofstream out(o.json_path);
        if (!out) throw IoError("evaluate: cannot write '" + o.json_path + "'");
        out << report_to_json(r).dump(2) << "\n";
        std::cout << "json report written to " << o.json_path << "\n";
    }
    return 0;
}

int cmd_inspect(const Options& o) {
    std::cout << "resolved config (inspect-interactions):\n";
    echo_kv("checkpoint", o.checkpoint_path);
    echo_kv("input", o.input_path);
    echo_kv("out-dir", o.out_dir);

    if (o.checkpoint_path.empty() || o.input_path.empty())
        throw ConfigError("inspect-interactions: --checkpoint and --input are required");
    LoadedCheckpoint ckpt = load_checkpoint(o.checkpoint_path);
    auto records = load_relations(o.input_path, ckpt.labels);
    if (records.size() != 1)
        throw ConfigError("inspect-interactions: expected a single-record file, got " +
                          std::to_string(records.size()) + " records");
    const RelationRecord& rec = records[0];

    Tape tape;
    BoundModel bm(tape, ckpt.model);
    ForwardPass fp = bm.forward(rec.arg1_tokens, rec.arg2_tokens);
    int m = fp.h1.rows(), n = fp.h2.rows();

    Tensor m_pre = interaction_matrix(fp.h1, fp.h2);
    // Post-convolution rows, split back into the two arguments.
    int d_g = fp.x_g.cols();
    std::vector<double> g1(fp.x_g.values().begin(),
                           fp.x_g.values().begin() + static_cast<std::size_t>(m) * d_g);
    std::vector<double> g2(fp.x_g.values().begin() + static_cast<std::size_t>(m) * d_g,
                           fp.x_g.values().end());
    Tensor m_post = interaction_matrix(Tensor(m, d_g, std::move(g1)),
                                       Tensor(n, d_g, std::move(g2)));

    fs::create_directories(o.out_dir);
    std::string pre_path = (fs::path(o.out_dir) / "M.csv").string();
    std::string post_path = (fs::path(o.out_dir) / "M_prime.csv").string();
    write_interaction_csv(m_pre, pre_path);
    write_interaction_csv(m_post, post_path);

    auto argmax_cell = [](const Tensor& t) {
        int bi = 0, bj = 0;
        for (int i = 0; i < t.rows(); ++i)
            for (int j = 0; j < t.cols(); ++j)
                if (t(i, j) > t(bi, bj)) { bi = i; bj = j; }
        return std::pair<int, int>(bi, bj);
    };
    auto [i0, j0] = argmax_cell(m_pre);
    auto [i1, j1] = argmax_cell(m_post);
    std::printf("record %s: m = %d, n = %d\n", rec.id.c_str(), m, n);
    if (fp.oov_count > 0)
        std::printf("oov ratio: %d/%d tokens\n", fp.oov_count, fp.token_count);
    std::printf("M  argmax (%d, %d) = %.6f tokens ('%s', '%s')\n", i0, j0, m_pre(i0, j0),
                rec.arg1_tokens[i0].c_str(), rec.arg2_tokens[j0].c_str());
    std::printf("M' argmax (%d, %d) = %.6f tokens ('%s', '%s')\n", i1, j1, m_post(i1, j1),
                rec.arg1_tokens[i1].c_str(), rec.arg2_tokens[j1].c_str());
    std::printf("wrote %s and %s\n", pre_path.c_str(), post_path.c_str());
    return 0;
}

int cmd_gen_synthetic(const Options& o) {
    std::cout << "resolved config (gen-synthetic):\n";
    echo_kv("pairs", o.pairs);
    echo_kv("dev-pairs", o.dev_pairs);
    echo_kv("test-pairs", o.test_pairs);
    echo_kv("classes", o.classes);
    echo_kv("vocab", o.vocab);
    echo_kv("embed-dim", o.embed_dim);
    echo_kv("min-tokens", o.min_tokens);
    echo_kv("max-tokens", o.max_tokens);
    echo_kv("seed", o.seed);
    echo_kv("out-dir", o.out_dir);

    SyntheticSpec spec;
    spec.pairs = o.pairs + o.dev_pairs + o.test_pairs;
    spec.vocab = o.vocab;
    spec.classes = o.classes;
    spec.seed = o.seed;
    spec.d_e = o.embed_dim;
    spec.min_tokens = o.min_tokens;
    spec.max_tokens = o.max_tokens;
    spec.embed_scale = o.embed_scale;
    spec.trigger_corr = o.trigger_corr;
    spec.trigger_scale = o.trigger_scale;
    SyntheticCorpus corpus = gen_synthetic(spec);

    fs::create_directories(o.out_dir);
    fs::path dir(o.out_dir);
    auto begin = corpus.records.begin();
    write_relations((dir / "train.jsonl").string(), {begin, begin + o.pairs});
    if (o.dev_pairs > 0)
        write_relations((dir / "dev.jsonl").string(), {begin + o.pairs, begin + o.pairs + o.dev_pairs});
    if (o.test_pairs > 0)
        write_relations((dir / "test.jsonl").string(),
                        {begin + o.pairs + o.dev_pairs, corpus.records.end()});
    write_lines((dir / "embeddings.txt").string(), corpus.embedding_lines);
    write_lines((dir / "labels.txt").string(), corpus.labels.labels);

    std::cout << "wrote " << o.pairs << " train";
    if (o.dev_pairs > 0) std::cout << ", " << o.dev_pairs << " dev";
    if (o.test_pairs > 0) std::cout << ", " << o.test_pairs << " test";
    std::cout << " records, embeddings and labels under " << o.out_dir << "\n";
    return 0;
}

int cmd_sweep(const Options& o) {
    echo_train_config(o, "sweep-gcn-size");
    std::cout << "  sizes =";
    for (int s : o.sizes) std::cout << " " << s;
    std::cout << "\n";
    if (o.sizes.size() < 2) throw ConfigError("sweep-gcn-size: need at least 2 sizes");

    TrainInputs in = prepare_training(o);
    std::vector<RelationRecord> test_set;
    if (!o.test_path.empty()) test_set = load_relations(o.test_path, in.labels);

    std::printf("%8s %10s %10s %10s", "size", "best-ep", "dev-acc", "dev-F1");
    if (!test_set.empty()) std::printf(" %10s %10s", "test-acc", "test-F1");
    std::printf("\n");
    for (int size : o.sizes) {
        SgcnModel model = build_model(o, in, size);
        TrainResult r = train(model, in.train_set, in.dev_set, in.labels, in.cfg);
        EvalReport dev = evaluate(r.model, in.dev_set, in.labels, in.task);
        double dev_f1 = in.task.kind == TaskSpec::Kind::OneVsAll ? dev.f1[0] : dev.macro_f1;
        std::printf("%8d %10d %10.4f %10.4f", size, r.best_epoch, dev.accuracy, dev_f1);
        if (!test_set.empty()) {
            EvalReport t = evaluate(r.model, test_set, in.labels, in.task);
            double t_f1 = in.task.kind == TaskSpec::Kind::OneVsAll ? t.f1[0] : t.macro_f1;
            std::printf(" %10.4f %10.4f", t.accuracy, t_f1);
        }
        std::printf("\n");
        std::fflush(stdout);
    }
    return 0;
}

void add_model_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--hidden", o.hidden, "LSTM hidden width");
    cmd->add_option("--gcn-size", o.gcn_size, "graph convolution output width");
    cmd->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden width");
    cmd->add_option("--embed-dim", o.embed_dim, "embedding width d_e");
    cmd->add_flag("--finetune-embeddings", o.finetune_embeddings, "train the embedding matrix");
    cmd->add_flag("--no-lowercase", o.no_lowercase, "skip lowercasing before vocabulary lookup");
    cmd->add_flag("--zero-forget-bias", o.zero_forget_bias,
                  "initialize the forget-gate bias to 0 instead of 1");
}

void add_train_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--train", o.train_path, "training relation file (JSON lines)");
    cmd->add_option("--dev", o.dev_path, "development relation file");
    cmd->add_option("--test", o.test_path, "test relation file");
    cmd->add_option("--embeddings", o.embeddings_path, "pretrained embedding text file");
    cmd->add_option("--labels", o.labels_spec, "pdtb_top4 | cdtb_9 | custom:<file>");
    cmd->add_option("--task", o.task_spec, "multi-class | one-vs-all:<Class>");
    cmd->add_option("--batch", o.batch, "minibatch size");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--lr", o.lr, "initial learning rate");
    cmd->add_option("--decay", o.decay, "per-epoch learning-rate decay factor");
    cmd->add_option("--clip-lo", o.clip_lo, "gradient value clip lower bound");
    cmd->add_option("--clip-hi", o.clip_hi, "gradient value clip upper bound");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--checkpoint", o.checkpoint_path, "checkpoint output path");
    cmd->add_option("--out", o.out_path, "epoch log output path");
    cmd->add_flag("--balance-negatives", o.balance_negatives,
                  "one-vs-all: downsample training negatives to the positive count");
    add_model_flags(cmd, o);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic graph convolutional classifier for argument-pair relations"};
    app.require_subcommand(1);
    // Usage: sgcn --config FILE <subcommand> ...; the file holds one
    // [subcommand] section per command with long option names as keys.
    app.set_config("--config", "", "read options from a config file");

    Options o;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model and save the best checkpoint");
    add_train_flags(train_cmd, o);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a relation file");
    eval_cmd->add_option("--checkpoint", o.checkpoint_path, "checkpoint to load");
    eval_cmd->add_option("--test", o.test_path, "relation file to score");
    eval_cmd->add_option("--labels", o.eval_labels_spec, "label set cross-check");
    eval_cmd->add_option("--json", o.json_path, "also write the report as JSON here");

    CLI::App* inspect_cmd =
        app.add_subcommand("inspect-interactions", "export pre/post-GCN interaction matrices");
    inspect_cmd->add_option("--checkpoint", o.checkpoint_path, "checkpoint to load");
    inspect_cmd->add_option("--input", o.input_path, "single-record relation file");
    inspect_cmd->add_option("--out-dir", o.out_dir, "directory for M.csv and M_prime.csv");

    CLI::App* gen_cmd = app.add_subcommand("gen-synthetic", "generate a planted-trigger corpus");
    gen_cmd->add_option("--pairs", o.pairs, "training pairs");
    gen_cmd->add_option("--dev-pairs", o.dev_pairs, "development pairs");
    gen_cmd->add_option("--test-pairs", o.test_pairs, "test pairs");
    gen_cmd->add_option("--classes", o.classes, "number of classes");
    gen_cmd->add_option("--vocab", o.vocab, "vocabulary size (>= 10 * classes)");
    gen_cmd->add_option("--embed-dim", o.embed_dim, "embedding width of the generated file");
    gen_cmd->add_option("--min-tokens", o.min_tokens, "minimum tokens per argument");
    gen_cmd->add_option("--max-tokens", o.max_tokens, "maximum tokens per argument");
    gen_cmd->add_option("--embed-scale", o.embed_scale, "embedding value range half-width");
    gen_cmd->add_option("--trigger-scale", o.trigger_scale, "trigger embedding norm multiplier");
    gen_cmd->add_option("--trigger-corr", o.trigger_corr,
                        "embedding correlation within each trigger pair");
    gen_cmd->add_option("--seed", o.seed, "RNG seed");
    gen_cmd->add_option("--out-dir", o.out_dir, "output directory");

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep-gcn-size", "train once per GCN size and tabulate metrics");
    add_train_flags(sweep_cmd, o);
    sweep_cmd->add_option("--sizes", o.sizes, "GCN sizes to sweep")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(o);
        if (eval_cmd->parsed()) return cmd_evaluate(o);
        if (inspect_cmd->parsed()) return cmd_inspect(o);
        if (gen_cmd->parsed()) return cmd_gen_synthetic(o);
        if (sweep_cmd->parsed()) return cmd_sweep(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
