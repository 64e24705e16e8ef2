#include "sgcn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sgcn {

using nlohmann::json;

LabelSet LabelSet::pdtb_top4() {
    return LabelSet{"pdtb_top4", {"Comparison", "Contingency", "Expansion", "Temporal"}};
}

LabelSet LabelSet::cdtb_9() {
    // CoNLL-2016 Chinese sense inventory with EntRel kept as an implicit
    // label and AltLex excluded.
    return LabelSet{"cdtb_9",
                    {"Alternative", "Causation", "Conditional", "Conjunction", "Contrast",
                     "EntRel", "Expansion", "Purpose", "Temporal"}};
}

LabelSet LabelSet::custom(std::vector<std::string> labels) {
    if (labels.size() < 2) throw ConfigError("LabelSet: need at least 2 labels");
    return LabelSet{"custom", std::move(labels)};
}

int LabelSet::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> string_array(const json& j, const char* key,
                                      const std::string& where) {
    if (!j.contains(key) || !j[key].is_array())
        throw DataError(where + ": missing or non-array field '" + key + "'");
    std::vector<std::string> out;
    out.reserve(j[key].size());
    for (const auto& item : j[key]) {
        if (!item.is_string())
            throw DataError(where + ": field '" + key + "' holds a non-string token");
        out.push_back(item.get<std::string>());
    }
    return out;
}

} // namespace

std::vector<RelationRecord> load_relations(const std::string& path, const LabelSet& labels,
                                           RelationLoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("load_relations: cannot open '" + path + "'");

    std::vector<RelationRecord> records;
    RelationLoadStats local;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string where = path + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where + ": malformed JSON: " + e.what());
        }
        if (!j.is_object()) throw DataError(where + ": line is not a JSON object");
        if (!j.contains("id") || !j["id"].is_string())
            throw DataError(where + ": missing or non-string field 'id'");
        if (!j.contains("sense") || !j["sense"].is_string())
            throw DataError(where + ": missing or non-string field 'sense'");

        RelationRecord rec;
        rec.id = j["id"].get<std::string>();
        rec.sense = j["sense"].get<std::string>();
        rec.arg1_tokens = string_array(j, "arg1_tokens", where);
        rec.arg2_tokens = string_array(j, "arg2_tokens", where);
        if (rec.arg1_tokens.empty() || rec.arg2_tokens.empty())
            throw DataError(where + ": empty argument token list in record '" + rec.id + "'");

        if (labels.index_of(rec.sense) < 0) {
            ++local.skipped_unknown_sense;
            continue;
        }
        records.push_back(std::move(rec));
    }
    if (records.empty())
        throw DataError("load_relations: no valid records in '" + path + "' (" +
                        std::to_string(local.skipped_unknown_sense) + " skipped for sense)");
    if (stats) *stats = local;
    return records;
}

EmbeddingTable load_embeddings(const std::string& path, int d_e, std::uint64_t seed,
                               bool lowercase, EmbeddingLoadStats* stats) {
    if (d_e <= 0) throw ConfigError("load_embeddings: d_e must be positive");
    std::ifstream in(path);
    if (!in) throw IoError("load_embeddings: cannot open '" + path + "'");

    EmbeddingLoadStats local;
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> rows;
    std::unordered_map<std::string, int> seen;

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) continue;
        std::vector<double> row;
        row.reserve(d_e);
        double v;
        while (fields >> v) row.push_back(v);
        bool trailing_junk = !fields.eof();
        if (trailing_junk || static_cast<int>(row.size()) != d_e) {
            ++local.malformed_lines;
            continue;
        }
        if (seen.count(token)) {
            ++local.duplicate_tokens;
            continue;
        }
        seen.emplace(token, static_cast<int>(tokens.size()));
        tokens.push_back(token);
        rows.push_back(std::move(row));
    }
    if (tokens.empty())
        throw DataError("load_embeddings: no valid embedding lines in '" + path + "'");
    if (stats) *stats = local;

    Rng oov_rng(seed);
    return EmbeddingTable::from_rows(std::move(tokens), std::move(rows), lowercase, oov_rng);
}

SyntheticCorpus gen_synthetic(const SyntheticSpec& spec) {
    if (spec.classes < 2)
        throw ConfigError("gen_synthetic: classes must be >= 2, got " +
                          std::to_string(spec.classes));
    if (spec.vocab < 10 * spec.classes)
        throw ConfigError("gen_synthetic: vocab must be >= 10 * classes (" +
                          std::to_string(spec.vocab) + " < " + std::to_string(10 * spec.classes) + ")");
    if (spec.pairs < 1) throw ConfigError("gen_synthetic: pairs must be >= 1");
    if (spec.d_e < 1) throw ConfigError("gen_synthetic: d_e must be >= 1");
    if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens)
        throw ConfigError("gen_synthetic: bad token length range");

    auto token_name = [](int i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "w%03d", i);
        return std::string(buf);
    };

    SyntheticCorpus corpus;
    std::vector<std::string> class_names;
    for (int k = 0; k < spec.classes; ++k) class_names.push_back("Class" + std::to_string(k));
    corpus.labels = LabelSet::custom(class_names);

    for (int k = 0; k < spec.classes; ++k)
        corpus.trigger_pairs.emplace_back(token_name(2 * k), token_name(2 * k + 1));
    const int pool_begin = 2 * spec.classes;

    Rng rng(spec.seed);

    // Embedding rows for the whole vocabulary. The two triggers of a pair get
    // correlated vectors, the way pretrained embeddings place semantically
    // associated words; distractors are independent draws.
    std::vector<std::vector<double>> emb_rows(spec.vocab);
    for (int i = 0; i < spec.vocab; ++i) {
        emb_rows[i].resize(spec.d_e);
        for (double& v : emb_rows[i]) v = rng.uniform(-spec.embed_scale, spec.embed_scale);
    }
    double rho = spec.trigger_corr;
    double mix = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (int k = 0; k < spec.classes; ++k)
        for (int j = 0; j < spec.d_e; ++j) {
            emb_rows[2 * k + 1][j] = rho * emb_rows[2 * k][j] + mix * emb_rows[2 * k + 1][j];
            emb_rows[2 * k][j] *= spec.trigger_scale;
            emb_rows[2 * k + 1][j] *= spec.trigger_scale;
        }
    for (int i = 0; i < spec.vocab; ++i) {
        std::string line = token_name(i);
        for (int j = 0; j < spec.d_e; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), " %.6f", emb_rows[i][j]);
            line += buf;
        }
        corpus.embedding_lines.push_back(std::move(line));
    }

    auto draw_arg = [&](const std::string& trigger) {
        int len = spec.min_tokens +
                  static_cast<int>(rng.next_below(spec.max_tokens - spec.min_tokens + 1));
        std::vector<std::string> arg(len);
        for (int t = 0; t < len; ++t)
            arg[t] = token_name(pool_begin + static_cast<int>(rng.next_below(spec.vocab - pool_begin)));
        arg[rng.next_below(len)] = trigger;
        return arg;
    };

    for (int i = 0; i < spec.pairs; ++i) {
        int k = i % spec.classes;
        RelationRecord rec;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "syn-%06d", i);
        rec.id = buf;
        rec.sense = class_names[k];
        rec.arg1_tokens = draw_arg(corpus.trigger_pairs[k].first);
        rec.arg2_tokens = draw_arg(corpus.trigger_pairs[k].second);
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

namespace {

json dims_to_json(const ModelDims& d) {
    return json{{"d_e", d.d_e}, {"hidden", d.hidden}, {"d_g", d.d_g},
                {"h_mlp", d.h_mlp}, {"classes", d.classes}};
}

ModelDims dims_from_json(const json& j) {
    ModelDims d;
    d.d_e = j.at("d_e").get<int>();
    d.hidden = j.at("hidden").get<int>();
    d.d_g = j.at("d_g").get<int>();
    d.h_mlp = j.at("h_mlp").get<int>();
    d.classes = j.at("classes").get<int>();
    return d;
}

} // namespace

void save_checkpoint(const SgcnModel& model, const LabelSet& labels,
                     const CheckpointMeta& meta, const std::string& path) {
    json doc;
    doc["format_version"] = kCheckpointVersion;
    doc["dims"] = dims_to_json(model.dims);
    doc["label_set"] = json{{"name", labels.name}, {"labels", labels.labels}};
    doc["vocab"] = model.embedding.tokens;
    doc["lowercase"] = model.embedding.lowercase;
    doc["finetune_embeddings"] = model.finetune_embeddings;
    doc["forget_bias_one"] = model.forget_bias_one;
    doc["seed"] = meta.seed;
    doc["epoch"] = meta.epoch;
    doc["task"] = meta.task;

    json params = json::array();
    for (const auto& ref : model.params()) {
        for (double v : ref.tensor->values())
            if (!std::isfinite(v))
                throw NumericError("save_checkpoint: non-finite value in '" + ref.name + "'");
        params.push_back(json{{"name", ref.name},
                              {"rows", ref.tensor->rows()},
                              {"cols", ref.tensor->cols()},
                              {"values", ref.tensor->values()}});
    }
    doc["params"] = std::move(params);

    std::ofstream out(path);
    if (!out) throw IoError("save_checkpoint: cannot write '" + path + "'");
    out << doc.dump() << "\n";
    if (!out) throw IoError("save_checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const std::optional<ModelDims>& expected) {
    std::ifstream in(path);
    if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw DataError("load_checkpoint: '" + path + "' is not valid JSON: " + e.what());
    }

    try {
        int version = doc.at("format_version").get<int>();
        if (version != kCheckpointVersion)
            throw ConfigError("load_checkpoint: format version " + std::to_string(version) +
                              " in '" + path + "', this build reads version " +
                              std::to_string(kCheckpointVersion));
        ModelDims dims = dims_from_json(doc.at("dims"));
        if (expected) {
            auto mismatch = [&](const char* what, int got, int want) {
                if (got != want)
                    throw ConfigError("load_checkpoint: checkpoint " + std::string(what) + "=" +
                                      std::to_string(got) + " does not match session " +
                                      std::string(what) + "=" + std::to_string(want));
            };
            mismatch("d_e", dims.d_e, expected->d_e);
            mismatch("hidden", dims.hidden, expected->hidden);
            mismatch("d_g", dims.d_g, expected->d_g);
            mismatch("h_mlp", dims.h_mlp, expected->h_mlp);
            mismatch("classes", dims.classes, expected->classes);
        }

        LabelSet labels;
        labels.name = doc.at("label_set").at("name").get<std::string>();
        labels.labels = doc.at("label_set").at("labels").get<std::vector<std::string>>();
        std::string task = doc.at("task").get<std::string>();
        int expected_classes = task.rfind("one-vs-all", 0) == 0
                                   ? 2
                                   : static_cast<int>(labels.labels.size());
        if (expected_classes != dims.classes)
            throw DataError("load_checkpoint: task '" + task + "' over " +
                            std::to_string(labels.labels.size()) + " labels does not match " +
                            std::to_string(dims.classes) + " model classes");

        SgcnModel model;
        model.dims = dims;
        model.finetune_embeddings = doc.at("finetune_embeddings").get<bool>();
        model.forget_bias_one = doc.at("forget_bias_one").get<bool>();

        EmbeddingTable& table = model.embedding;
        table.d_e = dims.d_e;
        table.lowercase = doc.at("lowercase").get<bool>();
        table.tokens = doc.at("vocab").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < table.tokens.size(); ++i)
            table.vocab.emplace(table.tokens[i], static_cast<int>(i));

        // Give every parameter its expected shape, then fill by name.
        int v_rows = table.vocab_size() + 2;
        table.matrix = Tensor::zeros(v_rows, dims.d_e);
        auto zero_dir = [&]() {
            LstmDirParams p;
            p.W_i = p.W_f = p.W_o = p.W_c = Tensor::zeros(dims.hidden, dims.hidden);
            p.U_i = p.U_f = p.U_o = p.U_c = Tensor::zeros(dims.d_e, dims.hidden);
            p.b_i = p.b_f = p.b_o = p.b_c = Tensor::zeros(1, dims.hidden);
            return p;
        };
        model.lstm.fwd = zero_dir();
        model.lstm.bwd = zero_dir();
        model.gcn.W_g = Tensor::zeros(dims.d_h(), dims.d_g);
        model.mlp.W1 = Tensor::zeros(2 * dims.d_g, dims.h_mlp);
        model.mlp.b1 = Tensor::zeros(1, dims.h_mlp);
        model.mlp.W2 = Tensor::zeros(dims.h_mlp, dims.classes);
        model.mlp.b2 = Tensor::zeros(1, dims.classes);

        const json& params = doc.at("params");
        if (!params.is_array()) throw DataError("load_checkpoint: 'params' is not an array");
        std::unordered_map<std::string, const json*> by_name;
        for (const auto& p : params) by_name.emplace(p.at("name").get<std::string>(), &p);

        for (auto& ref : model.params()) {
            auto it = by_name.find(ref.name);
            if (it == by_name.end())
                throw DataError("load_checkpoint: missing parameter '" + ref.name + "'");
            const json& p = *it->second;
            int rows = p.at("rows").get<int>();
            int cols = p.at("cols").get<int>();
            if (rows != ref.tensor->rows() || cols != ref.tensor->cols())
                throw DataError("load_checkpoint: parameter '" + ref.name + "' is " +
                                std::to_string(rows) + "x" + std::to_string(cols) +
                                ", expected " + ref.tensor->shape_str());
            std::vector<double> values = p.at("values").get<std::vector<double>>();
            *ref.tensor = Tensor(rows, cols, std::move(values));
        }

        model.check_consistent();

        CheckpointMeta meta;
        meta.seed = doc.at("seed").get<std::uint64_t>();
        meta.epoch = doc.at("epoch").get<int>();
        meta.task = std::move(task);
        return LoadedCheckpoint{std::move(model), std::move(labels), std::move(meta)};
    } catch (const json::exception& e) {
        throw DataError("load_checkpoint: schema error in '" + path + "': " + e.what());
    }
}

void write_interaction_csv(const Tensor& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_interaction_csv: cannot write '" + path + "'");
    out << m.rows() << "," << m.cols() << "\n";
    char buf[40];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << (j + 1 == m.cols() ? "" : ",");
        }
        out << "\n";
    }
    if (!out) throw IoError("write_interaction_csv: write failed for '" + path + "'");
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw IoError("write_lines: cannot write '" + path + "'");
    for (const std::string& l : lines) out << l << "\n";
    if (!out) throw IoError("write_lines: write failed for '" + path + "'");
}

void write_relations(const std::string& path, const std::vector<RelationRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("write_relations: cannot write '" + path + "'");
    for (const RelationRecord& r : records) {
        json j{{"id", r.id}, {"arg1_tokens", r.arg1_tokens},
               {"arg2_tokens", r.arg2_tokens}, {"sense", r.sense}};
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write_relations: write failed for '" + path + "'");
}

} // namespace sgcn
