#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgcn/model.hpp"

namespace sgcn {

/// One labeled argument pair.
struct RelationRecord {
    std::string id;
    std::vector<std::string> arg1_tokens;
    std::vector<std::string> arg2_tokens;
    std::string sense;
};

struct LabelSet {
    std::string name; // pdtb_top4 | cdtb_9 | custom
    std::vector<std::string> labels;

    static LabelSet pdtb_top4();
    static LabelSet cdtb_9();
    static LabelSet custom(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels.size()); }
    /// Index of a label name, -1 if absent.
    int index_of(const std::string& label) const;
    bool operator==(const LabelSet& o) const { return name == o.name && labels == o.labels; }
};

struct RelationLoadStats {
    int skipped_unknown_sense = 0;
};

/// Reads JSON-lines relation records (keys: id, arg1_tokens, arg2_tokens,
/// sense). Records whose sense is outside the label set are skipped and
/// counted; malformed lines and empty argument token lists are errors naming
/// the line. Throws DataError when no valid record remains.
std::vector<RelationRecord> load_relations(const std::string& path, const LabelSet& labels,
                                           RelationLoadStats* stats = nullptr);

struct EmbeddingLoadStats {
    int malformed_lines = 0;
    int duplicate_tokens = 0;
};

/// Reads whitespace-separated text embeddings (token then d_e floats per
/// line). Lines with the wrong arity are skipped and counted; the first
/// occurrence of a duplicated token wins. The OOV row is drawn uniform in
/// [-0.05, 0.05] from the seeded generator.
EmbeddingTable load_embeddings(const std::string& path, int d_e, std::uint64_t seed,
                               bool lowercase = true, EmbeddingLoadStats* stats = nullptr);

struct SyntheticSpec {
    int pairs = 0;
    int vocab = 0;
    int classes = 0;
    std::uint64_t seed = 0;
    int d_e = 50;
    int min_tokens = 3; // per argument, triggers included
    int max_tokens = 6;
    double embed_scale = 0.5;   // embeddings drawn uniform in [-scale, scale]
    double trigger_corr = 0.9;  // embedding correlation within a trigger pair
    double trigger_scale = 1.0; // trigger embedding norm relative to distractors
};

struct SyntheticCorpus {
    std::vector<RelationRecord> records;
    std::vector<std::string> embedding_lines; // ready to write as a text embedding file
    LabelSet labels;
    /// Trigger token pair planted for each class k: first goes into arg1,
    /// second into arg2, and they never appear under any other label.
    std::vector<std::pair<std::string, std::string>> trigger_pairs;
};

/// Deterministic planted-trigger corpus: each record's label is decided by a
/// class-specific cross-argument token pair surrounded by shared distractor
/// tokens. Requires classes >= 2 and vocab >= 10 * classes.
SyntheticCorpus gen_synthetic(const SyntheticSpec& spec);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int epoch = -1;
    // Task string as given on the command line: "multi-class" or
    // "one-vs-all:<Class>". One-vs-all models have two outputs while the
    // stored label set stays the full base set.
    std::string task = "multi-class";
};

inline constexpr int kCheckpointVersion = 1;

/// Versioned JSON checkpoint: dimensions, label set, vocabulary and every
/// named parameter. Numbers round-trip bit-exactly.
void save_checkpoint(const SgcnModel& model, const LabelSet& labels,
                     const CheckpointMeta& meta, const std::string& path);

struct LoadedCheckpoint {
    SgcnModel model;
    LabelSet labels;
    CheckpointMeta meta;
};

/// Loads and fully validates a checkpoint; nothing is constructed on error.
/// When expected dims are given, a mismatch is a ConfigError.
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const std::optional<ModelDims>& expected = std::nullopt);

/// Interaction-matrix CSV: first line "m,n", then m rows of n values.
void write_interaction_csv(const Tensor& m, const std::string& path);

/// Writes text lines (used for synthetic corpora and embedding files).
void write_lines(const std::string& path, const std::vector<std::string>& lines);

/// Serializes records as JSON-lines in the relation file format.
void write_relations(const std::string& path, const std::vector<RelationRecord>& records);

} // namespace sgcn
