#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgcn/data.hpp"
#include "sgcn/model.hpp"

namespace sgcn {

struct TaskSpec {
    enum class Kind { MultiClass, OneVsAll };
    Kind kind = Kind::MultiClass;
    std::string target_class; // OneVsAll only

    static TaskSpec multi_class() { return {}; }
    static TaskSpec one_vs_all(std::string target) {
        return TaskSpec{Kind::OneVsAll, std::move(target)};
    }
};

/// Parses "multi-class" or "one-vs-all:<Class>"; anything else is a
/// ConfigError. format_task is its inverse.
TaskSpec parse_task(const std::string& s);
std::string format_task(const TaskSpec& task);

struct TrainConfig {
    double lr = 1e-2;
    double decay = 0.9;     // per-epoch learning-rate factor
    double clip_lo = -5.0;  // componentwise value clipping
    double clip_hi = 5.0;
    int batch = 64;
    int epochs = 30;
    std::uint64_t seed = 42;
    TaskSpec task;
    bool balance_negatives = false; // OneVsAll: downsample training negatives

    /// Throws ConfigError when a field is out of its valid range.
    void validate() const;
};

/// Componentwise value clipping into [lo, hi].
void clip_gradients(std::vector<std::vector<double>>& grads, double lo, double hi);

/// lr * decay^epoch.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// Bias-corrected Adam (beta1 0.9, beta2 0.999, eps 1e-8). Moment buffers are
/// laid out per parameter in registry order; non-trainable parameters are
/// passed over.
class AdamState {
public:
    explicit AdamState(const std::vector<SgcnModel::ParamRef>& params);

    void step(std::vector<SgcnModel::ParamRef>& params,
              const std::vector<std::vector<double>>& grads, double lr);

    long step_count() const { return step_; }

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

private:
    std::vector<std::vector<double>> m_, v_;
    long step_ = 0;
};

struct EvalReport {
    std::vector<std::string> labels;
    std::vector<double> precision, recall, f1;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<std::vector<int>> confusion; // confusion[gold][predicted]
    int total = 0;
};

/// Per-class precision/recall/F1, macro-F1 and accuracy from aligned gold and
/// predicted class indices. Classes with no gold and no predicted instances
/// contribute F1 = 0 to the macro average.
EvalReport compute_report(const std::vector<int>& gold, const std::vector<int>& predicted,
                          const std::vector<std::string>& labels);

/// Labels of the task's effective classification problem: the label set
/// itself for multi-class, [target, rest] for one-vs-all.
std::vector<std::string> effective_labels(const LabelSet& labels, const TaskSpec& task);

/// Effective class index of a record's sense under the task (one-vs-all maps
/// every non-target sense to the rest class).
int effective_class(const std::string& sense, const LabelSet& labels, const TaskSpec& task);

/// Runs every record through the model and scores predictions.
EvalReport evaluate(const SgcnModel& model, const std::vector<RelationRecord>& records,
                    const LabelSet& labels, const TaskSpec& task);

struct EpochLog {
    int epoch;
    double lr;
    double mean_train_loss;
    double dev_accuracy;
    double dev_f1; // macro-F1; positive-class F1 in one-vs-all mode
    long degree_floor_hits;
};

struct TrainResult {
    SgcnModel model; // snapshot with the best dev metric (ties keep the earlier epoch)
    int best_epoch = -1;
    double best_metric = 0.0;
    long optimizer_steps = 0;
    std::vector<EpochLog> log;
};

/// Formats one epoch log entry as the tab-separated log line.
std::string format_epoch_log(const EpochLog& e);

/// Minibatch training: shuffled epochs, per-example forward/backward on
/// independent tapes (parallel across a batch), ordered mean-over-batch
/// gradient reduction, value clipping, Adam. Deterministic for a fixed
/// (seed, config, dataset) triple regardless of thread count.
/// log_stream, when given, receives one line per epoch.
TrainResult train(SgcnModel model, const std::vector<RelationRecord>& train_set,
                  const std::vector<RelationRecord>& dev_set, const LabelSet& labels,
                  const TrainConfig& cfg, std::ostream* log_stream = nullptr);

} // namespace sgcn
