#include "sgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace sgcn {

TaskSpec parse_task(const std::string& s) {
    if (s == "multi-class") return TaskSpec::multi_class();
    const std::string prefix = "one-vs-all:";
    if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size())
        return TaskSpec::one_vs_all(s.substr(prefix.size()));
    throw ConfigError("task must be 'multi-class' or 'one-vs-all:<Class>', got '" + s + "'");
}

std::string format_task(const TaskSpec& task) {
    return task.kind == TaskSpec::Kind::MultiClass ? "multi-class"
                                                   : "one-vs-all:" + task.target_class;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
    if (!(decay > 0.0 && decay <= 1.0))
        throw ConfigError("TrainConfig: decay must be in (0, 1], got " + std::to_string(decay));
    if (!(clip_lo < clip_hi))
        throw ConfigError("TrainConfig: clip range [" + std::to_string(clip_lo) + ", " +
                          std::to_string(clip_hi) + "] is empty");
    if (batch < 1) throw ConfigError("TrainConfig: batch must be >= 1");
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (task.kind == TaskSpec::Kind::OneVsAll && task.target_class.empty())
        throw ConfigError("TrainConfig: one-vs-all task needs a target class");
}

void clip_gradients(std::vector<std::vector<double>>& grads, double lo, double hi) {
    for (auto& g : grads)
        for (double& v : g) v = std::min(hi, std::max(lo, v));
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw ContractError("lr_at_epoch: negative epoch");
    return cfg.lr * std::pow(cfg.decay, epoch);
}

AdamState::AdamState(const std::vector<SgcnModel::ParamRef>& params) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        std::size_t n = p.trainable ? p.tensor->size() : 0;
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void AdamState::step(std::vector<SgcnModel::ParamRef>& params,
                     const std::vector<std::vector<double>>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ContractError("adam_step: parameter/gradient count mismatch");
    ++step_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].trainable) continue;
        const std::vector<double>& g = grads[p];
        if (g.size() != params[p].tensor->size())
            throw ContractError("adam_step: gradient size mismatch for '" + params[p].name + "'");
        std::vector<double> values = params[p].tensor->values();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("adam_step: non-finite gradient for parameter '" +
                                   params[p].name + "'");
            m_[p][i] = kBeta1 * m_[p][i] + (1.0 - kBeta1) * g[i];
            v_[p][i] = kBeta2 * v_[p][i] + (1.0 - kBeta2) * g[i] * g[i];
            double m_hat = m_[p][i] / bc1;
            double v_hat = v_[p][i] / bc2;
            values[i] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
        }
        *params[p].tensor = Tensor(params[p].tensor->rows(), params[p].tensor->cols(),
                                   std::move(values));
    }
}

EvalReport compute_report(const std::vector<int>& gold, const std::vector<int>& predicted,
                          const std::vector<std::string>& labels) {
    if (gold.size() != predicted.size())
        throw ContractError("compute_report: gold/prediction count mismatch");
    int c = static_cast<int>(labels.size());
    EvalReport r;
    r.labels = labels;
    r.total = static_cast<int>(gold.size());
    r.confusion.assign(c, std::vector<int>(c, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= c || predicted[i] < 0 || predicted[i] >= c)
            throw IndexError("compute_report: class index out of range at example " +
                             std::to_string(i));
        ++r.confusion[gold[i]][predicted[i]];
    }
    r.precision.assign(c, 0.0);
    r.recall.assign(c, 0.0);
    r.f1.assign(c, 0.0);
    int correct = 0;
    for (int k = 0; k < c; ++k) {
        int tp = r.confusion[k][k];
        correct += tp;
        int pred_k = 0, gold_k = 0;
        for (int j = 0; j < c; ++j) {
            pred_k += r.confusion[j][k];
            gold_k += r.confusion[k][j];
        }
        r.precision[k] = pred_k > 0 ? static_cast<double>(tp) / pred_k : 0.0;
        r.recall[k] = gold_k > 0 ? static_cast<double>(tp) / gold_k : 0.0;
        double pr = r.precision[k] + r.recall[k];
        r.f1[k] = pr > 0.0 ? 2.0 * r.precision[k] * r.recall[k] / pr : 0.0;
        r.macro_f1 += r.f1[k];
    }
    r.macro_f1 /= c;
    r.accuracy = r.total > 0 ? static_cast<double>(correct) / r.total : 0.0;
    return r;
}

std::vector<std::string> effective_labels(const LabelSet& labels, const TaskSpec& task) {
    if (task.kind == TaskSpec::Kind::MultiClass) return labels.labels;
    if (labels.index_of(task.target_class) < 0)
        throw ConfigError("one-vs-all target '" + task.target_class +
                          "' is not in label set '" + labels.name + "'");
    return {task.target_class, "rest"};
}

int effective_class(const std::string& sense, const LabelSet& labels, const TaskSpec& task) {
    if (task.kind == TaskSpec::Kind::OneVsAll) return sense == task.target_class ? 0 : 1;
    int idx = labels.index_of(sense);
    if (idx < 0)
        throw DataError("effective_class: sense '" + sense + "' is not in label set '" +
                        labels.name + "'");
    return idx;
}

namespace {

// Runs body(i) for i in [0, n) in parallel; the first captured exception
// (lowest index) is rethrown serially.
template <typename Body>
void parallel_for_capture(int n, Body&& body) {
    std::vector<std::string> errors(n);
    std::vector<char> failed(n, 0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (const std::exception& e) {
            errors[i] = e.what();
            failed[i] = 1;
        }
    }
    for (int i = 0; i < n; ++i)
        if (failed[i]) throw Error(errors[i]);
}

double selection_metric(const EvalReport& dev, const LabelSet& labels, const TaskSpec& task) {
    if (task.kind == TaskSpec::Kind::OneVsAll) return dev.f1[0];
    if (labels.name == "cdtb_9") return dev.accuracy;
    return dev.macro_f1;
}

} // namespace

EvalReport evaluate(const SgcnModel& model, const std::vector<RelationRecord>& records,
                    const LabelSet& labels, const TaskSpec& task) {
    if (records.empty()) throw DataError("evaluate: empty dataset");
    std::vector<std::string> eff = effective_labels(labels, task);
    std::vector<int> gold(records.size()), predicted(records.size());
    parallel_for_capture(static_cast<int>(records.size()), [&](int i) {
        const RelationRecord& rec = records[i];
        gold[i] = effective_class(rec.sense, labels, task);
        Tape tape;
        BoundModel bm(tape, model);
        ForwardPass fp = bm.forward(rec.arg1_tokens, rec.arg2_tokens);
        predicted[i] = predict(fp.logits);
    });
    return compute_report(gold, predicted, eff);
}

std::string format_epoch_log(const EpochLog& e) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d\t%.8f\t%.6f\t%.6f\t%.6f\t%ld",
                  e.epoch, e.lr, e.mean_train_loss, e.dev_accuracy, e.dev_f1,
                  e.degree_floor_hits);
    return std::string(buf);
}

TrainResult train(SgcnModel model, const std::vector<RelationRecord>& train_set,
                  const std::vector<RelationRecord>& dev_set, const LabelSet& labels,
                  const TrainConfig& cfg, std::ostream* log_stream) {
    cfg.validate();
    model.check_consistent();
    if (train_set.empty()) throw DataError("train: empty training set");
    if (dev_set.empty()) throw DataError("train: empty dev set");

    std::vector<std::string> eff = effective_labels(labels, cfg.task);
    if (model.dims.classes != static_cast<int>(eff.size()))
        throw ConfigError("train: model has " + std::to_string(model.dims.classes) +
                          " classes but the task needs " + std::to_string(eff.size()));

    std::vector<int> gold(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i)
        gold[i] = effective_class(train_set[i].sense, labels, cfg.task);

    Rng rng(cfg.seed);

    // Training pool; one-vs-all may downsample negatives to the positive count.
    std::vector<int> pool(train_set.size());
    std::iota(pool.begin(), pool.end(), 0);
    if (cfg.task.kind == TaskSpec::Kind::OneVsAll && cfg.balance_negatives) {
        std::vector<int> positives, negatives;
        for (int i : pool) (gold[i] == 0 ? positives : negatives).push_back(i);
        if (positives.empty()) throw DataError("train: no positive examples for target '" +
                                               cfg.task.target_class + "'");
        rng.shuffle(negatives);
        if (negatives.size() > positives.size()) negatives.resize(positives.size());
        pool = positives;
        pool.insert(pool.end(), negatives.begin(), negatives.end());
        std::sort(pool.begin(), pool.end()); // keep file order before shuffling per epoch
    }

    std::vector<SgcnModel::ParamRef> params = model.params();
    AdamState adam(params);

    TrainResult result;
    result.model = model;
    double best = -std::numeric_limits<double>::infinity();

    struct Slot {
        double loss = 0.0;
        long floor_hits = 0;
        std::vector<std::vector<double>> grads;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr_e = lr_at_epoch(cfg, epoch);
        rng.shuffle(pool);

        double loss_sum = 0.0;
        long floor_hits = 0;
        for (std::size_t begin = 0; begin < pool.size(); begin += cfg.batch) {
            std::size_t end = std::min(pool.size(), begin + cfg.batch);
            int bs = static_cast<int>(end - begin);
            std::vector<Slot> slots(bs);
            parallel_for_capture(bs, [&](int i) {
                const RelationRecord& rec = train_set[pool[begin + i]];
                Tape tape;
                BoundModel bm(tape, model);
                ForwardPass fp = bm.forward(rec.arg1_tokens, rec.arg2_tokens);
                Tensor loss = bm.loss(fp, gold[pool[begin + i]]);
                if (!std::isfinite(loss.at(0)))
                    throw NumericError("train: non-finite loss on example '" + rec.id + "'");
                tape.backward(loss);
                slots[i].loss = loss.at(0);
                slots[i].floor_hits = fp.graph.degree_floor_hits;
                slots[i].grads = bm.grads();
            });

            // Ordered reduction keeps results independent of thread count.
            std::vector<std::vector<double>> batch_grads(params.size());
            for (std::size_t p = 0; p < params.size(); ++p)
                if (params[p].trainable)
                    batch_grads[p].assign(params[p].tensor->size(), 0.0);
            for (int i = 0; i < bs; ++i) {
                loss_sum += slots[i].loss;
                floor_hits += slots[i].floor_hits;
                for (std::size_t p = 0; p < params.size(); ++p) {
                    if (batch_grads[p].empty()) continue;
                    const std::vector<double>& g = slots[i].grads[p];
                    for (std::size_t k = 0; k < g.size(); ++k) batch_grads[p][k] += g[k];
                }
            }
            for (auto& g : batch_grads)
                for (double& v : g) v /= bs;
            clip_gradients(batch_grads, cfg.clip_lo, cfg.clip_hi);
            adam.step(params, batch_grads, lr_e);
        }

        EvalReport dev = evaluate(model, dev_set, labels, cfg.task);
        EpochLog entry{epoch, lr_e, loss_sum / static_cast<double>(pool.size()),
                       dev.accuracy,
                       cfg.task.kind == TaskSpec::Kind::OneVsAll ? dev.f1[0] : dev.macro_f1,
                       floor_hits};
        result.log.push_back(entry);
        if (log_stream) (*log_stream) << format_epoch_log(entry) << "\n";

        double metric = selection_metric(dev, labels, cfg.task);
        if (metric > best) {
            best = metric;
            result.model = model;
            result.best_epoch = epoch;
            result.best_metric = metric;
        }
    }
    result.optimizer_steps = adam.step_count();
    return result;
}

} // namespace sgcn
