#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccl/config.hpp"
#include "ccl/consistency.hpp"
#include "ccl/dataset.hpp"
#include "ccl/masks.hpp"
#include "ccl/mlp.hpp"
#include "ccl/optimizer.hpp"
#include "ccl/rng.hpp"
#include "ccl/schedules.hpp"
#include "ccl/uncertainty.hpp"

namespace ccl {

// Purpose tags for deriving independent random sub-streams. Every stochastic
// consumer gets its own stream keyed by (run seed, tag, indices...), so
// disabling one mechanism never shifts the draws of another. Stable across
// versions: renumbering invalidates committed regression baselines.
namespace stream_tag {
constexpr std::uint64_t init = 1;          // per-pair weight initialization
constexpr std::uint64_t batch = 2;         // per-epoch batch composition
constexpr std::uint64_t mc = 3;            // per (pair, epoch, step) MC passes
constexpr std::uint64_t student = 4;       // per (pair, epoch, step) student perturbation
constexpr std::uint64_t teacher = 5;       // per (pair, epoch, step) teacher target perturbation
constexpr std::uint64_t mask = 6;          // per (pair, epoch, step) Bernoulli filtering
constexpr std::uint64_t run = 7;           // per-seed-index run seed derivation
constexpr std::uint64_t data = 8;          // dataset generation
constexpr std::uint64_t split = 9;         // train/test split
constexpr std::uint64_t labeled_pick = 10; // labeled subset selection
constexpr std::uint64_t corrupt = 11;      // label corruption
}  // namespace stream_tag

struct ModelSpec {
    std::vector<int> hidden{64, 64};
    std::vector<double> dropout{0.15};

    void validate() const {
        if (hidden.empty()) throw std::invalid_argument("hidden must name at least one layer");
        for (int h : hidden) {
            if (h < 1) throw std::invalid_argument("hidden widths must be >= 1");
        }
        if (dropout.size() != 1 && dropout.size() != hidden.size()) {
            throw std::invalid_argument("dropout must have 1 or as many entries as hidden");
        }
        for (double r : dropout) {
            if (r < 0.0 || r >= 1.0) throw std::invalid_argument("dropout must be in [0,1)");
        }
    }
};

struct TrainerConfig {
    int epochs = 40;
    int batch_size = 32;
    int labeled_per_batch = 8;
    std::uint64_t seed = 42;
    SgdConfig opt{};
    double input_noise_sigma = 0.1;
    int n_pairs = 1;
    ModelSpec model{};
    CclConfig ccl{};

    // mechanism toggles; the harness sets these from the method preset
    bool consistency_enabled = true;
    bool filtering_enabled = true;
    bool temperature_enabled = true;

    bool independent_pair_batches = false;  // default: all pairs see the same batch
    bool record_steps = false;

    void validate() const {
        if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (labeled_per_batch < 0 || labeled_per_batch > batch_size) {
            throw std::invalid_argument("labeled_per_batch must be in [0, batch_size]");
        }
        if (!(opt.lr > 0.0)) throw std::invalid_argument("lr must be > 0");
        if (opt.momentum < 0.0 || opt.momentum >= 1.0) {
            throw std::invalid_argument("momentum must be in [0,1)");
        }
        if (input_noise_sigma < 0.0) throw std::invalid_argument("input_noise must be >= 0");
        if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
        model.validate();
        ccl.validate();
    }
};

struct StudentTeacherPair {
    MlpModel student;
    MlpModel teacher;
    SgdOptimizer optimizer;
};

// n student-teacher pairs wired in one cycle: student i's consistency target
// comes from teacher (i-1+n) % n. n=1 degenerates to the coupled wiring
// where the student learns from its own EMA teacher.
struct TeacherCircle {
    std::vector<StudentTeacherPair> pairs;

    std::size_t target_teacher_index(std::size_t student_index) const {
        const std::size_t n = pairs.size();
        if (student_index >= n) throw std::invalid_argument("target_teacher_index: out of range");
        return (student_index + n - 1) % n;
    }
};

// teacher <- decay * teacher + (1 - decay) * student, parameter-wise.
inline void ema_update(MlpModel& teacher, const MlpModel& student, double decay) {
    if (decay < 0.0 || decay >= 1.0) throw std::invalid_argument("ema_update: decay must be in [0,1)");
    if (teacher.layers.size() != student.layers.size()) {
        throw std::invalid_argument("ema_update: architecture mismatch (layer count)");
    }
    for (std::size_t l = 0; l < teacher.layers.size(); ++l) {
        MlpLayer& t = teacher.layers[l];
        const MlpLayer& s = student.layers[l];
        require_same_shape(t.weight, s.weight, "ema_update: layer " + std::to_string(l) + " weight");
        require_same_shape(t.bias, s.bias, "ema_update: layer " + std::to_string(l) + " bias");
        for (std::size_t i = 0; i < t.weight.data.size(); ++i) {
            t.weight.data[i] = decay * t.weight.data[i] + (1.0 - decay) * s.weight.data[i];
        }
        for (std::size_t i = 0; i < t.bias.data.size(); ++i) {
            t.bias.data[i] = decay * t.bias.data[i] + (1.0 - decay) * s.bias.data[i];
        }
    }
}

// Pairs are seeded independently (decoupled initializations); each teacher
// starts as a copy of its student.
inline TeacherCircle build_circle(int n_pairs, std::size_t input_dim, int n_classes,
                                  const ModelSpec& spec, SgdConfig opt, std::uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("build_circle: need at least one pair");
    spec.validate();
    TeacherCircle circle;
    circle.pairs.reserve(static_cast<std::size_t>(n_pairs));
    for (int p = 0; p < n_pairs; ++p) {
        RngStream init(mix_seed({seed, stream_tag::init, static_cast<std::uint64_t>(p)}));
        MlpModel student = make_mlp(input_dim, spec.hidden, static_cast<std::size_t>(n_classes),
                                    spec.dropout, init);
        MlpModel teacher = student;
        SgdOptimizer optimizer(student, opt);
        circle.pairs.push_back(StudentTeacherPair{std::move(student), std::move(teacher),
                                                  std::move(optimizer)});
    }
    return circle;
}

struct PairStepMetrics {
    double supervised_loss = 0.0;
    double consistency_loss = 0.0;
    double lambda = 0.0;
    double kept_fraction = 0.0;
    double mean_temperature = 0.0;
    int hard_kept = 0;
};

struct StepMetrics {
    int epoch = 0;
    int step = 0;
    std::size_t batch_rows = 0;
    std::vector<PairStepMetrics> pairs;
};

struct PairEpochMetrics {
    double supervised_loss = 0.0;
    double consistency_loss = 0.0;
    double kept_fraction = 0.0;
    double mean_temperature = 0.0;
    double hard_kept = 0.0;
    double student_train_acc = 0.0;
    double student_test_acc = 0.0;
    double teacher_train_acc = 0.0;
    double teacher_test_acc = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    std::vector<PairEpochMetrics> pairs;
};

struct RunHistory {
    std::vector<EpochRecord> epochs;
    std::vector<StepMetrics> steps;  // populated only when record_steps is set
};

struct TrainResult {
    TeacherCircle circle;
    RunHistory history;
};

// Fraction of argmax-correct predictions under a deterministic forward;
// argmax ties go to the lowest class index.
inline double evaluate(const MlpModel& model, const Tensor& inputs, const std::vector<int>& labels) {
    if (inputs.rows == 0) throw std::invalid_argument("evaluate: empty evaluation set");
    if (labels.size() != inputs.rows) throw std::invalid_argument("evaluate: label count mismatch");
    const Tensor logits = forward_deterministic(model, inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* row = logits.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (row[c] > row[best]) best = c;
        }
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

// Index plan for one epoch: `steps` batches of labeled_per_batch labeled rows
// plus unlabeled rows chunked from one seeded shuffle (remainder dropped).
// Labeled rows cycle through seeded reshuffles, or are drawn with replacement
// when the pool is smaller than labeled_per_batch.
struct EpochBatchPlan {
    std::vector<std::vector<std::size_t>> labeled;
    std::vector<std::vector<std::size_t>> unlabeled;

    std::size_t steps() const { return labeled.size(); }
};

inline EpochBatchPlan epoch_batch_indices(const Dataset& data, const TrainerConfig& cfg, int epoch,
                                          std::uint64_t batch_stream_key) {
    RngStream rng(mix_seed({cfg.seed, stream_tag::batch, batch_stream_key,
                            static_cast<std::uint64_t>(epoch)}));
    std::vector<std::size_t> labeled_pool;
    std::vector<std::size_t> unlabeled_pool;
    for (std::size_t i : data.train_idx) {
        (data.labeled[i] ? labeled_pool : unlabeled_pool).push_back(i);
    }

    const std::size_t unlabeled_slots =
        static_cast<std::size_t>(cfg.batch_size - cfg.labeled_per_batch);

    EpochBatchPlan plan;
    std::size_t steps = 1;
    // fully labeled data degenerates to plain supervised batching over all slots
    std::size_t want = static_cast<std::size_t>(cfg.labeled_per_batch);
    if (!unlabeled_pool.empty() && unlabeled_slots > 0) {
        rng.shuffle(unlabeled_pool);
        steps = std::max<std::size_t>(1, unlabeled_pool.size() / unlabeled_slots);
    } else if (unlabeled_pool.empty()) {
        if (labeled_pool.empty()) {
            throw std::invalid_argument("epoch_batch_indices: empty training split");
        }
        want = static_cast<std::size_t>(cfg.batch_size);
        steps = std::max<std::size_t>(1, labeled_pool.size() / want);
    }

    // labeled side: with-replacement draws when scarce, otherwise chunks of a
    // reshuffled cycle
    std::vector<std::size_t> cycle;
    std::size_t cycle_pos = 0;
    plan.labeled.resize(steps);
    plan.unlabeled.resize(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        if (want > 0) {
            if (labeled_pool.empty()) {
                throw std::invalid_argument("epoch_batch_indices: labeled_per_batch > 0 but no labeled rows");
            }
            if (labeled_pool.size() < want) {
                for (std::size_t i = 0; i < want; ++i) {
                    plan.labeled[s].push_back(labeled_pool[rng.uniform_index(labeled_pool.size())]);
                }
            } else {
                for (std::size_t i = 0; i < want; ++i) {
                    if (cycle_pos == cycle.size()) {
                        cycle = labeled_pool;
                        rng.shuffle(cycle);
                        cycle_pos = 0;
                    }
                    plan.labeled[s].push_back(cycle[cycle_pos++]);
                }
            }
        }
        if (!unlabeled_pool.empty() && unlabeled_slots > 0) {
            const std::size_t lo = s * unlabeled_slots;
            const std::size_t hi = std::min(unlabeled_pool.size(), lo + unlabeled_slots);
            plan.unlabeled[s].assign(unlabeled_pool.begin() + static_cast<std::ptrdiff_t>(lo),
                                     unlabeled_pool.begin() + static_cast<std::ptrdiff_t>(hi));
        }
    }
    return plan;
}

// One optimization step for every pair. Per student i: the target teacher
// runs the MC uncertainty passes, masks and temperatures are derived from
// that report, student and teacher run one perturbed forward each, and the
// combined loss is backpropagated into the student. Teachers are EMA-updated
// from their own students only after every student has stepped.
inline StepMetrics train_step(TeacherCircle& circle, const std::vector<Batch>& batches, int epoch,
                              int step, const TrainerConfig& cfg) {
    if (batches.empty()) throw std::invalid_argument("train_step: no batches");
    if (batches.size() != 1 && batches.size() != circle.pairs.size()) {
        throw std::invalid_argument("train_step: need 1 batch or one per pair");
    }
    for (const Batch& b : batches) {
        if (b.size() == 0) throw std::invalid_argument("train_step: empty batch");
    }

    StepMetrics metrics;
    metrics.epoch = epoch;
    metrics.step = step;
    metrics.batch_rows = batches[0].size();
    metrics.pairs.resize(circle.pairs.size());

    const double lambda = cfg.consistency_enabled ? ramp_up_weight(epoch, cfg.ccl.weights) : 0.0;

    for (std::size_t p = 0; p < circle.pairs.size(); ++p) {
        const Batch& batch = batches[batches.size() == 1 ? 0 : p];
        const std::size_t rows = batch.size();
        StudentTeacherPair& pair = circle.pairs[p];
        PairStepMetrics& pm = metrics.pairs[p];
        pm.lambda = lambda;

        const std::uint64_t pu = static_cast<std::uint64_t>(p);
        const std::uint64_t eu = static_cast<std::uint64_t>(epoch);
        const std::uint64_t su = static_cast<std::uint64_t>(step);

        Perturbation student_pert(cfg.input_noise_sigma, true,
                                  mix_seed({cfg.seed, stream_tag::student, pu, eu, su}));
        const ForwardResult student_out = forward(pair.student, batch.inputs, student_pert);

        KeepMask keep(rows, true);
        std::vector<double> temps(rows, 1.0);
        Tensor teacher_logits;
        double consistency_value = 0.0;

        if (cfg.consistency_enabled) {
            const MlpModel& target_teacher = circle.pairs[circle.target_teacher_index(p)].teacher;

            int hard_kept = static_cast<int>(rows);
            if (cfg.filtering_enabled || cfg.temperature_enabled) {
                const UncertaintyReport report = estimate_uncertainty(
                    target_teacher, batch.inputs, cfg.ccl.mc_passes, cfg.input_noise_sigma,
                    mix_seed({cfg.seed, stream_tag::mc, pu, eu, su}));
                if (cfg.filtering_enabled) {
                    const KeepMask hard = hard_filter_mask(report.ranks, epoch, cfg.ccl.filter.beta);
                    RngStream mask_rng(mix_seed({cfg.seed, stream_tag::mask, pu, eu, su}));
                    const double p_max = p_max_schedule(epoch, cfg.ccl.filter.rho,
                                                        cfg.ccl.filter.threshold_epoch);
                    const KeepMask prob = prob_filter_mask(report.ranks, p_max, mask_rng);
                    keep = combine_masks(hard, prob, cfg.ccl.filter.mode);
                    hard_kept = static_cast<int>(kept_count(hard));
                }
                if (cfg.temperature_enabled) {
                    const double t_max = t_max_schedule(epoch, cfg.ccl.temperature);
                    temps = per_sample_temperatures(report.ranks, t_max, cfg.ccl.temperature.t_min);
                }
            }
            pm.hard_kept = hard_kept;

            Perturbation teacher_pert(cfg.input_noise_sigma, true,
                                      mix_seed({cfg.seed, stream_tag::teacher, pu, eu, su}));
            teacher_logits = forward(target_teacher, batch.inputs, teacher_pert).logits;
        } else {
            // consistency fully disabled: inert placeholder target
            teacher_logits = student_out.logits;
            keep.assign(rows, false);
            temps.assign(rows, 1.0);
            pm.hard_kept = 0;
        }

        const TotalLossResult loss = total_loss(student_out.logits, teacher_logits, batch.labels,
                                                batch.labeled, temps, keep, lambda);
        consistency_value = loss.consistency;

        const ModelGrads grads = backward(pair.student, student_out.cache, loss.grad_student_logits);
        pair.optimizer.step(pair.student, grads);

        pm.supervised_loss = loss.supervised;
        pm.consistency_loss = consistency_value;
        pm.kept_fraction = static_cast<double>(kept_count(keep)) / static_cast<double>(rows);
        pm.mean_temperature =
            std::accumulate(temps.begin(), temps.end(), 0.0) / static_cast<double>(rows);
    }

    // barrier: every teacher sees only its student's post-step weights
    for (StudentTeacherPair& pair : circle.pairs) {
        ema_update(pair.teacher, pair.student, cfg.ccl.ema_decay);
    }
    return metrics;
}

inline StepMetrics train_step(TeacherCircle& circle, const Batch& batch, int epoch, int step,
                              const TrainerConfig& cfg) {
    return train_step(circle, std::vector<Batch>{batch}, epoch, step, cfg);
}

// Full training loop: epoch-shuffled batching, train_step per batch, and an
// evaluation of every student and teacher on both splits at the end of each
// epoch.
inline TrainResult train(const TrainerConfig& cfg, const Dataset& data) {
    cfg.validate();
    data.validate();
    if (data.train_idx.empty()) throw std::invalid_argument("train: empty training split");

    std::vector<std::size_t> per_class(static_cast<std::size_t>(data.n_classes), 0);
    for (std::size_t i : data.train_idx) {
        if (data.labeled[i]) per_class[static_cast<std::size_t>(data.labels[i])]++;
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c] == 0) {
            throw std::invalid_argument("train: no labeled sample for class " + std::to_string(c));
        }
    }

    TrainResult result;
    result.circle = build_circle(cfg.n_pairs, data.features.cols, data.n_classes, cfg.model,
                                 cfg.opt, cfg.seed);

    const Tensor train_x = rows_subset(data.features, data.train_idx);
    const Tensor test_x = rows_subset(data.features, data.test_idx);
    std::vector<int> train_y;
    train_y.reserve(data.train_idx.size());
    for (std::size_t i : data.train_idx) train_y.push_back(data.true_labels[i]);
    std::vector<int> test_y;
    test_y.reserve(data.test_idx.size());
    for (std::size_t i : data.test_idx) test_y.push_back(data.labels[i]);

    const std::size_t n_pairs = static_cast<std::size_t>(cfg.n_pairs);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<EpochBatchPlan> plans;
        if (cfg.independent_pair_batches) {
            for (std::size_t p = 0; p < n_pairs; ++p) {
                plans.push_back(epoch_batch_indices(data, cfg, epoch, p + 1));
            }
        } else {
            plans.push_back(epoch_batch_indices(data, cfg, epoch, 0));
        }
        const std::size_t steps = plans[0].steps();

        EpochRecord record;
        record.epoch = epoch;
        record.pairs.resize(n_pairs);
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<Batch> batches;
            for (const EpochBatchPlan& plan : plans) {
                batches.push_back(assemble_batch(data, plan.labeled[s], plan.unlabeled[s]));
            }
            const StepMetrics sm =
                train_step(result.circle, batches, epoch, static_cast<int>(s), cfg);
            for (std::size_t p = 0; p < n_pairs; ++p) {
                record.pairs[p].supervised_loss += sm.pairs[p].supervised_loss;
                record.pairs[p].consistency_loss += sm.pairs[p].consistency_loss;
                record.pairs[p].kept_fraction += sm.pairs[p].kept_fraction;
                record.pairs[p].mean_temperature += sm.pairs[p].mean_temperature;
                record.pairs[p].hard_kept += sm.pairs[p].hard_kept;
            }
            if (cfg.record_steps) result.history.steps.push_back(sm);
        }
        const double inv_steps = 1.0 / static_cast<double>(steps);
        for (std::size_t p = 0; p < n_pairs; ++p) {
            PairEpochMetrics& pm = record.pairs[p];
            pm.supervised_loss *= inv_steps;
            pm.consistency_loss *= inv_steps;
            pm.kept_fraction *= inv_steps;
            pm.mean_temperature *= inv_steps;
            pm.hard_kept *= inv_steps;
            const StudentTeacherPair& pair = result.circle.pairs[p];
            pm.student_train_acc = evaluate(pair.student, train_x, train_y);
            pm.teacher_train_acc = evaluate(pair.teacher, train_x, train_y);
            if (!data.test_idx.empty()) {
                pm.student_test_acc = evaluate(pair.student, test_x, test_y);
                pm.teacher_test_acc = evaluate(pair.teacher, test_x, test_y);
            }
        }
        result.history.epochs.push_back(std::move(record));
    }
    return result;
}

}  // namespace ccl
