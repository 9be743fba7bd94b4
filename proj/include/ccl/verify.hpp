#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ccl/consistency.hpp"
#include "ccl/dataset.hpp"
#include "ccl/losses.hpp"
#include "ccl/masks.hpp"
#include "ccl/mlp.hpp"
#include "ccl/rng.hpp"
#include "ccl/trainer.hpp"
#include "ccl/uncertainty.hpp"

namespace ccl {

struct CheckResult {
    std::string name;
    double tolerance = 0.0;
    double measured = 0.0;  // worst case observed; pass iff measured <= tolerance
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 20240901;
    // negative-control hook: corrupts one analytic gradient entry so the
    // finite-difference check must fail
    bool inject_gradient_bug = false;
};

namespace verify_detail {

// central finite differences over a generic parameter vector
template <class Fn>
inline std::vector<double> central_differences(std::vector<double> x, Fn f, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double rel_error(double analytic, double numeric, double floor) {
    const double denom = std::max({floor, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / denom;
}

// flattens model parameters so the FD loop can walk them uniformly
inline std::vector<double*> parameter_view(MlpModel& m) {
    std::vector<double*> view;
    for (MlpLayer& l : m.layers) {
        for (double& v : l.weight.data) view.push_back(&v);
        for (double& v : l.bias.data) view.push_back(&v);
    }
    return view;
}

inline std::vector<double> gradient_flat(const ModelGrads& g) {
    std::vector<double> flat;
    for (const MlpLayer& l : g.layers) {
        flat.insert(flat.end(), l.weight.data.begin(), l.weight.data.end());
        flat.insert(flat.end(), l.bias.data.begin(), l.bias.data.end());
    }
    return flat;
}

}  // namespace verify_detail

// Backward pass vs central finite differences through the replayed forward
// (same noise, same dropout masks), over `instances` random small models.
// The scalar loss is a fixed random linear functional of the logits.
inline CheckResult check_mlp_gradients(std::uint64_t seed, int instances, bool inject_bug) {
    CheckResult res;
    res.name = "mlp backward vs central finite differences";
    res.tolerance = 1e-4;
    const double h = 1e-5;

    RngStream rng(mix_seed({seed, 0xF1}));
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const std::size_t in_dim = 2 + rng.uniform_index(3);
        const int hid = 3 + static_cast<int>(rng.uniform_index(4));
        const std::size_t classes = 2 + rng.uniform_index(3);
        const std::size_t rows = 1 + rng.uniform_index(4);

        RngStream init(rng.next_u64());
        MlpModel model = make_mlp(in_dim, {hid}, classes, {0.3}, init);

        Tensor inputs(rows, in_dim);
        for (double& v : inputs.data) v = rng.gaussian();
        Perturbation pert(0.1, true, rng.next_u64());
        const ForwardResult out = forward(model, inputs, pert);

        Tensor weights(rows, classes);
        for (double& v : weights.data) v = rng.gaussian();

        ModelGrads analytic = backward(model, out.cache, weights);
        if (inject_bug && inst == 0) {
            analytic.layers[0].weight.data[0] += 1e-3;
        }
        const std::vector<double> analytic_flat = verify_detail::gradient_flat(analytic);

        std::vector<double*> params = verify_detail::parameter_view(model);
        std::vector<double> x(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) x[i] = *params[i];
        const auto loss_at = [&](const std::vector<double>& v) {
            for (std::size_t i = 0; i < params.size(); ++i) *params[i] = v[i];
            const Tensor logits = forward_replay(model, out.cache);
            double acc = 0.0;
            for (std::size_t i = 0; i < logits.data.size(); ++i) {
                acc += weights.data[i] * logits.data[i];
            }
            return acc;
        };
        const std::vector<double> numeric = verify_detail::central_differences(x, loss_at, h);
        loss_at(x);  // restore parameters

        for (std::size_t i = 0; i < x.size(); ++i) {
            worst = std::max(worst, verify_detail::rel_error(analytic_flat[i], numeric[i], 1e-6));
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

// consistency_loss gradient wrt the student logits vs finite differences,
// across sharpening and softening temperatures.
inline CheckResult check_consistency_gradients(std::uint64_t seed) {
    CheckResult res;
    res.name = "consistency gradient vs central finite differences";
    res.tolerance = 1e-4;
    const double h = 1e-5;

    RngStream rng(mix_seed({seed, 0xF2}));
    double worst = 0.0;
    for (double t : {0.5, 1.0, 5.0, 20.0}) {
        for (int inst = 0; inst < 25; ++inst) {
            const std::size_t rows = 1 + rng.uniform_index(4);
            const std::size_t classes = 2 + rng.uniform_index(4);
            Tensor student(rows, classes), teacher(rows, classes);
            for (double& v : student.data) v = 2.0 * rng.gaussian();
            for (double& v : teacher.data) v = 2.0 * rng.gaussian();
            KeepMask keep(rows);
            for (std::size_t i = 0; i < rows; ++i) keep[i] = rng.bernoulli(0.7);
            const std::vector<double> temps(rows, t);

            const ConsistencyResult analytic = consistency_loss(student, teacher, temps, keep);
            const auto loss_at = [&](const std::vector<double>& v) {
                Tensor s = student;
                s.data = v;
                return consistency_loss(s, teacher, temps, keep).loss;
            };
            const std::vector<double> numeric =
                verify_detail::central_differences(student.data, loss_at, h);
            for (std::size_t i = 0; i < numeric.size(); ++i) {
                worst = std::max(worst, verify_detail::rel_error(
                                            analytic.grad_student_logits.data[i], numeric[i], 1e-7));
            }
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

// mse_rows gradient vs finite differences.
inline CheckResult check_mse_gradients(std::uint64_t seed) {
    CheckResult res;
    res.name = "mse gradient vs central finite differences";
    res.tolerance = 1e-6;
    const double h = 1e-5;

    RngStream rng(mix_seed({seed, 0xF3}));
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t rows = 1 + rng.uniform_index(3);
        const std::size_t cols = 2 + rng.uniform_index(4);
        Tensor p(rows, cols), q(rows, cols);
        for (double& v : p.data) v = rng.gaussian();
        for (double& v : q.data) v = rng.gaussian();
        const MseResult analytic = mse_rows(p, q);
        const auto loss_at = [&](const std::vector<double>& v) {
            Tensor pp = p;
            pp.data = v;
            const MseResult r = mse_rows(pp, q);
            double acc = 0.0;
            for (double x : r.per_row) acc += x;
            return acc;
        };
        const std::vector<double> numeric = verify_detail::central_differences(p.data, loss_at, h);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            worst = std::max(worst,
                             verify_detail::rel_error(analytic.grad_p.data[i], numeric[i], 1e-7));
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

// predictive_variance vs a naive two-pass mean/variance oracle.
inline CheckResult check_predictive_variance(std::uint64_t seed, int stacks) {
    CheckResult res;
    res.name = "predictive variance vs naive two-pass oracle";
    res.tolerance = 1e-12;

    RngStream rng(mix_seed({seed, 0xF4}));
    double worst = 0.0;
    for (int inst = 0; inst < stacks; ++inst) {
        const std::size_t k = 2 + rng.uniform_index(9);
        const std::size_t rows = 1 + rng.uniform_index(6);
        const std::size_t classes = 2 + rng.uniform_index(5);
        PredictionStack stack;
        for (std::size_t s = 0; s < k; ++s) {
            Tensor t(rows, classes);
            for (std::size_t i = 0; i < rows; ++i) {
                double sum = 0.0;
                for (std::size_t c = 0; c < classes; ++c) {
                    t(i, c) = -std::log(1.0 - rng.uniform());
                    sum += t(i, c);
                }
                for (std::size_t c = 0; c < classes; ++c) t(i, c) /= sum;
            }
            stack.push_back(std::move(t));
        }
        const std::vector<double> pv = predictive_variance(stack);
        for (std::size_t i = 0; i < rows; ++i) {
            double oracle = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                double mean = 0.0;
                for (std::size_t s = 0; s < k; ++s) mean += stack[s](i, c);
                mean /= static_cast<double>(k);
                double var = 0.0;
                for (std::size_t s = 0; s < k; ++s) {
                    const double d = stack[s](i, c) - mean;
                    var += d * d;
                }
                oracle += var / static_cast<double>(k);
            }
            worst = std::max(worst, std::abs(pv[i] - oracle));
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

// t repeated EMA updates against a fixed student equal the closed form
// a^t w0 + (1 - a^t) ws.
inline CheckResult check_ema_closed_form(std::uint64_t seed) {
    CheckResult res;
    res.name = "ema repeated update vs closed form";
    res.tolerance = 1e-12;

    RngStream rng(mix_seed({seed, 0xF5}));
    RngStream init_t(rng.next_u64());
    RngStream init_s(rng.next_u64());
    MlpModel teacher = make_mlp(3, {4}, 2, {0.0}, init_t);
    MlpModel student = make_mlp(3, {4}, 2, {0.0}, init_s);
    const MlpModel teacher0 = teacher;

    double worst = 0.0;
    const double alpha = 0.97;
    for (int t = 1; t <= 40; ++t) {
        ema_update(teacher, student, alpha);
        const double at = std::pow(alpha, t);
        for (std::size_t l = 0; l < teacher.layers.size(); ++l) {
            for (std::size_t i = 0; i < teacher.layers[l].weight.data.size(); ++i) {
                const double expected = at * teacher0.layers[l].weight.data[i] +
                                        (1.0 - at) * student.layers[l].weight.data[i];
                worst = std::max(worst, std::abs(teacher.layers[l].weight.data[i] - expected));
            }
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

// Empirical filter-out frequency per rank vs m_p_i, 3 sigma binomial bound.
// Rank 1 must be kept always (its bound is exact).
inline CheckResult check_mask_statistics(std::uint64_t seed) {
    CheckResult res;
    res.name = "probabilistic mask binomial statistics (z-score)";
    res.tolerance = 3.0;

    const int draws = 10000;
    const std::vector<int> ranks{1, 2, 3, 4, 5};
    const double p_max = 0.8;
    RngStream rng(mix_seed({seed, 0xF6}));
    std::vector<int> filtered(ranks.size(), 0);
    for (int d = 0; d < draws; ++d) {
        const KeepMask keep = prob_filter_mask(ranks, p_max, rng);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (!keep[i]) ++filtered[i];
        }
    }
    double worst = 0.0;
    std::string detail;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const double expected = filter_out_probability(ranks[i], ranks.size(), p_max);
        const double freq = static_cast<double>(filtered[i]) / draws;
        if (expected == 0.0) {
            if (filtered[i] != 0) {
                worst = std::max(worst, 1e9);
                detail += "rank1 filtered; ";
            }
            continue;
        }
        const double sigma = std::sqrt(expected * (1.0 - expected) / draws);
        worst = std::max(worst, std::abs(freq - expected) / sigma);
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    res.detail = detail;
    return res;
}

// Doubling the temperature shrinks the consistency gradient norm by about 4x
// in the high-temperature regime.
inline CheckResult check_gradient_scaling(std::uint64_t seed) {
    CheckResult res;
    res.name = "1/T^2 consistency gradient scaling (|ratio - 4|)";
    res.tolerance = 0.4;

    RngStream rng(mix_seed({seed, 0xF7}));
    double worst = 0.0;
    for (double t : {25.0, 50.0, 100.0}) {
        for (int inst = 0; inst < 100; ++inst) {
            const std::size_t classes = 10;
            Tensor student(1, classes), teacher(1, classes);
            for (double& v : student.data) v = rng.gaussian();
            for (double& v : teacher.data) v = rng.gaussian();
            const KeepMask keep(1, true);
            const auto norm_at = [&](double temp) {
                const ConsistencyResult r =
                    consistency_loss(student, teacher, std::vector<double>(1, temp), keep);
                double acc = 0.0;
                for (double g : r.grad_student_logits.data) acc += g * g;
                return std::sqrt(acc);
            };
            const double ratio = norm_at(t) / norm_at(2.0 * t);
            worst = std::max(worst, std::abs(ratio - 4.0));
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

// Two identical tiny runs must agree bit for bit: every parameter and every
// recorded metric.
inline CheckResult check_determinism(std::uint64_t seed) {
    CheckResult res;
    res.name = "determinism: repeated run is bit-identical";
    res.tolerance = 0.0;

    Dataset data = gen_two_moons(120, 0.1, mix_seed({seed, stream_tag::data}));
    data = split_train_test(data, 0.25, mix_seed({seed, stream_tag::split}));
    data = split_semi_supervised(data, 6, mix_seed({seed, stream_tag::labeled_pick}));

    TrainerConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.labeled_per_batch = 4;
    cfg.seed = mix_seed({seed, 0xF8});
    cfg.model.hidden = {8, 8};
    cfg.ccl.mc_passes = 3;
    cfg.n_pairs = 2;

    const TrainResult a = train(cfg, data);
    const TrainResult b = train(cfg, data);

    std::size_t mismatches = 0;
    for (std::size_t p = 0; p < a.circle.pairs.size(); ++p) {
        for (std::size_t l = 0; l < a.circle.pairs[p].student.layers.size(); ++l) {
            const auto& wa = a.circle.pairs[p].student.layers[l].weight.data;
            const auto& wb = b.circle.pairs[p].student.layers[l].weight.data;
            for (std::size_t i = 0; i < wa.size(); ++i) {
                if (wa[i] != wb[i]) ++mismatches;
            }
            const auto& ta = a.circle.pairs[p].teacher.layers[l].weight.data;
            const auto& tb = b.circle.pairs[p].teacher.layers[l].weight.data;
            for (std::size_t i = 0; i < ta.size(); ++i) {
                if (ta[i] != tb[i]) ++mismatches;
            }
        }
    }
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
        for (std::size_t p = 0; p < a.history.epochs[e].pairs.size(); ++p) {
            const PairEpochMetrics& ma = a.history.epochs[e].pairs[p];
            const PairEpochMetrics& mb = b.history.epochs[e].pairs[p];
            if (ma.supervised_loss != mb.supervised_loss) ++mismatches;
            if (ma.consistency_loss != mb.consistency_loss) ++mismatches;
            if (ma.kept_fraction != mb.kept_fraction) ++mismatches;
            if (ma.student_test_acc != mb.student_test_acc) ++mismatches;
            if (ma.teacher_test_acc != mb.teacher_test_acc) ++mismatches;
        }
    }
    res.measured = static_cast<double>(mismatches);
    res.pass = mismatches == 0;
    return res;
}

// Softmax rows must sum to 1 within 1e-9 for |z| <= 50 and T in [0.1, 100].
inline CheckResult check_softmax_row_sums(std::uint64_t seed) {
    CheckResult res;
    res.name = "temperature softmax row sums";
    res.tolerance = 1e-9;

    RngStream rng(mix_seed({seed, 0xF9}));
    double worst = 0.0;
    for (double t : {0.1, 0.5, 1.0, 10.0, 100.0}) {
        for (int inst = 0; inst < 200; ++inst) {
            const std::size_t classes = 2 + rng.uniform_index(9);
            Tensor logits(1, classes);
            for (double& v : logits.data) v = rng.uniform(-50.0, 50.0);
            const Tensor probs = temperature_softmax(logits, t);
            double sum = 0.0;
            for (double p : probs.data) sum += p;
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    }
    res.measured = worst;
    res.pass = worst <= res.tolerance;
    return res;
}

inline std::vector<CheckResult> run_verification(const VerifyOptions& opts = {}) {
    std::vector<CheckResult> checks;
    checks.push_back(check_mlp_gradients(opts.seed, 100, opts.inject_gradient_bug));
    checks.push_back(check_consistency_gradients(opts.seed));
    checks.push_back(check_mse_gradients(opts.seed));
    checks.push_back(check_predictive_variance(opts.seed, 1000));
    checks.push_back(check_ema_closed_form(opts.seed));
    checks.push_back(check_mask_statistics(opts.seed));
    checks.push_back(check_gradient_scaling(opts.seed));
    checks.push_back(check_softmax_row_sums(opts.seed));
    checks.push_back(check_determinism(opts.seed));
    return checks;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
    for (const CheckResult& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

inline void print_report(const std::vector<CheckResult>& checks, std::ostream& out) {
    for (const CheckResult& c : checks) {
        char line[256];
        std::snprintf(line, sizeof(line), "[%s] %-55s measured %.3e  tolerance %.3e",
                      c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.tolerance);
        out << line;
        if (!c.detail.empty()) out << "  (" << c.detail << ")";
        out << "\n";
    }
}

}  // namespace ccl
