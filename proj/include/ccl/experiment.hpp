#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ccl/dataset.hpp"
#include "ccl/trainer.hpp"

namespace ccl {

enum class Method { supervised, mean_teacher, filtering_ccl, temperature_ccl, ft_ccl };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::supervised: return "supervised";
        case Method::mean_teacher: return "mean_teacher";
        case Method::filtering_ccl: return "filtering_ccl";
        case Method::temperature_ccl: return "temperature_ccl";
        case Method::ft_ccl: return "ft_ccl";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "supervised") return Method::supervised;
    if (s == "mean_teacher") return Method::mean_teacher;
    if (s == "filtering_ccl") return Method::filtering_ccl;
    if (s == "temperature_ccl") return Method::temperature_ccl;
    if (s == "ft_ccl") return Method::ft_ccl;
    throw std::invalid_argument("method must be one of supervised, mean_teacher, filtering_ccl, "
                                "temperature_ccl, ft_ccl; got '" + s + "'");
}

struct KeyValue {
    std::string key;
    std::string value;
};
using KeyValueList = std::vector<KeyValue>;

// The flat key registry. Defaults materialize when neither the config file
// nor the flags name a key.
inline const std::vector<KeyValue>& config_defaults() {
    static const std::vector<KeyValue> defaults = {
        {"dataset", "two_moons"},
        {"data_csv", ""},
        {"data_n", "1012"},
        {"data_noise", "0.08"},
        {"data_classes", "2"},
        {"test_fraction", "0.5"},
        {"n_labeled", "6"},
        {"corrupt_fraction", "0"},
        {"method", "ft_ccl"},
        {"hidden", "64,64"},
        {"dropout", "0.15"},
        {"input_noise", "0.1"},
        {"epochs", "40"},
        {"batch_size", "32"},
        {"labeled_per_batch", "8"},
        {"lr", "0.05"},
        {"momentum", "0.9"},
        {"ema_decay", "0.99"},
        {"n_pairs", "1"},
        {"pair_batches", "same"},
        {"mc_passes", "10"},
        {"beta", "8"},
        {"rho", "0.4"},
        {"filter_epochs", "210"},
        {"filter_mode", "both"},
        {"temp_phases", "0:20:10:100;100:10:9:300"},
        {"t_min", "0.1"},
        {"lambda_max", "10"},
        {"ramp_epochs", "25"},
        {"seed", "42"},
        {"n_seeds", "1"},
        {"jobs", "1"},
        {"out", "runs"},
        {"record_steps", "false"},
        {"fractions", "0.2,0.3,0.5"},
        {"methods", "supervised,mean_teacher,ft_ccl"},
        {"sweep_labels", "6,12,24"},
    };
    return defaults;
}

// keys that only matter when a CCL mechanism is active
inline const std::set<std::string>& ccl_only_keys() {
    static const std::set<std::string> keys = {
        "mc_passes", "beta",  "rho",        "filter_epochs", "filter_mode",
        "temp_phases", "t_min", "lambda_max", "ramp_epochs",
    };
    return keys;
}

namespace cfgdetail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + " must be an integer, got '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + " must be a non-negative integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + " must be a number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument(key + " must be true/false, got '" + v + "'");
}

inline std::vector<TemperaturePhase> parse_temp_phases(const std::string& v) {
    std::vector<TemperaturePhase> phases;
    for (const std::string& part : split_list(v, ';')) {
        const std::vector<std::string> f = split_list(part, ':');
        if (f.size() != 4) {
            throw std::invalid_argument(
                "temp_phases entries must be start:base:drop:duration, got '" + part + "'");
        }
        TemperaturePhase p;
        p.start_epoch = static_cast<int>(to_int("temp_phases", f[0]));
        p.base_temp = to_double("temp_phases", f[1]);
        p.temp_drop = to_double("temp_phases", f[2]);
        p.duration_epochs = to_double("temp_phases", f[3]);
        phases.push_back(p);
    }
    return phases;
}

}  // namespace cfgdetail

struct ExperimentConfig {
    std::string dataset = "two_moons";
    std::string data_csv;
    std::size_t data_n = 1012;
    double data_noise = 0.08;
    int data_classes = 2;
    double test_fraction = 0.5;
    std::size_t n_labeled = 6;
    double corrupt_fraction = 0.0;

    Method method = Method::ft_ccl;
    TrainerConfig trainer{};  // seed field is overwritten per run
    std::string pair_batches = "same";

    std::uint64_t master_seed = 42;
    int n_seeds = 1;
    int jobs = 1;
    std::string out_dir = "runs";

    std::vector<double> fractions{0.2, 0.3, 0.5};
    std::vector<Method> methods{Method::supervised, Method::mean_teacher, Method::ft_ccl};
    std::vector<std::size_t> sweep_labels{6, 12, 24};

    std::map<std::string, std::string> resolved;  // full key echo
    std::set<std::string> explicit_keys;
    std::vector<std::string> warnings;
};

// Flat `key = value` lines; '#' starts a comment; blank lines and
// [section] markers are ignored.
inline KeyValueList parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    KeyValueList kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = cfgdetail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        kv.push_back({cfgdetail::trim(line.substr(0, eq)), cfgdetail::trim(line.substr(eq + 1))});
    }
    return kv;
}

// Defaults, then the config file, then the flags. Unknown keys and
// out-of-range values raise errors that name the key.
inline ExperimentConfig materialize_config(const KeyValueList& file_kv, const KeyValueList& flag_kv) {
    std::map<std::string, std::string> values;
    for (const KeyValue& kv : config_defaults()) values[kv.key] = kv.value;

    ExperimentConfig cfg;
    const auto apply = [&](const KeyValueList& src) {
        for (const KeyValue& kv : src) {
            if (values.find(kv.key) == values.end()) {
                throw std::invalid_argument("unknown config key '" + kv.key + "'");
            }
            values[kv.key] = kv.value;
            cfg.explicit_keys.insert(kv.key);
        }
    };
    apply(file_kv);
    apply(flag_kv);

    using namespace cfgdetail;

    cfg.dataset = values["dataset"];
    if (cfg.dataset != "two_moons" && cfg.dataset != "blobs" && cfg.dataset != "circles" &&
        cfg.dataset != "csv") {
        throw std::invalid_argument("dataset must be two_moons, blobs, circles or csv");
    }
    cfg.data_csv = values["data_csv"];
    if (cfg.dataset == "csv" && cfg.data_csv.empty()) {
        throw std::invalid_argument("data_csv is required when dataset = csv");
    }
    {
        const long long n = to_int("data_n", values["data_n"]);
        if (n < 4) throw std::invalid_argument("data_n must be >= 4");
        cfg.data_n = static_cast<std::size_t>(n);
    }
    cfg.data_noise = to_double("data_noise", values["data_noise"]);
    if (cfg.data_noise < 0.0) throw std::invalid_argument("data_noise must be >= 0");
    cfg.data_classes = static_cast<int>(to_int("data_classes", values["data_classes"]));
    if (cfg.data_classes < 2) throw std::invalid_argument("data_classes must be >= 2");
    cfg.test_fraction = to_double("test_fraction", values["test_fraction"]);
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must be in (0,1)");
    }
    {
        const long long n = to_int("n_labeled", values["n_labeled"]);
        if (n < 1) throw std::invalid_argument("n_labeled must be >= 1");
        cfg.n_labeled = static_cast<std::size_t>(n);
    }
    cfg.corrupt_fraction = to_double("corrupt_fraction", values["corrupt_fraction"]);
    if (cfg.corrupt_fraction < 0.0 || cfg.corrupt_fraction > 1.0) {
        throw std::invalid_argument("corrupt_fraction must be in [0,1]");
    }

    cfg.method = parse_method(values["method"]);

    TrainerConfig& t = cfg.trainer;
    t.model.hidden.clear();
    for (const std::string& h : split_list(values["hidden"], ',')) {
        t.model.hidden.push_back(static_cast<int>(to_int("hidden", h)));
    }
    t.model.dropout.clear();
    for (const std::string& d : split_list(values["dropout"], ',')) {
        t.model.dropout.push_back(to_double("dropout", d));
    }
    t.input_noise_sigma = to_double("input_noise", values["input_noise"]);
    t.epochs = static_cast<int>(to_int("epochs", values["epochs"]));
    t.batch_size = static_cast<int>(to_int("batch_size", values["batch_size"]));
    t.labeled_per_batch = static_cast<int>(to_int("labeled_per_batch", values["labeled_per_batch"]));
    t.opt.lr = to_double("lr", values["lr"]);
    t.opt.momentum = to_double("momentum", values["momentum"]);
    t.ccl.ema_decay = to_double("ema_decay", values["ema_decay"]);
    t.n_pairs = static_cast<int>(to_int("n_pairs", values["n_pairs"]));
    cfg.pair_batches = values["pair_batches"];
    if (cfg.pair_batches != "same" && cfg.pair_batches != "independent") {
        throw std::invalid_argument("pair_batches must be same or independent");
    }
    t.independent_pair_batches = cfg.pair_batches == "independent";
    t.ccl.mc_passes = static_cast<int>(to_int("mc_passes", values["mc_passes"]));
    t.ccl.filter.beta = to_double("beta", values["beta"]);
    t.ccl.filter.rho = to_double("rho", values["rho"]);
    t.ccl.filter.threshold_epoch = static_cast<int>(to_int("filter_epochs", values["filter_epochs"]));
    t.ccl.filter.mode = parse_filter_mode(values["filter_mode"]);
    t.ccl.temperature.phases = parse_temp_phases(values["temp_phases"]);
    t.ccl.temperature.t_min = to_double("t_min", values["t_min"]);
    t.ccl.weights.lambda_max = to_double("lambda_max", values["lambda_max"]);
    t.ccl.weights.ramp_epochs = static_cast<int>(to_int("ramp_epochs", values["ramp_epochs"]));
    t.record_steps = to_bool("record_steps", values["record_steps"]);

    cfg.master_seed = to_u64("seed", values["seed"]);
    cfg.n_seeds = static_cast<int>(to_int("n_seeds", values["n_seeds"]));
    if (cfg.n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    cfg.jobs = static_cast<int>(to_int("jobs", values["jobs"]));
    if (cfg.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    cfg.out_dir = values["out"];
    if (cfg.out_dir.empty()) throw std::invalid_argument("out must not be empty");

    cfg.fractions.clear();
    for (const std::string& f : split_list(values["fractions"], ',')) {
        const double x = to_double("fractions", f);
        if (x < 0.0 || x > 1.0) throw std::invalid_argument("fractions entries must be in [0,1]");
        cfg.fractions.push_back(x);
    }
    cfg.methods.clear();
    for (const std::string& m : split_list(values["methods"], ',')) {
        cfg.methods.push_back(parse_method(m));
    }
    cfg.sweep_labels.clear();
    for (const std::string& s : split_list(values["sweep_labels"], ',')) {
        const long long n = to_int("sweep_labels", s);
        if (n < 1) throw std::invalid_argument("sweep_labels entries must be >= 1");
        cfg.sweep_labels.push_back(static_cast<std::size_t>(n));
    }

    // rho and friends validate on these paths; run the full validation now so
    // errors surface before any training
    if (!(t.ccl.filter.rho > 0.0 && t.ccl.filter.rho < 1.0)) {
        throw std::invalid_argument("rho must be in (0,1)");
    }
    t.seed = cfg.master_seed;
    t.validate();

    if (cfg.method == Method::supervised) {
        std::vector<std::string> set_ccl;
        for (const std::string& k : cfg.explicit_keys) {
            if (ccl_only_keys().count(k)) set_ccl.push_back(k);
        }
        if (!set_ccl.empty()) {
            std::string msg = "method=supervised ignores CCL keys:";
            for (const std::string& k : set_ccl) msg += " " + k;
            cfg.warnings.push_back(msg);
        }
    }

    cfg.resolved = values;
    return cfg;
}

// Method presets over the single trainer: toggles only, so ablations differ
// in nothing but the mechanism under test.
inline TrainerConfig trainer_for_method(const ExperimentConfig& cfg, Method method) {
    TrainerConfig t = cfg.trainer;
    switch (method) {
        case Method::supervised:
            t.consistency_enabled = false;
            t.filtering_enabled = false;
            t.temperature_enabled = false;
            t.ccl.weights.lambda_max = 0.0;
            break;
        case Method::mean_teacher:
            t.consistency_enabled = true;
            t.filtering_enabled = false;
            t.temperature_enabled = false;
            break;
        case Method::filtering_ccl:
            t.consistency_enabled = true;
            t.filtering_enabled = true;
            t.temperature_enabled = false;
            break;
        case Method::temperature_ccl:
            t.consistency_enabled = true;
            t.filtering_enabled = false;
            t.temperature_enabled = true;
            break;
        case Method::ft_ccl:
            t.consistency_enabled = true;
            t.filtering_enabled = true;
            t.temperature_enabled = true;
            break;
    }
    return t;
}

// Documented and stable: run seed r = mix_seed({master, stream_tag::run, r}).
inline std::uint64_t derive_run_seed(std::uint64_t master_seed, int seed_index) {
    return mix_seed({master_seed, stream_tag::run, static_cast<std::uint64_t>(seed_index)});
}

inline Dataset make_run_dataset(const ExperimentConfig& cfg, std::uint64_t run_seed) {
    Dataset d;
    if (cfg.dataset == "two_moons") {
        d = gen_two_moons(cfg.data_n, cfg.data_noise, mix_seed({run_seed, stream_tag::data}));
    } else if (cfg.dataset == "blobs") {
        d = gen_blobs(cfg.data_n, cfg.data_classes, cfg.data_noise,
                      mix_seed({run_seed, stream_tag::data}));
    } else if (cfg.dataset == "circles") {
        d = gen_circles(cfg.data_n, cfg.data_noise, mix_seed({run_seed, stream_tag::data}));
    } else {
        d = load_csv(cfg.data_csv);
    }
    d = split_train_test(d, cfg.test_fraction, mix_seed({run_seed, stream_tag::split}));
    if (cfg.dataset != "csv") {
        d = split_semi_supervised(d, cfg.n_labeled, mix_seed({run_seed, stream_tag::labeled_pick}));
    }
    if (cfg.corrupt_fraction > 0.0) {
        d = corrupt_labels(d, cfg.corrupt_fraction, mix_seed({run_seed, stream_tag::corrupt}));
    }
    return d;
}

// ---- persistence ----

inline void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline constexpr const char* kRunCsvHeader =
    "epoch,pair,sup_loss,cons_loss,kept_fraction,mean_temperature,hard_kept,"
    "student_train_acc,student_test_acc,teacher_train_acc,teacher_test_acc";

inline std::string run_history_csv(const RunHistory& history) {
    std::ostringstream out;
    out << kRunCsvHeader << "\n";
    char buf[32];
    const auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << "," << buf;
    };
    for (const EpochRecord& rec : history.epochs) {
        for (std::size_t p = 0; p < rec.pairs.size(); ++p) {
            const PairEpochMetrics& m = rec.pairs[p];
            out << rec.epoch << "," << p;
            emit(m.supervised_loss);
            emit(m.consistency_loss);
            emit(m.kept_fraction);
            emit(m.mean_temperature);
            emit(m.hard_kept);
            emit(m.student_train_acc);
            emit(m.student_test_acc);
            emit(m.teacher_train_acc);
            emit(m.teacher_test_acc);
            out << "\n";
        }
    }
    return out.str();
}

struct SeedOutcome {
    int seed_index = 0;
    std::uint64_t run_seed = 0;
    RunHistory history;
    // final-epoch values, averaged over pairs (no ensembling)
    double student_test_acc = 0.0;
    double teacher_test_acc = 0.0;
    double student_train_acc = 0.0;
    double teacher_train_acc = 0.0;
    double supervised_loss = 0.0;
    double consistency_loss = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double std_dev = 0.0;  // population standard deviation over seeds
};

inline Aggregate aggregate_values(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty()) return a;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - a.mean) * (x - a.mean);
    a.std_dev = std::sqrt(var / static_cast<double>(xs.size()));
    return a;
}

struct ExperimentSummary {
    Method method = Method::ft_ccl;
    std::vector<SeedOutcome> seeds;
    Aggregate student_test_acc;
    Aggregate teacher_test_acc;
};

inline SeedOutcome run_single(const ExperimentConfig& cfg, Method method, int seed_index) {
    SeedOutcome outcome;
    outcome.seed_index = seed_index;
    outcome.run_seed = derive_run_seed(cfg.master_seed, seed_index);

    const Dataset data = make_run_dataset(cfg, outcome.run_seed);
    TrainerConfig tcfg = trainer_for_method(cfg, method);
    tcfg.seed = outcome.run_seed;

    TrainResult result = train(tcfg, data);
    outcome.history = std::move(result.history);

    if (!outcome.history.epochs.empty()) {
        const EpochRecord& last = outcome.history.epochs.back();
        const double inv = 1.0 / static_cast<double>(last.pairs.size());
        for (const PairEpochMetrics& m : last.pairs) {
            outcome.student_test_acc += inv * m.student_test_acc;
            outcome.teacher_test_acc += inv * m.teacher_test_acc;
            outcome.student_train_acc += inv * m.student_train_acc;
            outcome.teacher_train_acc += inv * m.teacher_train_acc;
            outcome.supervised_loss += inv * m.supervised_loss;
            outcome.consistency_loss += inv * m.consistency_loss;
        }
    }
    return outcome;
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const ExperimentSummary& summary) {
    nlohmann::json j;
    j["config"] = cfg.resolved;
    j["method"] = to_string(summary.method);
    j["seeds"] = nlohmann::json::array();
    for (const SeedOutcome& s : summary.seeds) {
        j["seeds"].push_back({
            {"seed_index", s.seed_index},
            {"run_seed", s.run_seed},
            {"student_test_acc", s.student_test_acc},
            {"teacher_test_acc", s.teacher_test_acc},
            {"student_train_acc", s.student_train_acc},
            {"teacher_train_acc", s.teacher_train_acc},
            {"supervised_loss", s.supervised_loss},
            {"consistency_loss", s.consistency_loss},
        });
    }
    j["aggregate"] = {
        {"student_test_acc",
         {{"mean", summary.student_test_acc.mean}, {"std", summary.student_test_acc.std_dev}}},
        {"teacher_test_acc",
         {{"mean", summary.teacher_test_acc.mean}, {"std", summary.teacher_test_acc.std_dev}}},
    };
    return j;
}

// n_seeds full runs with derived seeds; per-seed CSV plus an aggregated JSON
// summary, all written atomically. Seeds are isolated, so running them on
// worker threads yields results identical to the sequential order.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, Method method,
                                        const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    ExperimentSummary summary;
    summary.method = method;
    summary.seeds.resize(static_cast<std::size_t>(cfg.n_seeds));

    const auto run_range = [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            summary.seeds[static_cast<std::size_t>(i)] = run_single(cfg, method, i);
            const std::string path = out_dir + "/run_" + std::to_string(i) + ".csv";
            atomic_write_file(path,
                              run_history_csv(summary.seeds[static_cast<std::size_t>(i)].history));
        }
    };

    const int jobs = std::min(cfg.jobs, cfg.n_seeds);
    if (jobs <= 1) {
        run_range(0, cfg.n_seeds);
    } else {
        std::vector<std::thread> workers;
        const int chunk = (cfg.n_seeds + jobs - 1) / jobs;
        for (int w = 0; w < jobs; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(cfg.n_seeds, lo + chunk);
            if (lo < hi) workers.emplace_back(run_range, lo, hi);
        }
        for (std::thread& t : workers) t.join();
    }

    std::vector<double> student, teacher;
    for (const SeedOutcome& s : summary.seeds) {
        student.push_back(s.student_test_acc);
        teacher.push_back(s.teacher_test_acc);
    }
    summary.student_test_acc = aggregate_values(student);
    summary.teacher_test_acc = aggregate_values(teacher);

    atomic_write_file(out_dir + "/summary.json", summary_json(cfg, summary).dump(2) + "\n");
    return summary;
}

inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    return run_experiment(cfg, cfg.method, cfg.out_dir);
}

// ---- protocol reports ----

struct ReportRow {
    std::string label;  // "corrupt=0.30" or "labels=12"
    Method method = Method::ft_ccl;
    Aggregate student_test_acc;
    Aggregate teacher_test_acc;
};

struct ProtocolReport {
    std::vector<ReportRow> rows;
};

inline nlohmann::json report_json(const ExperimentConfig& cfg, const ProtocolReport& report) {
    nlohmann::json j;
    j["config"] = cfg.resolved;
    j["rows"] = nlohmann::json::array();
    for (const ReportRow& r : report.rows) {
        j["rows"].push_back({
            {"cell", r.label},
            {"method", to_string(r.method)},
            {"student_test_acc", {{"mean", r.student_test_acc.mean}, {"std", r.student_test_acc.std_dev}}},
            {"teacher_test_acc", {{"mean", r.teacher_test_acc.mean}, {"std", r.teacher_test_acc.std_dev}}},
        });
    }
    return j;
}

inline void print_report_table(const ProtocolReport& report, std::ostream& out) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %-16s %-22s %-22s", "cell", "method",
                  "teacher acc (mean+-std)", "student acc (mean+-std)");
    out << line << "\n";
    for (const ReportRow& r : report.rows) {
        std::snprintf(line, sizeof(line), "%-18s %-16s %.4f +- %.4f       %.4f +- %.4f",
                      r.label.c_str(), to_string(r.method).c_str(), r.teacher_test_acc.mean,
                      r.teacher_test_acc.std_dev, r.student_test_acc.mean,
                      r.student_test_acc.std_dev);
        out << line << "\n";
    }
}

// Label-corruption robustness protocol: a full experiment per
// (fraction, method) cell.
inline ProtocolReport run_noisy_protocol(const ExperimentConfig& cfg) {
    ProtocolReport report;
    for (double fraction : cfg.fractions) {
        for (Method method : cfg.methods) {
            ExperimentConfig cell = cfg;
            cell.corrupt_fraction = fraction;
            char label[48];
            std::snprintf(label, sizeof(label), "corrupt=%.2f", fraction);
            char pct[32];
            std::snprintf(pct, sizeof(pct), "%02d", static_cast<int>(std::lround(fraction * 100)));
            const std::string dir =
                cfg.out_dir + "/" + to_string(method) + "_corrupt" + pct;
            const ExperimentSummary s = run_experiment(cell, method, dir);
            report.rows.push_back(
                {label, method, s.student_test_acc, s.teacher_test_acc});
        }
    }
    std::filesystem::create_directories(cfg.out_dir);
    atomic_write_file(cfg.out_dir + "/noisy_report.json",
                      report_json(cfg, report).dump(2) + "\n");
    return report;
}

// Label-budget sweep: a full experiment per (n_labeled, method) cell.
inline ProtocolReport run_sweep(const ExperimentConfig& cfg) {
    ProtocolReport report;
    for (std::size_t labels : cfg.sweep_labels) {
        for (Method method : cfg.methods) {
            ExperimentConfig cell = cfg;
            cell.n_labeled = labels;
            const std::string dir =
                cfg.out_dir + "/" + to_string(method) + "_labels" + std::to_string(labels);
            const ExperimentSummary s = run_experiment(cell, method, dir);
            report.rows.push_back({"labels=" + std::to_string(labels), method,
                                   s.student_test_acc, s.teacher_test_acc});
        }
    }
    std::filesystem::create_directories(cfg.out_dir);
    atomic_write_file(cfg.out_dir + "/sweep_report.json",
                      report_json(cfg, report).dump(2) + "\n");
    return report;
}

}  // namespace ccl
