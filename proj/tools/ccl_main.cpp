// Experiment CLI: train / noisy / sweep / verify.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccl/ccl.hpp"

namespace {

// Every registry key becomes a --key <value> option; --key=value works too.
void add_config_options(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>* storage) {
    storage->reserve(ccl::config_defaults().size());
    for (const ccl::KeyValue& kv : ccl::config_defaults()) {
        storage->push_back({kv.key, std::string()});
        auto& slot = storage->back().second;
        std::string names = "--" + kv.key;
        if (kv.key == "n_seeds") names += ",--seeds";
        cmd->add_option(names, slot, "config key " + kv.key + " (default: " + kv.value + ")");
    }
}

ccl::KeyValueList collected_flags(const CLI::App* cmd,
                                  const std::vector<std::pair<std::string, std::string>>& storage) {
    ccl::KeyValueList flags;
    for (const auto& [key, value] : storage) {
        std::string name = "--" + key;
        if (cmd->count(name) > 0) flags.push_back({key, value});
    }
    return flags;
}

ccl::ExperimentConfig build_config(const std::string& config_path, const CLI::App* cmd,
                                   const std::vector<std::pair<std::string, std::string>>& storage) {
    ccl::KeyValueList file_kv;
    if (!config_path.empty()) file_kv = ccl::parse_config_file(config_path);
    ccl::ExperimentConfig cfg = ccl::materialize_config(file_kv, collected_flags(cmd, storage));
    for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
    return cfg;
}

void print_summary(const ccl::ExperimentSummary& s) {
    std::printf("method %s over %zu seed(s):\n", ccl::to_string(s.method).c_str(), s.seeds.size());
    std::printf("  teacher test acc %.4f +- %.4f\n", s.teacher_test_acc.mean,
                s.teacher_test_acc.std_dev);
    std::printf("  student test acc %.4f +- %.4f\n", s.student_test_acc.mean,
                s.student_test_acc.std_dev);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised training with certainty-driven consistency"};
    app.require_subcommand(1);

    std::string config_path;

    CLI::App* train_cmd = app.add_subcommand("train", "run one experiment (n_seeds runs)");
    train_cmd->add_option("--config", config_path, "flat key=value config file");
    std::vector<std::pair<std::string, std::string>> train_storage;
    add_config_options(train_cmd, &train_storage);

    CLI::App* noisy_cmd = app.add_subcommand("noisy", "label-corruption protocol (fractions x methods)");
    noisy_cmd->add_option("--config", config_path, "flat key=value config file");
    std::vector<std::pair<std::string, std::string>> noisy_storage;
    add_config_options(noisy_cmd, &noisy_storage);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "label-budget sweep (sweep_labels x methods)");
    sweep_cmd->add_option("--config", config_path, "flat key=value config file");
    std::vector<std::pair<std::string, std::string>> sweep_storage;
    add_config_options(sweep_cmd, &sweep_storage);

    CLI::App* verify_cmd = app.add_subcommand("verify", "run the built-in oracle checks");
    std::uint64_t verify_seed = 20240901;
    verify_cmd->add_option("--seed", verify_seed, "seed for the verification suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train_cmd->parsed()) {
            const ccl::ExperimentConfig cfg = build_config(config_path, train_cmd, train_storage);
            print_summary(ccl::run_experiment(cfg));
            std::printf("wrote %s/run_<seed>.csv and %s/summary.json\n", cfg.out_dir.c_str(),
                        cfg.out_dir.c_str());
        } else if (noisy_cmd->parsed()) {
            const ccl::ExperimentConfig cfg = build_config(config_path, noisy_cmd, noisy_storage);
            const ccl::ProtocolReport report = ccl::run_noisy_protocol(cfg);
            ccl::print_report_table(report, std::cout);
            std::printf("wrote %s/noisy_report.json\n", cfg.out_dir.c_str());
        } else if (sweep_cmd->parsed()) {
            const ccl::ExperimentConfig cfg = build_config(config_path, sweep_cmd, sweep_storage);
            const ccl::ProtocolReport report = ccl::run_sweep(cfg);
            ccl::print_report_table(report, std::cout);
            std::printf("wrote %s/sweep_report.json\n", cfg.out_dir.c_str());
        } else if (verify_cmd->parsed()) {
            const auto start = std::chrono::steady_clock::now();
            ccl::VerifyOptions opts;
            opts.seed = verify_seed;
            const std::vector<ccl::CheckResult> checks = ccl::run_verification(opts);
            ccl::print_report(checks, std::cout);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::printf("verification %s in %.1f s\n",
                        ccl::all_passed(checks) ? "passed" : "FAILED", secs);
            if (!ccl::all_passed(checks)) return 3;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
