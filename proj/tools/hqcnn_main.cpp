// hqcnn: generate data, train hybrid models, run sweeps, analyze runs.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 I/O failure.

#include "hqcnn/data.hpp"
#include "hqcnn/error.hpp"
#include "hqcnn/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hqcnn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

experiment::ExperimentConfig build_config(const std::string& config_file, const std::vector<std::string>& sets) {
    auto cfg = experiment::ExperimentConfig::defaults();
    if (!config_file.empty()) cfg = experiment::ExperimentConfig::load(config_file, cfg);
    for (const auto& s : sets) cfg.apply_override(s);
    return cfg;
}

void print_summary(const std::vector<experiment::SweepRow>& rows) {
    std::cout << experiment::sweep_summary_csv(rows);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid quantum-classical CNN laboratory"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic heatmap dataset");
    int per_class = 40;
    std::optional<std::uint64_t> gen_seed;
    std::string gen_out;
    gen->add_option("--per-class", per_class, "Samples per class (minimum 5)");
    gen->add_option("--seed", gen_seed, "Generator seed (default: $HQCNN_SEED, else 0)");
    gen->add_option("--out", gen_out, "Output file")->required();

    // train
    auto* train = app.add_subcommand("train", "Train one model and write a run directory");
    std::string train_config;
    std::vector<std::string> train_sets;
    std::string train_data, train_out;
    std::optional<std::uint64_t> train_seed;
    train->add_option("--config", train_config, "Config file (key = value lines)");
    train->add_option("--set", train_sets, "Override a config key: key=value (repeatable)");
    train->add_option("--data", train_data, "Dataset file (overrides config 'data')");
    train->add_option("--seed", train_seed, "Seed (overrides config 'seed')");
    train->add_option("--out", train_out, "Run directory (overrides config 'out')");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run configurations that differ in one field and rank them");
    std::vector<std::string> sweep_configs;
    std::string sweep_base, sweep_preset, sweep_field, sweep_out;
    std::vector<std::string> sweep_sets;
    sweep->add_option("--config", sweep_configs, "Config file per sweep entry (repeatable)");
    sweep->add_option("--base", sweep_base, "Base config for --preset");
    sweep->add_option("--preset", sweep_preset, "ansatz-depth | feature-maps")
        ->check(CLI::IsMember({"ansatz-depth", "feature-maps"}));
    sweep->add_option("--field", sweep_field, "The one config key allowed to differ");
    sweep->add_option("--set", sweep_sets, "Override applied to every entry (repeatable)");
    sweep->add_option("--out", sweep_out, "Sweep directory")->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Recompute metrics for a run or re-rank a sweep");
    std::string analyze_run, analyze_sweep;
    auto* run_opt = analyze->add_option("--run", analyze_run, "Run directory");
    auto* sweep_opt = analyze->add_option("--sweep", analyze_sweep, "Sweep directory");
    run_opt->excludes(sweep_opt);
    analyze->require_option(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) {
            std::uint64_t seed = experiment::ExperimentConfig::defaults().seed;
            if (gen_seed) seed = *gen_seed;
            const auto ds = data::make_dataset(per_class, seed);
            auto partial = fs::path(gen_out);
            partial += ".partial";
            data::save(ds, partial);
            std::error_code ec;
            fs::rename(partial, gen_out, ec);
            if (ec) throw IoError("cannot finalise " + gen_out + ": " + ec.message());
            std::cout << "wrote " << ds.samples.size() << " samples (" << ds.train.size() << " train, "
                      << ds.validation.size() << " validation) to " << gen_out << '\n';
        } else if (*train) {
            auto cfg = build_config(train_config, train_sets);
            if (!train_data.empty()) cfg.data = train_data;
            if (train_seed) cfg.seed = *train_seed;
            if (!train_out.empty()) cfg.out = train_out;
            const auto summary = experiment::run_training(cfg, cfg.out);
            std::cout << "run directory: " << summary.dir.string() << '\n'
                      << "final train accuracy = " << report::fixed6(summary.final_train_accuracy) << '\n'
                      << "final validation accuracy = " << report::fixed6(summary.final_val_accuracy) << '\n'
                      << report::key_value_report(summary.metrics);
        } else if (*sweep) {
            std::vector<experiment::SweepEntry> entries;
            if (!sweep_preset.empty()) {
                if (!sweep_configs.empty()) throw ConfigError("use either --preset or --config entries, not both");
                const auto base = build_config(sweep_base, sweep_sets);
                entries = sweep_preset == "ansatz-depth" ? experiment::ansatz_depth_sweep(base)
                                                         : experiment::feature_map_sweep(base);
                if (sweep_field.empty()) sweep_field = sweep_preset == "ansatz-depth" ? "ansatz_reps" : "feature_map";
            } else {
                for (const auto& file : sweep_configs) {
                    entries.push_back({fs::path(file).stem().string(), build_config(file, sweep_sets)});
                }
            }
            const auto field = experiment::validate_sweep(entries, sweep_field);
            std::cout << "sweeping '" << field << "' over " << entries.size() << " configurations\n";
            print_summary(experiment::run_sweep(entries, sweep_out, field));
        } else if (*analyze) {
            if (!analyze_run.empty()) {
                std::cout << report::key_value_report(experiment::analyze_run(analyze_run));
            } else {
                print_summary(experiment::summarize_sweep(analyze_sweep));
            }
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return 0;
}
