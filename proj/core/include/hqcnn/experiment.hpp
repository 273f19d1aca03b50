#pragma once

// Experiment configuration and the run / sweep / analyze workflows behind
// the `hqcnn` command-line tool.

#include "hqcnn/data.hpp"
#include "hqcnn/encoding.hpp"
#include "hqcnn/model.hpp"
#include "hqcnn/qnn.hpp"
#include "hqcnn/report.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hqcnn::experiment {

/// Flat experiment configuration. Text form is one `key = value` per line;
/// `#` starts a comment. Unknown keys are rejected.
///
///   seed           integer >= 0            (default: $HQCNN_SEED, else 0)
///   n_qubits       1..12                   (4)
///   epochs         0..100000               (60)
///   batch          >= 1                    (64)
///   lr             > 0                     (0.01)
///   momentum       [0, 1)                  (0.9)
///   weight_decay   >= 0                    (1e-4)
///   ansatz_reps    1..10                   (1)
///   feature_map    feature-map spec text   (family=zz reps=1 entanglement=linear)
///   observables    per_qubit_z | single_z0 (per_qubit_z)
///   data           dataset file; empty generates one from per_class and seed
///   per_class      >= 5                    (40)
///   shuffle_labels true | false            (false)
///   out            run directory           (runs/run)
struct ExperimentConfig {
    std::uint64_t seed = 0;
    int n_qubits = 4;
    int epochs = 60;
    int batch = 64;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int ansatz_reps = 1;
    std::string feature_map_text = "family=zz reps=1 entanglement=linear";
    encoding::FeatureMapSpec feature_map = encoding::FeatureMapSpec::parse(feature_map_text);
    qnn::ObservableMode observables = qnn::ObservableMode::PerQubitZ;
    std::string data;
    int per_class = 40;
    bool shuffle_labels = false;
    std::string out = "runs/run";

    /// Defaults with the seed taken from HQCNN_SEED when set.
    static ExperimentConfig defaults();

    /// Applies one `key=value` (or `key = value`) assignment. Throws ConfigError.
    void set(std::string_view key, std::string_view value);
    void apply_override(std::string_view assignment);

    static ExperimentConfig parse(std::string_view text, ExperimentConfig base = defaults());
    static ExperimentConfig load(const std::filesystem::path& path, ExperimentConfig base = defaults());

    /// Every key with its current value as text, in canonical order.
    std::map<std::string, std::string> values() const;
    std::string to_text() const;

    model::ModelConfig model_config() const;
    model::TrainOptions train_options() const;
};

/// Names of every recognised configuration key.
const std::vector<std::string>& config_keys();

struct RunSummary {
    std::filesystem::path dir;
    model::RunLog log;
    report::MetricMap metrics;
    double final_train_accuracy = 0.0;
    double final_val_accuracy = 0.0;
};

/// Dataset named by the config, or a generated one.
data::Dataset resolve_dataset(const ExperimentConfig& config);

/// Trains one model and writes its run directory:
///   config.txt, training_log.csv, metrics.json, metrics.txt, model.ckpt,
///   stage_<stage>_<split>.csv, pca_summary.csv, accuracy.svg
/// where stage is classical | feature_map | qnn and split is train | val.
RunSummary run_training(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Stage names in network order.
const std::vector<std::string>& stage_names();

struct SweepEntry {
    std::string name;
    ExperimentConfig config;
};

/// Checks that entries differ only in `field` (or, if empty, in exactly one
/// key, which is returned). Throws ConfigError otherwise.
std::string validate_sweep(const std::vector<SweepEntry>& entries, std::string_view field = {});

/// Three entries with ansatz_reps = 1, 2, 3.
std::vector<SweepEntry> ansatz_depth_sweep(const ExperimentConfig& base);
/// The nine study feature maps.
std::vector<SweepEntry> feature_map_sweep(const ExperimentConfig& base);

struct SweepRow {
    std::string name;
    std::string swept_value;
    double final_train_accuracy = 0.0;
    double final_val_accuracy = 0.0;
    std::optional<double> silhouette_qnn;
    std::optional<double> fdr_avg;
    int rank_val = 0;
    int rank_silhouette = 0;
};

/// Runs every entry into `<dir>/<name>` and writes `<dir>/summary.csv`.
std::vector<SweepRow> run_sweep(const std::vector<SweepEntry>& entries, const std::filesystem::path& dir,
                                std::string_view field = {});

/// Ranks runs from their metrics.json files alone and writes summary.csv.
std::vector<SweepRow> summarize_sweep(const std::filesystem::path& dir);
std::string sweep_summary_csv(const std::vector<SweepRow>& rows);

/// Recomputes the curve metrics from a run directory's training_log.csv.
report::MetricMap analyze_run(const std::filesystem::path& dir);

} // namespace hqcnn::experiment
