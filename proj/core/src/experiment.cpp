#include "hqcnn/experiment.hpp"

#include "hqcnn/diagnostics.hpp"
#include "hqcnn/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>

namespace hqcnn::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    T out{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
    }
    return out;
}

template <class T>
T parse_in_range(std::string_view key, std::string_view text, T lo, T hi) {
    const T v = parse_number<T>(key, text);
    if (v < lo || v > hi) {
        std::ostringstream msg;
        msg << "config: '" << key << "' must be in [" << lo << ", " << hi << "], got " << text;
        throw ConfigError(msg.str());
    }
    return v;
}

std::string format_real(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "seed",        "n_qubits",    "epochs", "batch",     "lr",             "momentum", "weight_decay",
        "ansatz_reps", "feature_map", "observables", "data", "per_class", "shuffle_labels", "out"};
    return keys;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    if (const char* env = std::getenv("HQCNN_SEED"); env && *env) {
        c.seed = parse_number<std::uint64_t>("HQCNN_SEED", env);
    }
    return c;
}

void ExperimentConfig::set(std::string_view key_in, std::string_view value_in) {
    const std::string key = trim(key_in);
    const std::string value = trim(value_in);
    if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "n_qubits") {
        n_qubits = parse_in_range<int>(key, value, 1, 12);
    } else if (key == "epochs") {
        epochs = parse_in_range<int>(key, value, 0, 100000);
    } else if (key == "batch") {
        batch = parse_in_range<int>(key, value, 1, 1 << 20);
    } else if (key == "lr") {
        lr = parse_number<double>(key, value);
        if (!(lr > 0.0 && lr <= 10.0)) throw ConfigError("config: 'lr' must be in (0, 10]");
    } else if (key == "momentum") {
        momentum = parse_number<double>(key, value);
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("config: 'momentum' must be in [0, 1)");
    } else if (key == "weight_decay") {
        weight_decay = parse_number<double>(key, value);
        if (!(weight_decay >= 0.0 && weight_decay <= 1.0)) throw ConfigError("config: 'weight_decay' must be in [0, 1]");
    } else if (key == "ansatz_reps") {
        ansatz_reps = parse_in_range<int>(key, value, 1, 10);
    } else if (key == "feature_map") {
        feature_map = encoding::FeatureMapSpec::parse(value);
        feature_map_text = value;
    } else if (key == "observables") {
        observables = qnn::parse_observable_mode(value);
    } else if (key == "data") {
        data = value;
    } else if (key == "per_class") {
        per_class = parse_number<int>(key, value);
        if (per_class < data::kMinPerClass) {
            throw ConfigError("config: 'per_class' must be at least " + std::to_string(data::kMinPerClass));
        }
    } else if (key == "shuffle_labels") {
        if (value == "true" || value == "1") shuffle_labels = true;
        else if (value == "false" || value == "0") shuffle_labels = false;
        else throw ConfigError("config: 'shuffle_labels' must be true or false");
    } else if (key == "out") {
        if (value.empty()) throw ConfigError("config: 'out' must not be empty");
        out = value;
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void ExperimentConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    }
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, ExperimentConfig base) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        try {
            base.apply_override(line);
        } catch (const Error& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path, ExperimentConfig base) {
    std::string text;
    try {
        text = report::read_file(path);
    } catch (const FormatError&) {
        throw ConfigError("cannot read config file " + path.string());
    }
    try {
        return parse(text, std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::map<std::string, std::string> ExperimentConfig::values() const {
    return {
        {"seed", std::to_string(seed)},
        {"n_qubits", std::to_string(n_qubits)},
        {"epochs", std::to_string(epochs)},
        {"batch", std::to_string(batch)},
        {"lr", format_real(lr)},
        {"momentum", format_real(momentum)},
        {"weight_decay", format_real(weight_decay)},
        {"ansatz_reps", std::to_string(ansatz_reps)},
        {"feature_map", feature_map_text},
        {"observables", std::string(qnn::to_string(observables))},
        {"data", data},
        {"per_class", std::to_string(per_class)},
        {"shuffle_labels", shuffle_labels ? "true" : "false"},
        {"out", out},
    };
}

std::string ExperimentConfig::to_text() const {
    const auto v = values();
    std::string text;
    for (const auto& key : config_keys()) text += key + " = " + v.at(key) + "\n";
    return text;
}

model::ModelConfig ExperimentConfig::model_config() const {
    model::ModelConfig m;
    m.n_qubits = n_qubits;
    m.feature_map = feature_map;
    m.ansatz_reps = ansatz_reps;
    m.observables = observables;
    return m;
}

model::TrainOptions ExperimentConfig::train_options() const {
    model::TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch;
    t.sgd = {lr, momentum, weight_decay};
    t.seed = seed;
    t.shuffle_labels = shuffle_labels;
    return t;
}

data::Dataset resolve_dataset(const ExperimentConfig& config) {
    if (config.data.empty()) return data::make_dataset(config.per_class, config.seed);
    if (!fs::exists(config.data)) throw ConfigError("dataset file not found: " + config.data);
    try {
        return data::load(config.data);
    } catch (const FormatError& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
    }
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"classical", "feature_map", "qnn"};
    return names;
}

namespace {

diagnostics::Matrix to_matrix(const nn::Tensor& t) {
    diagnostics::Matrix m(t.dim(0), t.size() / std::max<std::size_t>(t.dim(0), 1));
    m.values = t.values;
    return m;
}

std::vector<int> predicted_labels(const nn::Tensor& logits) {
    std::vector<int> out;
    const std::size_t k = logits.dim(1);
    for (std::size_t b = 0; b < logits.dim(0); ++b) {
        const auto* row = &logits.values[b * k];
        out.push_back(data::class_to_label(static_cast<int>(std::max_element(row, row + k) - row)));
    }
    return out;
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

struct StageAnalysis {
    diagnostics::PcaResult pca;
    std::optional<double> silhouette;
};

StageAnalysis analyse_stage(const nn::Tensor& embedding, std::span<const int> labels) {
    const auto m = to_matrix(embedding);
    const std::size_t k = std::min<std::size_t>({2, m.cols, m.rows - 1});
    StageAnalysis s{diagnostics::pca(m, k), std::nullopt};
    try {
        s.silhouette = diagnostics::silhouette(s.pca.projected, labels);
    } catch (const UndefinedError&) {
    }
    return s;
}

std::string stage_csv(const diagnostics::Matrix& projected, std::span<const std::size_t> indices,
                      std::span<const int> labels, std::span<const int> predicted) {
    std::string out = "index,label,predicted";
    for (std::size_t c = 0; c < projected.cols; ++c) out += ",pc" + std::to_string(c + 1);
    out += '\n';
    for (std::size_t i = 0; i < projected.rows; ++i) {
        out += std::to_string(indices[i]) + ',' + std::to_string(labels[i]) + ',' + std::to_string(predicted[i]);
        for (std::size_t c = 0; c < projected.cols; ++c) out += ',' + report::fixed6(projected(i, c));
        out += '\n';
    }
    return out;
}

} // namespace

RunSummary run_training(const ExperimentConfig& config, const fs::path& dir) {
    const auto ds = resolve_dataset(config);
    model::HqcnnModel net(config.model_config());
    net.init(config.seed);

    auto result = model::train(net, ds, config.train_options());
    result.log.config_echo = config.to_text();

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());

    RunSummary summary;
    summary.dir = dir;
    summary.log = result.log;

    const auto train_acc = result.log.train_accuracy();
    const auto val_acc = result.log.val_accuracy();
    if (!result.log.epochs.empty()) {
        summary.final_train_accuracy = train_acc.back();
        summary.final_val_accuracy = val_acc.back();
    }
    if (result.log.epochs.size() >= 2) {
        summary.metrics = report::curve_metric_map(diagnostics::curve_metrics(train_acc, val_acc));
    } else {
        for (const char* k : {"final_gap", "mean_gap", "epoch_to_90", "early_slope", "overfit_drop", "train_sigma",
                              "train_mu_abs_diff", "val_sigma", "val_mu_abs_diff", "stability_ratio"}) {
            summary.metrics[k] = std::nullopt;
        }
    }

    // Stage embeddings on both splits.
    json pca_json = json::object();
    std::string pca_csv = "stage,split,components,evr_1,evr_2,silhouette\n";
    std::vector<std::pair<std::string, std::string>> stage_files;
    std::optional<diagnostics::PcaResult> qnn_train_pca;
    std::vector<int> train_labels;

    for (const auto& [split, indices] : {std::pair<std::string, const std::vector<std::size_t>*>{"train", &ds.train},
                                         {"val", &ds.validation}}) {
        model::StageCapture cap;
        const auto logits = net.forward(model::make_batch(ds, *indices), &cap);
        const auto predicted = predicted_labels(logits);
        std::vector<int> labels;
        for (auto i : *indices) labels.push_back(ds.samples[i].label);
        const nn::Tensor* embeddings[] = {&cap.classical, &cap.feature_map, &cap.qnn};

        for (std::size_t s = 0; s < stage_names().size(); ++s) {
            const auto& stage = stage_names()[s];
            const auto a = analyse_stage(*embeddings[s], labels);
            stage_files.emplace_back("stage_" + stage + "_" + split + ".csv",
                                     stage_csv(a.pca.projected, *indices, labels, predicted));
            const auto& evr = a.pca.explained_variance_ratio;
            pca_csv += stage + ',' + split + ',' + std::to_string(evr.size()) + ',' + report::fixed6(evr[0]) + ',' +
                       (evr.size() > 1 ? report::fixed6(evr[1]) : std::string()) + ',' +
                       (a.silhouette ? report::fixed6(*a.silhouette) : std::string()) + '\n';
            pca_json[stage][split] = {{"explained_variance_ratio", evr},
                                      {"silhouette", optional_json(a.silhouette)}};
            if (split == "train") {
                summary.metrics["silhouette_" + stage] = a.silhouette;
                if (stage == "qnn") {
                    qnn_train_pca = a.pca;
                    train_labels = labels;
                }
            }
        }
    }

    // Fisher discriminant ratio on PC1 of the quantum-layer outputs.
    json fdr_pairs = json::object();
    summary.metrics["fdr_avg"] = std::nullopt;
    if (qnn_train_pca) {
        std::vector<double> pc1(qnn_train_pca->projected.rows);
        for (std::size_t i = 0; i < pc1.size(); ++i) pc1[i] = qnn_train_pca->projected(i, 0);
        try {
            const auto t = diagnostics::fisher_discriminant_ratio(pc1, train_labels);
            summary.metrics["fdr_avg"] = t.average;
            for (std::size_t i = 0; i < t.classes.size(); ++i)
                for (std::size_t j = 0; j < t.classes.size(); ++j)
                    if (i != j) fdr_pairs[std::to_string(t.classes[i]) + "_vs_" + std::to_string(t.classes[j])] = t.fdr[i][j];
        } catch (const Error&) {
        }
    }

    json metrics = json::object();
    for (const auto& [k, v] : summary.metrics) {
        if (k == "epoch_to_90" && v) metrics[k] = static_cast<int>(std::lround(*v));
        else metrics[k] = optional_json(v);
    }
    json config_json = json::object();
    for (const auto& [k, v] : config.values()) {
        if (k != "out") config_json[k] = v;
    }
    metrics["run"] = {
        {"feature_map", config.feature_map_text},
        {"config", config_json},
        {"epochs_completed", result.log.epochs.size()},
        {"optimizer_steps", result.optimizer_steps},
        {"final_train_acc", summary.final_train_accuracy},
        {"final_val_acc", summary.final_val_accuracy},
        {"fdr_feature", "pc1_of_qnn_stage_train"},
        {"fdr_pairs", fdr_pairs},
        {"pca", pca_json},
    };

    report::write_file_atomic(dir / "config.txt", config.to_text());
    report::write_file_atomic(dir / "training_log.csv", model::run_log_csv(result.log));
    for (const auto& [name, content] : stage_files) report::write_file_atomic(dir / name, content);
    report::write_file_atomic(dir / "pca_summary.csv", pca_csv);
    report::write_file_atomic(dir / "metrics.txt", report::key_value_report(summary.metrics));
    report::write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
    report::write_file_atomic(
        dir / "accuracy.svg",
        report::svg_line_plot({{"train", "#1f77b4", train_acc}, {"validation", "#d62728", val_acc}},
                              "accuracy per epoch: " + config.feature_map_text + ", ansatz reps " +
                                  std::to_string(config.ansatz_reps)));

    const auto ckpt = dir / "model.ckpt";
    auto partial = ckpt;
    partial += ".partial";
    nn::save_checkpoint(partial, net.state());
    fs::rename(partial, ckpt, ec);
    if (ec) throw IoError("cannot finalise " + ckpt.string() + ": " + ec.message());
    return summary;
}

std::string validate_sweep(const std::vector<SweepEntry>& entries, std::string_view field) {
    if (entries.size() < 2) throw ConfigError("a sweep needs at least two configurations");
    if (!field.empty() &&
        std::find(config_keys().begin(), config_keys().end(), field) == config_keys().end()) {
        throw ConfigError("unknown sweep field '" + std::string(field) + "'");
    }
    std::set<std::string> names;
    for (const auto& e : entries) {
        if (!names.insert(e.name).second) throw ConfigError("duplicate sweep entry name '" + e.name + "'");
    }
    const auto first = entries.front().config.values();
    std::set<std::string> differing;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const auto v = entries[i].config.values();
        for (const auto& [k, val] : v) {
            if (k != "out" && first.at(k) != val) differing.insert(k);
        }
    }
    for (const auto& k : differing) {
        if (!field.empty() && k != field) {
            throw ConfigError("sweep configurations differ in '" + k + "' but only '" + std::string(field) +
                              "' may vary");
        }
    }
    if (field.empty()) {
        if (differing.size() != 1) {
            throw ConfigError("sweep configurations must differ in exactly one field, found " +
                              std::to_string(differing.size()));
        }
        return *differing.begin();
    }
    return std::string(field);
}

std::vector<SweepEntry> ansatz_depth_sweep(const ExperimentConfig& base) {
    std::vector<SweepEntry> out;
    for (int reps = 1; reps <= 3; ++reps) {
        ExperimentConfig c = base;
        c.ansatz_reps = reps;
        out.push_back({"ansatz_reps_" + std::to_string(reps), c});
    }
    return out;
}

std::vector<SweepEntry> feature_map_sweep(const ExperimentConfig& base) {
    std::vector<SweepEntry> out;
    for (const auto& fm : encoding::study_feature_maps()) {
        ExperimentConfig c = base;
        c.set("feature_map", fm.spec.to_string());
        out.push_back({fm.name, c});
    }
    return out;
}

std::vector<SweepRow> run_sweep(const std::vector<SweepEntry>& entries, const fs::path& dir, std::string_view field) {
    validate_sweep(entries, field);
    for (const auto& e : entries) {
        ExperimentConfig c = e.config;
        c.out = (dir / e.name).string();
        run_training(c, dir / e.name);
    }
    return summarize_sweep(dir);
}

std::vector<SweepRow> summarize_sweep(const fs::path& dir) {
    struct Loaded {
        std::string name;
        json metrics;
    };
    std::vector<Loaded> runs;
    if (!fs::is_directory(dir)) throw ConfigError("sweep directory not found: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto file = entry.path() / "metrics.json";
        if (!entry.is_directory() || !fs::exists(file)) continue;
        try {
            runs.push_back({entry.path().filename().string(), json::parse(report::read_file(file))});
        } catch (const json::exception& e) {
            throw FormatError(file.string() + ": " + e.what());
        }
    }
    if (runs.empty()) throw ConfigError("no run directories with metrics.json under " + dir.string());
    std::sort(runs.begin(), runs.end(), [](const Loaded& a, const Loaded& b) { return a.name < b.name; });

    // The swept field is whichever config key differs across runs.
    std::string swept;
    for (const auto& key : config_keys()) {
        if (key == "out") continue;
        std::set<std::string> seen;
        for (const auto& r : runs) {
            const auto& cfg = r.metrics.at("run").at("config");
            seen.insert(cfg.contains(key) ? cfg.at(key).get<std::string>() : std::string("\x01missing"));
        }
        if (seen.size() > 1) {
            swept = key;
            break;
        }
    }

    std::vector<SweepRow> rows;
    for (const auto& r : runs) {
        SweepRow row;
        row.name = r.name;
        const auto& run = r.metrics.at("run");
        const auto& cfg = run.at("config");
        row.swept_value = swept.empty() || !cfg.contains(swept) ? std::string() : cfg.at(swept).get<std::string>();
        row.final_train_accuracy = run.at("final_train_acc").get<double>();
        row.final_val_accuracy = run.at("final_val_acc").get<double>();
        const auto& s = r.metrics.at("silhouette_qnn");
        if (!s.is_null()) row.silhouette_qnn = s.get<double>();
        const auto& f = r.metrics.at("fdr_avg");
        if (!f.is_null()) row.fdr_avg = f.get<double>();
        rows.push_back(row);
    }

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return rows[a].final_val_accuracy > rows[b].final_val_accuracy;
    });
    for (std::size_t i = 0; i < order.size(); ++i) rows[order[i]].rank_val = static_cast<int>(i) + 1;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        const double sa = rows[a].silhouette_qnn.value_or(-2.0);
        const double sb = rows[b].silhouette_qnn.value_or(-2.0);
        return sa > sb;
    });
    for (std::size_t i = 0; i < order.size(); ++i) rows[order[i]].rank_silhouette = static_cast<int>(i) + 1;
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.rank_val < b.rank_val; });

    report::write_file_atomic(dir / "summary.csv", sweep_summary_csv(rows));
    return rows;
}

std::string sweep_summary_csv(const std::vector<SweepRow>& rows) {
    std::string out = "rank_val,rank_silhouette,name,swept_value,final_train_acc,final_val_acc,silhouette_qnn,fdr_avg\n";
    for (const auto& r : rows) {
        std::string value = r.swept_value;
        if (value.find_first_of(",\"") != std::string::npos) value = '"' + value + '"';
        out += std::to_string(r.rank_val) + ',' + std::to_string(r.rank_silhouette) + ',' + r.name + ',' + value + ',' +
               report::fixed6(r.final_train_accuracy) + ',' + report::fixed6(r.final_val_accuracy) + ',' +
               (r.silhouette_qnn ? report::fixed6(*r.silhouette_qnn) : std::string()) + ',' +
               (r.fdr_avg ? report::fixed6(*r.fdr_avg) : std::string()) + '\n';
    }
    return out;
}

report::MetricMap analyze_run(const fs::path& dir) {
    const auto log = model::parse_run_log_csv(report::read_file(dir / "training_log.csv"));
    if (log.epochs.size() < 2) throw ValidationError("analysis needs at least two logged epochs");
    return report::curve_metric_map(diagnostics::curve_metrics(log.train_accuracy(), log.val_accuracy()));
}

} // namespace hqcnn::experiment
