#include "hqcnn/data.hpp"

#include "hqcnn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace hqcnn::data {

int label_to_class(int label) {
    if (label < -1 || label > 1) throw ValidationError("label must be -1, 0 or +1, got " + std::to_string(label));
    return label + 1;
}

int class_to_label(int cls) {
    if (cls < 0 || cls > 2) throw ValidationError("class index must be 0, 1 or 2, got " + std::to_string(cls));
    return cls - 1;
}

Grid normalize01(std::span<const double> values) {
    if (values.size() != kGridCells) {
        throw ValidationError("heatmap needs " + std::to_string(kGridCells) + " values, got " +
                              std::to_string(values.size()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("heatmap contains a non-finite value");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    Grid out{};
    const double range = *hi - *lo;
    if (range == 0.0) return out;
    for (std::size_t i = 0; i < kGridCells; ++i) out[i] = (values[i] - *lo) / range;
    return out;
}

namespace {

std::size_t bin_of(double v, double lo, double hi) {
    if (hi <= lo) return 0;
    const auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / (hi - lo) * kGridSide));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, kGridSide - 1));
}

/// Random increasing piecewise-linear map of [0, 1] onto [0, 1] with
/// equally spaced knots.
struct MonotoneMap {
    std::vector<double> ys;

    MonotoneMap(int knots, Rng& rng) : ys(static_cast<std::size_t>(knots)) {
        double acc = 0.0;
        ys[0] = 0.0;
        for (std::size_t i = 1; i < ys.size(); ++i) {
            acc += rng.uniform(0.2, 1.0);
            ys[i] = acc;
        }
        for (auto& y : ys) y /= acc;
    }

    double operator()(double x) const {
        const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(ys.size() - 1);
        const auto i = std::min(static_cast<std::size_t>(pos), ys.size() - 2);
        const double t = pos - static_cast<double>(i);
        return ys[i] + t * (ys[i + 1] - ys[i]);
    }
};

} // namespace

Grid histogram(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.empty()) throw ValidationError("histogram needs equal, nonempty inputs");
    const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
    const auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
    Grid counts{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto col = bin_of(xs[i], *xlo, *xhi);
        const auto row = bin_of(ys[i], *ylo, *yhi);
        counts[row * kGridSide + col] += 1.0;
    }
    return counts;
}

PointCloud draw_points(int label, Rng& rng, const GeneratorOptions& options) {
    label_to_class(label);
    if (options.n_points < 2) throw ValidationError("need at least two points per heatmap");
    if (options.knots < 2) throw ValidationError("monotone map needs at least two knots");

    PointCloud pc;
    const auto n = static_cast<std::size_t>(options.n_points);
    pc.xs.resize(n);
    pc.ys.resize(n);
    if (label == 0) {
        for (std::size_t i = 0; i < n; ++i) {
            pc.xs[i] = rng.uniform();
            pc.ys[i] = rng.uniform();
        }
        return pc;
    }

    const MonotoneMap f(options.knots, rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform();
        const double fx = options.identity_map ? x : f(x);
        const double sigma = options.noise_base + options.noise_slope * x;
        const double noise = sigma > 0.0 ? sigma * rng.normal() : 0.0;
        pc.xs[i] = x;
        pc.ys[i] = fx + noise;
    }
    if (label == -1) std::swap(pc.xs, pc.ys);
    return pc;
}

Heatmap generate_sample(int label, Rng& rng, const GeneratorOptions& options) {
    const auto pc = draw_points(label, rng, options);
    const auto counts = histogram(pc.xs, pc.ys);
    return Heatmap{normalize01(counts), label};
}

void stratified_split(std::span<const Heatmap> samples, std::uint64_t seed,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& validation) {
    train.clear();
    validation.clear();
    Rng rng(Rng::mix(seed ^ 0x5eedULL));
    for (int label = -1; label <= 1; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].label == label) idx.push_back(i);
        }
        rng.shuffle(idx.begin(), idx.end());
        const auto n_val = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(idx.size())));
        validation.insert(validation.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(validation.begin(), validation.end());
}

Dataset make_dataset(int n_per_class, std::uint64_t seed, const GeneratorOptions& options) {
    if (n_per_class < kMinPerClass) {
        throw ConfigError("per-class sample count must be at least " + std::to_string(kMinPerClass) +
                          ", got " + std::to_string(n_per_class));
    }
    Dataset ds;
    ds.seed = seed;
    const Rng root(seed);
    std::uint64_t stream = 0;
    for (int label = -1; label <= 1; ++label) {
        for (int i = 0; i < n_per_class; ++i) {
            // One substream per sample keeps generation order-independent.
            Rng rng = root.split(stream++);
            ds.samples.push_back(generate_sample(label, rng, options));
        }
    }
    stratified_split(ds.samples, seed, ds.train, ds.validation);
    return ds;
}

namespace {

constexpr const char* kMagic = "hqcnn-heatmaps";
constexpr const char* kVersion = "v1";

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

void save(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open dataset for writing: " + path.string());
    out << kMagic << ' ' << kVersion << " n=" << dataset.samples.size() << " seed=" << dataset.seed
        << '\n';
    for (const auto& s : dataset.samples) {
        for (double v : s.grid) out << format_double(v) << ' ';
        out << s.label << '\n';
    }
    if (!out) throw IoError("failed writing dataset: " + path.string());
}

Dataset load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open dataset: " + path.string());
    auto fail = [&](std::size_t line, const std::string& msg) {
        return FormatError(path.string() + ":" + std::to_string(line) + ": " + msg);
    };

    std::string line;
    if (!std::getline(in, line)) throw fail(1, "empty file");
    std::istringstream header(line);
    std::string magic, version, count_tok;
    header >> magic >> version >> count_tok;
    if (magic != kMagic || version != kVersion || count_tok.rfind("n=", 0) != 0) {
        throw fail(1, "expected header 'hqcnn-heatmaps v1 n=<count>'");
    }
    std::size_t count = 0;
    {
        const auto* b = count_tok.data() + 2;
        const auto* e = count_tok.data() + count_tok.size();
        const auto [p, ec] = std::from_chars(b, e, count);
        if (ec != std::errc{} || p != e) throw fail(1, "bad sample count '" + count_tok + "'");
    }
    Dataset ds;
    std::string seed_tok;
    if (header >> seed_tok) {
        const auto* b = seed_tok.data() + 5;
        const auto* e = seed_tok.data() + seed_tok.size();
        if (seed_tok.rfind("seed=", 0) != 0) throw fail(1, "unexpected header token '" + seed_tok + "'");
        const auto [p, ec] = std::from_chars(b, e, ds.seed);
        if (ec != std::errc{} || p != e) throw fail(1, "bad seed '" + seed_tok + "'");
    }

    ds.samples.reserve(count);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (ds.samples.size() == count) throw fail(lineno, "more records than header count");
        Heatmap h;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        auto skip_ws = [&] { while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p; };
        for (std::size_t k = 0; k < kGridCells; ++k) {
            skip_ws();
            const auto [q, ec] = std::from_chars(p, end, h.grid[k]);
            if (ec != std::errc{}) {
                throw fail(lineno, "record " + std::to_string(ds.samples.size() + 1) + ": value " +
                                       std::to_string(k + 1) + " is not a number");
            }
            if (!std::isfinite(h.grid[k]) || h.grid[k] < 0.0 || h.grid[k] > 1.0) {
                throw fail(lineno, "value " + std::to_string(k + 1) + " outside [0, 1]");
            }
            p = q;
        }
        skip_ws();
        const auto [q, ec] = std::from_chars(p, end, h.label);
        if (ec != std::errc{}) throw fail(lineno, "missing label");
        p = q;
        skip_ws();
        if (p != end) throw fail(lineno, "trailing characters after label");
        if (h.label < -1 || h.label > 1) throw fail(lineno, "label must be -1, 0 or 1");
        ds.samples.push_back(h);
    }
    if (ds.samples.size() != count) {
        throw fail(lineno, "header promises " + std::to_string(count) + " records, found " +
                               std::to_string(ds.samples.size()));
    }
    stratified_split(ds.samples, ds.seed, ds.train, ds.validation);
    return ds;
}

} // namespace hqcnn::data
