#pragma once

// Synthetic 8x8 cause-effect heatmaps.
//
// Each sample bins N point pairs (x, y) into an 8x8 histogram and rescales it
// to [0, 1]. Labels: +1 means x drives y (y = f(x) + noise whose spread
// depends on x), -1 is the same mechanism with the roles swapped, 0 means x
// and y are independent. Cell (row, col) holds the y-bin `row`, x-bin `col`.

#include "hqcnn/random.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hqcnn::data {

inline constexpr std::size_t kGridSide = 8;
inline constexpr std::size_t kGridCells = kGridSide * kGridSide;
inline constexpr int kMinPerClass = 5;

using Grid = std::array<double, kGridCells>;

struct Heatmap {
    Grid grid{};
    int label = 0;  // -1, 0 or +1

    bool operator==(const Heatmap&) const = default;
};

/// {-1, 0, +1} -> {0, 1, 2}.
int label_to_class(int label);
/// {0, 1, 2} -> {-1, 0, +1}.
int class_to_label(int cls);

struct GeneratorOptions {
    int n_points = 500;
    int knots = 4;
    /// Noise standard deviation at x = 0 and its growth up to x = 1.
    double noise_base = 0.03;
    double noise_slope = 0.15;
    /// Replace the random monotone map by f(x) = x.
    bool identity_map = false;
};

/// (v - min) / (max - min); a constant grid maps to zeros. Throws
/// ValidationError on non-finite input.
Grid normalize01(std::span<const double> values);

/// Raw counts of pairs in an 8x8 grid spanning each variable's observed range.
Grid histogram(std::span<const double> xs, std::span<const double> ys);

/// Point pairs drawn for one label (before binning).
struct PointCloud {
    std::vector<double> xs;
    std::vector<double> ys;
};
PointCloud draw_points(int label, Rng& rng, const GeneratorOptions& options = {});

Heatmap generate_sample(int label, Rng& rng, const GeneratorOptions& options = {});

struct Dataset {
    std::vector<Heatmap> samples;
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::uint64_t seed = 0;

    bool operator==(const Dataset&) const = default;
};

/// Stratified 80/20 split of `labels` (per class: round(0.2 n) go to validation).
void stratified_split(std::span<const Heatmap> samples, std::uint64_t seed,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& validation);

/// 3 * n_per_class samples, classes -1, 0, +1 in blocks, split with `seed`.
Dataset make_dataset(int n_per_class, std::uint64_t seed, const GeneratorOptions& options = {});

/// Text format: header `hqcnn-heatmaps v1 n=<count> seed=<seed>`, then per
/// sample 64 space-separated values (shortest round-trip decimal) and the label.
void save(const Dataset& dataset, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

} // namespace hqcnn::data
