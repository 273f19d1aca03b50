#pragma once

// Training-curve metrics and representation diagnostics (PCA, silhouette,
// Fisher discriminant ratio). All variances are population variances.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hqcnn::diagnostics {

struct GapMetrics {
    double final_gap = 0.0;
    double mean_gap = 0.0;
};

/// |train - val| at the last epoch and averaged over all epochs.
GapMetrics generalization_gap(std::span<const double> train, std::span<const double> val);

/// 1-based index of the first epoch with val >= threshold; nullopt if never reached.
std::optional<int> epoch_to_threshold(std::span<const double> val, double threshold = 0.9);

/// (val[N] - val[0]) / N with 0-based positions.
double early_slope(std::span<const double> val, int n = 5);

/// max(val) - val.back().
double overfit_drop(std::span<const double> val);

struct Fluctuation {
    double sigma = 0.0;  // population std-dev of |a_{t+1} - a_t|
    double mu = 0.0;     // mean of |a_{t+1} - a_t|
};
Fluctuation fluctuation_stats(std::span<const double> series);

/// mu_val / mu_train; UndefinedError when mu_train == 0.
double stability_ratio(double mu_val, double mu_train);

struct CurveMetrics {
    double final_gap = 0.0;
    double mean_gap = 0.0;
    std::optional<int> epoch_to_threshold;  // nullopt: "Not reached"
    std::optional<double> early_slope;      // nullopt when the curve is too short
    double overfit_drop = 0.0;
    double train_sigma = 0.0;
    double train_mu = 0.0;
    double val_sigma = 0.0;
    double val_mu = 0.0;
    std::optional<double> stability_ratio;  // nullopt when training never fluctuates
};

/// Needs at least two epochs (for the fluctuation statistics).
CurveMetrics curve_metrics(std::span<const double> train, std::span<const double> val,
                           double threshold = 0.9, int slope_epochs = 5);

/// Row-major real matrix, one sample per row.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column i pairs with values[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& a, double tol = 1e-14, int max_sweeps = 100);

struct PcaResult {
    Matrix components;                      // k x dims, orthonormal rows
    std::vector<double> explained_variance; // top-k covariance eigenvalues
    std::vector<double> explained_variance_ratio;
    std::vector<double> mean;
    Matrix projected;                       // samples x k
};

/// Principal components of mean-centred samples. Component signs are fixed so
/// that each component's largest-magnitude entry is positive.
PcaResult pca(const Matrix& samples, std::size_t k);

/// Mean silhouette over all points with Euclidean distance. Points in
/// singleton clusters score 0. UndefinedError with fewer than two clusters.
double silhouette(const Matrix& points, std::span<const int> labels);

struct FdrTable {
    std::vector<int> classes;             // sorted distinct labels
    std::vector<std::vector<double>> fdr; // fdr[i][j] for classes i != j (diagonal 0)
    double average = 0.0;                 // over ordered pairs i != j
};

/// (mu_1 - mu_2)^2 / (sigma_1^2 + sigma_2^2) for every class pair on a 1-D feature.
/// Each class needs at least two samples; zero pooled variance is UndefinedError.
FdrTable fisher_discriminant_ratio(std::span<const double> feature, std::span<const int> labels);

/// Two-class form.
double fisher_ratio(std::span<const double> a, std::span<const double> b);

} // namespace hqcnn::diagnostics
