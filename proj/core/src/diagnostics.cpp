#include "hqcnn/diagnostics.hpp"

#include "hqcnn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hqcnn::diagnostics {

namespace {

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_variance(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

} // namespace

GapMetrics generalization_gap(std::span<const double> train, std::span<const double> val) {
    if (train.empty() || val.empty()) throw ValidationError("generalization gap of an empty curve");
    if (train.size() != val.size()) throw ValidationError("train and validation curves differ in length");
    GapMetrics g;
    g.final_gap = std::abs(train.back() - val.back());
    double s = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) s += std::abs(train[i] - val[i]);
    g.mean_gap = s / static_cast<double>(train.size());
    return g;
}

std::optional<int> epoch_to_threshold(std::span<const double> val, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
    for (std::size_t i = 0; i < val.size(); ++i) {
        if (val[i] >= threshold) return static_cast<int>(i) + 1;
    }
    return std::nullopt;
}

double early_slope(std::span<const double> val, int n) {
    if (n < 1) throw ValidationError("early slope window must be >= 1");
    if (val.size() <= static_cast<std::size_t>(n)) {
        throw ValidationError("early slope needs more than " + std::to_string(n) + " epochs, got " +
                              std::to_string(val.size()));
    }
    return (val[static_cast<std::size_t>(n)] - val[0]) / n;
}

double overfit_drop(std::span<const double> val) {
    if (val.empty()) throw ValidationError("overfit drop of an empty curve");
    return *std::max_element(val.begin(), val.end()) - val.back();
}

Fluctuation fluctuation_stats(std::span<const double> series) {
    if (series.size() < 2) throw ValidationError("fluctuation statistics need at least two epochs");
    std::vector<double> deltas(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) deltas[t] = std::abs(series[t + 1] - series[t]);
    return {std::sqrt(population_variance(deltas)), mean(deltas)};
}

double stability_ratio(double mu_val, double mu_train) {
    if (mu_train == 0.0) throw UndefinedError("stability ratio undefined: training curve never fluctuates");
    return mu_val / mu_train;
}

CurveMetrics curve_metrics(std::span<const double> train, std::span<const double> val, double threshold,
                           int slope_epochs) {
    CurveMetrics m;
    const auto gap = generalization_gap(train, val);
    m.final_gap = gap.final_gap;
    m.mean_gap = gap.mean_gap;
    m.epoch_to_threshold = epoch_to_threshold(val, threshold);
    if (val.size() > static_cast<std::size_t>(slope_epochs)) m.early_slope = early_slope(val, slope_epochs);
    m.overfit_drop = overfit_drop(val);
    const auto tf = fluctuation_stats(train);
    const auto vf = fluctuation_stats(val);
    m.train_sigma = tf.sigma;
    m.train_mu = tf.mu;
    m.val_sigma = vf.sigma;
    m.val_mu = vf.mu;
    if (tf.mu > 0.0) m.stability_ratio = stability_ratio(vf.mu, tf.mu);
    return m;
}

SymmetricEigen symmetric_eigen(const Matrix& input, double tol, int max_sweeps) {
    if (input.rows != input.cols) throw SizeError("eigendecomposition needs a square matrix");
    const std::size_t n = input.rows;
    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    double scale = 0.0;
    for (double x : a.values) scale = std::max(scale, std::abs(x));
    const double threshold = tol * std::max(scale, std::numeric_limits<double>::min());

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= threshold) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= threshold * 1e-3) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
    SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

PcaResult pca(const Matrix& samples, std::size_t k) {
    const std::size_t n = samples.rows;
    const std::size_t d = samples.cols;
    if (n < 2) throw SizeError("PCA needs at least two samples");
    if (k < 1 || k > std::min(d, n - 1)) {
        throw SizeError("PCA: k must be in [1, " + std::to_string(std::min(d, n - 1)) + "], got " +
                        std::to_string(k));
    }

    PcaResult r;
    r.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) r.mean[j] += samples(i, j);
    for (auto& m : r.mean) m /= static_cast<double>(n);

    Matrix centred(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centred(i, j) = samples(i, j) - r.mean[j];

    Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += centred(i, a) * centred(i, b);
            cov(a, b) = cov(b, a) = s / static_cast<double>(n);
        }
    }

    const auto eig = symmetric_eigen(cov);
    double total = 0.0;
    for (double l : eig.values) total += std::max(l, 0.0);

    r.components = Matrix(k, d);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t big = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(eig.vectors(j, c)) > std::abs(eig.vectors(big, c)) + 1e-12) big = j;
        }
        const double sign = eig.vectors(big, c) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) r.components(c, j) = sign * eig.vectors(j, c);
        const double lambda = std::max(eig.values[c], 0.0);
        r.explained_variance.push_back(lambda);
        r.explained_variance_ratio.push_back(total > 0.0 ? lambda / total : 0.0);
    }

    r.projected = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += centred(i, j) * r.components(c, j);
            r.projected(i, c) = s;
        }
    }
    return r;
}

double silhouette(const Matrix& points, std::span<const int> labels) {
    const std::size_t n = points.rows;
    if (labels.size() != n) throw ValidationError("silhouette: one label per point required");
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw UndefinedError("silhouette needs at least two clusters");

    auto cluster_of = [&](int label) {
        return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
    };
    std::vector<std::size_t> sizes(classes.size(), 0);
    for (int l : labels) ++sizes[cluster_of(l)];

    double total = 0.0;
    std::vector<double> sums(classes.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < points.cols; ++c) {
                const double diff = points(i, c) - points(j, c);
                d2 += diff * diff;
            }
            sums[cluster_of(labels[j])] += std::sqrt(d2);
        }
        const std::size_t own = cluster_of(labels[i]);
        if (sizes[own] == 1) continue;  // contributes 0
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes.size(); ++c) {
            if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

double fisher_ratio(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("Fisher ratio needs at least two samples per class");
    const double pooled = population_variance(a) + population_variance(b);
    if (pooled == 0.0) throw UndefinedError("Fisher ratio undefined: zero pooled variance");
    const double dm = mean(a) - mean(b);
    return dm * dm / pooled;
}

FdrTable fisher_discriminant_ratio(std::span<const double> feature, std::span<const int> labels) {
    if (feature.size() != labels.size()) throw ValidationError("FDR: one label per value required");
    FdrTable t;
    t.classes.assign(labels.begin(), labels.end());
    std::sort(t.classes.begin(), t.classes.end());
    t.classes.erase(std::unique(t.classes.begin(), t.classes.end()), t.classes.end());
    if (t.classes.size() < 2) throw UndefinedError("FDR needs at least two classes");

    std::vector<std::vector<double>> groups(t.classes.size());
    for (std::size_t i = 0; i < feature.size(); ++i) {
        const auto c = std::lower_bound(t.classes.begin(), t.classes.end(), labels[i]) - t.classes.begin();
        groups[static_cast<std::size_t>(c)].push_back(feature[i]);
    }
    const std::size_t m = t.classes.size();
    t.fdr.assign(m, std::vector<double>(m, 0.0));
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double f = fisher_ratio(groups[i], groups[j]);
            t.fdr[i][j] = t.fdr[j][i] = f;
            sum += 2.0 * f;
        }
    }
    t.average = sum / static_cast<double>(m * (m - 1));
    return t;
}

} // namespace hqcnn::diagnostics
