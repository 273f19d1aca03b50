#include "hqcnn/diagnostics.hpp"
#include "hqcnn/error.hpp"
#include "hqcnn/random.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <map>

using namespace hqcnn;
using namespace hqcnn::diagnostics;

namespace {

using Series = std::vector<double>;

// Crosses `threshold` for the first time at 1-based position `at`.
Series crossing_at(int at, std::size_t length, double threshold = 0.9) {
    Series s(length, threshold - 0.05);
    for (std::size_t i = static_cast<std::size_t>(at - 1); i < length; ++i) s[i] = threshold + 0.01;
    return s;
}

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
    return m;
}

double brute_silhouette(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels) {
    const auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t k = 0; k < pts[i].size(); ++k) s += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
        return std::sqrt(s);
    };
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::map<int, std::pair<double, int>> by_cluster;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j == i) continue;
            auto& e = by_cluster[labels[j]];
            e.first += dist(i, j);
            ++e.second;
        }
        if (!by_cluster.count(labels[i])) continue;  // singleton scores 0
        const double a = by_cluster[labels[i]].first / by_cluster[labels[i]].second;
        double b = 1e300;
        for (const auto& [label, e] : by_cluster)
            if (label != labels[i]) b = std::min(b, e.first / e.second);
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(pts.size());
}

} // namespace

TEST(GeneralizationGap, Examples) {
    const Series a{0.4, 0.6, 0.8};
    const auto same = generalization_gap(a, a);
    EXPECT_EQ(same.final_gap, 0.0);
    EXPECT_EQ(same.mean_gap, 0.0);
    EXPECT_NEAR(generalization_gap(Series{0.9}, Series{0.8746}).final_gap, 0.0254, 1e-12);
    EXPECT_NEAR(generalization_gap(Series{0.5, 0.7}, Series{0.6, 0.6}).mean_gap, 0.1, 1e-12);
    EXPECT_THROW(generalization_gap(Series{}, Series{}), ValidationError);
    EXPECT_THROW(generalization_gap(Series{0.1}, Series{0.1, 0.2}), ValidationError);
}

TEST(GeneralizationGap, PublishedRows) {
    // Constant gaps reproduce both published columns per ansatz depth.
    const std::vector<std::pair<double, double>> rows{{0.0254, 0.0332}, {0.0166, 0.0200}, {0.0107, 0.0195}};
    for (const auto& [final_gap, mean_gap] : rows) {
        const Series train{0.9, 0.9, 0.9, 0.9};
        const double early = 4 * mean_gap - final_gap;  // first three epochs share the remainder
        const Series val{0.9 - early / 3, 0.9 - early / 3, 0.9 - early / 3, 0.9 - final_gap};
        const auto g = generalization_gap(train, val);
        EXPECT_NEAR(g.final_gap, final_gap, 1e-12);
        EXPECT_NEAR(g.mean_gap, mean_gap, 1e-12);
    }
}

TEST(EpochToThreshold, Examples) {
    EXPECT_FALSE(epoch_to_threshold(Series(500, 0.85)).has_value());
    EXPECT_EQ(epoch_to_threshold(crossing_at(195, 500)), 195);
    EXPECT_EQ(epoch_to_threshold(crossing_at(168, 500)), 168);
    EXPECT_EQ(epoch_to_threshold(Series(10, 1.0)), 1);
    EXPECT_EQ(epoch_to_threshold(Series{0.5, 0.9}), 2);
    EXPECT_THROW(epoch_to_threshold(Series{0.5}, 1.0), ValidationError);
}

TEST(EarlySlope, Examples) {
    EXPECT_EQ(early_slope(Series(8, 0.4)), 0.0);
    EXPECT_NEAR(early_slope(Series{0.30, 0.31, 0.32, 0.33, 0.34, 0.3585}), 0.0117, 1e-12);
    EXPECT_NEAR(early_slope(Series{0.5, 0.4, 0.4, 0.4, 0.4, 0.466}), -0.0068, 1e-12);
    EXPECT_NEAR(early_slope(Series{0.5, 0.4, 0.4, 0.4, 0.4, 0.4745, 0.9}), -0.0051, 1e-12);
    EXPECT_THROW(early_slope(Series{0.1, 0.2, 0.3, 0.4, 0.5}), ValidationError);
}

TEST(OverfitDrop, Examples) {
    EXPECT_EQ(overfit_drop(Series{0.1, 0.5, 0.9}), 0.0);
    EXPECT_NEAR(overfit_drop(Series{0.2, 0.9, 0.5}), 0.4, 1e-12);
    EXPECT_NEAR(overfit_drop(Series{0.5, 0.9179, 0.9111}), 0.0068, 1e-12);
    EXPECT_NEAR(overfit_drop(Series{0.5, 0.9244, 0.9}), 0.0244, 1e-12);
    EXPECT_NEAR(overfit_drop(Series{0.5, 0.9434, 0.92}), 0.0234, 1e-12);
    EXPECT_THROW(overfit_drop(Series{}), ValidationError);
}

TEST(Fluctuation, Examples) {
    const auto c = fluctuation_stats(Series(5, 0.3));
    EXPECT_EQ(c.mu, 0.0);
    EXPECT_EQ(c.sigma, 0.0);
    const auto a = fluctuation_stats(Series{0, 1, 0, 1});
    EXPECT_DOUBLE_EQ(a.mu, 1.0);
    EXPECT_DOUBLE_EQ(a.sigma, 0.0);
    const auto b = fluctuation_stats(Series{0, 0.5, 0.5});
    EXPECT_DOUBLE_EQ(b.mu, 0.25);
    EXPECT_DOUBLE_EQ(b.sigma, 0.25);
    EXPECT_THROW(fluctuation_stats(Series{0.5}), ValidationError);
}

TEST(StabilityRatio, Examples) {
    EXPECT_EQ(stability_ratio(0.02, 0.02), 1.0);
    EXPECT_NEAR(stability_ratio(0.0265, 0.0122), 2.1721, 1e-4);
    EXPECT_NEAR(stability_ratio(0.0265, 0.0122), 2.1791, 0.01);
    EXPECT_NEAR(stability_ratio(0.0088, 0.0105), 0.8381, 1e-4);
    EXPECT_NEAR(stability_ratio(0.0088, 0.0105), 0.8335, 0.01);
    EXPECT_NEAR(stability_ratio(0.0158, 0.0103), 1.5353, 0.01);
    EXPECT_THROW(stability_ratio(0.1, 0.0), UndefinedError);
}

TEST(CurveMetrics, AppendingDuplicateFinalEpoch) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        Series train(12), val(12);
        for (std::size_t i = 0; i < 12; ++i) train[i] = rng.uniform(), val[i] = rng.uniform();
        auto train2 = train, val2 = val;
        train2.push_back(train.back());
        val2.push_back(val.back());
        const auto a = curve_metrics(train, val);
        const auto b = curve_metrics(train2, val2);
        EXPECT_EQ(a.final_gap, b.final_gap);
        EXPECT_EQ(a.overfit_drop, b.overfit_drop);
        EXPECT_EQ(a.epoch_to_threshold, b.epoch_to_threshold);
        EXPECT_EQ(a.early_slope, b.early_slope);
        // Mean-type statistics absorb the extra zero difference or gap sample.
        EXPECT_NEAR(b.train_mu, a.train_mu * 11.0 / 12.0, 1e-12);
        EXPECT_NEAR(b.val_mu, a.val_mu * 11.0 / 12.0, 1e-12);
        EXPECT_NEAR(b.mean_gap, (a.mean_gap * 12.0 + a.final_gap) / 13.0, 1e-12);
    }
}

TEST(CurveMetrics, ShortAndFlatCurves) {
    const auto m = curve_metrics(Series{0.5, 0.5, 0.5}, Series{0.4, 0.6, 0.4});
    EXPECT_FALSE(m.early_slope.has_value());
    EXPECT_FALSE(m.stability_ratio.has_value());
    EXPECT_GE(m.val_sigma, 0.0);
    EXPECT_THROW(curve_metrics(Series{0.5}, Series{0.5}), ValidationError);
}

TEST(SymmetricEigen, MatchesEigen) {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + rng.below(6);
        Eigen::MatrixXd a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = a(i, j);
        const auto got = symmetric_eigen(m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got.values[i], es.eigenvalues()(n - 1 - i), 1e-10);
    }
}

TEST(Pca, Examples) {
    const auto line = pca(from_rows({{0, 0}, {1, 2}, {2, 4}, {3, 6}}), 1);
    EXPECT_NEAR(line.explained_variance_ratio[0], 1.0, 1e-9);

    const auto cross = pca(from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), 2);
    EXPECT_NEAR(cross.explained_variance_ratio[0], 0.5, 1e-12);
    EXPECT_NEAR(cross.explained_variance_ratio[1], 0.5, 1e-12);

    EXPECT_THROW(pca(from_rows({{1, 2}}), 1), SizeError);
    EXPECT_THROW(pca(from_rows({{1, 2}, {3, 4}, {5, 7}}), 3), SizeError);
    EXPECT_THROW(pca(from_rows({{1, 2}, {3, 4}, {5, 7}}), 0), SizeError);
}

TEST(Pca, MatchesDenseEigendecomposition) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 30, d = 5, k = 3;
        Matrix x(n, d);
        Eigen::MatrixXd ex(n, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) ex(i, j) = x(i, j) = rng.normal() * static_cast<double>(j + 1);
        const auto res = pca(x, k);

        const Eigen::MatrixXd centred = ex.rowwise() - ex.colwise().mean();
        const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        const double total = es.eigenvalues().sum();
        double ratio_sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double lambda = es.eigenvalues()(static_cast<Eigen::Index>(d - 1 - c));
            EXPECT_NEAR(res.explained_variance[c], lambda, 1e-8);
            EXPECT_NEAR(res.explained_variance_ratio[c], lambda / total, 1e-8);
            ratio_sum += res.explained_variance_ratio[c];
            if (c > 0) {
                EXPECT_LE(res.explained_variance_ratio[c], res.explained_variance_ratio[c - 1]);
            }
            // Projection variance equals the eigenvalue.
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) var += res.projected(i, c) * res.projected(i, c);
            EXPECT_NEAR(var / static_cast<double>(n), lambda, 1e-8);
            // Same direction as the oracle eigenvector up to sign.
            const Eigen::VectorXd v = es.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - c));
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += v(static_cast<Eigen::Index>(j)) * res.components(c, j);
            EXPECT_NEAR(std::abs(dot), 1.0, 1e-8);
        }
        EXPECT_LE(ratio_sum, 1.0 + 1e-9);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += res.components(a, j) * res.components(b, j);
                EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-8);
            }
    }
}

TEST(Pca, SignConvention) {
    Rng rng(4);
    Matrix x(10, 3);
    for (auto& v : x.values) v = rng.normal();
    const auto res = pca(x, 2);
    for (std::size_t c = 0; c < 2; ++c) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < 3; ++j)
            if (std::abs(res.components(c, j)) > std::abs(res.components(c, best))) best = j;
        EXPECT_GT(res.components(c, best), 0.0);
    }
}

TEST(Silhouette, Examples) {
    EXPECT_DOUBLE_EQ(silhouette(from_rows({{0, 0}, {0, 0}, {5, 5}, {5, 5}}), std::vector<int>{0, 0, 1, 1}), 1.0);
    EXPECT_LE(silhouette(from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}}), std::vector<int>{0, 1, 0, 1}), 0.0);
    EXPECT_THROW(silhouette(from_rows({{0, 0}, {1, 1}}), std::vector<int>{2, 2}), UndefinedError);
}

TEST(Silhouette, MatchesBruteForce) {
    const std::vector<std::vector<std::vector<double>>> sets{
        {{0, 0}, {1, 0}, {0, 1}, {4, 4}, {5, 4}, {9, 0}},
        {{0, 0}, {2, 0}, {1, 3}, {1, 1}, {3, 3}, {0, 2}},
        {{-1, 0.5}, {0.5, 0.5}, {2, -1}, {2.5, 0}, {0, 0}, {3, 3}},
    };
    const std::vector<std::vector<int>> labelings{{0, 0, 0, 1, 1, 2}, {0, 1, 0, 1, 2, 2}, {1, 1, 0, 0, 1, 0}};
    for (const auto& pts : sets) {
        for (const auto& labels : labelings) {
            const double got = silhouette(from_rows(pts), labels);
            EXPECT_NEAR(got, brute_silhouette(pts, labels), 1e-9);
            EXPECT_GE(got, -1.0);
            EXPECT_LE(got, 1.0);
        }
    }
}

TEST(Fisher, Examples) {
    EXPECT_EQ(fisher_ratio(Series{1, 2, 3}, Series{1, 2, 3}), 0.0);
    EXPECT_DOUBLE_EQ(fisher_ratio(Series{0, 2}, Series{4, 6}), 8.0);
    EXPECT_NEAR(fisher_ratio(Series{0, 2 * 3.7}, Series{4 * 3.7, 6 * 3.7}), 8.0, 1e-12);
    EXPECT_THROW(fisher_ratio(Series{1, 1}, Series{2, 2}), UndefinedError);
    EXPECT_THROW(fisher_ratio(Series{1}, Series{2, 3}), ValidationError);
}

TEST(Fisher, TableSymmetryAndShift) {
    Rng rng(5);
    Series feature;
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 10; ++i) {
            feature.push_back(rng.normal(static_cast<double>(c), 1.0));
            labels.push_back(c - 1);
        }
    const auto t = fisher_discriminant_ratio(feature, labels);
    EXPECT_EQ(t.classes, (std::vector<int>{-1, 0, 1}));
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_EQ(t.fdr[i][j], t.fdr[j][i]);
            if (i != j) sum += t.fdr[i][j];
        }
    EXPECT_NEAR(t.average, sum / 6.0, 1e-12);

    auto shifted = feature;
    for (auto& v : shifted) v = v + 12.5;
    const auto s = fisher_discriminant_ratio(shifted, labels);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s.fdr[i][j], t.fdr[i][j], 1e-9);
}
