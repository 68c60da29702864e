#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "roomtone/pca.hpp"

using namespace roomtone;

namespace {

linalg::SymMatrix random_symmetric(std::mt19937_64& rng, std::size_t d) {
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    linalg::SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            const double x = dist(rng);
            m.at(i, j) = x;
            m.at(j, i) = x;
        }
    return m;
}

std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, std::size_t m, std::size_t d,
                                             const std::vector<double>& scales) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<std::vector<double>> rows(m, std::vector<double>(d));
    for (auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) r[j] = scales[j] * dist(rng);
    return rows;
}

// Trace of the sample covariance, computed directly from the data.
double covariance_trace(const std::vector<std::vector<double>>& rows) {
    const std::size_t m = rows.size(), d = rows[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (double& x : mean) x /= double(m);
    double trace = 0.0;
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) trace += (r[j] - mean[j]) * (r[j] - mean[j]);
    return trace / double(m - 1);
}

}  // namespace

// The Jacobi solver against an independently written Householder+QL solver.
TEST(JacobiEigen, AgreesWithTridiagonalQlOracle) {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 8;
        auto m = random_symmetric(rng, d);

        std::vector<std::vector<double>> dense(d, std::vector<double>(d));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) dense[i][j] = m.at(i, j);

        const auto lib = linalg::jacobi_eigen_symmetric(m);
        const auto ref = oracle::eigen_symmetric(dense);

        ASSERT_EQ(lib.values.size(), d);
        for (std::size_t i = 0; i < d; ++i) {
            // library is descending, oracle ascending
            const double want = ref.values[d - 1 - i];
            EXPECT_NEAR(lib.values[i], want, 1e-9 * std::max(1.0, std::abs(want))) << "rank " << i;
        }
        // Random dense symmetric matrices have distinct spectra, so vectors
        // must agree up to sign.
        for (std::size_t i = 0; i < d; ++i) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += lib.vectors[i][k] * ref.vectors[d - 1 - i][k];
            EXPECT_NEAR(std::abs(dot), 1.0, 1e-7) << "vector " << i;
        }
    }
}

TEST(JacobiEigen, EigenpairsSatisfyDefinition) {
    std::mt19937_64 rng(55);
    auto m = random_symmetric(rng, 6);
    const auto copy = m;
    const auto eig = linalg::jacobi_eigen_symmetric(m);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t r = 0; r < 6; ++r) {
            double av = 0.0;
            for (std::size_t c = 0; c < 6; ++c) av += copy.at(r, c) * eig.vectors[i][c];
            EXPECT_NEAR(av, eig.values[i] * eig.vectors[i][r], 1e-9);
        }
    }
    for (std::size_t i = 1; i < 6; ++i) EXPECT_GE(eig.values[i - 1], eig.values[i]);
}

TEST(FitPca, HandComputedRankOneData) {
    // Points on the line y = x/2: single nonzero eigenvalue.
    std::vector<std::vector<double>> rows{{3, 1.5}, {-3, -1.5}, {1, 0.5}, {-1, -0.5}};
    auto model = fit_pca(rows, 0.95);
    ASSERT_EQ(model.retained(), 1u);

    // Sample variance along the line: x values {3,-3,1,-1}, mean 0,
    // sum x^2 = 20, times (1 + 0.25) for the y component, over m-1 = 3.
    EXPECT_NEAR(model.total_variance, 20.0 * 1.25 / 3.0, 1e-9);
    EXPECT_NEAR(model.explained_variance[0], model.total_variance, 1e-9);

    const double inv_norm = 1.0 / std::sqrt(1.25);
    EXPECT_NEAR(model.components[0][0], inv_norm, 1e-9);
    EXPECT_NEAR(model.components[0][1], 0.5 * inv_norm, 1e-9);
}

TEST(FitPca, IsotropicEightDimensionalDataKeepsAllComponents) {
    // +/- a*e_j for each axis: covariance is a multiple of the identity, so
    // seven of eight components only reach 7/8 < 0.95.
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < 8; ++j) {
        std::vector<double> plus(8, 0.0), minus(8, 0.0);
        plus[j] = 2.0;
        minus[j] = -2.0;
        rows.push_back(plus);
        rows.push_back(minus);
    }
    auto model = fit_pca(rows, 0.95);
    EXPECT_EQ(model.retained(), 8u);
    EXPECT_NEAR(model.explained_ratio(), 1.0, 1e-12);
    for (std::size_t i = 1; i < 8; ++i)
        EXPECT_NEAR(model.explained_variance[i], model.explained_variance[0], 1e-9);
}

TEST(FitPca, SmallestComponentCountReachingTarget) {
    std::mt19937_64 rng(7);
    // axis scales giving variance shares ~ {0.90, 0.06, 0.04}
    auto rows = random_rows(rng, 4000, 3, {std::sqrt(90.0), std::sqrt(6.0), std::sqrt(4.0)});
    auto model = fit_pca(rows, 0.95);
    EXPECT_EQ(model.retained(), 2u);  // 0.90 < 0.95 <= 0.96

    // oracle cross-check on the same data: brute-force smallest n
    const std::size_t d = 3;
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (double& x : mean) x /= double(rows.size());
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : rows)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / double(rows.size() - 1);
    auto ref = oracle::eigen_symmetric(cov);
    double total = 0.0;
    for (double v : ref.values) total += v;
    double cum = 0.0;
    std::size_t smallest = 0;
    for (std::size_t i = ref.values.size(); i-- > 0;) {  // ascending -> take from the top
        cum += ref.values[i];
        ++smallest;
        if (cum / total >= 0.95) break;
    }
    EXPECT_EQ(model.retained(), smallest);
}

TEST(FitPca, VarianceTargetOneKeepsEverything) {
    std::mt19937_64 rng(19);
    auto rows = random_rows(rng, 200, 4, {3.0, 2.0, 1.0, 0.5});
    auto model = fit_pca(rows, 1.0);
    EXPECT_EQ(model.retained(), 4u);
    EXPECT_NEAR(model.explained_ratio(), 1.0, 1e-9);
}

TEST(FitPca, ComponentsAreOrthonormalWithPositiveDominantEntry) {
    std::mt19937_64 rng(23);
    auto rows = random_rows(rng, 500, 8, {8, 7, 6, 5, 4, 3, 2, 1});
    auto model = fit_pca(rows, 1.0);
    ASSERT_EQ(model.retained(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < 8; ++k) dot += model.components[i][k] * model.components[j][k];
            EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-9);
        }
        std::size_t arg = 0;
        for (std::size_t k = 1; k < 8; ++k)
            if (std::abs(model.components[i][k]) > std::abs(model.components[i][arg])) arg = k;
        EXPECT_GT(model.components[i][arg], 0.0);
    }
    EXPECT_NEAR(model.total_variance, covariance_trace(rows), 1e-9 * model.total_variance);
}

TEST(FitPca, ExplainedVarianceIsNonIncreasing) {
    std::mt19937_64 rng(29);
    auto rows = random_rows(rng, 300, 5, {5, 4, 3, 2, 1});
    auto model = fit_pca(rows, 1.0);
    for (std::size_t i = 1; i < model.retained(); ++i)
        EXPECT_GE(model.explained_variance[i - 1], model.explained_variance[i] - 1e-12);
}

TEST(FitPca, RejectsDegenerateInput) {
    EXPECT_THROW(fit_pca({{1.0, 2.0}}), std::invalid_argument);                  // one row
    EXPECT_THROW(fit_pca({{1.0, 2.0}, {1.0, 2.0}}), std::invalid_argument);      // zero variance
    EXPECT_THROW(fit_pca({{1.0}, {2.0, 3.0}}), std::invalid_argument);           // ragged
    EXPECT_THROW(fit_pca({{1.0, std::nan("")}, {2.0, 3.0}}), std::invalid_argument);
    EXPECT_THROW(fit_pca({{1.0, 2.0}, {3.0, 4.0}}, 0.0), std::invalid_argument);  // bad target
    EXPECT_THROW(fit_pca({{1.0, 2.0}, {3.0, 4.0}}, 1.5), std::invalid_argument);
}

TEST(ProjectReconstruct, MeanProjectsToZeroAndFullRankRoundTrips) {
    std::mt19937_64 rng(31);
    auto rows = random_rows(rng, 100, 4, {4, 3, 2, 1});
    auto model = fit_pca(rows, 1.0);

    auto zero = project(model, model.mean);
    for (double z : zero) EXPECT_NEAR(z, 0.0, 1e-9);

    for (int i = 0; i < 10; ++i) {
        const auto& x = rows[std::size_t(i)];
        auto back = reconstruct(model, project(model, x));
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(back[j], x[j], 1e-8);
    }
}

TEST(ProjectReconstruct, TruncatedReconstructionErrorIsBounded) {
    std::mt19937_64 rng(37);
    auto rows = random_rows(rng, 2000, 8, {10, 8, 6, 1, 0.5, 0.4, 0.3, 0.2});
    auto model = fit_pca(rows, 0.95);
    ASSERT_LT(model.retained(), 8u);

    double err = 0.0;
    for (const auto& x : rows) {
        auto back = reconstruct(model, project(model, x));
        for (std::size_t j = 0; j < 8; ++j) err += (back[j] - x[j]) * (back[j] - x[j]);
    }
    err /= double(rows.size() - 1);
    // Discarded mass is at most 5% of total variance by construction.
    EXPECT_LE(err, 0.05 * model.total_variance * 1.01);
}

TEST(Project, ValidatesInput) {
    std::mt19937_64 rng(41);
    auto rows = random_rows(rng, 50, 3, {3, 2, 1});
    auto model = fit_pca(rows, 1.0);
    std::vector<double> wrong(4, 0.0);
    EXPECT_THROW(project(model, wrong), std::invalid_argument);
    EXPECT_THROW(project(PCAModel{}, wrong), std::invalid_argument);
    std::vector<double> short_vec(2, 0.0);
    EXPECT_THROW(reconstruct(model, short_vec), std::invalid_argument);
}
