#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roomtone {

namespace linalg {

// Dense symmetric matrix, row-major, d x d.
struct SymMatrix {
    std::size_t d{0};
    std::vector<double> a;

    explicit SymMatrix(std::size_t dim) : d(dim), a(dim * dim, 0.0) {}
    double& at(std::size_t i, std::size_t j) { return a[i * d + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * d + j]; }
};

struct EigenResult {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

// Cyclic Jacobi rotations. Plenty for the 8x8 covariance matrices this
// library deals with; deterministic sweep order keeps results reproducible.
inline EigenResult jacobi_eigen_symmetric(SymMatrix m, int max_sweeps = 100) {
    const std::size_t d = m.d;
    std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, frob = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double x = m.at(i, j);
                frob += x * x;
                if (j > i) off += x * x;
            }
        if (off <= 1e-28 * frob || frob == 0.0) break;

        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = m.at(p, q);
                if (apq == 0.0) continue;
                const double app = m.at(p, p), aqq = m.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = m.at(k, p), akq = m.at(k, q);
                    m.at(k, p) = c * akp - s * akq;
                    m.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = m.at(p, k), aqk = m.at(q, k);
                    m.at(p, k) = c * apk - s * aqk;
                    m.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return m.at(i, i) > m.at(j, j); });

    EigenResult r;
    r.values.reserve(d);
    r.vectors.reserve(d);
    for (std::size_t idx : order) {
        r.values.push_back(m.at(idx, idx));
        std::vector<double> col(d);
        for (std::size_t k = 0; k < d; ++k) col[k] = v[k][idx];
        r.vectors.push_back(std::move(col));
    }
    return r;
}

}  // namespace linalg

// PCA fitted on Haar coefficient vectors, truncated at the smallest component
// count whose cumulative explained-variance ratio reaches the target.
struct PCAModel {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // retained rows, orthonormal
    std::vector<double> explained_variance;       // per retained component, non-increasing
    double total_variance{0};
    double variance_target{0.95};

    std::size_t dim() const { return mean.size(); }
    std::size_t retained() const { return components.size(); }

    double explained_ratio() const {
        double s = std::accumulate(explained_variance.begin(), explained_variance.end(), 0.0);
        return total_variance > 0 ? s / total_variance : 0.0;
    }
};

inline PCAModel fit_pca(const std::vector<std::vector<double>>& rows, double variance_target = 0.95) {
    const std::size_t m = rows.size();
    if (m < 2) throw std::invalid_argument("fit_pca needs at least 2 rows, got " + std::to_string(m));
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        throw std::invalid_argument("variance_target must be in (0, 1]");
    const std::size_t d = rows[0].size();
    for (const auto& r : rows) {
        if (r.size() != d) throw std::invalid_argument("fit_pca rows have inconsistent widths");
        for (double x : r)
            if (!std::isfinite(x)) throw std::invalid_argument("fit_pca input holds a non-finite value");
    }

    PCAModel model;
    model.variance_target = variance_target;
    model.mean.assign(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
    for (double& v : model.mean) v /= double(m);

    // Sample covariance with 1/(m-1) scaling.
    linalg::SymMatrix cov(d);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = r[i] - model.mean[i];
            for (std::size_t j = i; j < d; ++j) cov.at(i, j) += ci * (r[j] - model.mean[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov.at(i, j) /= double(m - 1);
            cov.at(j, i) = cov.at(i, j);
        }

    auto eig = linalg::jacobi_eigen_symmetric(cov);
    for (double& ev : eig.values) ev = std::max(ev, 0.0);  // round-off guard
    model.total_variance = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
    if (model.total_variance <= 0.0) throw std::invalid_argument("degenerate data: zero total variance");

    double cum = 0.0;
    std::size_t n = 0;
    while (n < d) {
        cum += eig.values[n];
        ++n;
        if (cum / model.total_variance >= variance_target) break;
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto comp = eig.vectors[i];
        // Fix the sign so the largest-magnitude entry is positive.
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(comp[j]) > std::abs(comp[arg])) arg = j;
        if (comp[arg] < 0)
            for (double& x : comp) x = -x;
        model.components.push_back(std::move(comp));
        model.explained_variance.push_back(eig.values[i]);
    }
    return model;
}

inline std::vector<double> project(const PCAModel& model, std::span<const double> coeffs) {
    if (model.retained() == 0) throw std::invalid_argument("project called with an unfitted model");
    if (coeffs.size() != model.dim())
        throw std::invalid_argument("project: expected " + std::to_string(model.dim()) +
                                    " values, got " + std::to_string(coeffs.size()));
    std::vector<double> out(model.retained(), 0.0);
    for (std::size_t i = 0; i < model.retained(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < model.dim(); ++j)
            dot += model.components[i][j] * (coeffs[j] - model.mean[j]);
        out[i] = dot;
    }
    return out;
}

// Approximate reconstruction from retained components (test support).
inline std::vector<double> reconstruct(const PCAModel& model, std::span<const double> projected) {
    if (projected.size() != model.retained())
        throw std::invalid_argument("reconstruct: feature length does not match retained components");
    std::vector<double> out(model.mean);
    for (std::size_t i = 0; i < model.retained(); ++i)
        for (std::size_t j = 0; j < model.dim(); ++j) out[j] += projected[i] * model.components[i][j];
    return out;
}

}  // namespace roomtone
