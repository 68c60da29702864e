#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace roomtone {

struct ClusterAssignment {
    std::vector<int> labels;  // 0..k-1, canonical order of first appearance
    int k{0};
    double ch_score{std::numeric_limits<double>::quiet_NaN()};  // NaN when k < 2 or k == m
};

struct ClusterSearchResult {
    ClusterAssignment best;
    std::map<int, double> scores;  // k -> Calinski-Harabasz
};

// Ward's minimum-variance dendrogram built with the nearest-neighbor chain
// algorithm (O(m^2 * dim)). Ward is reducible, so the chain reproduces the
// greedy minimum-merge dendrogram; ties in the nearest-neighbor scans go to
// the smallest cluster id, which keeps runs deterministic.
class Dendrogram {
public:
    struct Merge {
        std::size_t rep_a, rep_b;  // original-point representatives of the merged clusters
        double cost;               // Ward variance increase
    };

    static Dendrogram build(const std::vector<std::vector<double>>& points) {
        const std::size_t m = points.size();
        if (m == 0) throw std::invalid_argument("cannot cluster an empty set");
        const std::size_t dim = points[0].size();
        for (const auto& p : points)
            if (p.size() != dim) throw std::invalid_argument("cluster points have inconsistent widths");

        Dendrogram dg;
        dg.n_points_ = m;
        if (m == 1) return dg;

        struct Node {
            std::vector<double> centroid;
            double size;
            std::size_t rep;  // smallest original index in the cluster
            bool active;
        };
        std::vector<Node> nodes;
        nodes.reserve(2 * m - 1);
        for (std::size_t i = 0; i < m; ++i) nodes.push_back({points[i], 1.0, i, true});

        auto ward_cost = [&](const Node& a, const Node& b) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double diff = a.centroid[j] - b.centroid[j];
                d2 += diff * diff;
            }
            return a.size * b.size / (a.size + b.size) * d2;
        };

        std::vector<std::size_t> chain;
        chain.reserve(m);
        std::size_t merges_done = 0;
        while (merges_done < m - 1) {
            if (chain.empty()) {
                for (std::size_t i = 0; i < nodes.size(); ++i)
                    if (nodes[i].active) {
                        chain.push_back(i);
                        break;
                    }
            }
            const std::size_t a = chain.back();
            std::size_t nn = a;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < nodes.size(); ++b) {
                if (b == a || !nodes[b].active) continue;
                const double c = ward_cost(nodes[a], nodes[b]);
                if (c < best) {
                    best = c;
                    nn = b;
                }
            }
            if (chain.size() >= 2 && nn == chain[chain.size() - 2]) {
                chain.pop_back();
                chain.pop_back();
                const std::size_t lo = std::min(a, nn), hi = std::max(a, nn);
                Node merged;
                merged.size = nodes[lo].size + nodes[hi].size;
                merged.centroid.resize(dim);
                for (std::size_t j = 0; j < dim; ++j)
                    merged.centroid[j] = (nodes[lo].size * nodes[lo].centroid[j] +
                                          nodes[hi].size * nodes[hi].centroid[j]) /
                                         merged.size;
                merged.rep = std::min(nodes[lo].rep, nodes[hi].rep);
                merged.active = true;
                nodes[lo].active = nodes[hi].active = false;
                dg.merges_.push_back({nodes[lo].rep, nodes[hi].rep, best});
                nodes.push_back(std::move(merged));
                ++merges_done;
            } else {
                chain.push_back(nn);
            }
        }
        // Ward has no inversions, so sorting by cost keeps children ahead of
        // parents and lets a k-cut apply a prefix of the merge list.
        std::stable_sort(dg.merges_.begin(), dg.merges_.end(),
                         [](const Merge& x, const Merge& y) { return x.cost < y.cost; });
        return dg;
    }

    std::size_t size() const { return n_points_; }

    // Merges ordered by non-decreasing cost; the k-cut applies the first
    // size() - k of them.
    const std::vector<Merge>& merges() const { return merges_; }

    // Partition into k clusters; labels are 0..k-1 in order of first appearance.
    std::vector<int> cut(int k) const {
        if (k < 1 || std::size_t(k) > n_points_)
            throw std::invalid_argument("cluster count k=" + std::to_string(k) +
                                        " out of range 1.." + std::to_string(n_points_));
        std::vector<std::size_t> parent(n_points_);
        std::iota(parent.begin(), parent.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        const std::size_t to_apply = n_points_ - std::size_t(k);
        for (std::size_t i = 0; i < to_apply; ++i)
            parent[find(merges_[i].rep_a)] = find(merges_[i].rep_b);

        std::vector<int> labels(n_points_, -1);
        std::map<std::size_t, int> relabel;
        for (std::size_t i = 0; i < n_points_; ++i) {
            const std::size_t root = find(i);
            auto it = relabel.try_emplace(root, int(relabel.size())).first;
            labels[i] = it->second;
        }
        return labels;
    }

private:
    std::size_t n_points_{0};
    std::vector<Merge> merges_;
};

// Ratio of between- to within-cluster dispersion, each normalized by its
// degrees of freedom. Perfectly separated duplicates (W == 0) score +inf.
inline double calinski_harabasz(const std::vector<std::vector<double>>& points,
                                const std::vector<int>& labels) {
    const std::size_t m = points.size();
    if (labels.size() != m) throw std::invalid_argument("labels length does not match point count");
    if (m == 0) throw std::invalid_argument("index undefined: no points");
    const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (k < 2 || m <= std::size_t(k))
        throw std::invalid_argument("index undefined: needs 2 <= k < m");
    const std::size_t dim = points[0].size();

    std::vector<std::vector<double>> centroid(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(k, 0);
    std::vector<double> overall(dim, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const int c = labels[i];
        if (c < 0) throw std::invalid_argument("labels must be non-negative");
        ++count[c];
        for (std::size_t j = 0; j < dim; ++j) {
            centroid[c][j] += points[i][j];
            overall[j] += points[i][j];
        }
    }
    for (int c = 0; c < k; ++c) {
        if (count[c] == 0) throw std::invalid_argument("index undefined: empty cluster " + std::to_string(c));
        for (std::size_t j = 0; j < dim; ++j) centroid[c][j] /= double(count[c]);
    }
    for (std::size_t j = 0; j < dim; ++j) overall[j] /= double(m);

    double between = 0.0, within = 0.0;
    for (int c = 0; c < k; ++c) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = centroid[c][j] - overall[j];
            d2 += diff * diff;
        }
        between += double(count[c]) * d2;
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = points[i][j] - centroid[labels[i]][j];
            within += diff * diff;
        }

    const double b_term = between / double(k - 1);
    const double w_term = within / double(m - k);
    if (w_term == 0.0) return std::numeric_limits<double>::infinity();
    return b_term / w_term;
}

inline ClusterAssignment agglomerate(const std::vector<std::vector<double>>& points, int k) {
    auto dg = Dendrogram::build(points);
    ClusterAssignment a;
    a.labels = dg.cut(k);
    a.k = k;
    if (k >= 2 && std::size_t(k) < points.size()) a.ch_score = calinski_harabasz(points, a.labels);
    return a;
}

// Sweep k over [k_min, k_max] on one dendrogram and keep the CH argmax
// (ties to the smallest k). k_max is clamped to m-1 so CH stays defined.
inline ClusterSearchResult select_clustering(const std::vector<std::vector<double>>& points,
                                             int k_min = 2, int k_max = 10) {
    const std::size_t m = points.size();
    if (k_min < 2) throw std::invalid_argument("k_min must be >= 2");
    if (k_max < k_min) throw std::invalid_argument("k_max must be >= k_min");
    if (m <= std::size_t(k_min))
        throw std::invalid_argument("too few points (" + std::to_string(m) +
                                    ") for k_min=" + std::to_string(k_min));

    double scatter = 0.0;
    const std::size_t dim = points[0].size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& p : points)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += p[j];
    for (double& x : mean) x /= double(m);
    for (const auto& p : points)
        for (std::size_t j = 0; j < dim; ++j) scatter += (p[j] - mean[j]) * (p[j] - mean[j]);
    if (scatter == 0.0) throw std::invalid_argument("degenerate data: all points identical");

    const int k_hi = std::min<int>(k_max, int(m) - 1);
    auto dg = Dendrogram::build(points);
    ClusterSearchResult result;
    for (int k = k_min; k <= k_hi; ++k) {
        auto labels = dg.cut(k);
        const double score = calinski_harabasz(points, labels);
        result.scores[k] = score;
        if (result.best.k == 0 || score > result.best.ch_score) {
            result.best.labels = std::move(labels);
            result.best.k = k;
            result.best.ch_score = score;
        }
    }
    return result;
}

}  // namespace roomtone
