#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roomtone/cluster.hpp"
#include "roomtone/data.hpp"
#include "roomtone/features.hpp"
#include "roomtone/neural.hpp"
#include "roomtone/synth.hpp"

namespace roomtone {

enum class Method { threshold, cluster, classifier, semi_supervised };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::threshold: return "threshold";
        case Method::cluster: return "cluster";
        case Method::classifier: return "classifier";
        case Method::semi_supervised: return "semi_supervised";
    }
    throw std::invalid_argument("unknown method");
}

inline Method method_from_name(const std::string& s) {
    if (s == "threshold") return Method::threshold;
    if (s == "cluster") return Method::cluster;
    if (s == "classifier") return Method::classifier;
    if (s == "semi_supervised" || s == "semi") return Method::semi_supervised;
    throw std::invalid_argument("unknown method '" + s + "'");
}

// Per-slot outcome. occupied stays empty for the pure clustering method,
// which the paper deliberately leaves unlabeled.
struct OccupancyVerdict {
    std::string room_id;
    TimePoint slot_start{};
    std::optional<bool> occupied;
    std::optional<double> probability;  // classifier and semi_supervised only
    Method method{Method::threshold};
    std::optional<int> cluster_id;      // cluster and semi_supervised only
};

struct ClusterSearchParams {
    int k_min{2};
    int k_max{10};
    double variance_target{0.95};
    bool pool_rooms{false};  // default clusters each room separately
};

namespace detail {

inline std::map<std::string, RoomConfig> room_config_map(std::span<const RoomConfig> configs) {
    std::map<std::string, RoomConfig> by_room;
    for (const auto& c : configs) {
        c.validate();
        by_room[c.room_id] = c;
    }
    return by_room;
}

inline std::array<double, kBinCount> slot_frequencies(const SlotRecord& slot) {
    if (!slot.histogram)
        throw std::invalid_argument("slot " + slot.room_id + "@" + format_rfc3339(slot.slot_start) +
                                    " has no histogram");
    return slot.histogram->frequencies();
}

// Group slot indices by room, preserving input order within each room.
inline std::map<std::string, std::vector<std::size_t>> group_by_room(
    std::span<const SlotRecord> slots, bool pool_rooms) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < slots.size(); ++i)
        groups[pool_rooms ? std::string("*") : slots[i].room_id].push_back(i);
    return groups;
}

}  // namespace detail

// Occupied iff the slot's accumulated noise strictly exceeds the room's
// empirical threshold.
inline std::vector<OccupancyVerdict> detect_threshold(std::span<const SlotRecord> slots,
                                                      std::span<const RoomConfig> configs) {
    auto by_room = detail::room_config_map(configs);
    std::vector<OccupancyVerdict> verdicts;
    verdicts.reserve(slots.size());
    for (const auto& slot : slots) {
        auto it = by_room.find(slot.room_id);
        if (it == by_room.end())
            throw std::invalid_argument("no threshold configured for room '" + slot.room_id + "'");
        auto accumulated = slot.accumulated_noise();
        if (!accumulated)
            throw std::invalid_argument("slot " + slot.room_id + "@" + format_rfc3339(slot.slot_start) +
                                        " lacks an accumulated noise value");
        OccupancyVerdict v;
        v.room_id = slot.room_id;
        v.slot_start = slot.slot_start;
        v.method = Method::threshold;
        v.occupied = *accumulated > it->second.threshold;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

// Unsupervised structure only: every slot gets a cluster id, the occupancy
// flag stays unset. Clustering runs per room unless params.pool_rooms.
inline std::vector<OccupancyVerdict> detect_cluster(std::span<const SlotRecord> slots,
                                                    std::span<const FeatureVector> features,
                                                    const ClusterSearchParams& params = {}) {
    if (slots.size() != features.size())
        throw std::invalid_argument("detect_cluster: feature count does not match slot count");
    std::vector<OccupancyVerdict> verdicts(slots.size());
    for (auto& [room, indices] : detail::group_by_room(slots, params.pool_rooms)) {
        std::vector<std::vector<double>> points;
        points.reserve(indices.size());
        for (auto i : indices) {
            if (features[i].room_id != slots[i].room_id || features[i].slot_start != slots[i].slot_start)
                throw std::invalid_argument("detect_cluster: features misaligned with slots");
            points.push_back(features[i].values);
        }
        auto search = select_clustering(points, params.k_min, params.k_max);
        for (std::size_t j = 0; j < indices.size(); ++j) {
            auto& v = verdicts[indices[j]];
            v.room_id = slots[indices[j]].room_id;
            v.slot_start = slots[indices[j]].slot_start;
            v.method = Method::cluster;
            v.cluster_id = search.best.labels[j];
        }
    }
    return verdicts;
}

inline std::vector<OccupancyVerdict> detect_classifier(std::span<const SlotRecord> slots,
                                                       const ClassifierModel& model) {
    std::vector<OccupancyVerdict> verdicts;
    verdicts.reserve(slots.size());
    for (const auto& slot : slots) {
        auto freq = detail::slot_frequencies(slot);
        const double p = classify(model, freq);
        OccupancyVerdict v;
        v.room_id = slot.room_id;
        v.slot_start = slot.slot_start;
        v.method = Method::classifier;
        v.probability = p;
        v.occupied = p > 0.5;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

// Clusters each room, then labels whole clusters by the strict majority of
// the classifier's per-slot verdicts inside them. An exact tie falls back to
// the cluster's mean probability, again strict, so equality means unoccupied.
inline std::vector<OccupancyVerdict> detect_semi_supervised(std::span<const SlotRecord> slots,
                                                            std::span<const FeatureVector> features,
                                                            const ClassifierModel& model,
                                                            const ClusterSearchParams& params = {}) {
    auto verdicts = detect_cluster(slots, features, params);
    for (auto& v : verdicts) v.method = Method::semi_supervised;

    std::map<std::pair<std::string, int>, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        verdicts[i].probability = classify(model, detail::slot_frequencies(slots[i]));
        members[{params.pool_rooms ? std::string("*") : verdicts[i].room_id,
                 *verdicts[i].cluster_id}].push_back(i);
    }
    for (auto& [key, idx] : members) {
        std::size_t occ = 0;
        double prob_sum = 0.0;
        for (auto i : idx) {
            if (*verdicts[i].probability > 0.5) ++occ;
            prob_sum += *verdicts[i].probability;
        }
        const std::size_t unocc = idx.size() - occ;
        bool label;
        if (occ > unocc)
            label = true;
        else if (unocc > occ)
            label = false;
        else
            label = prob_sum / double(idx.size()) > 0.5;
        for (auto i : idx) verdicts[i].occupied = label;
    }
    return verdicts;
}

struct ClassMetrics {
    std::size_t true_positive{0}, false_positive{0}, true_negative{0}, false_negative{0};
    double accuracy{0}, precision{0}, recall{0};

    std::size_t total() const { return true_positive + false_positive + true_negative + false_negative; }
};

struct EvaluationReport {
    std::map<Method, ClassMetrics> per_method;
    std::size_t slot_count{0};
};

// Standard binary metrics against ground truth, grouped by method. Every
// verdict must have a matching truth record and a concrete occupied flag.
inline EvaluationReport evaluate(std::span<const OccupancyVerdict> verdicts,
                                 std::span<const TruthRecord> truth) {
    std::map<std::pair<std::string, TimePoint>, bool> truth_by_key;
    for (const auto& t : truth) truth_by_key[{t.room_id, t.slot_start}] = t.occupied;

    EvaluationReport report;
    for (const auto& v : verdicts) {
        auto it = truth_by_key.find({v.room_id, v.slot_start});
        if (it == truth_by_key.end())
            throw std::invalid_argument("no ground truth for " + v.room_id + "@" +
                                        format_rfc3339(v.slot_start));
        if (!v.occupied)
            throw std::invalid_argument("verdict for " + v.room_id + "@" + format_rfc3339(v.slot_start) +
                                        " carries no occupancy label (method " +
                                        method_name(v.method) + ")");
        auto& m = report.per_method[v.method];
        const bool actual = it->second, predicted = *v.occupied;
        if (predicted && actual) ++m.true_positive;
        else if (predicted && !actual) ++m.false_positive;
        else if (!predicted && !actual) ++m.true_negative;
        else ++m.false_negative;
    }
    report.slot_count = verdicts.size();
    for (auto& [method, m] : report.per_method) {
        const double total = double(m.total());
        m.accuracy = total > 0 ? double(m.true_positive + m.true_negative) / total : 0.0;
        const double pred_pos = double(m.true_positive + m.false_positive);
        m.precision = pred_pos > 0 ? double(m.true_positive) / pred_pos : 0.0;
        const double actual_pos = double(m.true_positive + m.false_negative);
        m.recall = actual_pos > 0 ? double(m.true_positive) / actual_pos : 0.0;
    }
    return report;
}

struct TransferConfig {
    TrainConfig train{};
    std::size_t autoencoder_hidden{16};
    std::size_t classifier_hidden{8};
    double sparsity_target{0.05};
    double sparsity_weight{0.1};
    ClusterSearchParams search{};
};

struct TransferResult {
    ClassifierModel model;
    std::map<std::string, EvaluationReport> per_test_room;
};

namespace detail {

struct LabeledHistograms {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

inline LabeledHistograms threshold_labeled_histograms(std::span<const SlotRecord> slots,
                                                      std::span<const RoomConfig> configs) {
    auto verdicts = detect_threshold(slots, configs);
    LabeledHistograms out;
    out.x.reserve(slots.size());
    out.y.reserve(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto f = slot_frequencies(slots[i]);
        out.x.emplace_back(f.begin(), f.end());
        out.y.push_back(*verdicts[i].occupied ? 1 : 0);
    }
    return out;
}

}  // namespace detail

// Trains the classifier pipeline on the training rooms' threshold-labeled
// slots (autoencoder on the occupied class only) and evaluates the
// semi-supervised detector on each held-out room.
inline TransferResult cross_room_transfer(std::span<const SlotRecord> slots,
                                          std::span<const TruthRecord> truth,
                                          const std::vector<std::string>& train_rooms,
                                          const std::vector<std::string>& test_rooms,
                                          std::span<const RoomConfig> configs,
                                          const TransferConfig& cfg = {}) {
    std::set<std::string> train_set(train_rooms.begin(), train_rooms.end());
    std::set<std::string> test_set(test_rooms.begin(), test_rooms.end());
    for (const auto& r : test_set)
        if (train_set.count(r))
            throw std::invalid_argument("room '" + r + "' appears in both train and test sets");
    if (train_set.empty() || test_set.empty())
        throw std::invalid_argument("train and test room sets must be non-empty");

    std::vector<SlotRecord> train_slots;
    for (const auto& s : slots)
        if (train_set.count(s.room_id)) train_slots.push_back(s);
    auto labeled = detail::threshold_labeled_histograms(train_slots, configs);

    std::vector<std::vector<double>> occupied_only;
    for (std::size_t i = 0; i < labeled.x.size(); ++i)
        if (labeled.y[i] == 1) occupied_only.push_back(labeled.x[i]);

    auto encoder = train_autoencoder(occupied_only, cfg.autoencoder_hidden, cfg.train,
                                     cfg.sparsity_target, cfg.sparsity_weight);
    TransferResult result;
    result.model = train_classifier(encoder, labeled.x, labeled.y, cfg.train, cfg.classifier_hidden);

    for (const auto& room : test_rooms) {
        std::vector<SlotRecord> room_slots;
        for (const auto& s : slots)
            if (s.room_id == room) room_slots.push_back(s);
        if (room_slots.empty()) throw std::invalid_argument("no slots for test room '" + room + "'");

        std::vector<NoiseHistogram> hists;
        hists.reserve(room_slots.size());
        for (const auto& s : room_slots) {
            if (!s.histogram) throw std::invalid_argument("test slot lacks a histogram");
            hists.push_back(*s.histogram);
        }
        auto featurized = featurize_slots(hists, nullptr, cfg.search.variance_target);
        auto verdicts =
            detect_semi_supervised(room_slots, featurized.features, result.model, cfg.search);
        result.per_test_room[room] = evaluate(verdicts, truth);
    }
    return result;
}

}  // namespace roomtone
