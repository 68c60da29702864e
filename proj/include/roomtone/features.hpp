#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "roomtone/data.hpp"
#include "roomtone/haar.hpp"
#include "roomtone/pca.hpp"

namespace roomtone {

struct FeatureVector {
    std::string room_id;
    TimePoint slot_start{};
    std::vector<double> values;
};

struct FeaturizeResult {
    PCAModel model;
    std::vector<FeatureVector> features;
};

// Histogram counts are normalized to frequencies before the Haar transform so
// slots of different lengths stay comparable.
inline std::vector<double> haar_of_histogram(const NoiseHistogram& h) {
    auto freq = h.frequencies();
    return haar_transform(std::span<const double>(freq));
}

// Haar -> PCA pipeline over a batch of slot histograms. Fits a fresh model
// unless one is supplied for reuse.
inline FeaturizeResult featurize_slots(std::span<const NoiseHistogram> histograms,
                                       const PCAModel* reuse = nullptr,
                                       double variance_target = 0.95) {
    std::vector<std::vector<double>> coeffs;
    coeffs.reserve(histograms.size());
    for (const auto& h : histograms) coeffs.push_back(haar_of_histogram(h));

    FeaturizeResult result;
    if (reuse) {
        result.model = *reuse;
    } else {
        if (coeffs.size() < 2)
            throw std::invalid_argument("featurize_slots needs at least 2 histograms to fit a model");
        result.model = fit_pca(coeffs, variance_target);
    }

    result.features.reserve(histograms.size());
    for (std::size_t i = 0; i < histograms.size(); ++i) {
        FeatureVector fv;
        fv.room_id = histograms[i].room_id;
        fv.slot_start = histograms[i].slot_start;
        fv.values = project(result.model, coeffs[i]);
        result.features.push_back(std::move(fv));
    }
    return result;
}

}  // namespace roomtone
