#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "roomtone/features.hpp"

using namespace roomtone;
using namespace std::chrono;

namespace {

NoiseHistogram make_hist(std::mt19937_64& rng, const std::string& room, int slot_index,
                         int loud_bias) {
    NoiseHistogram h;
    h.room_id = room;
    h.slot_start = TimePoint(sys_days{year{2017} / November / 6}) + hours{8} +
                   minutes{5 * slot_index};
    std::uniform_int_distribution<int> noise(0, 40);
    for (int b = 0; b < kBinCount; ++b) h.counts[std::size_t(b)] = noise(rng);
    h.counts[0] += 2000;
    h.counts[std::size_t(loud_bias)] += 800;
    h.total = 0;
    for (auto c : h.counts) h.total += c;
    return h;
}

}  // namespace

TEST(HaarOfHistogram, TransformsNormalizedFrequencies) {
    NoiseHistogram h;
    h.room_id = "P02";
    h.counts = {1500, 750, 375, 375, 0, 0, 0, 0};
    h.total = 3000;

    const auto got = haar_of_histogram(h);
    const auto f = h.frequencies();
    const auto want = oracle::haar_apply_8(f);
    ASSERT_EQ(got.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);

    // frequencies sum to 1, so the scaling coefficient is fixed at 1/sqrt(8)^-1 scaled:
    // sum/sqrt(8) = 1/(2*sqrt(2))
    EXPECT_NEAR(got[0], 1.0 / (2.0 * std::sqrt(2.0)), 1e-12);
}

TEST(HaarOfHistogram, EmptyHistogramThrows) {
    NoiseHistogram h;
    h.total = 0;
    EXPECT_THROW(haar_of_histogram(h), std::invalid_argument);
}

TEST(FeaturizeSlots, KeepsAlignmentAndIdentity) {
    std::mt19937_64 rng(5);
    std::vector<NoiseHistogram> hists;
    for (int i = 0; i < 40; ++i) hists.push_back(make_hist(rng, i % 2 ? "P01" : "P02", i, 2 + i % 3));

    auto result = featurize_slots(hists);
    ASSERT_EQ(result.features.size(), hists.size());
    for (std::size_t i = 0; i < hists.size(); ++i) {
        EXPECT_EQ(result.features[i].room_id, hists[i].room_id);
        EXPECT_EQ(result.features[i].slot_start, hists[i].slot_start);
        EXPECT_EQ(result.features[i].values.size(), result.model.retained());
    }
    EXPECT_GE(result.model.retained(), 1u);
    EXPECT_LE(result.model.retained(), 8u);
    EXPECT_GE(result.model.explained_ratio(), 0.95 - 1e-12);
}

TEST(FeaturizeSlots, ProjectionMatchesManualPipeline) {
    std::mt19937_64 rng(6);
    std::vector<NoiseHistogram> hists;
    for (int i = 0; i < 30; ++i) hists.push_back(make_hist(rng, "P02", i, 3));

    auto result = featurize_slots(hists);
    for (std::size_t i = 0; i < hists.size(); ++i) {
        auto manual = project(result.model, haar_of_histogram(hists[i]));
        ASSERT_EQ(manual.size(), result.features[i].values.size());
        for (std::size_t j = 0; j < manual.size(); ++j)
            EXPECT_DOUBLE_EQ(result.features[i].values[j], manual[j]);
    }
}

TEST(FeaturizeSlots, ReusedModelIsNotRefitted) {
    std::mt19937_64 rng(9);
    std::vector<NoiseHistogram> train, test;
    for (int i = 0; i < 50; ++i) train.push_back(make_hist(rng, "P01", i, 2));
    for (int i = 0; i < 10; ++i) test.push_back(make_hist(rng, "P02", i, 6));

    auto fitted = featurize_slots(train);
    auto reused = featurize_slots(test, &fitted.model);

    EXPECT_EQ(reused.model.retained(), fitted.model.retained());
    EXPECT_EQ(reused.model.mean, fitted.model.mean);
    EXPECT_EQ(reused.model.components, fitted.model.components);

    // projections must use the supplied model
    for (std::size_t i = 0; i < test.size(); ++i) {
        auto manual = project(fitted.model, haar_of_histogram(test[i]));
        for (std::size_t j = 0; j < manual.size(); ++j)
            EXPECT_DOUBLE_EQ(reused.features[i].values[j], manual[j]);
    }

    // a single histogram is fine when a model is reused
    std::vector<NoiseHistogram> one{test[0]};
    EXPECT_NO_THROW(featurize_slots(one, &fitted.model));
    EXPECT_THROW(featurize_slots(one), std::invalid_argument);
}

TEST(FeaturizeSlots, VarianceTargetIsForwarded) {
    std::mt19937_64 rng(12);
    std::vector<NoiseHistogram> hists;
    for (int i = 0; i < 60; ++i) hists.push_back(make_hist(rng, "P02", i, 2 + i % 5));

    auto strict = featurize_slots(hists, nullptr, 1.0);
    auto loose = featurize_slots(hists, nullptr, 0.5);
    EXPECT_GE(strict.model.retained(), loose.model.retained());
    EXPECT_GE(loose.model.explained_ratio(), 0.5 - 1e-12);
    EXPECT_NEAR(strict.model.explained_ratio(), 1.0, 1e-9);
}
