#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "roomtone/time.hpp"

namespace roomtone {

inline constexpr int kBinCount = 8;

// Upper edges of bins 1..7; bin 8 is open-ended. Intervals are half-open
// [lo, hi), so a reading of exactly 6 lands in bin 2.
inline constexpr std::array<double, 7> kBinUpperEdges{6, 10, 15, 30, 50, 75, 100};

// Map one sound reading to its bin, numbered 1..8.
inline int bin_sample(double value) {
    if (!(value >= 0.0))
        throw std::domain_error("sound reading must be non-negative, got " + std::to_string(value));
    int bin = 1;
    for (double edge : kBinUpperEdges) {
        if (value < edge) return bin;
        ++bin;
    }
    return kBinCount;
}

// One room's raw sound readings at a fixed period (default 100 ms, i.e. 10 Hz).
struct RawSampleSeries {
    std::string room_id;
    TimePoint start_time{};
    std::chrono::milliseconds sample_period{100};
    std::vector<double> values;

    void validate() const {
        if (sample_period.count() <= 0) throw std::invalid_argument("sample_period must be positive");
        if (values.empty()) throw std::invalid_argument("sample series must hold at least one value");
        for (double v : values)
            if (!(v >= 0.0)) throw std::invalid_argument("sample series holds a negative value");
    }

    TimePoint time_at(std::size_t index) const { return start_time + sample_period * index; }
    TimePoint end_time() const { return start_time + sample_period * values.size(); }
};

// Per-slot counts over the 8 magnitude bins. total always equals the number
// of samples that fell inside the slot.
struct NoiseHistogram {
    std::string room_id;
    TimePoint slot_start{};
    std::array<std::int64_t, kBinCount> counts{};
    std::int64_t total{0};

    std::array<double, kBinCount> frequencies() const {
        if (total <= 0) throw std::invalid_argument("histogram has no samples");
        std::array<double, kBinCount> f{};
        for (int i = 0; i < kBinCount; ++i) f[i] = double(counts[i]) / double(total);
        return f;
    }
};

namespace detail {

// Index range [first, last) of the series samples falling in [slot_start, slot_start+len).
inline std::pair<std::size_t, std::size_t> window_indices(const RawSampleSeries& series,
                                                          TimePoint slot_start,
                                                          std::chrono::seconds slot_len) {
    using namespace std::chrono;
    const auto period = series.sample_period;
    const auto lo = slot_start - series.start_time;
    const auto hi = lo + slot_len;
    auto ceil_div = [&](milliseconds d) -> std::int64_t {
        auto n = d.count(), p = period.count();
        return n <= 0 ? 0 : (n + p - 1) / p;
    };
    std::int64_t first = ceil_div(duration_cast<milliseconds>(lo));
    std::int64_t last = ceil_div(duration_cast<milliseconds>(hi));
    first = std::clamp<std::int64_t>(first, 0, std::int64_t(series.values.size()));
    last = std::clamp<std::int64_t>(last, 0, std::int64_t(series.values.size()));
    return {std::size_t(first), std::size_t(last)};
}

}  // namespace detail

inline NoiseHistogram build_histogram(const RawSampleSeries& series, TimePoint slot_start,
                                      std::chrono::seconds slot_len = kSlotLength) {
    series.validate();
    auto [first, last] = detail::window_indices(series, slot_start, slot_len);
    if (first >= last)
        throw std::invalid_argument("no samples in slot starting " + format_rfc3339(slot_start));
    NoiseHistogram h;
    h.room_id = series.room_id;
    h.slot_start = slot_start;
    for (std::size_t i = first; i < last; ++i) ++h.counts[bin_sample(series.values[i]) - 1];
    h.total = std::int64_t(last - first);
    return h;
}

// Sum (not mean) of the samples in the slot; this is the quantity the
// per-room occupancy thresholds are stated against.
inline double accumulate_window(const RawSampleSeries& series, TimePoint slot_start,
                                std::chrono::seconds slot_len = kSlotLength) {
    series.validate();
    auto [first, last] = detail::window_indices(series, slot_start, slot_len);
    if (first >= last)
        throw std::invalid_argument("no samples in slot starting " + format_rfc3339(slot_start));
    double sum = 0.0;
    for (std::size_t i = first; i < last; ++i) sum += series.values[i];
    return sum;
}

inline constexpr const char* kAccumulatedNoiseKey = "accumulated_noise";

// One 5-minute slot joining the sound histogram with HVAC telemetry.
// histogram is absent when the sensor dropped out for most of the slot.
// aux carries pass-through channels; the accumulated noise value used by the
// threshold detector travels as aux["accumulated_noise"].
struct SlotRecord {
    std::string room_id;
    TimePoint slot_start{};
    std::optional<NoiseHistogram> histogram;
    double room_temp_c{0};
    double supply_temp_c{0};
    double air_volume_m3{0};
    std::map<std::string, double> aux;

    std::optional<double> accumulated_noise() const {
        auto it = aux.find(kAccumulatedNoiseKey);
        if (it == aux.end()) return std::nullopt;
        return it->second;
    }

    void validate() const {
        if (!(air_volume_m3 >= 0)) throw std::invalid_argument("air_volume_m3 must be >= 0");
        auto sane = [](double t) { return t >= -20.0 && t <= 60.0; };
        if (!sane(room_temp_c) || !sane(supply_temp_c))
            throw std::invalid_argument("temperature outside [-20, 60] C sanity band");
        if (histogram) {
            std::int64_t sum = 0;
            for (auto c : histogram->counts) {
                if (c < 0) throw std::invalid_argument("negative histogram count");
                sum += c;
            }
            if (sum != histogram->total) throw std::invalid_argument("histogram counts do not sum to total");
        }
    }
};

struct RoomConfig {
    std::string room_id;
    double threshold{0};      // accumulated-noise threshold, strictly > 0
    double setpoint_c{20.0};

    void validate() const {
        if (!(threshold > 0)) throw std::invalid_argument("room threshold must be > 0");
    }
};

struct OfficeWindow {
    std::chrono::minutes start{8 * 60};  // 08:00 local
    std::chrono::minutes end{19 * 60};   // 19:00 local, exclusive
    bool drop_weekends = true;
    bool drop_incomplete_days = true;
    TzOffset tz{};

    int expected_slots_per_day() const {
        using namespace std::chrono;
        return int((end - start) / duration_cast<minutes>(kSlotLength));
    }
};

// Keep only weekday slots whose start falls in [start, end) local time, then
// drop every (room, day) whose expected 5-minute grid is not fully present
// with histograms. Records come back sorted by (room_id, slot_start).
inline std::vector<SlotRecord> filter_analysis_window(std::vector<SlotRecord> records,
                                                      const OfficeWindow& w = {}) {
    using namespace std::chrono;
    std::erase_if(records, [&](const SlotRecord& r) {
        if (w.drop_weekends && is_weekend(r.slot_start, w.tz)) return true;
        auto mod = local_minute_of_day(r.slot_start, w.tz);
        return mod < w.start || mod >= w.end;
    });
    std::sort(records.begin(), records.end(), [](const SlotRecord& a, const SlotRecord& b) {
        return std::tie(a.room_id, a.slot_start) < std::tie(b.room_id, b.slot_start);
    });
    if (!w.drop_incomplete_days) return records;

    // A day is complete for a room when every expected slot exists and has a histogram.
    std::map<std::pair<std::string, sys_days>, int> complete_slots;
    for (const auto& r : records)
        if (r.histogram) ++complete_slots[{r.room_id, local_date(r.slot_start, w.tz)}];
    const int expected = w.expected_slots_per_day();
    std::erase_if(records, [&](const SlotRecord& r) {
        auto it = complete_slots.find({r.room_id, local_date(r.slot_start, w.tz)});
        return it == complete_slots.end() || it->second < expected;
    });
    return records;
}

}  // namespace roomtone
