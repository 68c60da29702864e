#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roomtone/data.hpp"
#include "roomtone/occupancy.hpp"

namespace roomtone {

struct EnergyConstants {
    double air_density_kg_m3{1.204};
    double air_heat_capacity_kj_kg_k{1.012};
};

inline double kj_to_kwh(double kj) { return kj / 3600.0; }

// Sensible cooling energy delivered over one slot, in kJ. The air volume is
// the amount supplied during the slot, so no time term appears here.
inline double cooling_energy_kj(double room_temp_c, double supply_temp_c, double air_volume_m3,
                                const EnergyConstants& constants = {}) {
    if (air_volume_m3 < 0.0)
        throw std::invalid_argument("air volume must be non-negative");
    if (!std::isfinite(room_temp_c) || !std::isfinite(supply_temp_c) || !std::isfinite(air_volume_m3))
        throw std::invalid_argument("energy inputs must be finite");
    return constants.air_density_kg_m3 * constants.air_heat_capacity_kj_kg_k * air_volume_m3 *
           (room_temp_c - supply_temp_c);
}

// Supply air colder than the room gives positive energy; a negative value
// means the system was heating and gets flagged, not discarded.
struct EnergySlot {
    std::string room_id;
    TimePoint slot_start{};
    double energy_kj{0};
    double delta_t_c{0};
    double room_temp_c{0};
    bool occupied{false};
    bool negative_delta{false};
};

struct ClassStats {
    std::size_t slot_count{0};
    double total_kwh{0};
    double mean_kwh{0};
    double mean_room_temp_c{0};
};

struct EnergyReport {
    std::size_t slot_count{0};
    double total_kwh{0};
    std::size_t negative_delta_slots{0};
    std::optional<ClassStats> occupied;
    std::optional<ClassStats> unoccupied;
    // (mean occupied - mean unoccupied) / mean unoccupied * 100; absent when
    // either class is empty.
    std::optional<double> percent_gap;
    std::optional<double> temp_gap_c;
    EnergyConstants constants;
};

struct EnergyAttribution {
    std::vector<EnergySlot> slots;
    EnergyReport report;
};

// Splits per-slot cooling energy by the occupancy verdicts. Every slot needs
// a verdict with a concrete occupied flag.
inline EnergyAttribution attribute_energy(std::span<const SlotRecord> slots,
                                          std::span<const OccupancyVerdict> verdicts,
                                          const EnergyConstants& constants = {}) {
    std::map<std::pair<std::string, TimePoint>, bool> verdict_by_key;
    for (const auto& v : verdicts) {
        if (!v.occupied)
            throw std::invalid_argument("verdict for " + v.room_id + "@" + format_rfc3339(v.slot_start) +
                                        " carries no occupancy label (method " +
                                        method_name(v.method) + ")");
        verdict_by_key[{v.room_id, v.slot_start}] = *v.occupied;
    }

    EnergyAttribution out;
    out.report.constants = constants;
    out.slots.reserve(slots.size());

    double occ_kwh = 0, unocc_kwh = 0, occ_temp = 0, unocc_temp = 0;
    std::size_t occ_n = 0, unocc_n = 0;
    for (const auto& slot : slots) {
        auto it = verdict_by_key.find({slot.room_id, slot.slot_start});
        if (it == verdict_by_key.end())
            throw std::invalid_argument("no verdict for slot " + slot.room_id + "@" +
                                        format_rfc3339(slot.slot_start));
        EnergySlot e;
        e.room_id = slot.room_id;
        e.slot_start = slot.slot_start;
        e.delta_t_c = slot.room_temp_c - slot.supply_temp_c;
        e.room_temp_c = slot.room_temp_c;
        e.energy_kj = cooling_energy_kj(slot.room_temp_c, slot.supply_temp_c, slot.air_volume_m3,
                                        constants);
        e.occupied = it->second;
        e.negative_delta = e.delta_t_c < 0.0;

        const double kwh = kj_to_kwh(e.energy_kj);
        out.report.total_kwh += kwh;
        if (e.negative_delta) ++out.report.negative_delta_slots;
        if (e.occupied) {
            occ_kwh += kwh;
            occ_temp += slot.room_temp_c;
            ++occ_n;
        } else {
            unocc_kwh += kwh;
            unocc_temp += slot.room_temp_c;
            ++unocc_n;
        }
        out.slots.push_back(std::move(e));
    }
    out.report.slot_count = slots.size();

    if (occ_n > 0)
        out.report.occupied =
            ClassStats{occ_n, occ_kwh, occ_kwh / double(occ_n), occ_temp / double(occ_n)};
    if (unocc_n > 0)
        out.report.unoccupied =
            ClassStats{unocc_n, unocc_kwh, unocc_kwh / double(unocc_n), unocc_temp / double(unocc_n)};
    if (occ_n > 0 && unocc_n > 0) {
        if (out.report.unoccupied->mean_kwh != 0.0)
            out.report.percent_gap = (out.report.occupied->mean_kwh - out.report.unoccupied->mean_kwh) /
                                     out.report.unoccupied->mean_kwh * 100.0;
        out.report.temp_gap_c =
            out.report.occupied->mean_room_temp_c - out.report.unoccupied->mean_room_temp_c;
    }
    return out;
}

// Empirical CDF: values sorted ascending, cumulative[i] = (i + 1) / n.
struct Cdf {
    std::vector<double> values;
    std::vector<double> cumulative;
};

inline Cdf make_cdf(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("cdf needs at least one value");
    std::sort(values.begin(), values.end());
    Cdf cdf;
    cdf.cumulative.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        cdf.cumulative[i] = double(i + 1) / double(values.size());
    cdf.values = std::move(values);
    return cdf;
}

// Room-temperature histograms for the two classes on one shared grid, so the
// bars line up when plotted side by side.
struct TemperatureDistribution {
    double origin_c{0};
    double bin_width_c{0};
    std::vector<std::int64_t> occupied_counts;
    std::vector<std::int64_t> unoccupied_counts;

    double bin_lo(std::size_t i) const { return origin_c + double(i) * bin_width_c; }
};

inline TemperatureDistribution temperature_distributions(std::span<const EnergySlot> slots,
                                                         double bin_width_c = 0.1) {
    if (bin_width_c <= 0.0) throw std::invalid_argument("bin width must be positive");
    if (slots.empty()) throw std::invalid_argument("no slots to bin");

    double lo = slots[0].room_temp_c, hi = slots[0].room_temp_c;
    for (const auto& s : slots) {
        lo = std::min(lo, s.room_temp_c);
        hi = std::max(hi, s.room_temp_c);
    }
    TemperatureDistribution dist;
    dist.bin_width_c = bin_width_c;
    dist.origin_c = std::floor(lo / bin_width_c) * bin_width_c;
    const auto bins = std::size_t(std::floor((hi - dist.origin_c) / bin_width_c)) + 1;
    dist.occupied_counts.assign(bins, 0);
    dist.unoccupied_counts.assign(bins, 0);
    for (const auto& s : slots) {
        const double offset = (s.room_temp_c - dist.origin_c) / bin_width_c;
        auto i = offset > 0.0 ? std::size_t(offset) : 0;
        if (i >= bins) i = bins - 1;
        ++(s.occupied ? dist.occupied_counts : dist.unoccupied_counts)[i];
    }
    return dist;
}

}  // namespace roomtone
