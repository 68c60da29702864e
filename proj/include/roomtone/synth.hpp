#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "roomtone/data.hpp"
#include "roomtone/rng.hpp"
#include "roomtone/time.hpp"

namespace roomtone {

// Occupancy step function: entry (i, occ) makes every slot from index i
// onward occ until the next entry. Indices count a room's generated slots.
struct ScheduleEntry {
    std::int64_t slot_index{0};
    bool occupied{false};
};

struct SynthRoom {
    std::string room_id;
    double noise_scale{1.0};  // multiplies every sound magnitude for this room
};

// Stand-in for the unreleased testbed dataset. Sound readings come from
// truncated-at-zero normals; the occupied class may mix in a rarer loud
// "burst" component, which mimics speech spikes on top of the room floor and
// gives occupied histograms a tail signature that survives per-room gain
// differences.
struct GeneratorSpec {
    std::uint64_t seed{0};

    double unoccupied_noise_mean{3.0};
    double unoccupied_noise_sigma{1.2};
    double occupied_noise_mean{6.0};
    double occupied_noise_sigma{2.0};
    double occupied_burst_prob{0.0};  // 0 disables the mixture
    double occupied_burst_mean{40.0};
    double occupied_burst_sigma{15.0};

    double occupied_temp_offset_c{0.35};
    double room_temp_base_c{25.0};
    double room_temp_sigma_c{0.15};
    double supply_temp_base_c{15.0};
    double supply_temp_sigma_c{0.4};
    double air_volume_base_m3{18.0};
    double air_volume_sigma_m3{1.0};

    std::vector<ScheduleEntry> schedule;
    std::chrono::sys_days start_date{std::chrono::year{2017} / std::chrono::November / 6};
    OfficeWindow window{};
    std::vector<SynthRoom> rooms{{"P01", 1.0}};
    int samples_per_slot{3000};

    void validate() const {
        if (unoccupied_noise_sigma < 0 || occupied_noise_sigma < 0 || occupied_burst_sigma < 0)
            throw std::invalid_argument("generator sigmas must be >= 0");
        if (occupied_burst_prob < 0 || occupied_burst_prob > 1)
            throw std::invalid_argument("occupied_burst_prob must be in [0, 1]");
        if (samples_per_slot < 1) throw std::invalid_argument("samples_per_slot must be >= 1");
        if (rooms.empty()) throw std::invalid_argument("generator needs at least one room");
        for (const auto& r : rooms)
            if (r.room_id.empty() || r.noise_scale <= 0)
                throw std::invalid_argument("generator rooms need an id and a positive noise_scale");
        for (std::size_t i = 1; i < schedule.size(); ++i)
            if (schedule[i].slot_index <= schedule[i - 1].slot_index)
                throw std::invalid_argument("schedule slot indices must be strictly increasing");
    }
};

struct TruthRecord {
    std::string room_id;
    TimePoint slot_start{};
    bool occupied{false};
};

struct SynthResult {
    std::vector<SlotRecord> slots;
    std::vector<TruthRecord> truth;
    std::vector<std::string> warnings;
};

namespace detail {

inline bool schedule_state(const std::vector<ScheduleEntry>& schedule, std::int64_t slot_index) {
    bool occ = false;  // before the first entry
    for (const auto& e : schedule) {
        if (e.slot_index > slot_index) break;
        occ = e.occupied;
    }
    return occ;
}

}  // namespace detail

// Generates n_days weekdays of office-window slots per room, fully
// deterministic for a given seed. Ground-truth occupancy is returned
// alongside the slot records.
inline SynthResult generate_synthetic(const GeneratorSpec& spec, int n_days) {
    using namespace std::chrono;
    spec.validate();
    if (n_days < 1) throw std::invalid_argument("n_days must be >= 1");

    SynthResult out;
    if (spec.occupied_noise_mean < spec.unoccupied_noise_mean)
        out.warnings.push_back("degenerate spec: occupied noise mean below unoccupied mean");

    const int slots_per_day = spec.window.expected_slots_per_day();
    const auto slot_minutes = duration_cast<minutes>(kSlotLength);

    for (const auto& room : spec.rooms) {
        Rng rng(derive_seed(spec.seed, room.room_id));
        std::int64_t slot_index = 0;
        sys_days day = spec.start_date;
        for (int d = 0; d < n_days; ++day) {
            weekday wd{day};
            if (spec.window.drop_weekends && (wd == Saturday || wd == Sunday)) continue;
            ++d;
            for (int s = 0; s < slots_per_day; ++s, ++slot_index) {
                const TimePoint slot_start =
                    TimePoint(day) + spec.window.start + slot_minutes * s - spec.window.tz.value;
                const bool occupied = detail::schedule_state(spec.schedule, slot_index);

                NoiseHistogram hist;
                hist.room_id = room.room_id;
                hist.slot_start = slot_start;
                double accumulated = 0.0;
                for (int i = 0; i < spec.samples_per_slot; ++i) {
                    double sample;
                    if (occupied) {
                        const bool burst =
                            spec.occupied_burst_prob > 0.0 && rng.uniform() < spec.occupied_burst_prob;
                        sample = burst ? rng.truncated_normal(spec.occupied_burst_mean * room.noise_scale,
                                                              spec.occupied_burst_sigma * room.noise_scale)
                                       : rng.truncated_normal(spec.occupied_noise_mean * room.noise_scale,
                                                              spec.occupied_noise_sigma * room.noise_scale);
                    } else {
                        sample = rng.truncated_normal(spec.unoccupied_noise_mean * room.noise_scale,
                                                      spec.unoccupied_noise_sigma * room.noise_scale);
                    }
                    ++hist.counts[bin_sample(sample) - 1];
                    accumulated += sample;
                }
                hist.total = spec.samples_per_slot;

                SlotRecord rec;
                rec.room_id = room.room_id;
                rec.slot_start = slot_start;
                rec.histogram = std::move(hist);
                rec.room_temp_c = rng.normal(
                    spec.room_temp_base_c + (occupied ? spec.occupied_temp_offset_c : 0.0),
                    spec.room_temp_sigma_c);
                rec.supply_temp_c = rng.normal(spec.supply_temp_base_c, spec.supply_temp_sigma_c);
                rec.air_volume_m3 =
                    std::max(0.0, rng.normal(spec.air_volume_base_m3, spec.air_volume_sigma_m3));
                rec.aux[kAccumulatedNoiseKey] = accumulated;
                out.slots.push_back(std::move(rec));
                out.truth.push_back({room.room_id, slot_start, occupied});
            }
        }
    }
    return out;
}

// Weekday daytime pattern used by the benchmarks: occupied 09:00-12:00 and
// 14:00-17:00 within the default 08:00-19:00 window, repeated every day.
inline std::vector<ScheduleEntry> office_day_schedule(int n_days, int slots_per_day = 132) {
    std::vector<ScheduleEntry> sched;
    const int slots_per_hour = 12;
    for (int d = 0; d < n_days; ++d) {
        const std::int64_t base = std::int64_t(d) * slots_per_day;
        sched.push_back({base, false});                          // 08:00
        sched.push_back({base + 1 * slots_per_hour, true});      // 09:00
        sched.push_back({base + 4 * slots_per_hour, false});     // 12:00
        sched.push_back({base + 6 * slots_per_hour, true});      // 14:00
        sched.push_back({base + 9 * slots_per_hour, false});     // 17:00
    }
    return sched;
}

}  // namespace roomtone
