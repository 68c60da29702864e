#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "roomtone/data.hpp"
#include "roomtone/energy.hpp"
#include "roomtone/neural.hpp"
#include "roomtone/occupancy.hpp"
#include "roomtone/pca.hpp"
#include "roomtone/rng.hpp"
#include "roomtone/synth.hpp"
#include "roomtone/time.hpp"
#include "roomtone/version.hpp"

namespace roomtone {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// formatting helpers

// Shortest round-trip representation, so rewriting a file is byte-identical.
inline std::string fmt_double(double v) {
    std::array<char, 64> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("failed to format a double");
    return std::string(buf.data(), p);
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const Json& j) { return hash_hex(fnv1a64(j.dump())); }

struct FileMeta {
    std::string config_hash{"0000000000000000"};
};

inline std::string meta_line(const FileMeta& meta) {
    return std::string("# roomtone ") + kVersion + " config " + meta.config_hash;
}

namespace iodetail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline bool to_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

inline bool to_int64(const std::string& s, std::int64_t& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

inline bool to_bool(const std::string& s, bool& out) {
    if (s == "1" || s == "true") { out = true; return true; }
    if (s == "0" || s == "false") { out = false; return true; }
    return false;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Reads a CSV header line, resolving required column names to indices and
// reporting everything else as extra columns.
struct Header {
    std::map<std::string, std::size_t> index;       // required name -> column
    std::vector<std::pair<std::string, std::size_t>> extra;
    std::size_t width{0};
};

inline Header parse_header(const std::vector<std::string>& fields,
                           std::span<const std::string> required,
                           const std::filesystem::path& path) {
    Header h;
    h.width = fields.size();
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].empty())
            throw std::runtime_error(path.string() + ": empty column name in header");
        if (!seen.emplace(fields[i], i).second)
            throw std::runtime_error(path.string() + ": duplicate column '" + fields[i] + "'");
    }
    for (const auto& name : required) {
        auto it = seen.find(name);
        if (it == seen.end())
            throw std::runtime_error(path.string() + ": missing required column '" + name + "'");
        h.index[name] = it->second;
        seen.erase(it);
    }
    for (const auto& [name, idx] : seen) h.extra.emplace_back(name, idx);
    return h;
}

}  // namespace iodetail

// ---------------------------------------------------------------------------
// slot ingest

struct IngestOptions {
    bool strict{false};  // strict fails on the first bad row, lenient skips it
};

struct IngestResult {
    std::vector<SlotRecord> slots;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;  // lenient mode only, one entry per skipped row
};

namespace iodetail {

inline const std::vector<std::string>& slot_columns() {
    static const std::vector<std::string> cols{
        "room_id", "slot_start", "bin1", "bin2", "bin3", "bin4",
        "bin5",    "bin6",       "bin7", "bin8", "room_temp_c",
        "supply_temp_c", "air_volume_m3"};
    return cols;
}

inline void finish_ingest(IngestResult& result, const std::filesystem::path& path, bool saw_header,
                          std::size_t data_rows) {
    if (!saw_header)
        result.warnings.push_back("empty input: " + path.string());
    else if (data_rows == 0)
        result.warnings.push_back("no data rows in " + path.string());
    std::sort(result.slots.begin(), result.slots.end(), [](const auto& a, const auto& b) {
        return std::tie(a.room_id, a.slot_start) < std::tie(b.room_id, b.slot_start);
    });
}

template <typename Fail>
inline std::optional<SlotRecord> slot_from_fields(const std::vector<std::string>& fields,
                                                  const Header& header, Fail&& fail) {
    if (fields.size() != header.width) {
        fail("expected " + std::to_string(header.width) + " fields, got " +
             std::to_string(fields.size()));
        return std::nullopt;
    }
    SlotRecord rec;
    rec.room_id = fields[header.index.at("room_id")];
    if (rec.room_id.empty()) {
        fail("room_id is empty");
        return std::nullopt;
    }
    try {
        rec.slot_start = parse_rfc3339(fields[header.index.at("slot_start")]);
    } catch (const std::exception& ex) {
        fail(std::string("slot_start: ") + ex.what());
        return std::nullopt;
    }
    NoiseHistogram hist;
    hist.room_id = rec.room_id;
    hist.slot_start = rec.slot_start;
    hist.total = 0;
    for (int b = 0; b < kBinCount; ++b) {
        const auto& cell = fields[header.index.at("bin" + std::to_string(b + 1))];
        std::int64_t v = 0;
        if (!to_int64(cell, v) || v < 0) {
            fail("bin" + std::to_string(b + 1) + " must be a non-negative integer, got '" + cell + "'");
            return std::nullopt;
        }
        hist.counts[std::size_t(b)] = v;
        hist.total += v;
    }
    rec.histogram = std::move(hist);
    const auto num = [&](const char* name, double& out) {
        if (!to_double(fields[header.index.at(name)], out)) {
            fail(std::string(name) + " must be numeric, got '" + fields[header.index.at(name)] + "'");
            return false;
        }
        return true;
    };
    if (!num("room_temp_c", rec.room_temp_c) || !num("supply_temp_c", rec.supply_temp_c) ||
        !num("air_volume_m3", rec.air_volume_m3))
        return std::nullopt;
    for (const auto& [name, idx] : header.extra) {
        if (fields[idx].empty()) continue;
        double v = 0;
        if (!to_double(fields[idx], v)) {
            fail("column '" + name + "' must be numeric, got '" + fields[idx] + "'");
            return std::nullopt;
        }
        rec.aux[name] = v;
    }
    try {
        rec.validate();
    } catch (const std::exception& ex) {
        fail(ex.what());
        return std::nullopt;
    }
    return rec;
}

}  // namespace iodetail

inline IngestResult read_slots_csv(const std::filesystem::path& path, IngestOptions opts = {}) {
    auto in = iodetail::open_input(path);
    IngestResult result;
    std::optional<iodetail::Header> header;
    std::string line;
    std::size_t line_no = 0, data_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = iodetail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        auto fields = iodetail::split_line(line);
        if (!header) {
            header = iodetail::parse_header(fields, iodetail::slot_columns(), path);
            continue;
        }
        ++data_rows;
        bool failed = false;
        const auto fail = [&](const std::string& msg) {
            failed = true;
            if (opts.strict)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
            result.errors.push_back("row " + std::to_string(line_no) + ": " + msg);
        };
        auto rec = iodetail::slot_from_fields(fields, *header, fail);
        if (rec && !failed) result.slots.push_back(std::move(*rec));
    }
    iodetail::finish_ingest(result, path, header.has_value(), data_rows);
    return result;
}

inline IngestResult read_slots_jsonl(const std::filesystem::path& path, IngestOptions opts = {}) {
    auto in = iodetail::open_input(path);
    IngestResult result;
    std::string line;
    std::size_t line_no = 0, data_rows = 0;
    bool saw_any = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = iodetail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        saw_any = true;
        ++data_rows;
        bool failed = false;
        const auto fail = [&](const std::string& msg) {
            failed = true;
            if (opts.strict)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
            result.errors.push_back("row " + std::to_string(line_no) + ": " + msg);
        };
        Json j = Json::parse(trimmed, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            fail("not a JSON object");
            continue;
        }
        // Reuse the CSV row path by laying the object out in column order.
        std::vector<std::string> fields;
        iodetail::Header header;
        header.width = 0;
        bool shape_ok = true;
        for (const auto& name : iodetail::slot_columns()) {
            if (!j.contains(name)) {
                fail("missing required field '" + name + "'");
                shape_ok = false;
                break;
            }
            const auto& v = j.at(name);
            fields.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            header.index[name] = header.width++;
        }
        if (!shape_ok) continue;
        for (const auto& [key, value] : j.items()) {
            if (header.index.count(key)) continue;
            if (value.is_null()) continue;
            if (!value.is_number()) {
                fail("field '" + key + "' is not numeric");
                shape_ok = false;
                break;
            }
            fields.push_back(fmt_double(value.get<double>()));
            header.extra.emplace_back(key, header.width++);
        }
        if (!shape_ok) continue;
        auto rec = iodetail::slot_from_fields(fields, header, fail);
        if (rec && !failed) result.slots.push_back(std::move(*rec));
    }
    iodetail::finish_ingest(result, path, saw_any, data_rows);
    return result;
}

// Dispatches on extension: .csv, or .jsonl / .ndjson.
inline IngestResult read_slots(const std::filesystem::path& path, IngestOptions opts = {}) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return read_slots_csv(path, opts);
    if (ext == ".jsonl" || ext == ".ndjson") return read_slots_jsonl(path, opts);
    throw std::invalid_argument("unsupported input format '" + ext + "' (use .csv or .jsonl)");
}

// ---------------------------------------------------------------------------
// slot writers

namespace iodetail {

inline std::vector<std::string> aux_key_union(std::span<const SlotRecord> slots) {
    std::set<std::string> keys;
    for (const auto& s : slots)
        for (const auto& [k, v] : s.aux) keys.insert(k);
    return {keys.begin(), keys.end()};
}

inline const NoiseHistogram& require_histogram(const SlotRecord& s) {
    if (!s.histogram)
        throw std::invalid_argument("slot " + s.room_id + "@" + format_rfc3339(s.slot_start) +
                                    " has no histogram to write");
    return *s.histogram;
}

}  // namespace iodetail

inline void write_slots_csv(const std::filesystem::path& path, std::span<const SlotRecord> slots,
                            const FileMeta& meta = {}) {
    auto out = iodetail::open_output(path);
    const auto aux_keys = iodetail::aux_key_union(slots);
    out << meta_line(meta) << '\n';
    out << "room_id,slot_start,bin1,bin2,bin3,bin4,bin5,bin6,bin7,bin8,"
           "room_temp_c,supply_temp_c,air_volume_m3";
    for (const auto& k : aux_keys) out << ',' << k;
    out << '\n';
    for (const auto& s : slots) {
        const auto& hist = iodetail::require_histogram(s);
        out << s.room_id << ',' << format_rfc3339(s.slot_start);
        for (auto c : hist.counts) out << ',' << c;
        out << ',' << fmt_double(s.room_temp_c) << ',' << fmt_double(s.supply_temp_c) << ','
            << fmt_double(s.air_volume_m3);
        for (const auto& k : aux_keys) {
            out << ',';
            if (auto it = s.aux.find(k); it != s.aux.end()) out << fmt_double(it->second);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline void write_slots_jsonl(const std::filesystem::path& path, std::span<const SlotRecord> slots,
                              const FileMeta& meta = {}) {
    auto out = iodetail::open_output(path);
    out << meta_line(meta) << '\n';
    for (const auto& s : slots) {
        const auto& hist = iodetail::require_histogram(s);
        Json j;
        j["room_id"] = s.room_id;
        j["slot_start"] = format_rfc3339(s.slot_start);
        for (int b = 0; b < kBinCount; ++b)
            j["bin" + std::to_string(b + 1)] = hist.counts[std::size_t(b)];
        j["room_temp_c"] = s.room_temp_c;
        j["supply_temp_c"] = s.supply_temp_c;
        j["air_volume_m3"] = s.air_volume_m3;
        for (const auto& [k, v] : s.aux) j[k] = v;
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// truth, verdicts, energy

inline void write_truth_csv(const std::filesystem::path& path, std::span<const TruthRecord> truth,
                            const FileMeta& meta = {}) {
    auto out = iodetail::open_output(path);
    out << meta_line(meta) << '\n' << "room_id,slot_start,occupied\n";
    for (const auto& t : truth)
        out << t.room_id << ',' << format_rfc3339(t.slot_start) << ',' << (t.occupied ? 1 : 0)
            << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path) {
    auto in = iodetail::open_input(path);
    static const std::vector<std::string> required{"room_id", "slot_start", "occupied"};
    std::vector<TruthRecord> out;
    std::optional<iodetail::Header> header;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = iodetail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        auto fields = iodetail::split_line(line);
        if (!header) {
            header = iodetail::parse_header(fields, required, path);
            continue;
        }
        const auto fail = [&](const std::string& msg) -> std::runtime_error {
            return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (fields.size() != header->width) throw fail("wrong field count");
        TruthRecord t;
        t.room_id = fields[header->index.at("room_id")];
        t.slot_start = parse_rfc3339(fields[header->index.at("slot_start")]);
        if (!iodetail::to_bool(fields[header->index.at("occupied")], t.occupied))
            throw fail("occupied must be 0/1/true/false");
        out.push_back(std::move(t));
    }
    return out;
}

inline void write_verdicts_csv(const std::filesystem::path& path,
                               std::span<const OccupancyVerdict> verdicts,
                               const FileMeta& meta = {}) {
    auto out = iodetail::open_output(path);
    out << meta_line(meta) << '\n'
        << "room_id,slot_start,method,occupied,probability,cluster_id\n";
    for (const auto& v : verdicts) {
        out << v.room_id << ',' << format_rfc3339(v.slot_start) << ',' << method_name(v.method)
            << ',';
        if (v.occupied) out << (*v.occupied ? 1 : 0);
        out << ',';
        if (v.probability) out << fmt_double(*v.probability);
        out << ',';
        if (v.cluster_id) out << *v.cluster_id;
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::vector<OccupancyVerdict> read_verdicts_csv(const std::filesystem::path& path) {
    auto in = iodetail::open_input(path);
    static const std::vector<std::string> required{"room_id",  "slot_start",  "method",
                                                   "occupied", "probability", "cluster_id"};
    std::vector<OccupancyVerdict> out;
    std::optional<iodetail::Header> header;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = iodetail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        auto fields = iodetail::split_line(line);
        if (!header) {
            header = iodetail::parse_header(fields, required, path);
            continue;
        }
        const auto fail = [&](const std::string& msg) -> std::runtime_error {
            return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (fields.size() != header->width) throw fail("wrong field count");
        OccupancyVerdict v;
        v.room_id = fields[header->index.at("room_id")];
        v.slot_start = parse_rfc3339(fields[header->index.at("slot_start")]);
        v.method = method_from_name(fields[header->index.at("method")]);
        if (const auto& cell = fields[header->index.at("occupied")]; !cell.empty()) {
            bool b = false;
            if (!iodetail::to_bool(cell, b)) throw fail("occupied must be 0/1/true/false or empty");
            v.occupied = b;
        }
        if (const auto& cell = fields[header->index.at("probability")]; !cell.empty()) {
            double p = 0;
            if (!iodetail::to_double(cell, p)) throw fail("probability must be numeric or empty");
            v.probability = p;
        }
        if (const auto& cell = fields[header->index.at("cluster_id")]; !cell.empty()) {
            std::int64_t c = 0;
            if (!iodetail::to_int64(cell, c)) throw fail("cluster_id must be an integer or empty");
            v.cluster_id = int(c);
        }
        out.push_back(std::move(v));
    }
    return out;
}

inline void write_energy_csv(const std::filesystem::path& path, std::span<const EnergySlot> slots,
                             const FileMeta& meta = {}) {
    auto out = iodetail::open_output(path);
    out << meta_line(meta) << '\n'
        << "room_id,slot_start,energy_kj,energy_kwh,delta_t_c,room_temp_c,occupied,negative_delta\n";
    for (const auto& s : slots) {
        out << s.room_id << ',' << format_rfc3339(s.slot_start) << ',' << fmt_double(s.energy_kj)
            << ',' << fmt_double(kj_to_kwh(s.energy_kj)) << ',' << fmt_double(s.delta_t_c) << ','
            << fmt_double(s.room_temp_c) << ',' << (s.occupied ? 1 : 0) << ','
            << (s.negative_delta ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// raw sample series

inline std::vector<RawSampleSeries> read_raw_csv(const std::filesystem::path& path) {
    auto in = iodetail::open_input(path);
    static const std::vector<std::string> required{"room_id", "timestamp", "value"};
    std::optional<iodetail::Header> header;
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> room_order;
    std::map<std::string, std::vector<TimePoint>> stamps;
    std::map<std::string, std::vector<double>> values;

    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = iodetail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        auto fields = iodetail::split_line(line);
        if (!header) {
            header = iodetail::parse_header(fields, required, path);
            continue;
        }
        const auto fail = [&](const std::string& msg) -> std::runtime_error {
            return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (fields.size() != header->width) throw fail("wrong field count");
        const auto& room = fields[header->index.at("room_id")];
        if (room.empty()) throw fail("room_id is empty");
        double v = 0;
        if (!iodetail::to_double(fields[header->index.at("value")], v))
            throw fail("value must be numeric");
        if (!stamps.count(room)) room_order.push_back(room);
        stamps[room].push_back(parse_rfc3339(fields[header->index.at("timestamp")]));
        values[room].push_back(v);
    }

    std::vector<RawSampleSeries> out;
    for (const auto& room : room_order) {
        const auto& ts = stamps[room];
        RawSampleSeries series;
        series.room_id = room;
        series.start_time = ts.front();
        series.values = std::move(values[room]);
        if (ts.size() > 1) {
            const auto period = ts[1] - ts[0];
            if (period <= std::chrono::milliseconds::zero())
                throw std::runtime_error(path.string() + ": timestamps for room '" + room +
                                         "' must be strictly increasing");
            for (std::size_t i = 2; i < ts.size(); ++i)
                if (ts[i] - ts[i - 1] != period)
                    throw std::runtime_error(path.string() + ": non-uniform sample spacing for room '" +
                                             room + "' near " + format_rfc3339(ts[i]));
            series.sample_period = period;
        }
        series.validate();
        out.push_back(std::move(series));
    }
    return out;
}

// Converts a volumetric flow rate in m^3/h into the volume supplied during
// one slot.
inline double volume_from_flow_m3h(double flow_m3_per_hour,
                                   std::chrono::milliseconds slot_length = kSlotLength) {
    if (flow_m3_per_hour < 0) throw std::invalid_argument("flow rate must be non-negative");
    return flow_m3_per_hour * (double(slot_length.count()) / 3'600'000.0);
}

// ---------------------------------------------------------------------------
// JSON serialization

inline void to_json(Json& j, const TzOffset& tz) { j = tz.str(); }
inline void from_json(const Json& j, TzOffset& tz) { tz = TzOffset::parse(j.get<std::string>()); }

inline void to_json(Json& j, const OfficeWindow& w) {
    j = Json{{"start_minute", w.start.count()},
             {"end_minute", w.end.count()},
             {"drop_weekends", w.drop_weekends},
             {"drop_incomplete_days", w.drop_incomplete_days},
             {"tz", w.tz}};
}

inline void from_json(const Json& j, OfficeWindow& w) {
    w.start = std::chrono::minutes(j.value("start_minute", w.start.count()));
    w.end = std::chrono::minutes(j.value("end_minute", w.end.count()));
    w.drop_weekends = j.value("drop_weekends", w.drop_weekends);
    w.drop_incomplete_days = j.value("drop_incomplete_days", w.drop_incomplete_days);
    if (j.contains("tz")) w.tz = j.at("tz").get<TzOffset>();
}

inline void to_json(Json& j, const ScheduleEntry& e) {
    j = Json{{"slot", e.slot_index}, {"occupied", e.occupied}};
}

inline void from_json(const Json& j, ScheduleEntry& e) {
    e.slot_index = j.at("slot").get<std::int64_t>();
    e.occupied = j.at("occupied").get<bool>();
}

inline void to_json(Json& j, const SynthRoom& r) {
    j = Json{{"room_id", r.room_id}, {"noise_scale", r.noise_scale}};
}

inline void from_json(const Json& j, SynthRoom& r) {
    r.room_id = j.at("room_id").get<std::string>();
    r.noise_scale = j.value("noise_scale", 1.0);
}

inline void to_json(Json& j, const GeneratorSpec& s) {
    using namespace std::chrono;
    const year_month_day ymd{s.start_date};
    char date[16];
    std::snprintf(date, sizeof(date), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    j = Json{{"seed", s.seed},
             {"unoccupied_noise_mean", s.unoccupied_noise_mean},
             {"unoccupied_noise_sigma", s.unoccupied_noise_sigma},
             {"occupied_noise_mean", s.occupied_noise_mean},
             {"occupied_noise_sigma", s.occupied_noise_sigma},
             {"occupied_burst_prob", s.occupied_burst_prob},
             {"occupied_burst_mean", s.occupied_burst_mean},
             {"occupied_burst_sigma", s.occupied_burst_sigma},
             {"occupied_temp_offset_c", s.occupied_temp_offset_c},
             {"room_temp_base_c", s.room_temp_base_c},
             {"room_temp_sigma_c", s.room_temp_sigma_c},
             {"supply_temp_base_c", s.supply_temp_base_c},
             {"supply_temp_sigma_c", s.supply_temp_sigma_c},
             {"air_volume_base_m3", s.air_volume_base_m3},
             {"air_volume_sigma_m3", s.air_volume_sigma_m3},
             {"samples_per_slot", s.samples_per_slot},
             {"start_date", date},
             {"schedule", s.schedule},
             {"window", s.window},
             {"rooms", s.rooms}};
}

inline void from_json(const Json& j, GeneratorSpec& s) {
    s.seed = j.value("seed", s.seed);
    s.unoccupied_noise_mean = j.value("unoccupied_noise_mean", s.unoccupied_noise_mean);
    s.unoccupied_noise_sigma = j.value("unoccupied_noise_sigma", s.unoccupied_noise_sigma);
    s.occupied_noise_mean = j.value("occupied_noise_mean", s.occupied_noise_mean);
    s.occupied_noise_sigma = j.value("occupied_noise_sigma", s.occupied_noise_sigma);
    s.occupied_burst_prob = j.value("occupied_burst_prob", s.occupied_burst_prob);
    s.occupied_burst_mean = j.value("occupied_burst_mean", s.occupied_burst_mean);
    s.occupied_burst_sigma = j.value("occupied_burst_sigma", s.occupied_burst_sigma);
    s.occupied_temp_offset_c = j.value("occupied_temp_offset_c", s.occupied_temp_offset_c);
    s.room_temp_base_c = j.value("room_temp_base_c", s.room_temp_base_c);
    s.room_temp_sigma_c = j.value("room_temp_sigma_c", s.room_temp_sigma_c);
    s.supply_temp_base_c = j.value("supply_temp_base_c", s.supply_temp_base_c);
    s.supply_temp_sigma_c = j.value("supply_temp_sigma_c", s.supply_temp_sigma_c);
    s.air_volume_base_m3 = j.value("air_volume_base_m3", s.air_volume_base_m3);
    s.air_volume_sigma_m3 = j.value("air_volume_sigma_m3", s.air_volume_sigma_m3);
    s.samples_per_slot = j.value("samples_per_slot", s.samples_per_slot);
    if (j.contains("start_date")) {
        const auto text = j.at("start_date").get<std::string>();
        // Reuse the timestamp parser by pinning the date to midnight UTC.
        const auto t = parse_rfc3339(text + "T00:00:00Z");
        s.start_date = std::chrono::floor<std::chrono::days>(t);
    }
    if (j.contains("schedule")) s.schedule = j.at("schedule").get<std::vector<ScheduleEntry>>();
    if (j.contains("window")) s.window = j.at("window").get<OfficeWindow>();
    if (j.contains("rooms")) s.rooms = j.at("rooms").get<std::vector<SynthRoom>>();
}

inline void to_json(Json& j, const RoomConfig& c) {
    j = Json{{"room_id", c.room_id}, {"threshold", c.threshold}, {"setpoint_c", c.setpoint_c}};
}

inline void from_json(const Json& j, RoomConfig& c) {
    c.room_id = j.at("room_id").get<std::string>();
    c.threshold = j.at("threshold").get<double>();
    c.setpoint_c = j.value("setpoint_c", c.setpoint_c);
}

inline void to_json(Json& j, const Layer& l) {
    j = Json{{"in", l.in}, {"out", l.out}, {"weights", l.w}, {"biases", l.b}};
}

inline void from_json(const Json& j, Layer& l) {
    l.in = j.at("in").get<std::size_t>();
    l.out = j.at("out").get<std::size_t>();
    l.w = j.at("weights").get<std::vector<double>>();
    l.b = j.at("biases").get<std::vector<double>>();
    if (l.w.size() != l.in * l.out || l.b.size() != l.out)
        throw std::runtime_error("layer shape does not match its weight arrays");
}

namespace iodetail {

inline void check_model_header(const Json& j, const char* expected_type) {
    const int version = j.value("format_version", -1);
    if (version != kModelFormatVersion)
        throw std::runtime_error("unsupported model format_version " + std::to_string(version) +
                                 " (expected " + std::to_string(kModelFormatVersion) + ")");
    const auto type = j.value("model_type", std::string{});
    if (type != expected_type)
        throw std::runtime_error("expected a " + std::string(expected_type) + " model, found '" +
                                 type + "'");
}

}  // namespace iodetail

inline void to_json(Json& j, const AutoencoderModel& m) {
    j = Json{{"model_type", "autoencoder"},
             {"format_version", kModelFormatVersion},
             {"encoder", m.encoder},
             {"decoder", m.decoder},
             {"sparsity_target", m.sparsity_target},
             {"sparsity_weight", m.sparsity_weight}};
}

inline void from_json(const Json& j, AutoencoderModel& m) {
    iodetail::check_model_header(j, "autoencoder");
    m.encoder = j.at("encoder").get<Layer>();
    m.decoder = j.at("decoder").get<Layer>();
    m.sparsity_target = j.value("sparsity_target", m.sparsity_target);
    m.sparsity_weight = j.value("sparsity_weight", m.sparsity_weight);
}

inline void to_json(Json& j, const ClassifierModel& m) {
    j = Json{{"model_type", "classifier"},
             {"format_version", kModelFormatVersion},
             {"autoencoder", m.encoder},
             {"hidden", m.hidden},
             {"output", m.output}};
}

inline void from_json(const Json& j, ClassifierModel& m) {
    iodetail::check_model_header(j, "classifier");
    m.encoder = j.at("autoencoder").get<AutoencoderModel>();
    m.hidden = j.at("hidden").get<Layer>();
    m.output = j.at("output").get<Layer>();
}

inline void to_json(Json& j, const PCAModel& m) {
    j = Json{{"model_type", "pca"},
             {"format_version", kModelFormatVersion},
             {"mean", m.mean},
             {"components", m.components},
             {"explained_variance", m.explained_variance},
             {"total_variance", m.total_variance},
             {"variance_target", m.variance_target}};
}

inline void from_json(const Json& j, PCAModel& m) {
    iodetail::check_model_header(j, "pca");
    m.mean = j.at("mean").get<std::vector<double>>();
    m.components = j.at("components").get<std::vector<std::vector<double>>>();
    m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    m.total_variance = j.at("total_variance").get<double>();
    m.variance_target = j.value("variance_target", m.variance_target);
}

inline void to_json(Json& j, const ClassMetrics& m) {
    j = Json{{"true_positive", m.true_positive}, {"false_positive", m.false_positive},
             {"true_negative", m.true_negative}, {"false_negative", m.false_negative},
             {"accuracy", m.accuracy},           {"precision", m.precision},
             {"recall", m.recall}};
}

inline void to_json(Json& j, const EvaluationReport& r) {
    Json methods = Json::object();
    for (const auto& [method, metrics] : r.per_method) methods[method_name(method)] = metrics;
    j = Json{{"slot_count", r.slot_count}, {"methods", methods}};
}

inline void to_json(Json& j, const EnergyConstants& c) {
    j = Json{{"air_density_kg_m3", c.air_density_kg_m3},
             {"air_heat_capacity_kj_kg_k", c.air_heat_capacity_kj_kg_k}};
}

inline void to_json(Json& j, const ClassStats& s) {
    j = Json{{"slot_count", s.slot_count},
             {"total_kwh", s.total_kwh},
             {"mean_kwh", s.mean_kwh},
             {"mean_room_temp_c", s.mean_room_temp_c}};
}

inline void to_json(Json& j, const EnergyReport& r) {
    j = Json{{"slot_count", r.slot_count},
             {"total_kwh", r.total_kwh},
             {"negative_delta_slots", r.negative_delta_slots},
             {"constants", r.constants}};
    if (r.occupied) j["occupied"] = *r.occupied;
    if (r.unoccupied) j["unoccupied"] = *r.unoccupied;
    if (r.percent_gap) j["percent_gap"] = *r.percent_gap;
    if (r.temp_gap_c) j["temp_gap_c"] = *r.temp_gap_c;
}

// ---------------------------------------------------------------------------
// JSON files

inline Json load_json_file(const std::filesystem::path& path) {
    auto in = iodetail::open_input(path);
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& ex) {
        throw std::runtime_error(path.string() + ": " + ex.what());
    }
    return j;
}

inline void save_json_file(const std::filesystem::path& path, const Json& j) {
    auto out = iodetail::open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

template <typename Model>
inline void save_model(const std::filesystem::path& path, const Model& model,
                       const FileMeta& meta = {}) {
    Json j = model;
    j["artifact_version"] = kVersion;
    j["config_hash"] = meta.config_hash;
    save_json_file(path, j);
}

template <typename Model>
inline Model load_model(const std::filesystem::path& path) {
    return load_json_file(path).get<Model>();
}

// ---------------------------------------------------------------------------
// run lock

// Guards an output directory against concurrent runs. The lock file is
// created exclusively and removed when the guard goes out of scope.
class LockFile {
  public:
    explicit LockFile(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(path_.parent_path(), ec);
        }
        std::FILE* f = std::fopen(path_.string().c_str(), "wx");
        if (!f)
            throw std::runtime_error("another run appears to hold " + path_.string() +
                                     " (delete it if that run is gone)");
        std::fputs("roomtone lock\n", f);
        std::fclose(f);
        owned_ = true;
    }

    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;
    LockFile(LockFile&& other) noexcept : path_(std::move(other.path_)), owned_(other.owned_) {
        other.owned_ = false;
    }
    LockFile& operator=(LockFile&&) = delete;

    ~LockFile() {
        if (owned_) {
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }

    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    bool owned_{false};
};

}  // namespace roomtone
