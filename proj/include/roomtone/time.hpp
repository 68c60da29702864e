#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roomtone {

// All timestamps are UTC internally, millisecond resolution. Slot starts are
// 5-minute aligned but plain sample timestamps need sub-second precision
// (10 Hz sensors).
using TimePoint = std::chrono::sys_time<std::chrono::milliseconds>;

inline constexpr std::chrono::seconds kSlotLength{300};

namespace detail {

inline int parse_int_field(std::string_view s, std::size_t pos, std::size_t len,
                           const char* what) {
    if (pos + len > s.size()) throw std::invalid_argument(std::string("truncated timestamp: ") + what);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc{} || ptr != s.data() + pos + len)
        throw std::invalid_argument(std::string("bad timestamp field: ") + what);
    return v;
}

}  // namespace detail

// Fixed UTC offset used to interpret local office hours (e.g. "+08:00" for
// the Singapore testbed). DST-aware zones are out of scope.
struct TzOffset {
    std::chrono::minutes value{0};

    static TzOffset parse(std::string_view s) {
        if (s.empty() || s == "Z" || s == "UTC" || s == "utc") return {};
        const char sign = s[0];
        if (sign != '+' && sign != '-')
            throw std::invalid_argument("timezone offset must look like +08:00 or -05:30");
        int hh = detail::parse_int_field(s, 1, 2, "offset hours");
        int mm = 0;
        if (s.size() > 3) {
            if (s[3] != ':') throw std::invalid_argument("timezone offset must look like +08:00");
            mm = detail::parse_int_field(s, 4, 2, "offset minutes");
        }
        if (hh > 18 || mm > 59) throw std::invalid_argument("timezone offset out of range");
        int total = hh * 60 + mm;
        return {std::chrono::minutes{sign == '-' ? -total : total}};
    }

    std::string str() const {
        using namespace std::chrono;
        if (value == 0min) return "+00:00";
        auto v = value.count();
        char sign = v < 0 ? '-' : '+';
        v = v < 0 ? -v : v;
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%c%02d:%02d", sign, int(v / 60), int(v % 60));
        return buf;
    }
};

// RFC-3339 timestamp, e.g. 2017-11-06T08:00:00Z or 2017-11-06T08:00:00.500+08:00.
// A space is accepted in place of 'T'. Fractional digits beyond milliseconds
// are truncated.
inline TimePoint parse_rfc3339(std::string_view s) {
    using namespace std::chrono;
    using detail::parse_int_field;

    if (s.size() < 20) throw std::invalid_argument("timestamp too short: '" + std::string(s) + "'");
    int y = parse_int_field(s, 0, 4, "year");
    if (s[4] != '-' || s[7] != '-') throw std::invalid_argument("expected YYYY-MM-DD");
    int mo = parse_int_field(s, 5, 2, "month");
    int d = parse_int_field(s, 8, 2, "day");
    if (s[10] != 'T' && s[10] != 't' && s[10] != ' ')
        throw std::invalid_argument("expected 'T' between date and time");
    int hh = parse_int_field(s, 11, 2, "hour");
    if (s[13] != ':' || s[16] != ':') throw std::invalid_argument("expected HH:MM:SS");
    int mi = parse_int_field(s, 14, 2, "minute");
    int se = parse_int_field(s, 17, 2, "second");

    std::size_t pos = 19;
    int ms = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        int frac = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) throw std::invalid_argument("empty fractional seconds");
        while (digits < 3) { frac *= 10; ++digits; }
        ms = frac;
    }
    if (pos >= s.size()) throw std::invalid_argument("missing UTC offset");
    minutes offset{0};
    if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
        offset = TzOffset::parse(s.substr(pos)).value;
        pos = s.size();
    } else {
        throw std::invalid_argument("bad UTC offset");
    }
    if (pos != s.size()) throw std::invalid_argument("trailing characters in timestamp");

    year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
    if (!ymd.ok()) throw std::invalid_argument("invalid calendar date in timestamp");
    if (hh > 23 || mi > 59 || se > 60) throw std::invalid_argument("invalid time of day");
    if (se == 60) se = 59;  // fold leap seconds

    TimePoint t = sys_days{ymd} + hours{hh} + minutes{mi} + seconds{se} + milliseconds{ms};
    return t - offset;
}

// Canonical form: UTC with trailing 'Z'; milliseconds printed only when nonzero.
inline std::string format_rfc3339(TimePoint t) {
    using namespace std::chrono;
    auto days = floor<std::chrono::days>(t);
    year_month_day ymd{days};
    hh_mm_ss<milliseconds> tod{t - days};
    char buf[40];
    auto ms = tod.subseconds().count();
    if (ms != 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                      int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                      (long long)tod.hours().count(), (long long)tod.minutes().count(),
                      (long long)tod.seconds().count(), (long long)ms);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ",
                      int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                      (long long)tod.hours().count(), (long long)tod.minutes().count(),
                      (long long)tod.seconds().count());
    }
    return buf;
}

inline std::chrono::sys_days local_date(TimePoint t, TzOffset tz = {}) {
    return std::chrono::floor<std::chrono::days>(t + tz.value);
}

inline std::chrono::minutes local_minute_of_day(TimePoint t, TzOffset tz = {}) {
    auto shifted = t + tz.value;
    return std::chrono::floor<std::chrono::minutes>(shifted - std::chrono::floor<std::chrono::days>(shifted));
}

inline bool is_weekend(TimePoint t, TzOffset tz = {}) {
    std::chrono::weekday wd{local_date(t, tz)};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

}  // namespace roomtone
