#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "mbt/errors.hpp"

namespace mbt {

/// Seconds since the Unix epoch, UTC. Bars are minute-resolution but seconds
/// keep parsing/formatting exact.
using Timestamp = std::int64_t;

enum class TimeZone { utc, central, eastern };

inline TimeZone timezone_from_string(const std::string& s) {
  if (s == "CT" || s == "ct" || s == "central") return TimeZone::central;
  if (s == "ET" || s == "et" || s == "eastern") return TimeZone::eastern;
  if (s == "UTC" || s == "utc") return TimeZone::utc;
  throw Error(errc::invalid_config, "unknown timezone '" + s + "'");
}

struct CivilTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

namespace timeutil {

// Days-from-civil / civil-from-days (proleptic Gregorian), valid far beyond
// any market data range.
inline std::int64_t days_from_civil(int y, int m, int d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

/// 0 = Sunday .. 6 = Saturday.
inline int weekday_from_days(std::int64_t z) noexcept {
  return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

inline std::int64_t civil_to_epoch(const CivilTime& c) noexcept {
  return days_from_civil(c.year, c.month, c.day) * 86400 + c.hour * 3600 +
         c.minute * 60 + c.second;
}

inline CivilTime epoch_to_civil(std::int64_t t) noexcept {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  CivilTime c;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem % 3600) / 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

/// Day of month of the n-th (1-based) given weekday (0=Sun) of a month.
inline int nth_weekday_of_month(int year, int month, int weekday, int n) noexcept {
  const int first_wd = weekday_from_days(days_from_civil(year, month, 1));
  const int first_match = 1 + (weekday - first_wd + 7) % 7;
  return first_match + 7 * (n - 1);
}

// US DST rule (2007 onwards): starts second Sunday in March 02:00 local,
// ends first Sunday in November 02:00 local (01:00 standard time).
inline bool us_dst_active_local_standard(std::int64_t local_standard) noexcept {
  const CivilTime c = epoch_to_civil(local_standard);
  const int start_day = nth_weekday_of_month(c.year, 3, 0, 2);
  const int end_day = nth_weekday_of_month(c.year, 11, 0, 1);
  const std::int64_t start = civil_to_epoch({c.year, 3, start_day, 2, 0, 0});
  const std::int64_t end = civil_to_epoch({c.year, 11, end_day, 1, 0, 0});
  return local_standard >= start && local_standard < end;
}

inline int standard_offset_seconds(TimeZone z) noexcept {
  switch (z) {
    case TimeZone::central: return -6 * 3600;
    case TimeZone::eastern: return -5 * 3600;
    case TimeZone::utc: return 0;
  }
  return 0;
}

/// UTC offset (seconds) of `zone` at UTC instant `t`, DST included.
inline int utc_offset_at(Timestamp t, TimeZone zone) noexcept {
  const int std_off = standard_offset_seconds(zone);
  if (zone == TimeZone::utc) return 0;
  const bool dst = us_dst_active_local_standard(t + std_off);
  return std_off + (dst ? 3600 : 0);
}

/// Wall-clock civil time of UTC instant `t` in `zone`.
inline CivilTime to_wall_clock(Timestamp t, TimeZone zone) noexcept {
  return epoch_to_civil(t + utc_offset_at(t, zone));
}

/// UTC instant of a wall-clock reading in `zone`. DST state is decided by the
/// wall clock itself (transitions at 02:00 local); ambiguous fall-back stamps
/// resolve to standard time.
inline Timestamp from_wall_clock(const CivilTime& wall, TimeZone zone) noexcept {
  const std::int64_t naive = civil_to_epoch(wall);
  if (zone == TimeZone::utc) return naive;
  const int start_day = nth_weekday_of_month(wall.year, 3, 0, 2);
  const int end_day = nth_weekday_of_month(wall.year, 11, 0, 1);
  const std::int64_t start = civil_to_epoch({wall.year, 3, start_day, 2, 0, 0});
  const std::int64_t end = civil_to_epoch({wall.year, 11, end_day, 2, 0, 0});
  const bool dst = naive >= start && naive < end;
  return naive - standard_offset_seconds(zone) - (dst ? 3600 : 0);
}

/// Minute of day (0..1439) on the Central Time wall clock.
inline int minutes_of_day_ct(Timestamp t) noexcept {
  const CivilTime c = to_wall_clock(t, TimeZone::central);
  return c.hour * 60 + c.minute;
}

/// Calendar date (days since epoch) on the Central Time wall clock.
inline std::int64_t ct_date(Timestamp t) noexcept {
  const CivilTime c = to_wall_clock(t, TimeZone::central);
  return days_from_civil(c.year, c.month, c.day);
}

namespace detail {

inline bool parse_int(const char*& p, const char* end, int digits, int& out) {
  if (end - p < digits) return false;
  int v = 0;
  for (int i = 0; i < digits; ++i) {
    if (p[i] < '0' || p[i] > '9') return false;
    v = v * 10 + (p[i] - '0');
  }
  p += digits;
  out = v;
  return true;
}

}  // namespace detail

/// Parses ISO-8601 `YYYY-MM-DD[T ]HH:MM[:SS][.frac][Z|±HH[:]MM]`. Stamps
/// without an offset are interpreted as wall clock in `naive_zone`.
inline Timestamp parse_timestamp(const std::string& s, TimeZone naive_zone,
                                 long line = -1) {
  const char* p = s.data();
  const char* end = p + s.size();
  CivilTime c;
  auto fail = [&]() -> Timestamp {
    throw Error(errc::unparseable_row, "bad timestamp '" + s + "'", line);
  };
  if (!detail::parse_int(p, end, 4, c.year)) return fail();
  if (p == end || *p != '-') return fail();
  ++p;
  if (!detail::parse_int(p, end, 2, c.month)) return fail();
  if (p == end || *p != '-') return fail();
  ++p;
  if (!detail::parse_int(p, end, 2, c.day)) return fail();
  if (p == end || (*p != 'T' && *p != ' ')) return fail();
  ++p;
  if (!detail::parse_int(p, end, 2, c.hour)) return fail();
  if (p == end || *p != ':') return fail();
  ++p;
  if (!detail::parse_int(p, end, 2, c.minute)) return fail();
  if (p != end && *p == ':') {
    ++p;
    if (!detail::parse_int(p, end, 2, c.second)) return fail();
  }
  if (p != end && *p == '.') {  // fractional seconds: accept and drop
    ++p;
    while (p != end && *p >= '0' && *p <= '9') ++p;
  }
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31 || c.hour > 23 ||
      c.minute > 59 || c.second > 60) {
    return fail();
  }
  if (p == end) return from_wall_clock(c, naive_zone);
  if (*p == 'Z' && p + 1 == end) return civil_to_epoch(c);
  if (*p != '+' && *p != '-') return fail();
  const int sign = (*p == '-') ? -1 : 1;
  ++p;
  int oh = 0, om = 0;
  if (!detail::parse_int(p, end, 2, oh)) return fail();
  if (p != end && *p == ':') ++p;
  if (p != end && !detail::parse_int(p, end, 2, om)) return fail();
  if (p != end) return fail();
  return civil_to_epoch(c) - sign * (oh * 3600 + om * 60);
}

/// Renders `t` as ISO-8601 with the Central Time offset, e.g.
/// `2024-06-03T09:30:00-05:00`.
inline std::string format_timestamp_ct(Timestamp t) {
  const int off = utc_offset_at(t, TimeZone::central);
  const CivilTime c = epoch_to_civil(t + off);
  const int oh = std::abs(off) / 3600;
  const int om = (std::abs(off) % 3600) / 60;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d%c%02d:%02d",
                c.year, c.month, c.day, c.hour, c.minute, c.second,
                off < 0 ? '-' : '+', oh, om);
  return buf;
}

/// Renders a calendar date (days since epoch) as YYYY-MM-DD.
inline std::string format_date(std::int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

/// Parses YYYY-MM-DD into days since epoch.
inline std::int64_t parse_date(const std::string& s, long line = -1) {
  const char* p = s.data();
  const char* end = p + s.size();
  int y, m, d;
  if (!detail::parse_int(p, end, 4, y) || p == end || *p != '-') {
    throw Error(errc::unparseable_row, "bad date '" + s + "'", line);
  }
  ++p;
  if (!detail::parse_int(p, end, 2, m) || p == end || *p != '-') {
    throw Error(errc::unparseable_row, "bad date '" + s + "'", line);
  }
  ++p;
  if (!detail::parse_int(p, end, 2, d) || p != end || m < 1 || m > 12 || d < 1 ||
      d > 31) {
    throw Error(errc::unparseable_row, "bad date '" + s + "'", line);
  }
  return days_from_civil(y, m, d);
}

}  // namespace timeutil
}  // namespace mbt
