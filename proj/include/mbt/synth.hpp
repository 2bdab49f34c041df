#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "mbt/bars.hpp"
#include "mbt/csv.hpp"
#include "mbt/data_pipeline.hpp"
#include "mbt/errors.hpp"
#include "mbt/rng.hpp"
#include "mbt/timeutil.hpp"

namespace mbt::synth {

/// Geometric-random-walk minute bars: closes follow
/// C_t = C_{t-1} * exp(drift + vol * Z_t), opens continue from the previous
/// close, highs/lows pad the open-close bracket, and volume is lognormal
/// around a base level. Weekends are skipped; full determinism from `seed`.
struct SynthParams {
  int days = 5;
  std::string start_date = "2024-06-03";  // a Monday
  int day_start_minute = 9 * 60;          // 09:00 CT
  int day_end_minute = 16 * 60 - 1;       // 15:59 CT
  double start_price = 100.0;
  double drift = 0.0;          // per-minute log drift
  double vol = 0.0005;         // per-minute log-return standard deviation
  double wick_scale = 0.5;     // high/low padding relative to vol
  double base_volume = 100000.0;
  double volume_vol = 0.3;     // lognormal sigma of the volume process
  std::uint64_t seed = 42;
  std::string symbol = "SYNTH";

  void validate() const {
    if (days < 1) throw Error(errc::invalid_config, "days must be >= 1");
    if (!(start_price > 0.0)) {
      throw Error(errc::invalid_config, "start_price must be > 0");
    }
    if (!(vol >= 0.0)) throw Error(errc::invalid_config, "vol must be >= 0");
    if (day_start_minute < 0 || day_end_minute > 1439 ||
        day_start_minute > day_end_minute) {
      throw Error(errc::invalid_config, "bad intraday minute window");
    }
  }
};

inline BarSeries generate_bars(const SynthParams& params) {
  params.validate();
  Rng rng(params.seed);
  BarSeries series;
  series.symbol = params.symbol;

  std::int64_t date = timeutil::parse_date(params.start_date);
  double close = params.start_price;
  int generated_days = 0;
  while (generated_days < params.days) {
    const int weekday = timeutil::weekday_from_days(date);
    if (weekday == 0 || weekday == 6) {  // Sunday / Saturday
      ++date;
      continue;
    }
    for (int minute = params.day_start_minute; minute <= params.day_end_minute;
         ++minute) {
      int y, mo, d;
      timeutil::civil_from_days(date, y, mo, d);
      const CivilTime wall{y, mo, d, minute / 60, minute % 60, 0};
      MinuteBar bar;
      bar.timestamp = timeutil::from_wall_clock(wall, TimeZone::central);
      bar.open = close;
      close = close * std::exp(params.drift + params.vol * rng.normal());
      bar.close = close;
      const double pad = params.wick_scale * params.vol;
      const double hi_pad = std::abs(rng.normal()) * pad;
      const double lo_pad = std::abs(rng.normal()) * pad;
      bar.high = std::max(bar.open, bar.close) * std::exp(hi_pad);
      bar.low = std::min(bar.open, bar.close) * std::exp(-lo_pad);
      bar.volume = std::max(
          1.0, std::round(params.base_volume *
                          std::exp(params.volume_vol * rng.normal())));
      series.bars.push_back(bar);
    }
    ++generated_days;
    ++date;
  }
  return series;
}

/// Matching daily Treasury-yield curve: a gentle random walk around
/// `base_yield_percent`, one entry per weekday covering the bar range.
inline pipeline::RiskFreeCurve generate_rates(const SynthParams& params,
                                              double base_yield_percent = 4.25,
                                              double step_percent = 0.02) {
  params.validate();
  Rng rng(params.seed ^ 0x5261746573ULL);  // independent of the bar stream
  pipeline::RiskFreeCurve curve;
  std::int64_t date = timeutil::parse_date(params.start_date);
  double y = base_yield_percent;
  int generated_days = 0;
  while (generated_days < params.days) {
    const int weekday = timeutil::weekday_from_days(date);
    if (weekday == 0 || weekday == 6) {
      ++date;
      continue;
    }
    curve.entries.push_back({date, y / 100.0});
    y = std::max(0.01, y + step_percent * rng.normal());
    ++generated_days;
    ++date;
  }
  return curve;
}

inline void write_bars_csv(const BarSeries& series, std::ostream& out) {
  csv::Writer w(out);
  w.row({"timestamp", "open", "high", "low", "close", "volume"});
  for (const auto& b : series.bars) {
    w.row({timeutil::format_timestamp_ct(b.timestamp),
           csv::format_double(b.open), csv::format_double(b.high),
           csv::format_double(b.low), csv::format_double(b.close),
           csv::format_double(b.volume)});
  }
}

inline void write_rates_csv(const pipeline::RiskFreeCurve& curve,
                            std::ostream& out) {
  csv::Writer w(out);
  w.row({"date", "yield"});
  for (const auto& e : curve.entries) {
    w.row({timeutil::format_date(e.date),
           csv::format_double(e.yield_decimal * 100.0)});
  }
}

}  // namespace mbt::synth
