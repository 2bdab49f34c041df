#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "mbt/bars.hpp"
#include "mbt/column.hpp"
#include "mbt/csv.hpp"
#include "mbt/errors.hpp"
#include "mbt/timeutil.hpp"

namespace mbt::pipeline {

/// Column naming and timezone interpretation for bar CSVs. Timestamps that
/// carry an explicit UTC offset ignore `naive_zone`.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";
  TimeZone naive_zone = TimeZone::central;
};

inline BarSeries load_bars(std::istream& in, const CsvSchema& schema = {},
                           const std::string& symbol = "") {
  const csv::Table t = csv::parse(in);
  const std::size_t c_ts = t.column(schema.timestamp);
  const std::size_t c_o = t.column(schema.open);
  const std::size_t c_h = t.column(schema.high);
  const std::size_t c_l = t.column(schema.low);
  const std::size_t c_c = t.column(schema.close);
  const std::size_t c_v = t.column(schema.volume);
  if (t.rows.empty()) throw Error(errc::empty_input, "no data rows");

  BarSeries series;
  series.symbol = symbol;
  series.bars.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const long line = t.line_numbers[i];
    const std::size_t needed =
        std::max({c_ts, c_o, c_h, c_l, c_c, c_v}) + 1;
    if (row.size() < needed) {
      throw Error(errc::unparseable_row, "too few fields", line);
    }
    MinuteBar bar;
    bar.timestamp =
        timeutil::parse_timestamp(row[c_ts], schema.naive_zone, line);
    bar.open = csv::parse_double(row[c_o], line);
    bar.high = csv::parse_double(row[c_h], line);
    bar.low = csv::parse_double(row[c_l], line);
    bar.close = csv::parse_double(row[c_c], line);
    bar.volume = csv::parse_double(row[c_v], line);
    validate_bar(bar, line);
    if (!series.bars.empty() && bar.timestamp <= series.bars.back().timestamp) {
      throw Error(errc::non_monotonic_timestamp,
                  "timestamp does not increase", line);
    }
    series.bars.push_back(bar);
  }
  return series;
}

inline BarSeries load_bars_file(const std::string& path,
                                const CsvSchema& schema = {},
                                const std::string& symbol = "") {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  return load_bars(in, schema, symbol);
}

/// Per-minute log returns of one price field; values[i] is the return over
/// (bar i, bar i+1] so the series is one shorter than the bars.
struct ReturnSeries {
  PriceField field = PriceField::close;
  std::vector<double> values;  // length = bars - 1; values[i] aligns to bar i+1
};

inline ReturnSeries log_returns(const BarSeries& series, PriceField field) {
  if (series.size() < 2) {
    throw Error(errc::series_too_short, "need at least 2 bars");
  }
  ReturnSeries out;
  out.field = field;
  out.values.reserve(series.size() - 1);
  double prev = series[0].price(field);
  if (!(prev > 0.0)) throw Error(errc::non_positive_price, "price must be > 0");
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double p = series[i].price(field);
    if (!(p > 0.0)) throw Error(errc::non_positive_price, "price must be > 0");
    out.values.push_back(std::log(p / prev));
    prev = p;
  }
  return out;
}

/// Rolling Z-score of volume over a trailing window (current bar inclusive),
/// population standard deviation. The first window-1 rows are masked; a
/// zero-dispersion window yields 0 (constant volume is no anomaly).
inline FeatureColumn volume_zscore(const BarSeries& series, int window = 60) {
  if (window < 2) throw Error(errc::invalid_window, "window must be >= 2");
  if (static_cast<std::size_t>(window) > series.size()) {
    throw Error(errc::window_too_large, "window exceeds series length");
  }
  FeatureColumn col("volz", series.size());
  for (std::size_t t = static_cast<std::size_t>(window) - 1; t < series.size();
       ++t) {
    double sum = 0.0;
    for (std::size_t i = t + 1 - window; i <= t; ++i) sum += series[i].volume;
    const double mean = sum / window;
    double ss = 0.0;
    for (std::size_t i = t + 1 - window; i <= t; ++i) {
      const double d = series[i].volume - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / window);
    col.set(t, sd == 0.0 ? 0.0 : (series[t].volume - mean) / sd);
  }
  return col;
}

enum class YieldConvention {
  annual_252,  // quoted annual yield divided by 252 trading days
  as_given,    // quoted yield plugged in as the daily rate verbatim
};

inline YieldConvention yield_convention_from_string(const std::string& s) {
  if (s == "annual_252" || s == "annual/252") return YieldConvention::annual_252;
  if (s == "as_given") return YieldConvention::as_given;
  throw Error(errc::invalid_config, "unknown yield_convention '" + s + "'");
}

/// Daily Treasury-yield curve; `yield_decimal` stores the quote as a decimal
/// fraction (CSV carries percent, e.g. 4.25 -> 0.0425).
struct RiskFreeCurve {
  struct Entry {
    std::int64_t date;  // days since epoch
    double yield_decimal;
  };
  std::vector<Entry> entries;  // sorted by date, unique

  bool empty() const noexcept { return entries.empty(); }
};

inline RiskFreeCurve load_rates(std::istream& in) {
  const csv::Table t = csv::parse(in);
  const std::size_t c_date = t.column("date");
  const std::size_t c_yield = t.column("yield");
  if (t.rows.empty()) throw Error(errc::empty_input, "no data rows");
  RiskFreeCurve curve;
  curve.entries.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const long line = t.line_numbers[i];
    if (row.size() <= std::max(c_date, c_yield)) {
      throw Error(errc::unparseable_row, "too few fields", line);
    }
    RiskFreeCurve::Entry e;
    e.date = timeutil::parse_date(row[c_date], line);
    e.yield_decimal = csv::parse_double(row[c_yield], line) / 100.0;
    if (!std::isfinite(e.yield_decimal)) {
      throw Error(errc::unparseable_row, "yield not finite", line);
    }
    if (!curve.entries.empty() && e.date <= curve.entries.back().date) {
      throw Error(errc::non_monotonic_timestamp, "dates must increase", line);
    }
    curve.entries.push_back(e);
  }
  return curve;
}

inline RiskFreeCurve load_rates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  return load_rates(in);
}

/// Daily rate for the trading day of `t` (Central Time calendar date),
/// carry-back to the most recent quote at or before that day.
inline double daily_rate(const RiskFreeCurve& curve, Timestamp t,
                         YieldConvention conv) {
  const std::int64_t d = timeutil::ct_date(t);
  const RiskFreeCurve::Entry* best = nullptr;
  for (const auto& e : curve.entries) {
    if (e.date <= d) {
      best = &e;
    } else {
      break;
    }
  }
  if (!best) throw Error(errc::no_prior_yield, "no yield on or before date");
  return conv == YieldConvention::annual_252 ? best->yield_decimal / 252.0
                                             : best->yield_decimal;
}

/// Per-minute risk-free rate: (1 + r_daily)^(1/1440) - 1.
inline double per_minute_risk_free(
    const RiskFreeCurve& curve, Timestamp t,
    YieldConvention conv = YieldConvention::annual_252) {
  const double rd = daily_rate(curve, t, conv);
  return std::pow(1.0 + rd, 1.0 / 1440.0) - 1.0;
}

/// Trading-hours filter bounds on the Central Time wall clock, inclusive on
/// both ends.
struct TradingHours {
  int start_minute = 10 * 60;      // 10:00 CT
  int end_minute = 15 * 60 + 30;   // 15:30 CT
};

inline BarSeries filter_trading_hours(const BarSeries& series,
                                      const TradingHours& hours = {}) {
  BarSeries out;
  out.symbol = series.symbol;
  for (const auto& bar : series.bars) {
    const int m = timeutil::minutes_of_day_ct(bar.timestamp);
    if (m >= hours.start_minute && m <= hours.end_minute) {
      out.bars.push_back(bar);
    }
  }
  return out;
}

/// Contiguous chronological train/test split: train = [0, floor(ratio*n)),
/// test = [floor(ratio*n), n). No shuffling.
struct DatasetSplit {
  std::size_t train_begin = 0;
  std::size_t train_end = 0;  // == test_begin
  std::size_t test_end = 0;

  std::size_t train_size() const noexcept { return train_end - train_begin; }
  std::size_t test_size() const noexcept { return test_end - train_end; }
};

inline DatasetSplit chronological_split(std::size_t n, double ratio = 0.8) {
  if (n < 2) throw Error(errc::series_too_short, "need at least 2 rows");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(errc::invalid_config, "split ratio must be in (0,1)");
  }
  DatasetSplit s;
  s.train_end = static_cast<std::size_t>(ratio * static_cast<double>(n));
  s.train_end = std::min(std::max<std::size_t>(s.train_end, 1), n - 1);
  s.test_end = n;
  return s;
}

}  // namespace mbt::pipeline
