#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mbt/bars.hpp"
#include "mbt/column.hpp"
#include "mbt/csv.hpp"
#include "mbt/data_pipeline.hpp"
#include "mbt/errors.hpp"
#include "mbt/indicators.hpp"
#include "mbt/timeutil.hpp"

namespace mbt::features {

/// The twelve indicator families. `obv` feeds wrobv and is available as a raw
/// feature but is not one of the standalone model variants.
enum class Family {
  sma,
  ema,
  macd,
  rsi,
  boll,
  so,
  fib,
  adx,
  obv,
  wrobv,
  cci,
  ichi,
};

inline const std::vector<std::pair<Family, std::string>>& family_registry() {
  static const std::vector<std::pair<Family, std::string>> reg = {
      {Family::sma, "sma"},   {Family::ema, "ema"},     {Family::macd, "macd"},
      {Family::rsi, "rsi"},   {Family::boll, "boll"},   {Family::so, "so"},
      {Family::fib, "fib"},   {Family::adx, "adx"},     {Family::obv, "obv"},
      {Family::wrobv, "wrobv"}, {Family::cci, "cci"},   {Family::ichi, "ichi"},
  };
  return reg;
}

inline std::string to_string(Family f) {
  for (const auto& [fam, name] : family_registry()) {
    if (fam == f) return name;
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  for (const auto& [fam, name] : family_registry()) {
    if (name == s) return fam;
  }
  throw Error(errc::invalid_config, "unknown indicator family '" + s + "'");
}

/// Feature-column names contributed by one family.
inline std::vector<std::string> family_columns(Family f) {
  switch (f) {
    case Family::sma: return {"sma_norm"};
    case Family::ema: return {"ema_norm"};
    case Family::macd: return {"macd_ratio"};
    case Family::rsi: return {"rsi"};
    case Family::boll: return {"bb_pctb"};
    case Family::so: return {"stoch_k", "stoch_d"};
    case Family::fib: return {"fib_r", "fib_level_dist"};
    case Family::adx: return {"adx"};
    case Family::obv: return {"obv"};
    case Family::wrobv: return {"wrobv"};
    case Family::cci: return {"cci"};
    case Family::ichi: return {"ichi_senkou_a", "ichi_senkou_b"};
  }
  return {};
}

inline const std::vector<std::string>& base_feature_names() {
  static const std::vector<std::string> names = {
      "logret_open", "logret_high", "logret_low", "logret_close", "volz"};
  return names;
}

struct FeatureSpec {
  indicators::IndicatorConfig indicator_config;
  int volz_window = 60;
  /// Prediction horizon in minutes; the target at row t is the close log
  /// return from t to t+horizon.
  int horizon = 1;
};

/// Per-bar feature columns plus the prediction target, all aligned to the
/// source BarSeries. Rows with any masked cell are excluded from fitting.
struct FeatureMatrix {
  std::vector<FeatureColumn> columns;
  std::vector<double> target;
  std::vector<char> target_mask;
  std::vector<Timestamp> timestamps;

  std::size_t rows() const noexcept { return timestamps.size(); }

  const FeatureColumn& column(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return c;
    }
    throw Error(errc::invalid_config, "no feature column '" + name + "'");
  }

  bool has_column(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return true;
    }
    return false;
  }

  /// Rows where every listed column and the target are defined.
  std::vector<std::uint32_t> valid_rows(
      const std::vector<std::string>& names) const {
    std::vector<const FeatureColumn*> cols;
    cols.reserve(names.size());
    for (const auto& n : names) cols.push_back(&column(n));
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (target_mask[i]) continue;
      bool ok = true;
      for (const auto* c : cols) {
        if (!c->defined(i)) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back(static_cast<std::uint32_t>(i));
    }
    return out;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.name);
    return out;
  }
};

namespace detail {

inline FeatureColumn log_return_column(const BarSeries& series, PriceField f,
                                       const std::string& name) {
  const auto rs = pipeline::log_returns(series, f);
  FeatureColumn col(name, series.size());
  for (std::size_t i = 0; i < rs.values.size(); ++i) {
    col.set(i + 1, rs.values[i]);  // return over (i, i+1] lands on row i+1
  }
  return col;
}

}  // namespace detail

/// Builds the base price/volume features, the requested indicator families,
/// and the target over the full series. Rolling windows only ever look
/// backward, so computing across the train/test boundary leaks nothing.
inline FeatureMatrix build_feature_matrix(const BarSeries& series,
                                          const std::vector<Family>& families,
                                          const FeatureSpec& spec = {}) {
  if (series.size() < 2) {
    throw Error(errc::series_too_short, "need at least 2 bars");
  }
  spec.indicator_config.validate();
  if (spec.horizon < 1) {
    throw Error(errc::invalid_config, "horizon must be >= 1");
  }
  const auto& cfg = spec.indicator_config;
  const std::size_t n = series.size();

  FeatureMatrix m;
  m.timestamps.reserve(n);
  for (const auto& b : series.bars) m.timestamps.push_back(b.timestamp);

  m.columns.push_back(
      detail::log_return_column(series, PriceField::open, "logret_open"));
  m.columns.push_back(
      detail::log_return_column(series, PriceField::high, "logret_high"));
  m.columns.push_back(
      detail::log_return_column(series, PriceField::low, "logret_low"));
  m.columns.push_back(
      detail::log_return_column(series, PriceField::close, "logret_close"));
  m.columns.push_back(pipeline::volume_zscore(series, spec.volz_window));

  for (Family f : families) {
    switch (f) {
      case Family::sma:
        m.columns.push_back(indicators::sma_norm(series, cfg.sma_window));
        break;
      case Family::ema:
        m.columns.push_back(indicators::ema_norm(series, cfg.ema_window));
        break;
      case Family::macd:
        m.columns.push_back(indicators::macd_ratio(
            series, cfg.macd_fast, cfg.macd_slow, cfg.macd_signal));
        break;
      case Family::rsi:
        m.columns.push_back(indicators::rsi(series, cfg.rsi_window));
        break;
      case Family::boll:
        m.columns.push_back(
            indicators::bollinger_pctb(series, cfg.bb_window, cfg.bb_width));
        break;
      case Family::so: {
        auto so = indicators::stochastic(series, cfg.stoch_k_window,
                                         cfg.stoch_d_window);
        m.columns.push_back(std::move(so.k));
        m.columns.push_back(std::move(so.d));
        break;
      }
      case Family::fib: {
        auto fib = indicators::fib_retracement(series, cfg.fib_window);
        m.columns.push_back(std::move(fib.r));
        m.columns.push_back(std::move(fib.level_dist));
        break;
      }
      case Family::adx:
        m.columns.push_back(indicators::adx(series, cfg.adx_window));
        break;
      case Family::obv:
        m.columns.push_back(indicators::obv(series));
        break;
      case Family::wrobv:
        m.columns.push_back(indicators::wrobv(series, cfg.wrobv_window));
        break;
      case Family::cci:
        m.columns.push_back(indicators::cci(series, cfg.cci_window));
        break;
      case Family::ichi: {
        // only the causal leading spans enter the feature set; the chikou
        // span references bars after its row
        auto ichi = indicators::ichimoku(series, cfg.ichimoku_tenkan,
                                         cfg.ichimoku_kijun,
                                         cfg.ichimoku_senkou_b);
        m.columns.push_back(std::move(ichi.senkou_a));
        m.columns.push_back(std::move(ichi.senkou_b));
        break;
      }
    }
  }

  m.target.assign(n, 0.0);
  m.target_mask.assign(n, 1);
  const auto close = series.prices(PriceField::close);
  const std::size_t h = static_cast<std::size_t>(spec.horizon);
  for (std::size_t t = 0; t + h < n; ++t) {
    m.target[t] = std::log(close[t + h] / close[t]);
    m.target_mask[t] = 0;
  }
  return m;
}

/// CSV export: timestamp, every feature column, then the target; masked
/// cells render empty.
inline void write_csv(const FeatureMatrix& m, std::ostream& out) {
  csv::Writer w(out);
  std::vector<std::string> row;
  row.push_back("timestamp");
  for (const auto& c : m.columns) row.push_back(c.name);
  row.push_back("target");
  w.row(row);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    row.clear();
    row.push_back(timeutil::format_timestamp_ct(m.timestamps[i]));
    for (const auto& c : m.columns) {
      row.push_back(c.defined(i) ? csv::format_double(c.values[i])
                                 : std::string());
    }
    row.push_back(m.target_mask[i] ? std::string()
                                   : csv::format_double(m.target[i]));
    w.row(row);
  }
}

}  // namespace mbt::features
