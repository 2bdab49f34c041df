#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mbt/bars.hpp"
#include "mbt/errors.hpp"
#include "mbt/signals.hpp"

namespace mbt::sim {

struct SimulationConfig {
  double initial_cash = 10000.0;
  /// Per-minute cap on traded value as a fraction of portfolio value.
  double turnover_cap = 0.004;
  /// Trade size as a fraction of the cap (1.0 = trade at the cap).
  double trade_fraction = 1.0;
  bool allow_fractional_shares = true;

  void validate() const {
    if (!(initial_cash > 0.0)) {
      throw Error(errc::invalid_config, "initial_cash must be > 0");
    }
    if (!(turnover_cap > 0.0 && turnover_cap <= 1.0)) {
      throw Error(errc::invalid_config, "turnover_cap must be in (0,1]");
    }
    if (!(trade_fraction > 0.0 && trade_fraction <= 1.0)) {
      throw Error(errc::invalid_config, "trade_fraction must be in (0,1]");
    }
  }
};

/// Long-only portfolio: cash and share count never go negative.
struct PortfolioState {
  double cash = 0.0;
  double shares = 0.0;
  std::size_t minute = 0;
};

struct TradeRecord {
  Timestamp timestamp = 0;
  signals::Signal side = signals::Signal::hold;
  double shares = 0.0;
  double price = 0.0;
  double value_traded = 0.0;
  double portfolio_value_before = 0.0;
  /// A signal that could not execute (selling with no inventory, buying with
  /// no cash); logged with zero size.
  bool skipped = false;
};

struct EquityCurve {
  std::vector<Timestamp> timestamps;
  std::vector<double> value;      // cash + shares * close, per minute
  std::vector<double> ret;        // simple returns; ret[0] = 0
  std::vector<double> risk_free;  // per-minute rate, aligned; 0 when unknown
};

struct SimulationResult {
  EquityCurve curve;
  std::vector<TradeRecord> trades;
  PortfolioState final_state;
};

/// Minute-by-minute simulation. Signals execute at the same bar's close:
/// buys spend min(cash, fraction * cap * V), sells liquidate that much stock.
/// No costs or slippage are modeled.
inline SimulationResult simulate(const std::vector<MinuteBar>& bars,
                                 const std::vector<signals::Signal>& sigs,
                                 const SimulationConfig& config = {},
                                 const std::vector<double>& rf_per_minute = {}) {
  config.validate();
  if (sigs.size() != bars.size()) {
    throw Error(errc::misaligned_signals,
                "signals must align one-to-one with bars");
  }
  if (!rf_per_minute.empty() && rf_per_minute.size() != bars.size()) {
    throw Error(errc::misaligned_signals, "risk-free series length mismatch");
  }

  SimulationResult result;
  result.curve.timestamps.reserve(bars.size());
  result.curve.value.reserve(bars.size());
  result.curve.ret.reserve(bars.size());
  result.curve.risk_free.reserve(bars.size());

  double cash = config.initial_cash;
  double shares = 0.0;
  for (std::size_t t = 0; t < bars.size(); ++t) {
    const double price = bars[t].close;
    if (!(price > 0.0)) {
      throw Error(errc::non_positive_price, "close must be > 0");
    }
    const double value_before = cash + shares * price;
    const double cap_value =
        config.trade_fraction * config.turnover_cap * value_before;

    const signals::Signal s = sigs[t];
    if (s != signals::Signal::hold) {
      TradeRecord trade;
      trade.timestamp = bars[t].timestamp;
      trade.side = s;
      trade.price = price;
      trade.portfolio_value_before = value_before;
      if (s == signals::Signal::buy) {
        double value = std::min(cash, cap_value);
        double qty = value / price;
        if (!config.allow_fractional_shares) {
          qty = std::floor(qty);
          value = qty * price;
        }
        if (qty > 0.0 && value > 0.0) {
          cash -= value;
          shares += qty;
          trade.shares = qty;
          trade.value_traded = value;
        } else {
          trade.skipped = true;
        }
      } else {  // sell
        double value = std::min(shares * price, cap_value);
        double qty = value / price;
        if (!config.allow_fractional_shares) qty = std::floor(qty);
        if (qty > shares) qty = shares;
        value = qty * price;
        if (qty > 0.0) {
          shares -= qty;
          cash += value;
          trade.shares = qty;
          trade.value_traded = value;
        } else {
          trade.skipped = true;
        }
      }
      result.trades.push_back(trade);
    }

    const double value_after = cash + shares * price;
    result.curve.timestamps.push_back(bars[t].timestamp);
    result.curve.value.push_back(value_after);
    result.curve.ret.push_back(
        t == 0 ? 0.0 : value_after / result.curve.value[t - 1] - 1.0);
    result.curve.risk_free.push_back(
        rf_per_minute.empty() ? 0.0 : rf_per_minute[t]);
  }

  result.final_state.cash = cash;
  result.final_state.shares = shares;
  result.final_state.minute = bars.empty() ? 0 : bars.size() - 1;
  return result;
}

/// Benchmark: full investment at the first close, no further trading. The
/// turnover cap deliberately does not apply; a capped benchmark would spend
/// hundreds of minutes building its position and stop being buy-and-hold.
inline EquityCurve buy_and_hold_baseline(
    const std::vector<MinuteBar>& bars, const SimulationConfig& config = {},
    const std::vector<double>& rf_per_minute = {}) {
  config.validate();
  if (bars.empty()) throw Error(errc::empty_input, "no bars");
  if (!rf_per_minute.empty() && rf_per_minute.size() != bars.size()) {
    throw Error(errc::misaligned_signals, "risk-free series length mismatch");
  }
  const double first_close = bars[0].close;
  if (!(first_close > 0.0)) {
    throw Error(errc::non_positive_price, "close must be > 0");
  }
  const double shares = config.initial_cash / first_close;
  EquityCurve curve;
  curve.timestamps.reserve(bars.size());
  curve.value.reserve(bars.size());
  curve.ret.reserve(bars.size());
  curve.risk_free.reserve(bars.size());
  for (std::size_t t = 0; t < bars.size(); ++t) {
    if (!(bars[t].close > 0.0)) {
      throw Error(errc::non_positive_price, "close must be > 0");
    }
    const double v = shares * bars[t].close;
    curve.timestamps.push_back(bars[t].timestamp);
    curve.value.push_back(v);
    curve.ret.push_back(t == 0 ? 0.0 : v / curve.value[t - 1] - 1.0);
    curve.risk_free.push_back(rf_per_minute.empty() ? 0.0 : rf_per_minute[t]);
  }
  return curve;
}

}  // namespace mbt::sim
