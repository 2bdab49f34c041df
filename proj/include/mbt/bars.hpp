#pragma once

#include <string>
#include <vector>

#include "mbt/errors.hpp"
#include "mbt/timeutil.hpp"

namespace mbt {

enum class PriceField { open, high, low, close };

inline const char* to_string(PriceField f) {
  switch (f) {
    case PriceField::open: return "open";
    case PriceField::high: return "high";
    case PriceField::low: return "low";
    case PriceField::close: return "close";
  }
  return "?";
}

struct MinuteBar {
  Timestamp timestamp = 0;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;

  double price(PriceField f) const noexcept {
    switch (f) {
      case PriceField::open: return open;
      case PriceField::high: return high;
      case PriceField::low: return low;
      case PriceField::close: return close;
    }
    return close;
  }
};

struct BarSeries {
  std::string symbol;
  std::vector<MinuteBar> bars;

  std::size_t size() const noexcept { return bars.size(); }
  bool empty() const noexcept { return bars.empty(); }
  const MinuteBar& operator[](std::size_t i) const noexcept { return bars[i]; }

  std::vector<double> prices(PriceField f) const {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.price(f));
    return out;
  }

  std::vector<double> volumes() const {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.volume);
    return out;
  }
};

/// Per-bar invariants: positive prices, low <= open/close <= high,
/// non-negative volume. `line` feeds CSV diagnostics.
inline void validate_bar(const MinuteBar& b, long line = -1) {
  if (!(b.open > 0.0 && b.high > 0.0 && b.low > 0.0 && b.close > 0.0)) {
    throw Error(errc::non_positive_price, "prices must be > 0", line);
  }
  if (b.low > b.high || b.open < b.low || b.open > b.high || b.close < b.low ||
      b.close > b.high) {
    throw Error(errc::ohlc_invariant_violation,
                "requires low <= open,close <= high", line);
  }
  if (b.volume < 0.0) {
    throw Error(errc::ohlc_invariant_violation, "volume must be >= 0", line);
  }
}

inline void validate_series(const BarSeries& s) {
  if (s.empty()) throw Error(errc::empty_input, "bar series is empty");
  for (std::size_t i = 0; i < s.size(); ++i) {
    validate_bar(s.bars[i]);
    if (i > 0 && s.bars[i].timestamp <= s.bars[i - 1].timestamp) {
      throw Error(errc::non_monotonic_timestamp,
                  "timestamps must be strictly increasing");
    }
  }
}

}  // namespace mbt
