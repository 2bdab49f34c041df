#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mbt/bars.hpp"
#include "mbt/column.hpp"
#include "mbt/errors.hpp"

namespace mbt::indicators {

/// Windows and spans for all indicator families. Values not fixed by common
/// convention are still exposed here.
struct IndicatorConfig {
  int sma_window = 20;
  int ema_window = 20;
  int macd_fast = 12;
  int macd_slow = 26;
  int macd_signal = 9;
  int rsi_window = 14;
  int bb_window = 20;
  double bb_width = 2.0;
  int stoch_k_window = 14;
  int stoch_d_window = 3;
  int fib_window = 60;
  int adx_window = 14;
  int wrobv_window = 60;
  int cci_window = 20;
  int ichimoku_tenkan = 9;
  int ichimoku_kijun = 26;
  int ichimoku_senkou_b = 52;

  void validate() const {
    const int windows[] = {sma_window,     ema_window,      macd_fast,
                           macd_slow,      macd_signal,     rsi_window,
                           bb_window,      stoch_k_window,  stoch_d_window,
                           fib_window,     adx_window,      wrobv_window,
                           cci_window,     ichimoku_tenkan, ichimoku_kijun,
                           ichimoku_senkou_b};
    for (int w : windows) {
      if (w < 2) throw Error(errc::invalid_window, "all windows must be >= 2");
    }
    if (macd_fast >= macd_slow) {
      throw Error(errc::invalid_config, "macd fast window must be < slow");
    }
    if (!(bb_width > 0.0)) {
      throw Error(errc::invalid_config, "bb width must be > 0");
    }
  }
};

namespace detail {

inline void check_window(int window, std::size_t n) {
  if (window < 2) throw Error(errc::invalid_window, "window must be >= 2");
  if (static_cast<std::size_t>(window) > n) {
    throw Error(errc::window_too_large, "window exceeds series length");
  }
}

/// Trailing-window mean, current bar inclusive. Direct summation keeps the
/// numeric path identical to a naive re-computation.
inline double window_mean(const std::vector<double>& v, std::size_t t, int w) {
  double sum = 0.0;
  for (std::size_t i = t + 1 - w; i <= t; ++i) sum += v[i];
  return sum / w;
}

inline double window_std_pop(const std::vector<double>& v, std::size_t t, int w,
                             double mean) {
  double ss = 0.0;
  for (std::size_t i = t + 1 - w; i <= t; ++i) {
    const double d = v[i] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / w);
}

inline double window_max(const std::vector<double>& v, std::size_t t, int w) {
  double m = v[t + 1 - w];
  for (std::size_t i = t + 2 - w; i <= t; ++i) m = std::max(m, v[i]);
  return m;
}

inline double window_min(const std::vector<double>& v, std::size_t t, int w) {
  double m = v[t + 1 - w];
  for (std::size_t i = t + 2 - w; i <= t; ++i) m = std::min(m, v[i]);
  return m;
}

/// EMA with smoothing 2/(N+1), seeded at the first observation.
inline std::vector<double> ema_series(const std::vector<double>& v, int n) {
  const double alpha = 2.0 / (n + 1.0);
  std::vector<double> out(v.size());
  if (v.empty()) return out;
  out[0] = v[0];
  for (std::size_t t = 1; t < v.size(); ++t) {
    out[t] = alpha * v[t] + (1.0 - alpha) * out[t - 1];
  }
  return out;
}

/// Symmetric relative difference; 0 when both terms vanish.
inline double symmetric_ratio(double a, double b) {
  const double denom = 0.5 * (std::abs(a) + std::abs(b));
  return denom == 0.0 ? 0.0 : (a - b) / denom;
}

}  // namespace detail

/// Close normalized by its simple moving average.
inline FeatureColumn sma_norm(const BarSeries& series, int window) {
  detail::check_window(window, series.size());
  const auto close = series.prices(PriceField::close);
  FeatureColumn col("sma_norm", series.size());
  for (std::size_t t = static_cast<std::size_t>(window) - 1; t < close.size();
       ++t) {
    col.set(t, close[t] / detail::window_mean(close, t, window));
  }
  return col;
}

/// Close normalized by its exponential moving average. The recursion is
/// seeded at the first close, so every row is defined.
inline FeatureColumn ema_norm(const BarSeries& series, int window) {
  if (window < 2) throw Error(errc::invalid_window, "window must be >= 2");
  if (series.empty()) throw Error(errc::empty_input, "no bars");
  const auto close = series.prices(PriceField::close);
  const auto ema = detail::ema_series(close, window);
  FeatureColumn col("ema_norm", series.size());
  for (std::size_t t = 0; t < close.size(); ++t) col.set(t, close[t] / ema[t]);
  return col;
}

/// MACD histogram scaled by the mean magnitude of the MACD and signal lines,
/// keeping the feature bounded regardless of price level. Rows before
/// slow+signal-2 are masked as warm-up.
inline FeatureColumn macd_ratio(const BarSeries& series, int fast = 12,
                                int slow = 26, int signal = 9) {
  if (fast < 2 || slow < 2 || signal < 2) {
    throw Error(errc::invalid_window, "windows must be >= 2");
  }
  if (fast >= slow) throw Error(errc::invalid_config, "fast must be < slow");
  if (series.empty()) throw Error(errc::empty_input, "no bars");
  const auto close = series.prices(PriceField::close);
  const auto ema_fast = detail::ema_series(close, fast);
  const auto ema_slow = detail::ema_series(close, slow);
  std::vector<double> macd(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    macd[t] = ema_fast[t] - ema_slow[t];
  }
  const auto sig = detail::ema_series(macd, signal);
  FeatureColumn col("macd_ratio", series.size());
  const std::size_t warmup = static_cast<std::size_t>(slow) + signal - 2;
  for (std::size_t t = warmup; t < close.size(); ++t) {
    col.set(t, detail::symmetric_ratio(macd[t], sig[t]));
  }
  return col;
}

/// RSI with Wilder smoothing (alpha = 1/window) of gains and losses, seeded
/// with the simple mean of the first window of changes. Degenerate averages
/// resolve to 100 / 0 / 50.
inline FeatureColumn rsi(const BarSeries& series, int window = 14) {
  detail::check_window(window, series.size());
  const auto close = series.prices(PriceField::close);
  const std::size_t n = close.size();
  FeatureColumn col("rsi", n);
  if (n < static_cast<std::size_t>(window) + 1) return col;  // all warm-up

  auto rsi_value = [](double avg_gain, double avg_loss) {
    if (avg_loss == 0.0 && avg_gain == 0.0) return 50.0;
    if (avg_loss == 0.0) return 100.0;
    if (avg_gain == 0.0) return 0.0;
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
  };

  double gain_sum = 0.0;
  double loss_sum = 0.0;
  for (std::size_t t = 1; t <= static_cast<std::size_t>(window); ++t) {
    const double change = close[t] - close[t - 1];
    if (change > 0.0) gain_sum += change;
    if (change < 0.0) loss_sum -= change;
  }
  double avg_gain = gain_sum / window;
  double avg_loss = loss_sum / window;
  col.set(window, rsi_value(avg_gain, avg_loss));
  for (std::size_t t = window + 1; t < n; ++t) {
    const double change = close[t] - close[t - 1];
    const double gain = change > 0.0 ? change : 0.0;
    const double loss = change < 0.0 ? -change : 0.0;
    avg_gain += (gain - avg_gain) / window;
    avg_loss += (loss - avg_loss) / window;
    col.set(t, rsi_value(avg_gain, avg_loss));
  }
  return col;
}

/// Bollinger %B: position of the close within SMA +/- width * population
/// sigma. A zero-sigma window puts the close at the midpoint (0.5).
inline FeatureColumn bollinger_pctb(const BarSeries& series, int window = 20,
                                    double width = 2.0) {
  detail::check_window(window, series.size());
  if (!(width > 0.0)) throw Error(errc::invalid_config, "width must be > 0");
  const auto close = series.prices(PriceField::close);
  FeatureColumn col("bb_pctb", series.size());
  for (std::size_t t = static_cast<std::size_t>(window) - 1; t < close.size();
       ++t) {
    const double mean = detail::window_mean(close, t, window);
    const double sd = detail::window_std_pop(close, t, window, mean);
    if (sd == 0.0) {
      col.set(t, 0.5);
    } else {
      const double lower = mean - width * sd;
      const double upper = mean + width * sd;
      col.set(t, (close[t] - lower) / (upper - lower));
    }
  }
  return col;
}

struct StochasticColumns {
  FeatureColumn k;
  FeatureColumn d;
};

/// Stochastic oscillator: %K over the rolling high/low range, %D its
/// d_window-period simple moving average. A flat range yields %K = 50.
inline StochasticColumns stochastic(const BarSeries& series, int k_window = 14,
                                    int d_window = 3) {
  detail::check_window(k_window, series.size());
  if (d_window < 2) throw Error(errc::invalid_window, "window must be >= 2");
  const auto high = series.prices(PriceField::high);
  const auto low = series.prices(PriceField::low);
  const auto close = series.prices(PriceField::close);
  const std::size_t n = series.size();
  StochasticColumns out{FeatureColumn("stoch_k", n), FeatureColumn("stoch_d", n)};
  for (std::size_t t = static_cast<std::size_t>(k_window) - 1; t < n; ++t) {
    const double hi = detail::window_max(high, t, k_window);
    const double lo = detail::window_min(low, t, k_window);
    out.k.set(t, hi == lo ? 50.0 : 100.0 * (close[t] - lo) / (hi - lo));
  }
  const std::size_t d_start =
      static_cast<std::size_t>(k_window) - 1 + d_window - 1;
  for (std::size_t t = d_start; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t i = t + 1 - d_window; i <= t; ++i) sum += out.k.values[i];
    out.d.set(t, sum / d_window);
  }
  return out;
}

/// The retracement levels the distance column snaps to.
inline const std::array<double, 5>& fib_levels() {
  static const std::array<double, 5> levels = {0.236, 0.382, 0.500, 0.618,
                                               0.764};
  return levels;
}

struct FibColumns {
  FeatureColumn r;           // (H - C) / (H - L) in [0, 1]
  FeatureColumn level_dist;  // distance from r to the nearest standard level
};

inline FibColumns fib_retracement(const BarSeries& series, int window = 60) {
  detail::check_window(window, series.size());
  const auto high = series.prices(PriceField::high);
  const auto low = series.prices(PriceField::low);
  const auto close = series.prices(PriceField::close);
  const std::size_t n = series.size();
  FibColumns out{FeatureColumn("fib_r", n), FeatureColumn("fib_level_dist", n)};
  for (std::size_t t = static_cast<std::size_t>(window) - 1; t < n; ++t) {
    const double hi = detail::window_max(high, t, window);
    const double lo = detail::window_min(low, t, window);
    const double r = hi == lo ? 0.5 : (hi - close[t]) / (hi - lo);
    double dist = 1.0;
    for (double level : fib_levels()) dist = std::min(dist, std::abs(r - level));
    out.r.set(t, r);
    out.level_dist.set(t, dist);
  }
  return out;
}

/// Normalized directional index |DI+ - DI-| / (DI+ + DI-) in [0, 1], built
/// from Wilder-smoothed directional movement and true range (alpha =
/// 1/window, seeded with the simple mean of the first window of values).
inline FeatureColumn adx(const BarSeries& series, int window = 14) {
  if (window < 2) throw Error(errc::invalid_window, "window must be >= 2");
  if (series.size() <= static_cast<std::size_t>(window) + 1) {
    throw Error(errc::series_too_short, "need more than window + 1 bars");
  }
  const auto high = series.prices(PriceField::high);
  const auto low = series.prices(PriceField::low);
  const auto close = series.prices(PriceField::close);
  const std::size_t n = series.size();

  // dm_plus/dm_minus/tr are indexed by bar, defined from t = 1.
  std::vector<double> dm_plus(n, 0.0), dm_minus(n, 0.0), tr(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    const double up = high[t] - high[t - 1];
    const double down = low[t - 1] - low[t];
    if (up > down && up > 0.0) dm_plus[t] = up;
    if (down > up && down > 0.0) dm_minus[t] = down;
    tr[t] = std::max({high[t] - low[t], std::abs(high[t] - close[t - 1]),
                      std::abs(low[t] - close[t - 1])});
  }

  FeatureColumn col("adx", n);
  double s_plus = 0.0, s_minus = 0.0, s_tr = 0.0;
  for (std::size_t t = 1; t <= static_cast<std::size_t>(window); ++t) {
    s_plus += dm_plus[t];
    s_minus += dm_minus[t];
    s_tr += tr[t];
  }
  s_plus /= window;
  s_minus /= window;
  s_tr /= window;

  auto dx = [](double sp, double sm, double atr) {
    if (atr == 0.0) return 0.0;
    const double di_plus = sp / atr;
    const double di_minus = sm / atr;
    const double sum = di_plus + di_minus;
    return sum == 0.0 ? 0.0 : std::abs(di_plus - di_minus) / sum;
  };

  col.set(window, dx(s_plus, s_minus, s_tr));
  for (std::size_t t = window + 1; t < n; ++t) {
    s_plus += (dm_plus[t] - s_plus) / window;
    s_minus += (dm_minus[t] - s_minus) / window;
    s_tr += (tr[t] - s_tr) / window;
    col.set(t, dx(s_plus, s_minus, s_tr));
  }
  return col;
}

/// On-balance volume: cumulative signed volume flow, sgn(0) = 0.
inline FeatureColumn obv(const BarSeries& series) {
  if (series.size() < 2) {
    throw Error(errc::series_too_short, "need at least 2 bars");
  }
  const auto close = series.prices(PriceField::close);
  FeatureColumn col("obv", series.size());
  double running = 0.0;
  col.set(0, 0.0);
  for (std::size_t t = 1; t < series.size(); ++t) {
    const double diff = close[t] - close[t - 1];
    if (diff > 0.0) {
      running += series[t].volume;
    } else if (diff < 0.0) {
      running -= series[t].volume;
    }
    col.set(t, running);
  }
  return col;
}

/// Windowed relative OBV: window sum of OBV over window sum of volume. An
/// all-zero volume window stays masked.
inline FeatureColumn wrobv(const BarSeries& series, int window = 60) {
  detail::check_window(window, series.size());
  const FeatureColumn obv_col = obv(series);
  const auto volume = series.volumes();
  FeatureColumn col("wrobv", series.size());
  for (std::size_t t = static_cast<std::size_t>(window) - 1; t < series.size();
       ++t) {
    double obv_sum = 0.0;
    double vol_sum = 0.0;
    for (std::size_t i = t + 1 - window; i <= t; ++i) {
      obv_sum += obv_col.values[i];
      vol_sum += volume[i];
    }
    if (vol_sum != 0.0) col.set(t, obv_sum / vol_sum);
  }
  return col;
}

/// Commodity channel index over the typical price (H+L+C)/3, with mean
/// absolute deviation around the window mean. MAD = 0 yields 0.
inline FeatureColumn cci(const BarSeries& series, int window = 20) {
  detail::check_window(window, series.size());
  const std::size_t n = series.size();
  std::vector<double> typical(n);
  for (std::size_t t = 0; t < n; ++t) {
    typical[t] =
        (series[t].high + series[t].low + series[t].close) / 3.0;
  }
  FeatureColumn col("cci", n);
  for (std::size_t t = static_cast<std::size_t>(window) - 1; t < n; ++t) {
    const double mean = detail::window_mean(typical, t, window);
    double mad = 0.0;
    for (std::size_t i = t + 1 - window; i <= t; ++i) {
      mad += std::abs(typical[i] - mean);
    }
    mad /= window;
    col.set(t, mad == 0.0 ? 0.0 : (typical[t] - mean) / (0.015 * mad));
  }
  return col;
}

struct IchimokuColumns {
  FeatureColumn tenkan;
  FeatureColumn kijun;
  FeatureColumn senkou_a;  // leading span A, shifted forward by kijun
  FeatureColumn senkou_b;  // leading span B, shifted forward by kijun
  FeatureColumn chikou;    // close shifted backward by kijun; reads the future
};

/// Ichimoku lines. The leading spans plotted at row t are computed from data
/// at and before row t - kijun, so they are causal features; the chikou span
/// is produced for completeness but references bars after t and must not be
/// fed to a model.
inline IchimokuColumns ichimoku(const BarSeries& series, int tenkan_window = 9,
                                int kijun_window = 26, int senkou_b_window = 52) {
  if (tenkan_window < 2 || kijun_window < 2 || senkou_b_window < 2) {
    throw Error(errc::invalid_window, "windows must be >= 2");
  }
  if (series.size() <=
      static_cast<std::size_t>(senkou_b_window) + kijun_window) {
    throw Error(errc::series_too_short,
                "need more than senkou_b + kijun bars");
  }
  const auto high = series.prices(PriceField::high);
  const auto low = series.prices(PriceField::low);
  const std::size_t n = series.size();

  auto midpoint_line = [&](const char* name, int w) {
    FeatureColumn c(name, n);
    for (std::size_t t = static_cast<std::size_t>(w) - 1; t < n; ++t) {
      c.set(t, (detail::window_max(high, t, w) +
                detail::window_min(low, t, w)) /
                   2.0);
    }
    return c;
  };

  IchimokuColumns out{
      midpoint_line("ichi_tenkan", tenkan_window),
      midpoint_line("ichi_kijun", kijun_window),
      FeatureColumn("ichi_senkou_a", n),
      FeatureColumn("ichi_senkou_b", n),
      FeatureColumn("ichi_chikou", n),
  };

  const FeatureColumn mid_b = midpoint_line("ichi_senkou_b_raw", senkou_b_window);
  const std::size_t shift = static_cast<std::size_t>(kijun_window);
  for (std::size_t t = shift; t < n; ++t) {
    const std::size_t src = t - shift;
    if (out.tenkan.defined(src) && out.kijun.defined(src)) {
      out.senkou_a.set(t, (out.tenkan.values[src] + out.kijun.values[src]) / 2.0);
    }
    if (mid_b.defined(src)) out.senkou_b.set(t, mid_b.values[src]);
  }
  for (std::size_t t = 0; t + shift < n; ++t) {
    out.chikou.set(t, series[t + shift].close);
  }
  return out;
}

}  // namespace mbt::indicators
