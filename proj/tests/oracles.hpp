#pragma once

// Independent naive re-computations used as test oracles. Everything here is
// written directly from the defining formulas with plain O(n * window) loops
// and deliberately shares no code with the library implementations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "mbt/bars.hpp"

namespace oracle {

using MaybeSeries = std::vector<std::optional<double>>;

// ---------------------------------------------------------------------------
// indicator oracles
// ---------------------------------------------------------------------------

inline MaybeSeries sma_norm(const std::vector<double>& close, int n) {
  MaybeSeries out(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (t + 1 < static_cast<std::size_t>(n)) continue;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += close[t - i];
    out[t] = close[t] / (sum / n);
  }
  return out;
}

inline std::vector<double> ema(const std::vector<double>& v, int n) {
  std::vector<double> out(v.size());
  const double alpha = 2.0 / (n + 1.0);
  out[0] = v[0];
  for (std::size_t t = 1; t < v.size(); ++t) {
    out[t] = alpha * v[t] + (1.0 - alpha) * out[t - 1];
  }
  return out;
}

inline MaybeSeries ema_norm(const std::vector<double>& close, int n) {
  const auto e = ema(close, n);
  MaybeSeries out(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) out[t] = close[t] / e[t];
  return out;
}

inline MaybeSeries macd_ratio(const std::vector<double>& close, int fast,
                              int slow, int signal) {
  const auto ef = ema(close, fast);
  const auto es = ema(close, slow);
  std::vector<double> macd(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) macd[t] = ef[t] - es[t];
  const auto sig = ema(macd, signal);
  MaybeSeries out(close.size());
  for (std::size_t t = static_cast<std::size_t>(slow) + signal - 2;
       t < close.size(); ++t) {
    const double denom = 0.5 * (std::abs(macd[t]) + std::abs(sig[t]));
    out[t] = denom == 0.0 ? 0.0 : (macd[t] - sig[t]) / denom;
  }
  return out;
}

inline MaybeSeries rsi(const std::vector<double>& close, int w) {
  MaybeSeries out(close.size());
  if (close.size() < static_cast<std::size_t>(w) + 1) return out;
  auto value = [](double g, double l) {
    if (g == 0.0 && l == 0.0) return 50.0;
    if (l == 0.0) return 100.0;
    if (g == 0.0) return 0.0;
    return 100.0 - 100.0 / (1.0 + g / l);
  };
  double g = 0.0, l = 0.0;
  for (int t = 1; t <= w; ++t) {
    const double d = close[t] - close[t - 1];
    if (d > 0.0) g += d;
    if (d < 0.0) l -= d;
  }
  g /= w;
  l /= w;
  out[w] = value(g, l);
  for (std::size_t t = w + 1; t < close.size(); ++t) {
    const double d = close[t] - close[t - 1];
    g += ((d > 0.0 ? d : 0.0) - g) / w;
    l += ((d < 0.0 ? -d : 0.0) - l) / w;
    out[t] = value(g, l);
  }
  return out;
}

inline MaybeSeries bollinger_pctb(const std::vector<double>& close, int w,
                                  double width) {
  MaybeSeries out(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (t + 1 < static_cast<std::size_t>(w)) continue;
    double sum = 0.0;
    for (int i = 0; i < w; ++i) sum += close[t - i];
    const double mean = sum / w;
    double ss = 0.0;
    for (int i = 0; i < w; ++i) {
      ss += (close[t - i] - mean) * (close[t - i] - mean);
    }
    const double sd = std::sqrt(ss / w);
    if (sd == 0.0) {
      out[t] = 0.5;
    } else {
      const double lower = mean - width * sd;
      const double upper = mean + width * sd;
      out[t] = (close[t] - lower) / (upper - lower);
    }
  }
  return out;
}

inline MaybeSeries stoch_k(const std::vector<double>& high,
                           const std::vector<double>& low,
                           const std::vector<double>& close, int w) {
  MaybeSeries out(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (t + 1 < static_cast<std::size_t>(w)) continue;
    double hi = high[t], lo = low[t];
    for (int i = 1; i < w; ++i) {
      hi = std::max(hi, high[t - i]);
      lo = std::min(lo, low[t - i]);
    }
    out[t] = hi == lo ? 50.0 : 100.0 * (close[t] - lo) / (hi - lo);
  }
  return out;
}

inline MaybeSeries stoch_d(const MaybeSeries& k, int d) {
  MaybeSeries out(k.size());
  for (std::size_t t = 0; t < k.size(); ++t) {
    bool ok = t + 1 >= static_cast<std::size_t>(d);
    double sum = 0.0;
    for (int i = 0; ok && i < d; ++i) {
      if (!k[t - i]) {
        ok = false;
      } else {
        sum += *k[t - i];
      }
    }
    if (ok) out[t] = sum / d;
  }
  return out;
}

inline MaybeSeries fib_r(const std::vector<double>& high,
                         const std::vector<double>& low,
                         const std::vector<double>& close, int w) {
  MaybeSeries out(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (t + 1 < static_cast<std::size_t>(w)) continue;
    double hi = high[t], lo = low[t];
    for (int i = 1; i < w; ++i) {
      hi = std::max(hi, high[t - i]);
      lo = std::min(lo, low[t - i]);
    }
    out[t] = hi == lo ? 0.5 : (hi - close[t]) / (hi - lo);
  }
  return out;
}

inline MaybeSeries fib_level_dist(const MaybeSeries& r) {
  const double levels[] = {0.236, 0.382, 0.500, 0.618, 0.764};
  MaybeSeries out(r.size());
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (!r[t]) continue;
    double best = 1.0;
    for (double l : levels) best = std::min(best, std::abs(*r[t] - l));
    out[t] = best;
  }
  return out;
}

/// Step-by-step Wilder recursion for the normalized directional index.
inline MaybeSeries adx(const std::vector<double>& high,
                       const std::vector<double>& low,
                       const std::vector<double>& close, int w) {
  const std::size_t n = close.size();
  MaybeSeries out(n);
  if (n < static_cast<std::size_t>(w) + 2) return out;
  std::vector<double> dmp(n, 0.0), dmm(n, 0.0), tr(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    const double up = high[t] - high[t - 1];
    const double dn = low[t - 1] - low[t];
    if (up > dn && up > 0.0) dmp[t] = up;
    if (dn > up && dn > 0.0) dmm[t] = dn;
    tr[t] = std::max(high[t] - low[t],
                     std::max(std::abs(high[t] - close[t - 1]),
                              std::abs(low[t] - close[t - 1])));
  }
  double sp = 0.0, sm = 0.0, st = 0.0;
  for (int t = 1; t <= w; ++t) {
    sp += dmp[t];
    sm += dmm[t];
    st += tr[t];
  }
  sp /= w;
  sm /= w;
  st /= w;
  auto dx = [](double p, double m, double atr) {
    if (atr == 0.0) return 0.0;
    const double dip = p / atr, dim = m / atr;
    return dip + dim == 0.0 ? 0.0 : std::abs(dip - dim) / (dip + dim);
  };
  out[w] = dx(sp, sm, st);
  for (std::size_t t = w + 1; t < n; ++t) {
    sp += (dmp[t] - sp) / w;
    sm += (dmm[t] - sm) / w;
    st += (tr[t] - st) / w;
    out[t] = dx(sp, sm, st);
  }
  return out;
}

inline std::vector<double> obv(const std::vector<double>& close,
                               const std::vector<double>& volume) {
  std::vector<double> out(close.size(), 0.0);
  for (std::size_t t = 1; t < close.size(); ++t) {
    double sgn = 0.0;
    if (close[t] > close[t - 1]) sgn = 1.0;
    if (close[t] < close[t - 1]) sgn = -1.0;
    out[t] = out[t - 1] + sgn * volume[t];
  }
  return out;
}

inline MaybeSeries wrobv(const std::vector<double>& close,
                         const std::vector<double>& volume, int w) {
  const auto o = obv(close, volume);
  MaybeSeries out(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (t + 1 < static_cast<std::size_t>(w)) continue;
    double os = 0.0, vs = 0.0;
    for (int i = 0; i < w; ++i) {
      os += o[t - i];
      vs += volume[t - i];
    }
    if (vs != 0.0) out[t] = os / vs;
  }
  return out;
}

inline MaybeSeries cci(const std::vector<double>& high,
                       const std::vector<double>& low,
                       const std::vector<double>& close, int w) {
  const std::size_t n = close.size();
  std::vector<double> tp(n);
  for (std::size_t t = 0; t < n; ++t) tp[t] = (high[t] + low[t] + close[t]) / 3.0;
  MaybeSeries out(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (t + 1 < static_cast<std::size_t>(w)) continue;
    double sum = 0.0;
    for (int i = 0; i < w; ++i) sum += tp[t - i];
    const double mean = sum / w;
    double mad = 0.0;
    for (int i = 0; i < w; ++i) mad += std::abs(tp[t - i] - mean);
    mad /= w;
    out[t] = mad == 0.0 ? 0.0 : (tp[t] - mean) / (0.015 * mad);
  }
  return out;
}

struct IchimokuOracle {
  MaybeSeries tenkan, kijun, senkou_a, senkou_b, chikou;
};

inline IchimokuOracle ichimoku(const std::vector<double>& high,
                               const std::vector<double>& low,
                               const std::vector<double>& close, int n_tenkan,
                               int m_kijun, int l_senkou_b) {
  const std::size_t n = close.size();
  auto mid = [&](int w) {
    MaybeSeries out(n);
    for (std::size_t t = 0; t < n; ++t) {
      if (t + 1 < static_cast<std::size_t>(w)) continue;
      double hi = high[t], lo = low[t];
      for (int i = 1; i < w; ++i) {
        hi = std::max(hi, high[t - i]);
        lo = std::min(lo, low[t - i]);
      }
      out[t] = (hi + lo) / 2.0;
    }
    return out;
  };
  IchimokuOracle o;
  o.tenkan = mid(n_tenkan);
  o.kijun = mid(m_kijun);
  const MaybeSeries mid_b = mid(l_senkou_b);
  o.senkou_a.resize(n);
  o.senkou_b.resize(n);
  o.chikou.resize(n);
  for (std::size_t t = static_cast<std::size_t>(m_kijun); t < n; ++t) {
    const std::size_t src = t - m_kijun;
    if (o.tenkan[src] && o.kijun[src]) {
      o.senkou_a[t] = (*o.tenkan[src] + *o.kijun[src]) / 2.0;
    }
    if (mid_b[src]) o.senkou_b[t] = mid_b[src];
  }
  for (std::size_t t = 0; t + m_kijun < n; ++t) o.chikou[t] = close[t + m_kijun];
  return o;
}

// ---------------------------------------------------------------------------
// tail-metric oracles: sort the full sample, average explicit index ranges
// ---------------------------------------------------------------------------

/// Same ceil(level * N) tail-size convention as the engine, stated once.
inline std::size_t tail_k(std::size_t n, double level) {
  const auto k =
      static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
  return std::max<std::size_t>(k, 1);
}

inline double mean_range(const std::vector<double>& v, std::size_t begin,
                         std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

inline double rachev(std::vector<double> r, double beta, double gamma) {
  std::sort(r.begin(), r.end());
  const std::size_t kl = tail_k(r.size(), beta);
  const std::size_t ku = tail_k(r.size(), gamma);
  const double lower = mean_range(r, 0, kl);
  const double upper = mean_range(r, r.size() - ku, r.size());
  return upper / std::abs(lower);
}

inline double modified_rachev(const std::vector<double>& r, double delta,
                              double epsilon, double gamma) {
  return rachev(r, delta, delta) * (gamma / epsilon);
}

inline double star(std::vector<double> r, double rf, double alpha) {
  const double mean = mean_range(r, 0, r.size());
  std::sort(r.begin(), r.end());
  const std::size_t k = tail_k(r.size(), alpha);
  const double cvar = mean_range(r, 0, k);
  return (mean - rf) / std::abs(cvar);
}

inline double gain_loss(const std::vector<double>& r) {
  double gs = 0.0, ls = 0.0;
  std::size_t gn = 0, ln = 0;
  for (double v : r) {
    if (v > 0.0) {
      gs += v;
      ++gn;
    } else if (v < 0.0) {
      ls -= v;
      ++ln;
    }
  }
  return (gs / gn) / (ls / ln);
}

inline double gini(std::vector<double> r) {
  std::sort(r.begin(), r.end());
  const double n = static_cast<double>(r.size());
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    total += r[i];
    weighted += (2.0 * (i + 1) - n - 1.0) * r[i];
  }
  return weighted / (n * total);
}

/// Drawdown by brute force over every (peak, trough) pair with peak first.
inline double max_drawdown(const std::vector<double>& curve) {
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    for (std::size_t j = i; j < curve.size(); ++j) {
      if (curve[i] > 0.0) {
        worst = std::max(worst, (curve[i] - curve[j]) / curve[i]);
      }
    }
  }
  return worst;
}

}  // namespace oracle
