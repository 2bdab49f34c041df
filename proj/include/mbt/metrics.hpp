#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "mbt/errors.hpp"
#include "mbt/simulator.hpp"

namespace mbt::metrics {

// ---------------------------------------------------------------------------
// Prediction accuracy
// ---------------------------------------------------------------------------

struct PredictionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;           // empty when var(y) == 0
  double trend_accuracy = 0.0;
  std::optional<double> correlation;  // empty when either side is constant
};

namespace detail {

inline void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(errc::dimension_mismatch, "length mismatch");
  if (a == 0) throw Error(errc::empty_input, "empty input");
}

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

inline double rmse(const std::vector<double>& actual,
                   const std::vector<double>& predicted) {
  detail::check_same_size(actual.size(), predicted.size());
  double sse = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = predicted[i] - actual[i];
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(actual.size()));
}

inline double mae(const std::vector<double>& actual,
                  const std::vector<double>& predicted) {
  detail::check_same_size(actual.size(), predicted.size());
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    s += std::abs(predicted[i] - actual[i]);
  }
  return s / static_cast<double>(actual.size());
}

/// 1 - SSE / SST; requires non-degenerate targets.
inline double r2(const std::vector<double>& actual,
                 const std::vector<double>& predicted) {
  detail::check_same_size(actual.size(), predicted.size());
  const double mean = detail::mean_of(actual);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    sse += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    sst += (actual[i] - mean) * (actual[i] - mean);
  }
  if (sst == 0.0) throw Error(errc::zero_variance, "targets are constant");
  return 1.0 - sse / sst;
}

/// Fraction of sign agreements; zero matches only zero.
inline double trend_accuracy(const std::vector<double>& actual,
                             const std::vector<double>& predicted) {
  detail::check_same_size(actual.size(), predicted.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (detail::sign_of(actual[i]) == detail::sign_of(predicted[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(actual.size());
}

inline std::optional<double> correlation(const std::vector<double>& a,
                                         const std::vector<double>& b) {
  detail::check_same_size(a.size(), b.size());
  const double ma = detail::mean_of(a);
  const double mb = detail::mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

inline PredictionMetrics prediction_metrics(
    const std::vector<double>& actual, const std::vector<double>& predicted) {
  PredictionMetrics m;
  m.rmse = rmse(actual, predicted);
  m.mae = mae(actual, predicted);
  try {
    m.r2 = r2(actual, predicted);
  } catch (const Error&) {
    m.r2 = std::nullopt;
  }
  m.trend_accuracy = trend_accuracy(actual, predicted);
  m.correlation = correlation(actual, predicted);
  return m;
}

// ---------------------------------------------------------------------------
// Risk-reward ratios
// ---------------------------------------------------------------------------

/// Quantile levels for the tail-based ratios, each in (0, 0.5].
struct TailParams {
  double alpha = 0.05;    // STAR / CVaR level
  double beta = 0.05;     // lower-tail level (Rachev, distortion)
  double gamma = 0.05;    // upper-tail level (Rachev); modified-Rachev scale
  double delta = 0.01;    // modified-Rachev tail level
  double epsilon = 0.05;  // modified-Rachev upper-tail scale

  void validate() const {
    for (double v : {alpha, beta, gamma, delta, epsilon}) {
      if (!(v > 0.0 && v <= 0.5)) {
        throw Error(errc::invalid_config, "tail levels must be in (0, 0.5]");
      }
    }
  }
};

namespace detail {

/// Empirical tails by order statistics: the lowest / highest ceil(level * N)
/// observations. The nudge keeps ceil() honest when level * N is an integer
/// that floating-point lands a hair above (0.05 * 200 and friends).
inline std::size_t tail_count(std::size_t n, double level) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(
      std::ceil(level * static_cast<double>(n) - 1e-9));
  return std::max<std::size_t>(k, 1);
}

inline std::vector<double> sorted_copy(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

inline double lower_tail_mean(const std::vector<double>& sorted, double level) {
  const std::size_t k = tail_count(sorted.size(), level);
  if (k == 0) throw Error(errc::empty_tail, "lower tail is empty");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += sorted[i];
  return s / static_cast<double>(k);
}

inline double upper_tail_mean(const std::vector<double>& sorted, double level) {
  const std::size_t k = tail_count(sorted.size(), level);
  if (k == 0) throw Error(errc::empty_tail, "upper tail is empty");
  double s = 0.0;
  for (std::size_t i = sorted.size() - k; i < sorted.size(); ++i) s += sorted[i];
  return s / static_cast<double>(k);
}

}  // namespace detail

/// Mean excess return over population standard deviation of excess returns.
inline double sharpe(const std::vector<double>& excess_returns) {
  if (excess_returns.size() < 2) {
    throw Error(errc::series_too_short, "need >= 2 observations");
  }
  const double mean = detail::mean_of(excess_returns);
  double ss = 0.0;
  for (double r : excess_returns) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(excess_returns.size()));
  if (sd == 0.0) throw Error(errc::zero_deviation, "returns are constant");
  return mean / sd;
}

/// Mean excess return over downside deviation
/// sqrt(mean(min(excess, 0)^2)).
inline double sortino(const std::vector<double>& excess_returns) {
  if (excess_returns.size() < 2) {
    throw Error(errc::series_too_short, "need >= 2 observations");
  }
  const double mean = detail::mean_of(excess_returns);
  double ss = 0.0;
  for (double r : excess_returns) {
    const double d = std::min(r, 0.0);
    ss += d * d;
  }
  const double dd = std::sqrt(ss / static_cast<double>(excess_returns.size()));
  if (dd == 0.0) throw Error(errc::zero_deviation, "no downside observations");
  return mean / dd;
}

/// Largest fractional peak-to-trough decline of an equity curve.
inline double max_drawdown(const std::vector<double>& curve) {
  if (curve.empty()) throw Error(errc::empty_input, "empty curve");
  double peak = curve[0];
  double worst = 0.0;
  for (double v : curve) {
    peak = std::max(peak, v);
    if (peak > 0.0) worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

/// Expected upper-tail gain over the magnitude of the expected lower-tail
/// loss. Reported as a ratio of magnitudes so higher is uniformly better.
inline double rachev(const std::vector<double>& returns, double beta = 0.05,
                     double gamma = 0.05) {
  if (returns.empty()) throw Error(errc::empty_tail, "no returns");
  const auto sorted = detail::sorted_copy(returns);
  const double upper = detail::upper_tail_mean(sorted, gamma);
  const double lower = detail::lower_tail_mean(sorted, beta);
  if (lower == 0.0) throw Error(errc::zero_denominator, "lower tail mean is 0");
  return upper / std::abs(lower);
}

/// Rachev with both tails at level delta, the upper side scaled by 1/epsilon
/// and the lower by 1/gamma.
inline double modified_rachev(const std::vector<double>& returns, double delta,
                              double epsilon, double gamma) {
  if (!(epsilon > 0.0) || !(gamma > 0.0)) {
    throw Error(errc::invalid_config, "epsilon and gamma must be > 0");
  }
  return rachev(returns, delta, delta) * (gamma / epsilon);
}

/// Distortion function g: [0,1] -> [0,1], increasing, g(0)=0, g(1)=1.
/// Reweights tail observations by g-increments from the extreme end inward.
using Distortion = std::function<double(double)>;

namespace detail {

/// Distortion-weighted tail mean. `tail` is ordered from the most extreme
/// observation inward; weight of slot i is g((i+1)/k) - g(i/k).
inline double distorted_tail_mean(const std::vector<double>& tail,
                                  const Distortion& g) {
  const std::size_t k = tail.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = g(static_cast<double>(i + 1) / static_cast<double>(k)) -
                     g(static_cast<double>(i) / static_cast<double>(k));
    mean += w * tail[i];
  }
  return mean;
}

}  // namespace detail

/// Tail-mean ratio at level beta on both sides with a pluggable distortion
/// weighting; the identity distortion reduces it to rachev(beta, beta).
inline double distortion_rrr(const std::vector<double>& returns, double beta,
                             const Distortion& distortion = {}) {
  if (returns.empty()) throw Error(errc::empty_tail, "no returns");
  if (!distortion) return rachev(returns, beta, beta);
  const auto sorted = detail::sorted_copy(returns);
  const std::size_t k = detail::tail_count(sorted.size(), beta);
  if (k == 0) throw Error(errc::empty_tail, "tail is empty");
  std::vector<double> lower(sorted.begin(),
                            sorted.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<double> upper(sorted.end() - static_cast<std::ptrdiff_t>(k),
                            sorted.end());
  std::reverse(upper.begin(), upper.end());  // most extreme first
  const double up = detail::distorted_tail_mean(upper, distortion);
  const double down = detail::distorted_tail_mean(lower, distortion);
  if (down == 0.0) throw Error(errc::zero_denominator, "lower tail mean is 0");
  return up / std::abs(down);
}

/// Average positive return over average loss magnitude.
inline double gain_loss(const std::vector<double>& returns) {
  double gain_sum = 0.0, loss_sum = 0.0;
  std::size_t gains = 0, losses = 0;
  for (double r : returns) {
    if (r > 0.0) {
      gain_sum += r;
      ++gains;
    } else if (r < 0.0) {
      loss_sum -= r;
      ++losses;
    }
  }
  if (gains == 0 || losses == 0) {
    throw Error(errc::empty_tail, "need both gains and losses");
  }
  return (gain_sum / static_cast<double>(gains)) /
         (loss_sum / static_cast<double>(losses));
}

/// Mean excess return over the magnitude of CVaR_alpha (the mean of the
/// lowest ceil(alpha*N) returns).
inline double star(const std::vector<double>& returns, double risk_free,
                   double alpha = 0.05) {
  if (returns.empty()) throw Error(errc::empty_tail, "no returns");
  const auto sorted = detail::sorted_copy(returns);
  const double cvar = detail::lower_tail_mean(sorted, alpha);
  if (cvar == 0.0) throw Error(errc::zero_denominator, "CVaR is 0");
  return (detail::mean_of(returns) - risk_free) / std::abs(cvar);
}

/// Average return over the maximum drawdown of the curve it came from.
inline double minimax(const std::vector<double>& returns,
                      const std::vector<double>& curve) {
  if (returns.empty()) throw Error(errc::empty_input, "no returns");
  const double dd = max_drawdown(curve);
  if (dd == 0.0) throw Error(errc::zero_drawdown, "curve never declines");
  return detail::mean_of(returns) / dd;
}

/// Gini ratio over ascending-sorted returns:
/// sum (2i - N - 1) R_(i) / (N * sum R).
inline double gini(const std::vector<double>& returns) {
  const std::size_t n = returns.size();
  if (n < 2) throw Error(errc::series_too_short, "need >= 2 observations");
  const auto sorted = detail::sorted_copy(returns);
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += sorted[i];
    weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) -
                 1.0) *
                sorted[i];
  }
  if (total == 0.0) throw Error(errc::zero_sum, "returns sum to 0");
  return weighted / (static_cast<double>(n) * total);
}

// ---------------------------------------------------------------------------
// Full report over an equity curve
// ---------------------------------------------------------------------------

/// Risk suite for one strategy. Metrics whose preconditions fail on the given
/// curve (constant returns, no drawdown, one-sided tails) are left empty
/// rather than aborting the run.
struct RiskReport {
  std::optional<double> sharpe;
  std::optional<double> sortino;
  double max_drawdown = 0.0;
  std::optional<double> rachev;
  std::optional<double> modified_rachev;
  std::optional<double> distortion_rrr;
  std::optional<double> gain_loss;
  std::optional<double> star;
  std::optional<double> minimax;
  std::optional<double> gini;
  double final_value = 0.0;
  double total_return = 0.0;
};

inline RiskReport risk_report(const sim::EquityCurve& curve,
                              const TailParams& tails = {}) {
  tails.validate();
  if (curve.value.empty()) throw Error(errc::empty_input, "empty curve");
  RiskReport r;
  r.final_value = curve.value.back();
  r.total_return = curve.value.back() / curve.value.front() - 1.0;
  r.max_drawdown = max_drawdown(curve.value);

  // ret[0] is identically 0 by construction; the metric inputs start at 1.
  std::vector<double> returns;
  if (curve.ret.size() > 1) {
    returns.assign(curve.ret.begin() + 1, curve.ret.end());
  }
  std::vector<double> excess(returns.size());
  double rf_mean = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    excess[i] = returns[i] - curve.risk_free[i + 1];
    rf_mean += curve.risk_free[i + 1];
  }
  if (!returns.empty()) rf_mean /= static_cast<double>(returns.size());

  auto guard = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  r.sharpe = guard([&] { return sharpe(excess); });
  r.sortino = guard([&] { return sortino(excess); });
  r.rachev = guard([&] { return rachev(returns, tails.beta, tails.gamma); });
  r.modified_rachev = guard([&] {
    return modified_rachev(returns, tails.delta, tails.epsilon, tails.gamma);
  });
  r.distortion_rrr = guard([&] { return distortion_rrr(returns, tails.beta); });
  r.gain_loss = guard([&] { return gain_loss(returns); });
  r.star = guard([&] { return star(returns, rf_mean, tails.alpha); });
  r.minimax = guard([&] { return minimax(returns, curve.value); });
  r.gini = guard([&] { return gini(returns); });
  return r;
}

}  // namespace mbt::metrics
