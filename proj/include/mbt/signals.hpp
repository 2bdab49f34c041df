#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mbt/errors.hpp"

namespace mbt::signals {

enum class Signal { buy, hold, sell };

inline const char* to_string(Signal s) {
  switch (s) {
    case Signal::buy: return "buy";
    case Signal::hold: return "hold";
    case Signal::sell: return "sell";
  }
  return "?";
}

inline Signal signal_from_string(const std::string& s) {
  if (s == "buy") return Signal::buy;
  if (s == "hold") return Signal::hold;
  if (s == "sell") return Signal::sell;
  throw Error(errc::invalid_config, "unknown signal '" + s + "'");
}

/// Prediction cutoffs fitted on training-set predictions only.
struct SignalThresholds {
  double q33 = 0.0;
  double q66 = 0.0;
};

namespace detail {

/// Percentile by linear interpolation between closest ranks on the sorted
/// sample (rank h = (n-1)p).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const double fl = std::floor(h);
  const std::size_t lo = static_cast<std::size_t>(fl);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (h - fl) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

inline SignalThresholds fit_thresholds(std::vector<double> train_predictions,
                                       double lower = 0.33,
                                       double upper = 0.66) {
  if (train_predictions.empty()) {
    throw Error(errc::empty_input, "no training predictions");
  }
  std::sort(train_predictions.begin(), train_predictions.end());
  SignalThresholds t;
  t.q33 = detail::percentile_sorted(train_predictions, lower);
  t.q66 = detail::percentile_sorted(train_predictions, upper);
  return t;
}

/// What a prediction sitting exactly on coincident thresholds maps to.
enum class EqualThresholdPolicy { buy, hold };

/// buy if pred >= q66, sell if pred <= q33, hold in between. When q33 == q66
/// the buy check runs first; `policy` can route the coincident point to hold
/// instead.
inline Signal classify(double prediction, const SignalThresholds& t,
                       EqualThresholdPolicy policy = EqualThresholdPolicy::buy) {
  if (prediction >= t.q66) {
    if (policy == EqualThresholdPolicy::hold && prediction <= t.q33) {
      return Signal::hold;
    }
    return Signal::buy;
  }
  if (prediction <= t.q33) return Signal::sell;
  return Signal::hold;
}

inline std::vector<Signal> classify_all(
    const std::vector<double>& predictions, const SignalThresholds& t,
    EqualThresholdPolicy policy = EqualThresholdPolicy::buy) {
  std::vector<Signal> out;
  out.reserve(predictions.size());
  for (double p : predictions) out.push_back(classify(p, t, policy));
  return out;
}

}  // namespace mbt::signals
