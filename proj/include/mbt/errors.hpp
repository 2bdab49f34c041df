#pragma once

#include <stdexcept>
#include <string>

namespace mbt {

/// Error codes surfaced by the library. Each maps to one failure mode of a
/// public operation; CSV loaders attach the offending 1-based line number.
enum class errc {
  // input / parsing
  missing_column,
  unparseable_row,
  non_monotonic_timestamp,
  ohlc_invariant_violation,
  empty_input,
  io_error,
  invalid_config,
  // series / windows
  non_positive_price,
  series_too_short,
  window_too_large,
  invalid_window,
  no_prior_yield,
  // model
  insufficient_data,
  dimension_mismatch,
  model_not_fitted,
  // trading
  misaligned_signals,
  // metrics
  zero_variance,
  zero_deviation,
  empty_tail,
  zero_denominator,
  zero_drawdown,
  zero_sum,
  incomplete_run,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::missing_column: return "MissingColumn";
    case errc::unparseable_row: return "UnparseableRow";
    case errc::non_monotonic_timestamp: return "NonMonotonicTimestamp";
    case errc::ohlc_invariant_violation: return "OHLCInvariantViolation";
    case errc::empty_input: return "EmptyInput";
    case errc::io_error: return "IoError";
    case errc::invalid_config: return "InvalidConfig";
    case errc::non_positive_price: return "NonPositivePrice";
    case errc::series_too_short: return "SeriesTooShort";
    case errc::window_too_large: return "WindowTooLarge";
    case errc::invalid_window: return "InvalidWindow";
    case errc::no_prior_yield: return "NoPriorYield";
    case errc::insufficient_data: return "InsufficientData";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::model_not_fitted: return "ModelNotFitted";
    case errc::misaligned_signals: return "MisalignedSignals";
    case errc::zero_variance: return "ZeroVariance";
    case errc::zero_deviation: return "ZeroDeviation";
    case errc::empty_tail: return "EmptyTail";
    case errc::zero_denominator: return "ZeroDenominator";
    case errc::zero_drawdown: return "ZeroDrawdown";
    case errc::zero_sum: return "ZeroSum";
    case errc::incomplete_run: return "IncompleteRun";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg, long line = -1)
      : std::runtime_error(compose(code, msg, line)), code_(code), line_(line) {}

  errc code() const noexcept { return code_; }

  /// 1-based input line for CSV diagnostics, -1 when not applicable.
  long line() const noexcept { return line_; }

 private:
  static std::string compose(errc code, const std::string& msg, long line) {
    std::string s = errc_name(code);
    if (line >= 0) {
      s += " (line ";
      s += std::to_string(line);
      s += ")";
    }
    if (!msg.empty()) {
      s += ": ";
      s += msg;
    }
    return s;
  }

  errc code_;
  long line_;
};

}  // namespace mbt
