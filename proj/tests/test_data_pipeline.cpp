#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "mbt/data_pipeline.hpp"
#include "test_util.hpp"

using namespace mbt;
using namespace mbt::pipeline;
using Catch::Approx;
using testutil::error_code_of;
using testutil::error_of;

namespace {

BarSeries load(const std::string& csv_text, CsvSchema schema = {}) {
  std::istringstream in(csv_text);
  return load_bars(in, schema);
}

}  // namespace

TEST_CASE("load_bars reads well-formed rows") {
  const auto s = load(
      "timestamp,open,high,low,close,volume\n"
      "2024-06-03T10:00:00-05:00,100,101,99,100.5,5000\n"
      "2024-06-03T10:01:00-05:00,100.5,102,100,101,6000\n"
      "2024-06-03T10:02:00-05:00,101,101.5,100.5,101.2,5500\n");
  REQUIRE(s.size() == 3);
  REQUIRE(s[0].open == 100.0);
  REQUIRE(s[2].close == 101.2);
  REQUIRE(s[1].timestamp - s[0].timestamp == 60);
}

TEST_CASE("load_bars reports OHLC violations with the offending line") {
  const auto err = error_of([] {
    load(
        "timestamp,open,high,low,close,volume\n"
        "2024-06-03T10:00:00-05:00,100,99,101,100,5000\n");  // high < low
  });
  REQUIRE(err.code() == errc::ohlc_invariant_violation);
  REQUIRE(err.line() == 2);
}

TEST_CASE("load_bars rejects duplicate timestamps with the line number") {
  const auto err = error_of([] {
    load(
        "timestamp,open,high,low,close,volume\n"
        "2024-06-03T10:00:00-05:00,100,101,99,100,5000\n"
        "2024-06-03T10:01:00-05:00,100,101,99,100,5000\n"
        "2024-06-03T10:01:00-05:00,100,101,99,100,5000\n");
  });
  REQUIRE(err.code() == errc::non_monotonic_timestamp);
  REQUIRE(err.line() == 4);
}

TEST_CASE("load_bars error taxonomy") {
  REQUIRE(error_code_of([] {
            load("timestamp,open,high,low,volume\n");  // close missing
          }) == errc::missing_column);
  REQUIRE(error_code_of([] {
            load("timestamp,open,high,low,close,volume\n");
          }) == errc::empty_input);
  REQUIRE(error_code_of([] { load(""); }) == errc::empty_input);
  const auto err = error_of([] {
    load(
        "timestamp,open,high,low,close,volume\n"
        "2024-06-03T10:00:00-05:00,abc,101,99,100,5000\n");
  });
  REQUIRE(err.code() == errc::unparseable_row);
  REQUIRE(err.line() == 2);
  REQUIRE(error_code_of([] {
            load(
                "timestamp,open,high,low,close,volume\n"
                "2024-06-03T10:00:00-05:00,0,101,0,100,5000\n");
          }) == errc::non_positive_price);
}

TEST_CASE("log_returns matches the defining formula") {
  SECTION("constant series gives zeros") {
    const auto rs = log_returns(testutil::series_from_closes({100, 100, 100}),
                                PriceField::close);
    REQUIRE(rs.values.size() == 2);
    REQUIRE(rs.values[0] == 0.0);
    REQUIRE(rs.values[1] == 0.0);
  }
  SECTION("ten percent move") {
    const auto rs =
        log_returns(testutil::series_from_closes({100, 110}), PriceField::close);
    REQUIRE(rs.values.size() == 1);
    REQUIRE(rs.values[0] == Approx(0.0953101798043249).margin(1e-12));
  }
  SECTION("error paths") {
    BarSeries bad = testutil::series_from_closes({100, 100});
    bad.bars[1].close = 0.0;  // bypasses loader validation on purpose
    REQUIRE(error_code_of([&] { log_returns(bad, PriceField::close); }) ==
            errc::non_positive_price);
    REQUIRE(error_code_of([] {
              log_returns(testutil::series_from_closes({100}),
                          PriceField::close);
            }) == errc::series_too_short);
  }
}

TEST_CASE("log-return reconstruction property") {
  const auto s = testutil::random_series(300, 7);
  const auto rs = log_returns(s, PriceField::close);
  double cum = 0.0;
  for (std::size_t i = 0; i < rs.values.size(); ++i) {
    cum += rs.values[i];
    const double rebuilt = std::exp(cum) * s[0].close;
    REQUIRE(rebuilt == Approx(s[i + 1].close).epsilon(1e-10));
  }
}

TEST_CASE("volume_zscore") {
  SECTION("constant volume is no anomaly") {
    const auto s = testutil::series_from_closes(std::vector<double>(70, 50.0));
    const auto z = volume_zscore(s, 60);
    REQUIRE_FALSE(z.defined(58));
    for (std::size_t t = 59; t < 70; ++t) {
      REQUIRE(z.defined(t));
      REQUIRE(z.values[t] == 0.0);
    }
  }
  SECTION("ramp volume matches brute-force mean/std") {
    std::vector<double> volumes;
    for (int i = 1; i <= 60; ++i) volumes.push_back(i);
    const auto s = testutil::series_from_closes_volumes(
        std::vector<double>(60, 10.0), volumes);
    const auto z = volume_zscore(s, 60);
    // brute-force oracle over the full window
    double mean = 0.0;
    for (double v : volumes) mean += v;
    mean /= 60.0;
    double ss = 0.0;
    for (double v : volumes) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / 60.0);
    REQUIRE(z.defined(59));
    REQUIRE(z.values[59] == Approx((60.0 - 30.5) / sd).margin(1e-12));
  }
  SECTION("window errors") {
    const auto s = testutil::series_from_closes(std::vector<double>(60, 1.0));
    REQUIRE(error_code_of([&] { volume_zscore(s, 61); }) ==
            errc::window_too_large);
    REQUIRE(error_code_of([&] { volume_zscore(s, 1); }) == errc::invalid_window);
  }
}

TEST_CASE("per-minute risk-free rate") {
  RiskFreeCurve curve;
  const auto day = timeutil::parse_date("2024-06-03");
  curve.entries.push_back({day, 0.0});
  const Timestamp t =
      timeutil::parse_timestamp("2024-06-03T12:00:00", TimeZone::central);

  SECTION("zero yield maps to zero rate") {
    REQUIRE(per_minute_risk_free(curve, t, YieldConvention::as_given) == 0.0);
  }
  SECTION("compounding round-trip at the documented convention") {
    curve.entries[0].yield_decimal = 0.04;
    const double r =
        per_minute_risk_free(curve, t, YieldConvention::annual_252);
    const double daily = 0.04 / 252.0;
    REQUIRE(std::pow(1.0 + r, 1440.0) == Approx(1.0 + daily).margin(1e-12));
    const double r_given =
        per_minute_risk_free(curve, t, YieldConvention::as_given);
    REQUIRE(std::pow(1.0 + r_given, 1440.0) == Approx(1.04).margin(1e-12));
  }
  SECTION("carry-back lookup picks the most recent prior quote") {
    curve.entries[0].yield_decimal = 0.04;
    curve.entries.push_back({day + 7, 0.05});
    const Timestamp mid =
        timeutil::parse_timestamp("2024-06-06T12:00:00", TimeZone::central);
    REQUIRE(daily_rate(curve, mid, YieldConvention::as_given) == 0.04);
    const Timestamp late =
        timeutil::parse_timestamp("2024-06-12T12:00:00", TimeZone::central);
    REQUIRE(daily_rate(curve, late, YieldConvention::as_given) == 0.05);
  }
  SECTION("dates before the curve fail") {
    const Timestamp before =
        timeutil::parse_timestamp("2024-05-31T12:00:00", TimeZone::central);
    REQUIRE(error_code_of([&] {
              per_minute_risk_free(curve, before, YieldConvention::as_given);
            }) == errc::no_prior_yield);
  }
  SECTION("round-trip across random yields") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      const double daily = rng.uniform(-0.02, 0.10);
      curve.entries[0].yield_decimal = daily;
      const double r = per_minute_risk_free(curve, t, YieldConvention::as_given);
      REQUIRE(std::pow(1.0 + r, 1440.0) == Approx(1.0 + daily).margin(1e-12));
    }
  }
}

TEST_CASE("trading-hours filter keeps the inclusive 10:00-15:30 CT window") {
  BarSeries s;
  s.symbol = "T";
  // one bar per minute across 09:00..16:00 CT inclusive = 421 bars
  for (int m = 9 * 60; m <= 16 * 60; ++m) {
    const CivilTime wall{2024, 6, 3, m / 60, m % 60, 0};
    s.bars.push_back(testutil::bar(
        timeutil::from_wall_clock(wall, TimeZone::central), 100, 101, 99, 100,
        1000));
  }
  REQUIRE(s.size() == 421);
  const auto filtered = filter_trading_hours(s);
  REQUIRE(filtered.size() == 331);
  REQUIRE(timeutil::minutes_of_day_ct(filtered.bars.front().timestamp) ==
          10 * 60);
  REQUIRE(timeutil::minutes_of_day_ct(filtered.bars.back().timestamp) ==
          15 * 60 + 30);

  SECTION("boundaries are inclusive, neighbors excluded") {
    for (const auto& b : filtered.bars) {
      const int m = timeutil::minutes_of_day_ct(b.timestamp);
      REQUIRE(m >= 600);
      REQUIRE(m <= 930);
    }
  }
  SECTION("filtering is idempotent") {
    const auto twice = filter_trading_hours(filtered);
    REQUIRE(twice.size() == filtered.size());
    for (std::size_t i = 0; i < twice.size(); ++i) {
      REQUIRE(twice[i].timestamp == filtered[i].timestamp);
    }
  }
}

TEST_CASE("eastern-time input normalizes onto the CT filter") {
  BarSeries s;
  // 10:59 ET = 09:59 CT (excluded), 11:00 ET = 10:00 CT (included)
  s.bars.push_back(testutil::bar(
      timeutil::parse_timestamp("2024-06-03T10:59:00", TimeZone::eastern), 100,
      101, 99, 100, 1000));
  s.bars.push_back(testutil::bar(
      timeutil::parse_timestamp("2024-06-03T11:00:00", TimeZone::eastern), 100,
      101, 99, 100, 1000));
  const auto filtered = filter_trading_hours(s);
  REQUIRE(filtered.size() == 1);
  REQUIRE(timeutil::minutes_of_day_ct(filtered[0].timestamp) == 600);
}

TEST_CASE("chronological split") {
  SECTION("floor arithmetic") {
    const auto s10 = chronological_split(10, 0.8);
    REQUIRE(s10.train_begin == 0);
    REQUIRE(s10.train_end == 8);
    REQUIRE(s10.test_end == 10);
    const auto s5 = chronological_split(5, 0.8);
    REQUIRE(s5.train_end == 4);
    REQUIRE(s5.test_end == 5);
  }
  SECTION("too short") {
    REQUIRE(error_code_of([] { chronological_split(1, 0.8); }) ==
            errc::series_too_short);
  }
  SECTION("ranges are disjoint, contiguous, ordered") {
    for (std::size_t n : {2ul, 3ul, 17ul, 100ul, 12345ul}) {
      const auto sp = chronological_split(n, 0.8);
      REQUIRE(sp.train_begin == 0);
      REQUIRE(sp.train_end > sp.train_begin);
      REQUIRE(sp.test_end == n);
      REQUIRE(sp.train_end < sp.test_end);  // max(train) < min(test)
    }
  }
}

TEST_CASE("rates CSV converts percent quotes to decimals") {
  std::istringstream in(
      "date,yield\n"
      "2024-06-03,4.25\n"
      "2024-06-04,4.30\n");
  const auto curve = load_rates(in);
  REQUIRE(curve.entries.size() == 2);
  REQUIRE(curve.entries[0].yield_decimal == Approx(0.0425).margin(1e-15));
}
