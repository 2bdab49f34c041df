#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mbt/bars.hpp"
#include "mbt/csv.hpp"
#include "mbt/data_pipeline.hpp"
#include "mbt/errors.hpp"
#include "mbt/features.hpp"
#include "mbt/forest.hpp"
#include "mbt/metrics.hpp"
#include "mbt/signals.hpp"
#include "mbt/simulator.hpp"
#include "mbt/timeutil.hpp"

#include "json.hpp"

namespace mbt::orch {

inline constexpr const char* kToolVersion = "1.0.0";

struct SignalConfig {
  double sell_quantile = 0.33;
  double buy_quantile = 0.66;
  signals::EqualThresholdPolicy equal_threshold_policy =
      signals::EqualThresholdPolicy::buy;
};

/// One experiment: a named indicator subset plus optional per-model
/// overrides. An empty indicator set is the base price/volume model.
struct ModelConfig {
  std::string name;
  std::vector<features::Family> indicator_set;
  std::optional<int> horizon;
  std::optional<forest::ForestParams> forest_params;
  std::optional<sim::SimulationConfig> sim_config;
};

struct RunConfig {
  double split_ratio = 0.8;
  std::uint64_t seed = 42;
  int horizon = 1;
  pipeline::YieldConvention yield_convention =
      pipeline::YieldConvention::annual_252;
  TimeZone input_timezone = TimeZone::central;
  pipeline::TradingHours trading_hours{};
  indicators::IndicatorConfig indicator_config{};
  int volz_window = 60;
  forest::ForestParams forest_params{};
  sim::SimulationConfig sim_config{};
  SignalConfig signal_config{};
  metrics::TailParams tails{};
  std::vector<ModelConfig> models;  // empty = builtin_configs()
  int jobs = 1;     // model-level workers
  int threads = 0;  // per-forest tree threads; 0 = hardware concurrency
};

/// The thirteen stock experiments: the base model on the five price/volume
/// features, one variant per standalone indicator family, and the
/// rsi+ema+boll hybrid. Every variant keeps the base features.
inline std::vector<ModelConfig> builtin_configs() {
  using features::Family;
  std::vector<ModelConfig> out;
  out.push_back({"rfr_base", {}, {}, {}, {}});
  const std::vector<std::pair<std::string, Family>> singles = {
      {"rfr_rsi", Family::rsi},     {"rfr_ema", Family::ema},
      {"rfr_boll", Family::boll},   {"rfr_macd", Family::macd},
      {"rfr_wrobv", Family::wrobv}, {"rfr_ichi", Family::ichi},
      {"rfr_adx", Family::adx},     {"rfr_cci", Family::cci},
      {"rfr_so", Family::so},       {"rfr_sma", Family::sma},
      {"rfr_fib", Family::fib},
  };
  for (const auto& [name, fam] : singles) {
    out.push_back({name, {fam}, {}, {}, {}});
  }
  out.push_back({"rfr_hybrid_rsi_ema_boll",
                 {Family::rsi, Family::ema, Family::boll},
                 {},
                 {},
                 {}});
  return out;
}

// ---------------------------------------------------------------------------
// Config file parsing
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw Error(errc::invalid_config,
                  "unknown key '" + it.key() + "' in " + where);
    }
  }
}

inline int parse_minute_of_day(const std::string& s) {
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos) {
    throw Error(errc::invalid_config, "expected HH:MM, got '" + s + "'");
  }
  const int h = std::stoi(s.substr(0, colon));
  const int m = std::stoi(s.substr(colon + 1));
  if (h < 0 || h > 23 || m < 0 || m > 59) {
    throw Error(errc::invalid_config, "bad time of day '" + s + "'");
  }
  return h * 60 + m;
}

inline indicators::IndicatorConfig parse_indicator_config(
    const nlohmann::json& j, indicators::IndicatorConfig base) {
  reject_unknown_keys(
      j,
      {"sma_window", "ema_window", "macd_fast", "macd_slow", "macd_signal",
       "rsi_window", "bb_window", "bb_width", "stoch_k_window",
       "stoch_d_window", "fib_window", "adx_window", "wrobv_window",
       "cci_window", "ichimoku_tenkan", "ichimoku_kijun", "ichimoku_senkou_b"},
      "indicators");
  base.sma_window = j.value("sma_window", base.sma_window);
  base.ema_window = j.value("ema_window", base.ema_window);
  base.macd_fast = j.value("macd_fast", base.macd_fast);
  base.macd_slow = j.value("macd_slow", base.macd_slow);
  base.macd_signal = j.value("macd_signal", base.macd_signal);
  base.rsi_window = j.value("rsi_window", base.rsi_window);
  base.bb_window = j.value("bb_window", base.bb_window);
  base.bb_width = j.value("bb_width", base.bb_width);
  base.stoch_k_window = j.value("stoch_k_window", base.stoch_k_window);
  base.stoch_d_window = j.value("stoch_d_window", base.stoch_d_window);
  base.fib_window = j.value("fib_window", base.fib_window);
  base.adx_window = j.value("adx_window", base.adx_window);
  base.wrobv_window = j.value("wrobv_window", base.wrobv_window);
  base.cci_window = j.value("cci_window", base.cci_window);
  base.ichimoku_tenkan = j.value("ichimoku_tenkan", base.ichimoku_tenkan);
  base.ichimoku_kijun = j.value("ichimoku_kijun", base.ichimoku_kijun);
  base.ichimoku_senkou_b = j.value("ichimoku_senkou_b", base.ichimoku_senkou_b);
  base.validate();
  return base;
}

inline forest::ForestParams parse_forest_params(const nlohmann::json& j,
                                                forest::ForestParams base) {
  reject_unknown_keys(j,
                      {"n_estimators", "max_depth", "min_samples_split",
                       "min_samples_leaf", "max_features", "random_seed"},
                      "forest");
  base.n_estimators = j.value("n_estimators", base.n_estimators);
  base.max_depth = j.value("max_depth", base.max_depth);
  base.min_samples_split = j.value("min_samples_split", base.min_samples_split);
  base.min_samples_leaf = j.value("min_samples_leaf", base.min_samples_leaf);
  if (j.contains("max_features")) {
    base.max_features =
        forest::max_features_from_string(j.at("max_features").get<std::string>());
  }
  base.random_seed = j.value("random_seed", base.random_seed);
  base.validate();
  return base;
}

inline sim::SimulationConfig parse_sim_config(const nlohmann::json& j,
                                              sim::SimulationConfig base) {
  reject_unknown_keys(j,
                      {"initial_cash", "turnover_cap", "trade_fraction",
                       "allow_fractional_shares"},
                      "simulation");
  base.initial_cash = j.value("initial_cash", base.initial_cash);
  base.turnover_cap = j.value("turnover_cap", base.turnover_cap);
  base.trade_fraction = j.value("trade_fraction", base.trade_fraction);
  base.allow_fractional_shares =
      j.value("allow_fractional_shares", base.allow_fractional_shares);
  base.validate();
  return base;
}

inline metrics::TailParams parse_tail_params(const nlohmann::json& j,
                                             metrics::TailParams base) {
  reject_unknown_keys(j, {"alpha", "beta", "gamma", "delta", "epsilon"},
                      "tails");
  base.alpha = j.value("alpha", base.alpha);
  base.beta = j.value("beta", base.beta);
  base.gamma = j.value("gamma", base.gamma);
  base.delta = j.value("delta", base.delta);
  base.epsilon = j.value("epsilon", base.epsilon);
  base.validate();
  return base;
}

inline ModelConfig parse_model_config(const nlohmann::json& j,
                                      const RunConfig& defaults) {
  reject_unknown_keys(j, {"name", "indicators", "horizon", "forest", "simulation"},
                      "models[]");
  ModelConfig m;
  m.name = j.at("name").get<std::string>();
  if (m.name.empty()) throw Error(errc::invalid_config, "model name empty");
  if (j.contains("indicators")) {
    for (const auto& item : j.at("indicators")) {
      m.indicator_set.push_back(
          features::family_from_string(item.get<std::string>()));
    }
  }
  if (j.contains("horizon")) m.horizon = j.at("horizon").get<int>();
  if (j.contains("forest")) {
    m.forest_params = parse_forest_params(j.at("forest"), defaults.forest_params);
  }
  if (j.contains("simulation")) {
    m.sim_config = parse_sim_config(j.at("simulation"), defaults.sim_config);
  }
  return m;
}

}  // namespace detail

/// Parses a run configuration. Every knob defaults to the stock experimental
/// setup, so `{}` is a complete config. Unknown keys are rejected.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(errc::invalid_config, "config must be object");
  detail::reject_unknown_keys(
      j,
      {"split_ratio", "seed", "horizon", "yield_convention", "input_timezone",
       "trading_hours", "indicators", "volz_window", "forest", "simulation",
       "signals", "tails", "models", "jobs", "threads"},
      "config");
  c.split_ratio = j.value("split_ratio", c.split_ratio);
  c.seed = j.value("seed", c.seed);
  c.horizon = j.value("horizon", c.horizon);
  if (j.contains("yield_convention")) {
    c.yield_convention = pipeline::yield_convention_from_string(
        j.at("yield_convention").get<std::string>());
  }
  if (j.contains("input_timezone")) {
    c.input_timezone =
        timezone_from_string(j.at("input_timezone").get<std::string>());
  }
  if (j.contains("trading_hours")) {
    const auto& th = j.at("trading_hours");
    detail::reject_unknown_keys(th, {"start", "end"}, "trading_hours");
    if (th.contains("start")) {
      c.trading_hours.start_minute =
          detail::parse_minute_of_day(th.at("start").get<std::string>());
    }
    if (th.contains("end")) {
      c.trading_hours.end_minute =
          detail::parse_minute_of_day(th.at("end").get<std::string>());
    }
  }
  if (j.contains("indicators")) {
    c.indicator_config =
        detail::parse_indicator_config(j.at("indicators"), c.indicator_config);
  }
  c.volz_window = j.value("volz_window", c.volz_window);
  if (j.contains("forest")) {
    c.forest_params = detail::parse_forest_params(j.at("forest"), c.forest_params);
  }
  if (j.contains("simulation")) {
    c.sim_config = detail::parse_sim_config(j.at("simulation"), c.sim_config);
  }
  if (j.contains("signals")) {
    const auto& s = j.at("signals");
    detail::reject_unknown_keys(
        s, {"sell_quantile", "buy_quantile", "equal_threshold_policy"},
        "signals");
    c.signal_config.sell_quantile =
        s.value("sell_quantile", c.signal_config.sell_quantile);
    c.signal_config.buy_quantile =
        s.value("buy_quantile", c.signal_config.buy_quantile);
    if (s.contains("equal_threshold_policy")) {
      const std::string p = s.at("equal_threshold_policy").get<std::string>();
      if (p == "buy") {
        c.signal_config.equal_threshold_policy =
            signals::EqualThresholdPolicy::buy;
      } else if (p == "hold") {
        c.signal_config.equal_threshold_policy =
            signals::EqualThresholdPolicy::hold;
      } else {
        throw Error(errc::invalid_config, "equal_threshold_policy: buy|hold");
      }
    }
  }
  if (j.contains("tails")) {
    c.tails = detail::parse_tail_params(j.at("tails"), c.tails);
  }
  if (j.contains("models")) {
    for (const auto& jm : j.at("models")) {
      c.models.push_back(detail::parse_model_config(jm, c));
    }
  }
  c.jobs = j.value("jobs", c.jobs);
  c.threads = j.value("threads", c.threads);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::invalid_config, std::string("config JSON: ") + e.what());
  }
  return parse_run_config(j);
}

// ---------------------------------------------------------------------------
// Run pipeline
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string bars_path;
  std::string rates_path;  // optional; empty = zero risk-free rate
  std::string out_dir;
  RunConfig config;
};

struct ModelOutcome {
  std::string name;
  bool ok = false;
  std::string error;
  double final_value = 0.0;
  double return_pct = 0.0;
  std::optional<double> sharpe;
  std::optional<double> sortino;
  std::optional<double> rachev;
};

struct RunResult {
  std::vector<ModelOutcome> outcomes;  // config order; baseline appended last
  std::string out_dir;

  bool all_ok() const {
    for (const auto& o : outcomes) {
      if (!o.ok) return false;
    }
    return true;
  }
};

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

inline std::string opt_csv(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

inline nlohmann::ordered_json prediction_json(const metrics::PredictionMetrics& m) {
  nlohmann::ordered_json j;
  j["rmse"] = m.rmse;
  j["mae"] = m.mae;
  j["r2"] = opt_json(m.r2);
  j["trend_accuracy"] = m.trend_accuracy;
  j["correlation"] = opt_json(m.correlation);
  return j;
}

inline nlohmann::ordered_json risk_json(const metrics::RiskReport& r) {
  nlohmann::ordered_json j;
  j["sharpe"] = opt_json(r.sharpe);
  j["sortino"] = opt_json(r.sortino);
  j["max_drawdown"] = r.max_drawdown;
  j["rachev"] = opt_json(r.rachev);
  j["modified_rachev"] = opt_json(r.modified_rachev);
  j["distortion_rrr"] = opt_json(r.distortion_rrr);
  j["gain_loss"] = opt_json(r.gain_loss);
  j["star"] = opt_json(r.star);
  j["minimax"] = opt_json(r.minimax);
  j["gini"] = opt_json(r.gini);
  j["final_value"] = r.final_value;
  j["total_return"] = r.total_return;
  return j;
}

inline void write_json_file(const std::string& path,
                            const nlohmann::ordered_json& j) {
  csv::write_file(path, j.dump(2) + "\n");
}

inline forest::Columns gather_columns(const features::FeatureMatrix& m,
                                      const std::vector<std::string>& names,
                                      const std::vector<std::uint32_t>& rows) {
  forest::Columns out;
  out.reserve(names.size());
  for (const auto& name : names) {
    const auto& col = m.column(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (std::uint32_t r : rows) v.push_back(col.values[r]);
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<double> gather(const std::vector<double>& v,
                                  const std::vector<std::uint32_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::uint32_t r : rows) out.push_back(v[r]);
  return out;
}

inline void write_signals_csv(const std::string& path,
                              const std::vector<Timestamp>& ts,
                              const std::vector<double>& preds,
                              const std::vector<signals::Signal>& sigs) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"timestamp", "prediction", "signal"});
  for (std::size_t i = 0; i < ts.size(); ++i) {
    w.row({timeutil::format_timestamp_ct(ts[i]), csv::format_double(preds[i]),
           signals::to_string(sigs[i])});
  }
  csv::write_file(path, out.str());
}

inline void write_trades_csv(const std::string& path,
                             const std::vector<sim::TradeRecord>& trades) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"timestamp", "side", "shares", "price", "value_traded",
         "portfolio_value"});
  for (const auto& t : trades) {
    w.row({timeutil::format_timestamp_ct(t.timestamp),
           signals::to_string(t.side), csv::format_double(t.shares),
           csv::format_double(t.price), csv::format_double(t.value_traded),
           csv::format_double(t.portfolio_value_before)});
  }
  csv::write_file(path, out.str());
}

inline void write_equity_csv(const std::string& path,
                             const sim::EquityCurve& curve) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"timestamp", "value", "return", "risk_free"});
  for (std::size_t i = 0; i < curve.value.size(); ++i) {
    w.row({timeutil::format_timestamp_ct(curve.timestamps[i]),
           csv::format_double(curve.value[i]), csv::format_double(curve.ret[i]),
           csv::format_double(curve.risk_free[i])});
  }
  csv::write_file(path, out.str());
}

inline void write_importance_csv(const std::string& path,
                                 const forest::ImportanceReport& report) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"feature", "importance"});
  for (std::size_t i = 0; i < report.feature_names.size(); ++i) {
    w.row({report.feature_names[i], csv::format_double(report.importances[i])});
  }
  csv::write_file(path, out.str());
}

/// Shared per-run state: filtered bars, the full feature matrix over all
/// families, per-minute risk-free rates, and the common valid-row split.
struct RunContext {
  BarSeries bars;
  features::FeatureMatrix matrix;
  std::vector<double> rf_per_minute;
  std::vector<std::uint32_t> valid;  // rows valid for every column + target
  pipeline::DatasetSplit split;      // over `valid`
  RunConfig config;
};

inline std::vector<features::Family> all_families() {
  std::vector<features::Family> fams;
  for (const auto& [fam, name] : features::family_registry()) fams.push_back(fam);
  return fams;
}

inline RunContext prepare_context(const RunManifest& manifest) {
  RunContext ctx;
  ctx.config = manifest.config;
  pipeline::CsvSchema schema;
  schema.naive_zone = ctx.config.input_timezone;
  BarSeries raw = pipeline::load_bars_file(manifest.bars_path, schema);
  ctx.bars = pipeline::filter_trading_hours(raw, ctx.config.trading_hours);
  if (ctx.bars.empty()) {
    throw Error(errc::empty_input, "no bars inside trading hours");
  }

  features::FeatureSpec spec;
  spec.indicator_config = ctx.config.indicator_config;
  spec.volz_window = ctx.config.volz_window;
  spec.horizon = ctx.config.horizon;
  ctx.matrix = features::build_feature_matrix(ctx.bars, all_families(), spec);

  ctx.rf_per_minute.assign(ctx.bars.size(), 0.0);
  if (!manifest.rates_path.empty()) {
    const auto curve = pipeline::load_rates_file(manifest.rates_path);
    for (std::size_t i = 0; i < ctx.bars.size(); ++i) {
      ctx.rf_per_minute[i] = pipeline::per_minute_risk_free(
          curve, ctx.bars[i].timestamp, ctx.config.yield_convention);
    }
  }

  // one joint valid-row set across all columns so every model trades the
  // same test window and the summary rows are comparable
  ctx.valid = ctx.matrix.valid_rows(ctx.matrix.column_names());
  if (ctx.valid.size() < 2) {
    throw Error(errc::insufficient_data,
                "not enough rows after warm-up; provide a longer series");
  }
  ctx.split = pipeline::chronological_split(ctx.valid.size(),
                                            ctx.config.split_ratio);
  return ctx;
}

inline std::vector<std::string> model_feature_names(const ModelConfig& model) {
  std::vector<std::string> names = features::base_feature_names();
  for (features::Family f : model.indicator_set) {
    for (auto& c : features::family_columns(f)) names.push_back(c);
  }
  return names;
}

struct ModelArtifacts {
  forest::ForestModel model;
  signals::SignalThresholds thresholds;
  std::vector<double> train_predictions;
  std::vector<double> test_predictions;
  std::vector<signals::Signal> test_signals;
  sim::SimulationResult simulation;
  metrics::PredictionMetrics train_metrics;
  metrics::PredictionMetrics test_metrics;
  forest::OobScore oob;
  metrics::RiskReport risk;
  forest::ImportanceReport importance;
  std::vector<Timestamp> test_timestamps;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Train/evaluate/simulate one model configuration against the shared
/// context. Pure compute; no file I/O.
inline ModelArtifacts run_model(const RunContext& ctx, const ModelConfig& model) {
  const RunConfig& cfg = ctx.config;

  // per-model horizon override re-derives the target and the valid rows
  std::vector<std::uint32_t> valid = ctx.valid;
  std::vector<double> target = ctx.matrix.target;
  pipeline::DatasetSplit split = ctx.split;
  if (model.horizon && *model.horizon != cfg.horizon) {
    features::FeatureSpec spec;
    spec.indicator_config = cfg.indicator_config;
    spec.volz_window = cfg.volz_window;
    spec.horizon = *model.horizon;
    auto alt =
        features::build_feature_matrix(ctx.bars, all_families(), spec);
    target = alt.target;
    valid = alt.valid_rows(alt.column_names());
    if (valid.size() < 2) {
      throw Error(errc::insufficient_data, "horizon leaves too few rows");
    }
    split = pipeline::chronological_split(valid.size(), cfg.split_ratio);
  }

  const std::vector<std::string> names = model_feature_names(model);
  const std::vector<std::uint32_t> train_rows(valid.begin(),
                                              valid.begin() + split.train_end);
  const std::vector<std::uint32_t> test_rows(valid.begin() + split.train_end,
                                             valid.end());

  ModelArtifacts art;
  art.n_train = train_rows.size();
  art.n_test = test_rows.size();

  const forest::Columns x_train = gather_columns(ctx.matrix, names, train_rows);
  const std::vector<double> y_train = gather(target, train_rows);
  forest::ForestParams params = model.forest_params.value_or(cfg.forest_params);
  if (!model.forest_params) params.random_seed = cfg.seed;
  art.model = forest::fit(x_train, y_train, params, names, cfg.threads);

  art.train_predictions = art.model.predict_rows(x_train);
  art.oob = forest::oob_score(art.model, x_train, y_train);
  art.thresholds = signals::fit_thresholds(art.train_predictions,
                                           cfg.signal_config.sell_quantile,
                                           cfg.signal_config.buy_quantile);
  art.importance = forest::feature_importance(art.model);
  art.train_metrics = metrics::prediction_metrics(y_train, art.train_predictions);

  const forest::Columns x_test = gather_columns(ctx.matrix, names, test_rows);
  const std::vector<double> y_test = gather(target, test_rows);
  art.test_predictions = art.model.predict_rows(x_test);
  art.test_metrics = metrics::prediction_metrics(y_test, art.test_predictions);
  art.test_signals =
      signals::classify_all(art.test_predictions, art.thresholds,
                            cfg.signal_config.equal_threshold_policy);

  std::vector<MinuteBar> test_bars;
  std::vector<double> test_rf;
  test_bars.reserve(test_rows.size());
  test_rf.reserve(test_rows.size());
  for (std::uint32_t r : test_rows) {
    test_bars.push_back(ctx.bars[r]);
    test_rf.push_back(ctx.rf_per_minute[r]);
    art.test_timestamps.push_back(ctx.bars[r].timestamp);
  }
  art.simulation = sim::simulate(test_bars, art.test_signals,
                                 model.sim_config.value_or(cfg.sim_config),
                                 test_rf);
  art.risk = metrics::risk_report(art.simulation.curve, cfg.tails);
  return art;
}

inline nlohmann::ordered_json metrics_json(const ModelConfig& model,
                                           const ModelArtifacts& art) {
  nlohmann::ordered_json j;
  j["model"] = model.name;
  j["features"] = model_feature_names(model);
  j["n_train"] = art.n_train;
  j["n_test"] = art.n_test;
  j["prediction"] = nlohmann::ordered_json{
      {"train", prediction_json(art.train_metrics)},
      {"test", prediction_json(art.test_metrics)},
  };
  nlohmann::ordered_json oob;
  oob["r2"] = opt_json(art.oob.r2);
  oob["rmse"] = art.oob.rmse;
  oob["coverage"] = art.oob.coverage;
  j["oob"] = std::move(oob);
  j["risk"] = risk_json(art.risk);
  std::size_t skipped = 0;
  for (const auto& t : art.simulation.trades) skipped += t.skipped ? 1 : 0;
  j["trades"] = nlohmann::ordered_json{
      {"count", art.simulation.trades.size()},
      {"skipped", skipped},
  };
  return j;
}

inline nlohmann::ordered_json model_config_json(const ModelConfig& model,
                                                const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["name"] = model.name;
  auto inds = nlohmann::ordered_json::array();
  for (features::Family f : model.indicator_set) {
    inds.push_back(features::to_string(f));
  }
  j["indicators"] = std::move(inds);
  j["horizon"] = model.horizon.value_or(cfg.horizon);
  return j;
}

inline void write_model_artifacts(const std::string& dir,
                                  const ModelConfig& model,
                                  const RunContext& ctx,
                                  const ModelArtifacts& art) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_json_file(dir + "/model.json", forest::to_json(art.model));
  nlohmann::ordered_json thr;
  thr["q33"] = art.thresholds.q33;
  thr["q66"] = art.thresholds.q66;
  thr["sell_quantile"] = ctx.config.signal_config.sell_quantile;
  thr["buy_quantile"] = ctx.config.signal_config.buy_quantile;
  write_json_file(dir + "/thresholds.json", thr);
  write_json_file(dir + "/model_config.json",
                  model_config_json(model, ctx.config));
  write_signals_csv(dir + "/signals.csv", art.test_timestamps,
                    art.test_predictions, art.test_signals);
  write_trades_csv(dir + "/trades.csv", art.simulation.trades);
  write_equity_csv(dir + "/equity.csv", art.simulation.curve);
  write_importance_csv(dir + "/importance.csv", art.importance);
  write_json_file(dir + "/metrics.json", metrics_json(model, art));
}

}  // namespace detail

inline constexpr const char* kBaselineName = "buy_and_hold";

/// Executes every model configuration plus the buy-and-hold baseline and
/// writes the artifact tree. A model failure is recorded and does not stop
/// the other models.
inline RunResult run(const RunManifest& manifest) {
  namespace fs = std::filesystem;
  if (!fs::exists(manifest.bars_path)) {
    throw Error(errc::io_error, "bars file '" + manifest.bars_path +
                                    "' does not exist");
  }
  if (!manifest.rates_path.empty() && !fs::exists(manifest.rates_path)) {
    throw Error(errc::io_error, "rates file '" + manifest.rates_path +
                                    "' does not exist");
  }
  detail::RunContext ctx = detail::prepare_context(manifest);
  std::vector<ModelConfig> models = ctx.config.models.empty()
                                        ? builtin_configs()
                                        : ctx.config.models;
  {
    std::set<std::string> names;
    for (const auto& m : models) {
      if (!names.insert(m.name).second) {
        throw Error(errc::invalid_config, "duplicate model name '" + m.name + "'");
      }
      if (m.name == kBaselineName) {
        throw Error(errc::invalid_config,
                    std::string("model name '") + kBaselineName + "' is reserved");
      }
    }
  }

  fs::create_directories(manifest.out_dir);
  RunResult result;
  result.out_dir = manifest.out_dir;
  result.outcomes.resize(models.size());

  const int jobs = std::max(1, ctx.config.jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= models.size()) break;
      ModelOutcome& outcome = result.outcomes[i];
      outcome.name = models[i].name;
      try {
        detail::ModelArtifacts art = detail::run_model(ctx, models[i]);
        detail::write_model_artifacts(
            manifest.out_dir + "/" + models[i].name, models[i], ctx, art);
        outcome.ok = true;
        outcome.final_value = art.risk.final_value;
        outcome.return_pct = art.risk.total_return * 100.0;
        outcome.sharpe = art.risk.sharpe;
        outcome.sortino = art.risk.sortino;
        outcome.rachev = art.risk.rachev;
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = std::string("model '") + models[i].name + "': " + e.what();
      }
    }
  };
  if (jobs == 1 || models.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const std::size_t n_workers =
        std::min(static_cast<std::size_t>(jobs), models.size());
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // benchmark over the same test window every model traded
  {
    std::vector<MinuteBar> test_bars;
    std::vector<double> test_rf;
    for (std::size_t i = ctx.split.train_end; i < ctx.valid.size(); ++i) {
      test_bars.push_back(ctx.bars[ctx.valid[i]]);
      test_rf.push_back(ctx.rf_per_minute[ctx.valid[i]]);
    }
    ModelOutcome baseline;
    baseline.name = kBaselineName;
    try {
      const sim::EquityCurve curve =
          sim::buy_and_hold_baseline(test_bars, ctx.config.sim_config, test_rf);
      const metrics::RiskReport risk =
          metrics::risk_report(curve, ctx.config.tails);
      const std::string dir = manifest.out_dir + "/" + kBaselineName;
      fs::create_directories(dir);
      detail::write_equity_csv(dir + "/equity.csv", curve);
      nlohmann::ordered_json j;
      j["model"] = kBaselineName;
      j["risk"] = detail::risk_json(risk);
      detail::write_json_file(dir + "/metrics.json", j);
      baseline.ok = true;
      baseline.final_value = risk.final_value;
      baseline.return_pct = risk.total_return * 100.0;
      baseline.sharpe = risk.sharpe;
      baseline.sortino = risk.sortino;
      baseline.rachev = risk.rachev;
    } catch (const std::exception& e) {
      baseline.ok = false;
      baseline.error = std::string("baseline: ") + e.what();
    }
    result.outcomes.push_back(baseline);
  }

  // cross-model summary, best final value first
  {
    std::vector<const ModelOutcome*> rows;
    for (const auto& o : result.outcomes) {
      if (o.ok) rows.push_back(&o);
    }
    std::sort(rows.begin(), rows.end(),
              [](const ModelOutcome* a, const ModelOutcome* b) {
                if (a->final_value != b->final_value) {
                  return a->final_value > b->final_value;
                }
                return a->name < b->name;
              });
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"model", "final_value", "return_pct", "sharpe", "sortino", "rachev"});
    for (const auto* o : rows) {
      w.row({o->name, csv::format_double(o->final_value),
             csv::format_double(o->return_pct), detail::opt_csv(o->sharpe),
             detail::opt_csv(o->sortino), detail::opt_csv(o->rachev)});
    }
    csv::write_file(manifest.out_dir + "/summary.csv", out.str());
  }

  // manifest with per-model status, for `report` and for provenance
  {
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["bars"] = manifest.bars_path;
    j["rates"] = manifest.rates_path;
    j["seed"] = ctx.config.seed;
    j["split_ratio"] = ctx.config.split_ratio;
    j["rows_total"] = ctx.matrix.rows();
    j["rows_valid"] = ctx.valid.size();
    j["rows_train"] = ctx.split.train_size();
    j["rows_test"] = ctx.split.test_size();
    auto jm = nlohmann::ordered_json::array();
    for (const auto& o : result.outcomes) {
      nlohmann::ordered_json e;
      e["name"] = o.name;
      e["status"] = o.ok ? "ok" : "error";
      if (!o.ok) e["error"] = o.error;
      jm.push_back(std::move(e));
    }
    j["models"] = std::move(jm);
    detail::write_json_file(manifest.out_dir + "/run_manifest.json", j);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Consolidates a completed run directory: a comparison table combining the
/// prediction and trading metrics, per-model feature importances in long
/// format, and the equity curves in long format for plotting.
inline void report(const std::string& out_dir, std::ostream& text) {
  namespace fs = std::filesystem;
  const std::string manifest_path = out_dir + "/run_manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(errc::incomplete_run, "missing run_manifest.json in '" +
                                          out_dir + "'");
  }
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    in >> manifest;
  }

  struct Row {
    std::string name;
    nlohmann::json metrics;
  };
  std::vector<Row> rows;
  for (const auto& jm : manifest.at("models")) {
    if (jm.at("status").get<std::string>() != "ok") continue;
    const std::string name = jm.at("name").get<std::string>();
    const std::string path = out_dir + "/" + name + "/metrics.json";
    if (!fs::exists(path)) {
      throw Error(errc::incomplete_run, "missing " + path);
    }
    Row r;
    r.name = name;
    std::ifstream in(path);
    in >> r.metrics;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(errc::incomplete_run, "run has no completed models");

  auto num = [](const nlohmann::json& j,
                std::initializer_list<const char*> path) -> std::string {
    const nlohmann::json* p = &j;
    for (const char* k : path) {
      if (!p->is_object() || !p->contains(k)) return std::string();
      p = &(*p)[k];
    }
    if (p->is_number()) return csv::format_double(p->get<double>());
    return std::string();
  };

  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    const std::string fa = num(a.metrics, {"risk", "final_value"});
    const std::string fb = num(b.metrics, {"risk", "final_value"});
    const double va = fa.empty() ? 0.0 : std::stod(fa);
    const double vb = fb.empty() ? 0.0 : std::stod(fb);
    if (va != vb) return va > vb;
    return a.name < b.name;
  });

  {
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"model", "rmse_train", "rmse_test", "mae_train", "mae_test",
           "r2_train", "r2_test", "final_value", "return_pct", "sharpe",
           "sortino", "rachev", "max_drawdown"});
    for (const auto& r : rows) {
      std::string return_pct;
      const std::string tr = num(r.metrics, {"risk", "total_return"});
      if (!tr.empty()) return_pct = csv::format_double(std::stod(tr) * 100.0);
      w.row({r.name,
             num(r.metrics, {"prediction", "train", "rmse"}),
             num(r.metrics, {"prediction", "test", "rmse"}),
             num(r.metrics, {"prediction", "train", "mae"}),
             num(r.metrics, {"prediction", "test", "mae"}),
             num(r.metrics, {"prediction", "train", "r2"}),
             num(r.metrics, {"prediction", "test", "r2"}),
             num(r.metrics, {"risk", "final_value"}), return_pct,
             num(r.metrics, {"risk", "sharpe"}),
             num(r.metrics, {"risk", "sortino"}),
             num(r.metrics, {"risk", "rachev"}),
             num(r.metrics, {"risk", "max_drawdown"})});
    }
    csv::write_file(out_dir + "/comparison.csv", out.str());
  }

  {
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"model", "feature", "importance"});
    for (const auto& r : rows) {
      const std::string path = out_dir + "/" + r.name + "/importance.csv";
      if (!fs::exists(path)) continue;  // baseline has no importances
      const csv::Table t = csv::parse_file(path);
      for (const auto& row : t.rows) {
        w.row({r.name, row[0], row[1]});
      }
    }
    csv::write_file(out_dir + "/importance.csv", out.str());
  }

  {
    std::ostringstream out;
    csv::Writer w(out);
    w.row({"model", "timestamp", "value"});
    for (const auto& r : rows) {
      const std::string path = out_dir + "/" + r.name + "/equity.csv";
      if (!fs::exists(path)) continue;
      const csv::Table t = csv::parse_file(path);
      for (const auto& row : t.rows) {
        w.row({r.name, row[0], row[1]});
      }
    }
    csv::write_file(out_dir + "/equity_long.csv", out.str());
  }

  text << "model                      final_value  return%   sharpe    "
          "sortino   rachev    r2_test\n";
  for (const auto& r : rows) {
    char buf[160];
    auto field = [&](std::initializer_list<const char*> path) {
      const std::string s = num(r.metrics, path);
      return s.empty() ? std::string("-") : s;
    };
    std::string return_pct = "-";
    const std::string tr = num(r.metrics, {"risk", "total_return"});
    if (!tr.empty()) return_pct = csv::format_double(std::stod(tr) * 100.0);
    std::snprintf(buf, sizeof(buf), "%-26s %-12.12s %-9.9s %-9.9s %-9.9s %-9.9s %-9.9s\n",
                  r.name.c_str(), field({"risk", "final_value"}).c_str(),
                  return_pct.c_str(), field({"risk", "sharpe"}).c_str(),
                  field({"risk", "sortino"}).c_str(),
                  field({"risk", "rachev"}).c_str(),
                  field({"prediction", "test", "r2"}).c_str());
    text << buf;
  }
}

}  // namespace mbt::orch
