// Batch CLI for the minute-bar backtesting engine.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mbt/mbt.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string bars_path;
  std::string rates_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> models;
  std::optional<int> jobs;
  std::optional<int> threads;
};

mbt::orch::RunConfig load_config(const CommonFlags& flags) {
  mbt::orch::RunConfig config = mbt::orch::load_run_config(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.threads) config.threads = *flags.threads;
  return config;
}

std::vector<mbt::orch::ModelConfig> select_models(
    const mbt::orch::RunConfig& config, const std::vector<std::string>& names) {
  std::vector<mbt::orch::ModelConfig> all =
      config.models.empty() ? mbt::orch::builtin_configs() : config.models;
  if (names.empty()) return all;
  std::vector<mbt::orch::ModelConfig> out;
  for (const auto& name : names) {
    bool found = false;
    for (const auto& m : all) {
      if (m.name == name) {
        out.push_back(m);
        found = true;
        break;
      }
    }
    if (!found) {
      throw mbt::Error(mbt::errc::invalid_config,
                       "unknown model '" + name + "'");
    }
  }
  return out;
}

int cmd_synth(const CommonFlags& flags, const mbt::synth::SynthParams& params,
              const std::string& rates_out) {
  if (flags.out_path.empty()) {
    throw mbt::Error(mbt::errc::invalid_config, "--out is required");
  }
  const mbt::BarSeries bars = mbt::synth::generate_bars(params);
  {
    std::ostringstream out;
    mbt::synth::write_bars_csv(bars, out);
    mbt::csv::write_file(flags.out_path, out.str());
  }
  if (!rates_out.empty()) {
    const auto curve = mbt::synth::generate_rates(params);
    std::ostringstream out;
    mbt::synth::write_rates_csv(curve, out);
    mbt::csv::write_file(rates_out, out.str());
  }
  std::cout << "wrote " << bars.size() << " bars to " << flags.out_path;
  if (!rates_out.empty()) std::cout << " and rates to " << rates_out;
  std::cout << "\n";
  return 0;
}

int cmd_features(const CommonFlags& flags) {
  if (flags.bars_path.empty() || flags.out_path.empty()) {
    throw mbt::Error(mbt::errc::invalid_config, "--bars and --out are required");
  }
  const mbt::orch::RunConfig config = load_config(flags);
  mbt::pipeline::CsvSchema schema;
  schema.naive_zone = config.input_timezone;
  mbt::BarSeries bars = mbt::pipeline::filter_trading_hours(
      mbt::pipeline::load_bars_file(flags.bars_path, schema),
      config.trading_hours);
  mbt::features::FeatureSpec spec;
  spec.indicator_config = config.indicator_config;
  spec.volz_window = config.volz_window;
  spec.horizon = config.horizon;
  const auto matrix = mbt::features::build_feature_matrix(
      bars, mbt::orch::detail::all_families(), spec);
  std::ostringstream out;
  mbt::features::write_csv(matrix, out);
  mbt::csv::write_file(flags.out_path, out.str());
  std::cout << "wrote " << matrix.rows() << " feature rows to "
            << flags.out_path << "\n";
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  if (flags.bars_path.empty() || flags.out_path.empty()) {
    throw mbt::Error(mbt::errc::invalid_config, "--bars and --out are required");
  }
  const mbt::orch::RunConfig config = load_config(flags);
  mbt::orch::RunManifest manifest{flags.bars_path, flags.rates_path,
                                  flags.out_path, config};
  const auto ctx = mbt::orch::detail::prepare_context(manifest);
  const auto models = select_models(config, flags.models);
  int failures = 0;
  for (const auto& model : models) {
    try {
      const auto art = mbt::orch::detail::run_model(ctx, model);
      const std::string dir = flags.out_path + "/" + model.name;
      fs::create_directories(dir);
      mbt::orch::detail::write_json_file(dir + "/model.json",
                                         mbt::forest::to_json(art.model));
      ordered_json thr;
      thr["q33"] = art.thresholds.q33;
      thr["q66"] = art.thresholds.q66;
      thr["sell_quantile"] = config.signal_config.sell_quantile;
      thr["buy_quantile"] = config.signal_config.buy_quantile;
      mbt::orch::detail::write_json_file(dir + "/thresholds.json", thr);
      mbt::orch::detail::write_json_file(
          dir + "/model_config.json",
          mbt::orch::detail::model_config_json(model, config));
      mbt::orch::detail::write_importance_csv(dir + "/importance.csv",
                                              art.importance);
      ordered_json j;
      j["model"] = model.name;
      j["features"] = mbt::orch::detail::model_feature_names(model);
      j["n_train"] = art.n_train;
      j["prediction"] = ordered_json{
          {"train", mbt::orch::detail::prediction_json(art.train_metrics)}};
      ordered_json oob;
      oob["r2"] = mbt::orch::detail::opt_json(art.oob.r2);
      oob["rmse"] = art.oob.rmse;
      oob["coverage"] = art.oob.coverage;
      j["oob"] = std::move(oob);
      mbt::orch::detail::write_json_file(dir + "/metrics.json", j);
      std::cout << "trained " << model.name << " (train rows " << art.n_train
                << ")\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "model '" << model.name << "' failed: " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_simulate(const CommonFlags& flags) {
  if (flags.bars_path.empty() || flags.out_path.empty()) {
    throw mbt::Error(mbt::errc::invalid_config, "--bars and --out are required");
  }
  const mbt::orch::RunConfig config = load_config(flags);
  mbt::orch::RunManifest manifest{flags.bars_path, flags.rates_path,
                                  flags.out_path, config};
  const auto ctx = mbt::orch::detail::prepare_context(manifest);

  std::vector<std::string> names = flags.models;
  if (names.empty()) {
    for (const auto& entry : fs::directory_iterator(flags.out_path)) {
      if (entry.is_directory() && fs::exists(entry.path() / "model.json")) {
        names.push_back(entry.path().filename().string());
      }
    }
    std::sort(names.begin(), names.end());
  }
  if (names.empty()) {
    throw mbt::Error(mbt::errc::incomplete_run,
                     "no trained models under '" + flags.out_path + "'");
  }

  int failures = 0;
  for (const auto& name : names) {
    const std::string dir = flags.out_path + "/" + name;
    try {
      nlohmann::json jm;
      {
        std::ifstream in(dir + "/model.json");
        if (!in) {
          throw mbt::Error(mbt::errc::incomplete_run,
                           "missing model.json for '" + name + "'");
        }
        in >> jm;
      }
      const mbt::forest::ForestModel model = mbt::forest::from_json(jm);
      nlohmann::json jt;
      {
        std::ifstream in(dir + "/thresholds.json");
        if (!in) {
          throw mbt::Error(mbt::errc::incomplete_run,
                           "missing thresholds.json for '" + name + "'");
        }
        in >> jt;
      }
      mbt::signals::SignalThresholds thresholds{jt.at("q33").get<double>(),
                                                jt.at("q66").get<double>()};

      // horizon may differ from the global config; model_config.json has it
      std::vector<std::uint32_t> valid = ctx.valid;
      mbt::pipeline::DatasetSplit split = ctx.split;
      {
        std::ifstream in(dir + "/model_config.json");
        if (in) {
          nlohmann::json jc;
          in >> jc;
          const int horizon = jc.value("horizon", config.horizon);
          if (horizon != config.horizon) {
            mbt::features::FeatureSpec spec;
            spec.indicator_config = config.indicator_config;
            spec.volz_window = config.volz_window;
            spec.horizon = horizon;
            auto alt = mbt::features::build_feature_matrix(
                ctx.bars, mbt::orch::detail::all_families(), spec);
            valid = alt.valid_rows(alt.column_names());
            split = mbt::pipeline::chronological_split(valid.size(),
                                                       config.split_ratio);
          }
        }
      }
      const std::vector<std::uint32_t> test_rows(valid.begin() + split.train_end,
                                                 valid.end());
      const auto x_test = mbt::orch::detail::gather_columns(
          ctx.matrix, model.feature_names, test_rows);
      const auto preds = model.predict_rows(x_test);
      const auto sigs = mbt::signals::classify_all(
          preds, thresholds, config.signal_config.equal_threshold_policy);

      std::vector<mbt::MinuteBar> test_bars;
      std::vector<double> test_rf;
      std::vector<mbt::Timestamp> ts;
      for (auto r : test_rows) {
        test_bars.push_back(ctx.bars[r]);
        test_rf.push_back(ctx.rf_per_minute[r]);
        ts.push_back(ctx.bars[r].timestamp);
      }
      const auto sim_result =
          mbt::sim::simulate(test_bars, sigs, config.sim_config, test_rf);
      const auto risk = mbt::metrics::risk_report(sim_result.curve, config.tails);

      mbt::orch::detail::write_signals_csv(dir + "/signals.csv", ts, preds, sigs);
      mbt::orch::detail::write_trades_csv(dir + "/trades.csv", sim_result.trades);
      mbt::orch::detail::write_equity_csv(dir + "/equity.csv", sim_result.curve);

      ordered_json metrics_doc;
      {
        std::ifstream in(dir + "/metrics.json");
        if (in) in >> metrics_doc;
      }
      if (!metrics_doc.is_object()) metrics_doc = ordered_json::object();
      metrics_doc["model"] = name;
      std::vector<double> y_test;
      for (auto r : test_rows) y_test.push_back(ctx.matrix.target[r]);
      metrics_doc["prediction"]["test"] = mbt::orch::detail::prediction_json(
          mbt::metrics::prediction_metrics(y_test, preds));
      metrics_doc["risk"] = mbt::orch::detail::risk_json(risk);
      std::size_t skipped = 0;
      for (const auto& t : sim_result.trades) skipped += t.skipped ? 1 : 0;
      metrics_doc["trades"] =
          ordered_json{{"count", sim_result.trades.size()}, {"skipped", skipped}};
      mbt::orch::detail::write_json_file(dir + "/metrics.json", metrics_doc);
      std::cout << "simulated " << name << ": final value "
                << mbt::csv::format_double(risk.final_value) << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "model '" << name << "' failed: " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_run_all(const CommonFlags& flags) {
  if (flags.bars_path.empty() || flags.out_path.empty()) {
    throw mbt::Error(mbt::errc::invalid_config, "--bars and --out are required");
  }
  mbt::orch::RunConfig config = load_config(flags);
  config.models = select_models(config, flags.models);
  mbt::orch::RunManifest manifest{flags.bars_path, flags.rates_path,
                                  flags.out_path, config};
  const mbt::orch::RunResult result = mbt::orch::run(manifest);
  for (const auto& o : result.outcomes) {
    if (o.ok) {
      std::cout << o.name << ": final value "
                << mbt::csv::format_double(o.final_value) << " ("
                << mbt::csv::format_double(o.return_pct) << "%)\n";
    } else {
      std::cerr << o.error << "\n";
    }
  }
  std::cout << "summary: " << result.out_dir << "/summary.csv\n";
  return result.all_ok() ? 0 : 1;
}

int cmd_report(const CommonFlags& flags) {
  if (flags.out_path.empty()) {
    throw mbt::Error(mbt::errc::invalid_config, "--out is required");
  }
  mbt::orch::report(flags.out_path, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minute-bar backtesting engine: indicator features, random "
               "forest signals, turnover-capped simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mbt::orch::kToolVersion);

  CommonFlags flags;
  mbt::synth::SynthParams synth_params;
  std::string rates_out;

  auto add_common = [&](CLI::App* cmd, bool bars, bool rates) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    if (bars) cmd->add_option("--bars", flags.bars_path, "bars CSV");
    if (rates) cmd->add_option("--rates", flags.rates_path, "risk-free CSV");
    cmd->add_option("--out", flags.out_path, "output path");
    cmd->add_option("--seed", flags.seed, "RNG seed override");
    cmd->add_option("--models", flags.models, "model names")->delimiter(',');
    cmd->add_option("--jobs", flags.jobs, "parallel model workers");
    cmd->add_option("--threads", flags.threads, "threads per forest fit");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic bars");
  synth->add_option("--out", flags.out_path, "bars CSV to write")->required();
  synth->add_option("--rates-out", rates_out, "risk-free CSV to write");
  synth->add_option("--days", synth_params.days, "trading days");
  synth->add_option("--start-date", synth_params.start_date, "first day");
  synth->add_option("--start-price", synth_params.start_price, "initial price");
  synth->add_option("--drift", synth_params.drift, "per-minute log drift");
  synth->add_option("--vol", synth_params.vol, "per-minute log stddev");
  synth->add_option("--base-volume", synth_params.base_volume, "volume level");
  synth->add_option("--volume-vol", synth_params.volume_vol, "volume sigma");
  synth->add_option("--symbol", synth_params.symbol, "symbol name");
  synth->add_option("--seed", synth_params.seed, "RNG seed");

  CLI::App* features = app.add_subcommand("features", "export feature matrix");
  add_common(features, true, false);

  CLI::App* train = app.add_subcommand("train", "fit forests and thresholds");
  add_common(train, true, true);

  CLI::App* simulate =
      app.add_subcommand("simulate", "trade trained models on the test window");
  add_common(simulate, true, true);

  CLI::App* run_all = app.add_subcommand(
      "run-all", "full pipeline for every model configuration");
  add_common(run_all, true, true);

  CLI::App* report = app.add_subcommand("report", "consolidate a run directory");
  report->add_option("--out", flags.out_path, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(flags, synth_params, rates_out);
    if (features->parsed()) return cmd_features(flags);
    if (train->parsed()) return cmd_train(flags);
    if (simulate->parsed()) return cmd_simulate(flags);
    if (run_all->parsed()) return cmd_run_all(flags);
    if (report->parsed()) return cmd_report(flags);
  } catch (const mbt::Error& e) {
    nlohmann::json err;
    err["error"] = mbt::errc_name(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = "Unexpected";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
