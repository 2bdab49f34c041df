#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mbt/errors.hpp"
#include "mbt/rng.hpp"

#include "json.hpp"

namespace mbt::forest {

/// Feature matrix as dense columns; every column has one value per row and no
/// masked cells (callers drop warm-up rows first).
using Columns = std::vector<std::vector<double>>;

enum class MaxFeatures { log2, sqrt_features, all };

inline const char* to_string(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::log2: return "log2";
    case MaxFeatures::sqrt_features: return "sqrt";
    case MaxFeatures::all: return "all";
  }
  return "?";
}

inline MaxFeatures max_features_from_string(const std::string& s) {
  if (s == "log2") return MaxFeatures::log2;
  if (s == "sqrt") return MaxFeatures::sqrt_features;
  if (s == "all") return MaxFeatures::all;
  throw Error(errc::invalid_config, "unknown max_features '" + s + "'");
}

struct ForestParams {
  int n_estimators = 100;
  int max_depth = 60;
  int min_samples_split = 10;
  int min_samples_leaf = 1;
  MaxFeatures max_features = MaxFeatures::log2;
  std::uint64_t random_seed = 42;

  void validate() const {
    if (n_estimators < 1) throw Error(errc::invalid_config, "n_estimators >= 1");
    if (max_depth < 1) throw Error(errc::invalid_config, "max_depth >= 1");
    if (min_samples_split < 2) {
      throw Error(errc::invalid_config, "min_samples_split >= 2");
    }
    if (min_samples_leaf < 1) {
      throw Error(errc::invalid_config, "min_samples_leaf >= 1");
    }
  }

  int features_per_split(std::size_t p) const {
    switch (max_features) {
      case MaxFeatures::log2:
        return std::max(1, static_cast<int>(std::log2(static_cast<double>(p))));
      case MaxFeatures::sqrt_features:
        return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
      case MaxFeatures::all:
        return static_cast<int>(p);
    }
    return 1;
  }
};

/// Flat node storage; `feature < 0` marks a leaf. Thresholds partition the
/// whole real line: x[feature] <= threshold routes left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf prediction: mean of node targets
  double delta_mse = 0.0;  // impurity decrease recorded at internal nodes
  std::uint32_t samples = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0) {
      i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
              ? nodes[i].left
              : nodes[i].right;
    }
    return nodes[i].value;
  }

  int depth() const {
    // iterative DFS over (node, depth)
    int best = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (nodes[i].feature >= 0) {
        stack.push_back({nodes[i].left, d + 1});
        stack.push_back({nodes[i].right, d + 1});
      }
    }
    return best;
  }
};

struct SplitResult {
  int feature = -1;  // < 0 means no usable split
  double threshold = 0.0;
  double delta_mse = 0.0;

  bool found() const noexcept { return feature >= 0; }
};

/// Greedy best split over the given candidate features. Thresholds are the
/// midpoints of consecutive distinct sorted values; the winner maximizes
/// MSE(parent) - weighted child MSE. Ties break toward the lowest feature
/// index, then the lowest threshold. Returns no split when the best decrease
/// is <= 0 or min_samples_leaf cannot be honored.
inline SplitResult best_split(const Columns& x, const std::vector<double>& y,
                              const std::vector<std::uint32_t>& rows,
                              const std::vector<int>& feature_subset,
                              int min_samples_leaf) {
  const std::size_t n = rows.size();
  SplitResult best;
  if (n < 2) return best;

  double sum = 0.0, sum_sq = 0.0;
  for (std::uint32_t r : rows) {
    sum += y[r];
    sum_sq += y[r] * y[r];
  }
  const double nn = static_cast<double>(n);
  const double parent_mse = sum_sq / nn - (sum / nn) * (sum / nn);

  std::vector<std::pair<double, double>> pts(n);  // (feature value, target)
  for (int j : feature_subset) {
    const auto& col = x[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < n; ++i) pts[i] = {col[rows[i]], y[rows[i]]};
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      left_sum += pts[k - 1].second;
      left_sq += pts[k - 1].second * pts[k - 1].second;
      if (pts[k - 1].first == pts[k].first) continue;  // not a value boundary
      const std::size_t n_left = k;
      const std::size_t n_right = n - k;
      if (n_left < static_cast<std::size_t>(min_samples_leaf) ||
          n_right < static_cast<std::size_t>(min_samples_leaf)) {
        continue;
      }
      const double nl = static_cast<double>(n_left);
      const double nr = static_cast<double>(n_right);
      const double right_sum = sum - left_sum;
      const double right_sq = sum_sq - left_sq;
      const double mse_l = left_sq / nl - (left_sum / nl) * (left_sum / nl);
      const double mse_r = right_sq / nr - (right_sum / nr) * (right_sum / nr);
      const double gain = parent_mse - (nl * mse_l + nr * mse_r) / nn;
      if (gain <= 0.0 || gain <= best.delta_mse) continue;
      double threshold =
          pts[k - 1].first + (pts[k].first - pts[k - 1].first) / 2.0;
      // midpoint may round up to the right value; clamp so `<=` keeps the
      // left block intact
      if (threshold >= pts[k].first) threshold = pts[k - 1].first;
      best.feature = j;
      best.threshold = threshold;
      best.delta_mse = gain;
    }
  }
  return best;
}

struct OobScore {
  std::optional<double> r2;  // empty when target variance is zero
  double rmse = 0.0;
  double coverage = 0.0;  // fraction of rows with at least one OOB tree
};

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> importances;  // sums to 1 unless the forest never split
};

struct ForestModel {
  ForestParams params;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;
  /// Per tree, per training row: number of bootstrap draws (0 = out-of-bag).
  /// Not serialized; reloaded models predict but cannot re-score OOB.
  std::vector<std::vector<std::uint32_t>> bootstrap_counts;
  std::size_t n_features = 0;
  std::size_t n_rows = 0;

  bool fitted() const noexcept { return !trees.empty(); }

  double predict(const std::vector<double>& x) const {
    if (!fitted()) throw Error(errc::model_not_fitted, "call fit first");
    if (x.size() != n_features) {
      throw Error(errc::dimension_mismatch, "feature vector length mismatch");
    }
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
  }

  /// Row-wise prediction over column data.
  std::vector<double> predict_rows(const Columns& x) const {
    if (!fitted()) throw Error(errc::model_not_fitted, "call fit first");
    if (x.size() != n_features) {
      throw Error(errc::dimension_mismatch, "column count mismatch");
    }
    const std::size_t n = x.empty() ? 0 : x[0].size();
    std::vector<double> row(n_features);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n_features; ++j) row[j] = x[j][i];
      out[i] = predict(row);
    }
    return out;
  }
};

namespace detail {

struct TreeBuilder {
  const Columns& x;
  const std::vector<double>& y;
  const ForestParams& params;
  int m_try;
  Rng rng;
  Tree tree;
  std::vector<int> feature_pool;

  TreeBuilder(const Columns& x_, const std::vector<double>& y_,
              const ForestParams& p_, Rng rng_)
      : x(x_), y(y_), params(p_), m_try(p_.features_per_split(x_.size())),
        rng(rng_) {
    feature_pool.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      feature_pool[j] = static_cast<int>(j);
    }
  }

  /// Candidate features for one node: m_try sampled without replacement,
  /// returned in ascending order so tie-breaking is by feature index.
  std::vector<int> sample_features() {
    const std::size_t p = feature_pool.size();
    const std::size_t m = std::min<std::size_t>(m_try, p);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng.bounded(p - i);
      std::swap(feature_pool[i], feature_pool[j]);
    }
    std::vector<int> subset(feature_pool.begin(), feature_pool.begin() + m);
    std::sort(subset.begin(), subset.end());
    return subset;
  }

  int build(std::vector<std::uint32_t>& rows, int depth) {
    const std::size_t n = rows.size();
    double sum = 0.0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (std::uint32_t r : rows) {
      sum += y[r];
      y_min = std::min(y_min, y[r]);
      y_max = std::max(y_max, y[r]);
    }

    TreeNode node;
    node.samples = static_cast<std::uint32_t>(n);
    node.value = sum / static_cast<double>(n);

    const bool pure = y_min == y_max;
    const bool stop = depth >= params.max_depth ||
                      n < static_cast<std::size_t>(params.min_samples_split) ||
                      pure;
    SplitResult split;
    if (!stop) {
      split = best_split(x, y, rows, sample_features(), params.min_samples_leaf);
    }
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (stop || !split.found()) return index;

    std::vector<std::uint32_t> left_rows, right_rows;
    left_rows.reserve(n);
    right_rows.reserve(n);
    const auto& col = x[static_cast<std::size_t>(split.feature)];
    for (std::uint32_t r : rows) {
      (col[r] <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    tree.nodes[index].feature = split.feature;
    tree.nodes[index].threshold = split.threshold;
    tree.nodes[index].delta_mse = split.delta_mse;
    tree.nodes[index].left = left;
    tree.nodes[index].right = right;
    return index;
  }
};

inline void fit_one_tree(const Columns& x, const std::vector<double>& y,
                         const ForestParams& params, std::size_t tree_index,
                         Tree& out_tree, std::vector<std::uint32_t>& out_counts) {
  const std::size_t n = y.size();
  Rng rng = Rng::substream(params.random_seed, tree_index);
  out_counts.assign(n, 0);
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::uint32_t>(rng.bounded(n));
    rows[i] = r;
    ++out_counts[r];
  }
  TreeBuilder builder(x, y, params, rng);
  builder.build(rows, 0);
  out_tree = std::move(builder.tree);
}

}  // namespace detail

/// Fits a bagged forest of CART regression trees. Each tree draws its
/// bootstrap and per-node feature subsets from an RNG substream keyed by
/// (seed, tree index), so serial and parallel fits produce identical models.
inline ForestModel fit(const Columns& x, const std::vector<double>& y,
                       const ForestParams& params = {},
                       std::vector<std::string> feature_names = {},
                       int threads = 0) {
  params.validate();
  if (x.empty()) throw Error(errc::dimension_mismatch, "need >= 1 feature");
  const std::size_t n = y.size();
  if (n == 0) throw Error(errc::insufficient_data, "no training rows");
  for (const auto& col : x) {
    if (col.size() != n) {
      throw Error(errc::dimension_mismatch, "column length != target length");
    }
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      feature_names.push_back("f" + std::to_string(j));
    }
  }
  if (feature_names.size() != x.size()) {
    throw Error(errc::dimension_mismatch, "feature name count mismatch");
  }

  ForestModel model;
  model.params = params;
  model.feature_names = std::move(feature_names);
  model.n_features = x.size();
  model.n_rows = n;
  const std::size_t b = static_cast<std::size_t>(params.n_estimators);
  model.trees.resize(b);
  model.bootstrap_counts.resize(b);

  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  const std::size_t workers = std::min<std::size_t>(threads, b);
  if (workers <= 1) {
    for (std::size_t t = 0; t < b; ++t) {
      detail::fit_one_tree(x, y, params, t, model.trees[t],
                           model.bootstrap_counts[t]);
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t t = w; t < b; t += workers) {
          detail::fit_one_tree(x, y, params, t, model.trees[t],
                               model.bootstrap_counts[t]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

/// Out-of-bag validation: each row is predicted only by trees whose bootstrap
/// excluded it. Rows in every bootstrap are skipped and reflected in
/// `coverage`.
inline OobScore oob_score(const ForestModel& model, const Columns& x,
                          const std::vector<double>& y) {
  if (!model.fitted() || model.bootstrap_counts.empty()) {
    throw Error(errc::model_not_fitted, "no bootstrap bookkeeping");
  }
  const std::size_t n = y.size();
  if (n != model.n_rows || x.size() != model.n_features) {
    throw Error(errc::dimension_mismatch, "data does not match fitted shape");
  }

  std::vector<double> row(model.n_features);
  double sse = 0.0;
  double sum_y = 0.0;
  std::vector<double> covered_y;
  std::vector<double> covered_pred;
  covered_y.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum_pred = 0.0;
    std::size_t used = 0;
    bool row_loaded = false;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (model.bootstrap_counts[t][i] != 0) continue;
      if (!row_loaded) {
        for (std::size_t j = 0; j < model.n_features; ++j) row[j] = x[j][i];
        row_loaded = true;
      }
      sum_pred += model.trees[t].predict(row);
      ++used;
    }
    if (used == 0) continue;
    const double pred = sum_pred / static_cast<double>(used);
    covered_y.push_back(y[i]);
    covered_pred.push_back(pred);
    sum_y += y[i];
    const double e = y[i] - pred;
    sse += e * e;
  }

  OobScore score;
  const std::size_t m = covered_y.size();
  score.coverage = static_cast<double>(m) / static_cast<double>(n);
  if (m == 0) return score;
  score.rmse = std::sqrt(sse / static_cast<double>(m));
  const double mean_y = sum_y / static_cast<double>(m);
  double sst = 0.0;
  for (double v : covered_y) sst += (v - mean_y) * (v - mean_y);
  if (sst > 0.0) score.r2 = 1.0 - sse / sst;
  return score;
}

/// Mean decrease in impurity: each split contributes its MSE decrease scaled
/// by the fraction of the tree's samples reaching the node; per-feature sums
/// are averaged over trees and normalized to total 1.
inline ImportanceReport feature_importance(const ForestModel& model) {
  if (!model.fitted()) throw Error(errc::model_not_fitted, "call fit first");
  ImportanceReport report;
  report.feature_names = model.feature_names;
  report.importances.assign(model.n_features, 0.0);
  for (const auto& tree : model.trees) {
    const double root_samples = static_cast<double>(tree.nodes[0].samples);
    for (const auto& node : tree.nodes) {
      if (node.feature < 0) continue;
      report.importances[static_cast<std::size_t>(node.feature)] +=
          (static_cast<double>(node.samples) / root_samples) * node.delta_mse;
    }
  }
  double total = 0.0;
  for (double& v : report.importances) {
    v /= static_cast<double>(model.trees.size());
    total += v;
  }
  if (total > 0.0) {
    for (double& v : report.importances) v /= total;
  }
  return report;
}

/// JSON model dump. Doubles are written with shortest-round-trip formatting,
/// so reloaded models predict bit-identically. Bootstrap bookkeeping is not
/// persisted.
inline nlohmann::ordered_json to_json(const ForestModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "mbt-forest";
  j["version"] = 1;
  j["params"] = {
      {"n_estimators", model.params.n_estimators},
      {"max_depth", model.params.max_depth},
      {"min_samples_split", model.params.min_samples_split},
      {"min_samples_leaf", model.params.min_samples_leaf},
      {"max_features", to_string(model.params.max_features)},
      {"random_seed", model.params.random_seed},
  };
  j["feature_names"] = model.feature_names;
  j["n_rows"] = model.n_rows;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value,
                       n.delta_mse, n.samples});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

inline ForestModel from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "mbt-forest") {
    throw Error(errc::invalid_config, "not a forest model dump");
  }
  ForestModel model;
  const auto& p = j.at("params");
  model.params.n_estimators = p.at("n_estimators").get<int>();
  model.params.max_depth = p.at("max_depth").get<int>();
  model.params.min_samples_split = p.at("min_samples_split").get<int>();
  model.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
  model.params.max_features =
      max_features_from_string(p.at("max_features").get<std::string>());
  model.params.random_seed = p.at("random_seed").get<std::uint64_t>();
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  model.n_features = model.feature_names.size();
  model.n_rows = j.at("n_rows").get<std::size_t>();
  for (const auto& jt : j.at("trees")) {
    Tree tree;
    for (const auto& jn : jt.at("nodes")) {
      TreeNode n;
      n.feature = jn.at(0).get<int>();
      n.threshold = jn.at(1).get<double>();
      n.left = jn.at(2).get<int>();
      n.right = jn.at(3).get<int>();
      n.value = jn.at(4).get<double>();
      n.delta_mse = jn.at(5).get<double>();
      n.samples = jn.at(6).get<std::uint32_t>();
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) {
      throw Error(errc::invalid_config, "empty tree in model dump");
    }
    model.trees.push_back(std::move(tree));
  }
  if (model.trees.empty()) {
    throw Error(errc::invalid_config, "model dump has no trees");
  }
  return model;
}

}  // namespace mbt::forest
