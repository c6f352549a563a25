#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/matrix.hpp"
#include "ecuhealth/metrics.hpp"
#include "ecuhealth/random.hpp"

namespace ecuhealth {

// ---------------------------------------------------------------------------
// Regression trees

/// Flattened CART node. Internal nodes send value <= threshold left; their
/// children are always adjacent (right == left + 1).
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  /// Mean target of a leaf's training samples; zero on internal nodes.
  double value = 0.0;

  bool is_leaf() const noexcept { return feature == kLeaf; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Node 0 is the root.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                            : n.right);
    }
    return nodes[i].value;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
        stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
      }
    }
    return best;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct TreeParams {
  /// Candidate features examined per node; clamped to the candidate count.
  std::size_t features_per_split = std::numeric_limits<std::size_t>::max();
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  /// Reduction in the sum of squared errors.
  double gain = 0.0;
};

namespace detail {

/// True when `gain` beats the incumbent by more than rounding noise. Splits
/// that tie, e.g. two features inducing the same partition, keep the one
/// found first: the earlier feature, then the lower threshold.
inline bool improves(double gain, double incumbent) {
  return gain > incumbent + 1e-12 * std::max(1.0, std::abs(incumbent));
}

/// Midpoint between consecutive distinct values, kept strictly below `hi`.
inline double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

/// Best threshold on one feature for the given rows, or nothing when no
/// threshold leaves min_leaf samples on both sides.
inline std::optional<Split> best_split_on(const Matrix& x, std::span<const double> y,
                                          std::span<const std::size_t> rows, std::size_t feature,
                                          std::size_t min_leaf,
                                          std::vector<std::pair<double, double>>& scratch) {
  scratch.clear();
  double total = 0.0;
  for (auto r : rows) {
    scratch.emplace_back(x(r, feature), y[r]);
    total += y[r];
  }
  std::sort(scratch.begin(), scratch.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t n = scratch.size();
  const double base = total * total / static_cast<double>(n);
  std::optional<Split> best;
  double left_sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    left_sum += scratch[i].second;
    if (scratch[i].first == scratch[i + 1].first) continue;
    const std::size_t nl = i + 1;
    const std::size_t nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    const double right_sum = total - left_sum;
    const double gain = left_sum * left_sum / static_cast<double>(nl) +
                        right_sum * right_sum / static_cast<double>(nr) - base;
    if (!best || improves(gain, best->gain)) {
      best = Split{feature, split_threshold(scratch[i].first, scratch[i + 1].first), gain};
    }
  }
  return best;
}

}  // namespace detail

/// Greedy CART with sum-of-squared-error reduction. At each node a
/// seed-chosen subset of `features` is searched exhaustively over midpoint
/// thresholds. Growth stops at max_depth, when a node cannot be split into
/// two children of min_samples_leaf, or when its targets are all equal.
/// `rows` may repeat (bootstrap samples).
inline RegressionTree fit_tree(const Matrix& x, std::span<const double> y,
                               std::span<const std::size_t> rows,
                               std::span<const std::size_t> features, const TreeParams& params,
                               std::uint64_t seed) {
  if (rows.empty()) throw Error(Errc::empty_samples, "cannot fit a tree on no samples");
  if (y.size() != x.rows()) throw Error(Errc::length_mismatch, "targets do not match sample rows");
  if (features.empty()) throw Error(Errc::invalid_argument, "no candidate features");
  if (params.min_samples_leaf < 1 || params.features_per_split < 1) {
    throw Error(Errc::invalid_argument, "tree parameters must be at least 1");
  }
  for (auto f : features) {
    if (f >= x.cols()) throw Error(Errc::invalid_argument, "feature index out of range");
  }

  Rng rng(seed);
  RegressionTree tree;
  std::vector<std::size_t> work(rows.begin(), rows.end());
  std::vector<std::size_t> candidates(features.begin(), features.end());
  std::vector<std::pair<double, double>> scratch;
  const std::size_t per_split = std::min(params.features_per_split, candidates.size());

  struct Pending {
    std::size_t node, begin, end, depth;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, work.size(), 0});

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const std::span<std::size_t> node_rows(work.data() + p.begin, p.end - p.begin);

    double sum = 0.0;
    bool constant = true;
    const double first = y[node_rows.front()];
    for (auto r : node_rows) {
      sum += y[r];
      constant = constant && y[r] == first;
    }
    const double mean = sum / static_cast<double>(node_rows.size());

    if (constant || p.depth >= params.max_depth ||
        node_rows.size() < 2 * params.min_samples_leaf) {
      tree.nodes[p.node].value = mean;
      continue;
    }

    // Partial Fisher-Yates: the first per_split entries become the sample.
    // With every feature in play the given order is kept.
    if (per_split < candidates.size()) {
      for (std::size_t i = 0; i < per_split; ++i) {
        std::swap(candidates[i], candidates[i + rng.index(candidates.size() - i)]);
      }
    }
    std::optional<Split> best;
    for (std::size_t i = 0; i < per_split; ++i) {
      auto s = detail::best_split_on(x, y, node_rows, candidates[i], params.min_samples_leaf, scratch);
      if (s && (!best || detail::improves(s->gain, best->gain))) best = s;
    }
    if (!best || !(best->gain > 0.0)) {
      tree.nodes[p.node].value = mean;
      continue;
    }

    // Stable, so every node keeps its samples in input order.
    const auto mid = std::stable_partition(node_rows.begin(), node_rows.end(), [&](std::size_t r) {
      return x(r, best->feature) <= best->threshold;
    });
    const std::size_t split_at = p.begin + static_cast<std::size_t>(mid - node_rows.begin());

    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[p.node];
    node.feature = static_cast<std::int32_t>(best->feature);
    node.threshold = best->threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({static_cast<std::size_t>(left + 1), split_at, p.end, p.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), p.begin, split_at, p.depth + 1});
  }
  return tree;
}

/// Convenience overload over every row and every column.
inline RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params,
                               std::uint64_t seed) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<std::size_t> features(x.cols());
  std::iota(features.begin(), features.end(), std::size_t{0});
  return fit_tree(x, y, rows, features, params, seed);
}

// ---------------------------------------------------------------------------
// Forests

/// Feature-sampling rule: ceil(k/3) by default, every selected feature, or
/// a fixed count (clamped to k).
struct FeaturesPerSplit {
  enum class Mode { third, all, count };
  Mode mode = Mode::third;
  std::size_t count = 1;

  std::size_t resolve(std::size_t k) const {
    switch (mode) {
      case Mode::third: return std::max<std::size_t>(1, (k + 2) / 3);
      case Mode::all: return k;
      case Mode::count: return std::clamp<std::size_t>(count, 1, k);
    }
    return k;
  }

  friend bool operator==(const FeaturesPerSplit&, const FeaturesPerSplit&) = default;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;
  FeaturesPerSplit features_per_split;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trees < 1 || max_depth < 1 || min_samples_leaf < 1 ||
        (features_per_split.mode == FeaturesPerSplit::Mode::count && features_per_split.count < 1)) {
      throw Error(Errc::invalid_argument, "forest config counts must be at least 1");
    }
  }

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct ForestModel {
  std::size_t target_sensor = 0;
  std::vector<std::size_t> feature_ids;
  std::vector<RegressionTree> trees;
  ForestConfig config;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// The k peers with the largest |Pearson correlation| to the target on the
/// training matrix; ties go to the lower sensor id.
inline std::vector<std::size_t> select_features(const Matrix& train, std::size_t target, std::size_t k) {
  if (train.empty()) throw Error(Errc::empty_dataset, "feature selection on no frames");
  if (target >= train.cols()) throw Error(Errc::unknown_sensor, "target " + std::to_string(target));
  if (k < 1 || k + 1 > train.cols()) {
    throw Error(Errc::invalid_k, "k must be in 1.." + std::to_string(train.cols() - 1) + ", got " +
                                     std::to_string(k));
  }
  const auto y = train.column(target);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t s = 0; s < train.cols(); ++s) {
    if (s == target) continue;
    scored.emplace_back(std::abs(pearson(train.column(s), y)), s);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

/// Bootstrap rows for one tree: |n| draws with replacement, or 0..n-1 when
/// bootstrapping is disabled.
inline std::vector<std::size_t> bootstrap_rows(std::size_t n, bool bootstrap, std::uint64_t seed) {
  std::vector<std::size_t> rows(n);
  if (!bootstrap) {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  Rng rng(seed);
  for (auto& r : rows) r = rng.index(n);
  return rows;
}

inline std::uint64_t tree_seed(const ForestConfig& config, std::size_t target, std::size_t tree,
                               std::uint64_t stream) {
  return derive_seed(config.seed, stream + 0x1000 * static_cast<std::uint64_t>(target), tree);
}

inline ForestModel fit_forest(const Matrix& train, std::size_t target, std::size_t k,
                              const ForestConfig& config) {
  config.validate();
  ForestModel model;
  model.target_sensor = target;
  model.config = config;
  model.feature_ids = select_features(train, target, k);
  const auto y = train.column(target);
  const TreeParams params{config.features_per_split.resolve(k), config.max_depth,
                          config.min_samples_leaf};
  model.trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    const auto rows = bootstrap_rows(train.rows(), config.bootstrap, tree_seed(config, target, t, 0xB0));
    model.trees.push_back(
        fit_tree(train, y, rows, model.feature_ids, params, tree_seed(config, target, t, 0x5B)));
  }
  return model;
}

/// Mean of the trees' leaf values. Only feature_ids entries of the frame are
/// read; the target's own reading never influences the estimate.
inline double predict(const ForestModel& model, std::span<const double> frame) {
  if (model.trees.empty()) throw Error(Errc::invalid_argument, "forest has no trees");
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.predict(frame);
  return sum / static_cast<double>(model.trees.size());
}

/// One forest per catalog sensor, indexed by sensor id.
struct ForestBank {
  std::vector<ForestModel> forests;

  std::size_t size() const noexcept { return forests.size(); }
  const ForestModel& operator[](std::size_t s) const { return forests.at(s); }

  void validate(std::size_t n_sensors) const {
    if (forests.size() != n_sensors) {
      throw Error(Errc::invalid_argument, "forest bank holds " + std::to_string(forests.size()) +
                                              " forests for " + std::to_string(n_sensors) + " sensors");
    }
    for (std::size_t s = 0; s < forests.size(); ++s) {
      const auto& f = forests[s];
      if (f.target_sensor != s) throw Error(Errc::invalid_argument, "forest bank is out of order");
      if (f.trees.empty()) throw Error(Errc::invalid_argument, "forest without trees");
      for (auto id : f.feature_ids) {
        if (id == s || id >= n_sensors) throw Error(Errc::invalid_argument, "bad forest feature id");
      }
      for (const auto& t : f.trees) {
        for (const auto& n : t.nodes) {
          if (n.is_leaf()) continue;
          if (std::find(f.feature_ids.begin(), f.feature_ids.end(),
                        static_cast<std::size_t>(n.feature)) == f.feature_ids.end()) {
            throw Error(Errc::invalid_argument, "tree splits on a feature the forest does not own");
          }
          const auto self = static_cast<std::int32_t>(&n - t.nodes.data());
          if (n.left <= self || n.right != n.left + 1 ||
              static_cast<std::size_t>(n.right) >= t.nodes.size()) {
            throw Error(Errc::invalid_argument, "tree child index out of range");
          }
        }
      }
    }
  }

  friend bool operator==(const ForestBank&, const ForestBank&) = default;
};

/// Fits every sensor's forest with its catalog feature count.
inline ForestBank fit_bank(const Matrix& train, const SensorCatalog& catalog, const ForestConfig& config) {
  if (train.cols() != catalog.size()) throw Error(Errc::dimension_mismatch, "training matrix width");
  ForestBank bank;
  for (const auto& spec : catalog.sensors()) {
    bank.forests.push_back(fit_forest(train, spec.id, spec.forest_features, config));
  }
  return bank;
}

struct ForestEvaluation {
  std::size_t sensor_id = 0;
  std::size_t k = 0;
  double mae = 0.0;
  /// Empty when the sensor is constant on the evaluation data.
  std::optional<double> r2;
};

inline std::vector<ForestEvaluation> evaluate_bank(const ForestBank& bank, const Matrix& test) {
  if (test.empty()) throw Error(Errc::empty_dataset, "evaluation on no frames");
  std::vector<ForestEvaluation> out;
  for (const auto& forest : bank.forests) {
    const auto y = test.column(forest.target_sensor);
    std::vector<double> yhat(test.rows());
    for (std::size_t r = 0; r < test.rows(); ++r) yhat[r] = predict(forest, test.row(r));
    ForestEvaluation e{forest.target_sensor, forest.feature_ids.size(), mean_absolute_error(y, yhat), {}};
    try {
      e.r2 = r_squared(y, yhat);
    } catch (const Error& err) {
      if (err.code() != Errc::constant_target) throw;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace ecuhealth
