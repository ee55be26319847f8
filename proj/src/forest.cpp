#include "canbench/forest.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace canbench {

namespace {

constexpr double kPurityEps = 1e-12;
constexpr double kHessianFloor = 1e-12;
constexpr double kProbFloor = 1e-12;

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
};

// Shared induction skeleton. A policy supplies the per-sample statistics,
// the split gain, and the leaf payload; the grower handles candidate
// enumeration, midpoint thresholds and the greedy recursion. Candidate
// features are visited in ascending index order and boundaries in ascending
// value order, with strictly-better gain required to displace the incumbent,
// so equal-gain ties resolve to the lowest feature index, then the lowest
// threshold.
template <class Policy>
class TreeGrower {
 public:
  TreeGrower(const std::vector<FeatureVector>& x, const Policy& policy,
             int max_depth, int min_samples_leaf, int feature_subsample,
             std::mt19937_64& rng)
      : x_(x),
        policy_(policy),
        max_depth_(max_depth),
        min_samples_leaf_(std::max(1, min_samples_leaf)),
        mtry_(feature_subsample),
        rng_(rng),
        n_features_(x.empty() ? 0 : static_cast<int>(x.front().size())) {}

  DecisionTree grow(std::vector<std::size_t> indices) {
    DecisionTree tree;
    tree.n_features = n_features_;
    tree.regression = Policy::kRegression;
    build(tree, indices, 0);
    return tree;
  }

 private:
  using Stat = typename Policy::Stat;

  int build(DecisionTree& tree, std::vector<std::size_t>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    Stat parent = policy_.make_stat(idx);
    const bool depth_ok = max_depth_ < 0 || depth < max_depth_;
    const bool size_ok =
        idx.size() >= 2 * static_cast<std::size_t>(min_samples_leaf_);
    SplitChoice best;
    if (depth_ok && size_ok && !policy_.is_pure(parent))
      best = find_best_split(idx, parent);

    if (!best.found) {
      policy_.fill_leaf(tree.nodes[node_id], parent, idx.size());
      return node_id;
    }

    std::vector<std::size_t> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (std::size_t i : idx) {
      if (x_[i][static_cast<std::size_t>(best.feature)] < best.threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) {
      policy_.fill_leaf(tree.nodes[node_id], parent, idx.size());
      return node_id;
    }

    tree.nodes[node_id].is_leaf = false;
    tree.nodes[node_id].feature_index = best.feature;
    tree.nodes[node_id].threshold = best.threshold;
    idx.clear();
    idx.shrink_to_fit();

    const int left = build(tree, left_idx, depth + 1);
    tree.nodes[node_id].left = left;
    const int right = build(tree, right_idx, depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
  }

  std::vector<int> candidate_features() {
    std::vector<int> features(static_cast<std::size_t>(n_features_));
    std::iota(features.begin(), features.end(), 0);
    if (mtry_ <= 0 || mtry_ >= n_features_) return features;
    for (int j = 0; j < mtry_; ++j) {
      std::uniform_int_distribution<int> pick(j, n_features_ - 1);
      std::swap(features[static_cast<std::size_t>(j)],
                features[static_cast<std::size_t>(pick(rng_))]);
    }
    features.resize(static_cast<std::size_t>(mtry_));
    std::sort(features.begin(), features.end());
    return features;
  }

  SplitChoice find_best_split(const std::vector<std::size_t>& idx,
                              const Stat& parent) {
    SplitChoice best;
    double best_gain = -std::numeric_limits<double>::infinity();
    const std::size_t n = idx.size();

    std::vector<std::pair<double, std::size_t>> order(n);
    for (int f : candidate_features()) {
      for (std::size_t p = 0; p < n; ++p)
        order[p] = {x_[idx[p]][static_cast<std::size_t>(f)], idx[p]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (order.front().first == order.back().first) continue;

      Stat left = policy_.empty_stat();
      for (std::size_t p = 0; p + 1 < n; ++p) {
        policy_.stat_add(left, order[p].second);
        if (order[p].first == order[p + 1].first) continue;
        const std::size_t nl = p + 1;
        const std::size_t nr = n - nl;
        if (nl < static_cast<std::size_t>(min_samples_leaf_) ||
            nr < static_cast<std::size_t>(min_samples_leaf_))
          continue;
        Stat right = policy_.stat_sub(parent, left);
        const double gain = policy_.gain(parent, left, right);
        if (!policy_.accept_gain(gain) || !(gain > best_gain)) continue;
        best_gain = gain;
        best.found = true;
        best.feature = f;
        const double lo = order[p].first;
        const double hi = order[p + 1].first;
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid > lo)) mid = hi;  // adjacent doubles: keep the split real
        best.threshold = mid;
      }
    }
    return best;
  }

  const std::vector<FeatureVector>& x_;
  const Policy& policy_;
  int max_depth_;
  int min_samples_leaf_;
  int mtry_;
  std::mt19937_64& rng_;
  int n_features_;
};

struct GiniPolicy {
  static constexpr bool kRegression = false;

  const std::vector<int>& labels;
  int n_classes;

  struct Stat {
    std::vector<double> counts;
    double n = 0.0;
  };

  Stat empty_stat() const {
    return {std::vector<double>(static_cast<std::size_t>(n_classes), 0.0), 0.0};
  }
  Stat make_stat(const std::vector<std::size_t>& idx) const {
    Stat s = empty_stat();
    for (std::size_t i : idx) stat_add(s, i);
    return s;
  }
  void stat_add(Stat& s, std::size_t i) const {
    s.counts[static_cast<std::size_t>(labels[i])] += 1.0;
    s.n += 1.0;
  }
  Stat stat_sub(const Stat& parent, const Stat& left) const {
    Stat s = parent;
    for (std::size_t k = 0; k < s.counts.size(); ++k)
      s.counts[k] -= left.counts[k];
    s.n -= left.n;
    return s;
  }

  static double gini(const Stat& s) {
    if (s.n <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (double c : s.counts) {
      const double p = c / s.n;
      sum_sq += p * p;
    }
    return 1.0 - sum_sq;
  }

  bool is_pure(const Stat& s) const { return gini(s) <= kPurityEps; }
  double gain(const Stat& parent, const Stat& l, const Stat& r) const {
    return gini(parent) -
           (l.n / parent.n) * gini(l) - (r.n / parent.n) * gini(r);
  }
  bool accept_gain(double g) const { return g >= 0.0; }

  void fill_leaf(TreeNode& node, const Stat& s, std::size_t) const {
    node.is_leaf = true;
    node.class_distribution.resize(s.counts.size());
    for (std::size_t k = 0; k < s.counts.size(); ++k)
      node.class_distribution[k] = s.n > 0.0 ? s.counts[k] / s.n : 0.0;
  }
};

struct SsePolicy {
  static constexpr bool kRegression = true;

  const std::vector<double>& targets;

  struct Stat {
    double sum = 0.0;
    double sum_sq = 0.0;
    double n = 0.0;
  };

  Stat empty_stat() const { return {}; }
  Stat make_stat(const std::vector<std::size_t>& idx) const {
    Stat s;
    for (std::size_t i : idx) stat_add(s, i);
    return s;
  }
  void stat_add(Stat& s, std::size_t i) const {
    s.sum += targets[i];
    s.sum_sq += targets[i] * targets[i];
    s.n += 1.0;
  }
  Stat stat_sub(const Stat& parent, const Stat& left) const {
    return {parent.sum - left.sum, parent.sum_sq - left.sum_sq,
            parent.n - left.n};
  }

  static double sse(const Stat& s) {
    if (s.n <= 0.0) return 0.0;
    return std::max(0.0, s.sum_sq - s.sum * s.sum / s.n);
  }

  bool is_pure(const Stat& s) const { return sse(s) <= kPurityEps; }
  double gain(const Stat& parent, const Stat& l, const Stat& r) const {
    return sse(parent) - sse(l) - sse(r);
  }
  bool accept_gain(double g) const { return g >= 0.0; }

  void fill_leaf(TreeNode& node, const Stat& s, std::size_t) const {
    node.is_leaf = true;
    node.leaf_value = s.n > 0.0 ? s.sum / s.n : 0.0;
  }
};

struct XgbPolicy {
  static constexpr bool kRegression = true;

  const std::vector<double>& grad;
  const std::vector<double>& hess;
  double lambda_l2;
  double gamma;

  struct Stat {
    double g = 0.0;
    double h = 0.0;
  };

  Stat empty_stat() const { return {}; }
  Stat make_stat(const std::vector<std::size_t>& idx) const {
    Stat s;
    for (std::size_t i : idx) stat_add(s, i);
    return s;
  }
  void stat_add(Stat& s, std::size_t i) const {
    s.g += grad[i];
    s.h += hess[i];
  }
  Stat stat_sub(const Stat& parent, const Stat& left) const {
    return {parent.g - left.g, parent.h - left.h};
  }

  double score(const Stat& s) const {
    return s.g * s.g / std::max(s.h + lambda_l2, kHessianFloor);
  }

  bool is_pure(const Stat&) const { return false; }
  double gain(const Stat& parent, const Stat& l, const Stat& r) const {
    return 0.5 * (score(l) + score(r) - score(parent)) - gamma;
  }
  bool accept_gain(double g) const { return g > 0.0; }

  void fill_leaf(TreeNode& node, const Stat& s, std::size_t) const {
    node.is_leaf = true;
    node.leaf_value = -s.g / std::max(s.h + lambda_l2, kHessianFloor);
  }
};

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

void validate_training_input(const std::vector<FeatureVector>& x) {
  if (x.empty()) throw std::invalid_argument("empty training set");
  if (x.front().empty()) throw std::invalid_argument("zero features");
  const std::size_t d = x.front().size();
  for (const auto& row : x)
    if (row.size() != d)
      throw std::invalid_argument("ragged feature matrix");
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

void softmax_inplace(std::vector<double>& scores) {
  const double hi = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double& s : scores) {
    s = std::exp(s - hi);
    z += s;
  }
  for (double& s : scores) s /= z;
}

std::vector<double> prior_log_odds(const LabeledDataset& ds) {
  std::vector<double> base(ds.class_names.size(), 0.0);
  const auto counts = ds.class_counts();
  for (std::size_t k = 0; k < base.size(); ++k) {
    const double prior =
        static_cast<double>(counts[k]) / static_cast<double>(ds.size());
    base[k] = std::log(std::max(prior, kProbFloor));
  }
  return base;
}

double steady_now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(const FeatureVector& x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf) {
    node = x[static_cast<std::size_t>(node->feature_index)] < node->threshold
               ? &nodes[static_cast<std::size_t>(node->left)]
               : &nodes[static_cast<std::size_t>(node->right)];
  }
  return *node;
}

const std::vector<double>& DecisionTree::predict_distribution(
    const FeatureVector& x) const {
  return leaf_for(x).class_distribution;
}

double DecisionTree::predict_value(const FeatureVector& x) const {
  return leaf_for(x).leaf_value;
}

DecisionTree fit_tree(const LabeledDataset& ds, const TreeParams& params) {
  validate_training_input(ds.rows);
  std::mt19937_64 rng(params.seed);
  if (params.criterion == SplitCriterion::kGini) {
    GiniPolicy policy{ds.labels, static_cast<int>(ds.class_names.size())};
    TreeGrower grower(ds.rows, policy, params.max_depth,
                      params.min_samples_leaf, params.feature_subsample, rng);
    return grower.grow(all_indices(ds.size()));
  }
  std::vector<double> targets(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    targets[i] = static_cast<double>(ds.labels[i]);
  SsePolicy policy{targets};
  TreeGrower grower(ds.rows, policy, params.max_depth, params.min_samples_leaf,
                    params.feature_subsample, rng);
  return grower.grow(all_indices(ds.size()));
}

DecisionTree fit_regression_tree(const std::vector<FeatureVector>& x,
                                 const std::vector<double>& targets,
                                 const TreeParams& params) {
  validate_training_input(x);
  if (targets.size() != x.size())
    throw std::invalid_argument("targets size mismatch");
  std::mt19937_64 rng(params.seed);
  SsePolicy policy{targets};
  TreeGrower grower(x, policy, params.max_depth, params.min_samples_leaf,
                    params.feature_subsample, rng);
  return grower.grow(all_indices(x.size()));
}

DecisionTree fit_xgb_tree(const std::vector<FeatureVector>& x,
                          const std::vector<double>& grad,
                          const std::vector<double>& hess, int max_depth,
                          double lambda_l2, double gamma,
                          int min_samples_leaf) {
  validate_training_input(x);
  if (grad.size() != x.size() || hess.size() != x.size())
    throw std::invalid_argument("gradient/hessian size mismatch");
  if (lambda_l2 < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  std::mt19937_64 rng(0);
  XgbPolicy policy{grad, hess, lambda_l2, gamma};
  TreeGrower grower(x, policy, max_depth, min_samples_leaf, 0, rng);
  return grower.grow(all_indices(x.size()));
}

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::kRandomForest: return "rf";
    case EnsembleKind::kGradientBoosting: return "gb";
    case EnsembleKind::kXgbStyle: return "xgb";
  }
  return "rf";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  if (name == "rf") return EnsembleKind::kRandomForest;
  if (name == "gb") return EnsembleKind::kGradientBoosting;
  if (name == "xgb") return EnsembleKind::kXgbStyle;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

std::pair<EnsembleModel, TrainReport> fit_random_forest(
    const LabeledDataset& ds, const RandomForestParams& params) {
  validate_training_input(ds.rows);
  if (params.n_trees < 1)
    throw std::invalid_argument("fit_random_forest: n_trees must be >= 1");
  if (params.n_threads < 1)
    throw std::invalid_argument("fit_random_forest: n_threads must be >= 1");

  const int d = ds.n_features();
  const int mtry =
      params.feature_subsample
          ? std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))))
          : 0;

  EnsembleModel model;
  model.kind = EnsembleKind::kRandomForest;
  model.class_names = ds.class_names;
  model.n_features = d;
  model.n_estimators = params.n_trees;
  model.bag_trees.resize(static_cast<std::size_t>(params.n_trees));

  std::mt19937_64 master(params.seed);
  std::vector<std::uint64_t> tree_seeds(static_cast<std::size_t>(params.n_trees));
  for (auto& s : tree_seeds) s = master();

  auto build_one = [&](int t) {
    std::mt19937_64 rng(tree_seeds[static_cast<std::size_t>(t)]);
    std::vector<std::size_t> idx;
    if (params.bootstrap) {
      idx.resize(ds.size());
      std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
      for (auto& i : idx) i = pick(rng);
    } else {
      idx = all_indices(ds.size());
    }
    GiniPolicy policy{ds.labels, static_cast<int>(ds.class_names.size())};
    TreeGrower grower(ds.rows, policy, params.max_depth,
                      params.min_samples_leaf, mtry, rng);
    model.bag_trees[static_cast<std::size_t>(t)] = grower.grow(std::move(idx));
  };

  const double t0 = steady_now();
  if (params.n_threads == 1) {
    for (int t = 0; t < params.n_trees; ++t) build_one(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(params.n_threads, params.n_trees);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < params.n_trees;
             t = next.fetch_add(1))
          build_one(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  TrainReport report;
  report.fit_wall_time = steady_now() - t0;
  report.n_estimators = params.n_trees;
  report.training_accuracy = model_accuracy(model, ds);
  return {std::move(model), report};
}

namespace {

// One boosting round shared by GB and XGB: probabilities from the current
// scores, then one regression tree per class fit on that round's
// pseudo-targets, scores updated synchronously afterwards.
template <class FitClassTree>
void run_boosting_rounds(const LabeledDataset& ds, int n_rounds,
                         double learning_rate, EnsembleModel& model,
                         std::vector<double>& scores,
                         const FitClassTree& fit_class_tree) {
  const std::size_t n = ds.size();
  const std::size_t k_classes = ds.class_names.size();
  std::vector<double> probs(k_classes);

  for (int round = 0; round < n_rounds; ++round) {
    std::vector<std::vector<double>> p(k_classes, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < k_classes; ++k)
        probs[k] = scores[i * k_classes + k];
      softmax_inplace(probs);
      for (std::size_t k = 0; k < k_classes; ++k) p[k][i] = probs[k];
    }

    std::vector<DecisionTree> round_trees;
    round_trees.reserve(k_classes);
    for (std::size_t k = 0; k < k_classes; ++k)
      round_trees.push_back(fit_class_tree(p[k], static_cast<int>(k)));

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < k_classes; ++k)
        scores[i * k_classes + k] +=
            learning_rate * round_trees[k].predict_value(ds.rows[i]);
    model.round_trees.push_back(std::move(round_trees));
  }
}

}  // namespace

std::pair<EnsembleModel, TrainReport> fit_gradient_boosting(
    const LabeledDataset& ds, const GradientBoostingParams& params) {
  validate_training_input(ds.rows);
  if (params.n_rounds < 0)
    throw std::invalid_argument("fit_gradient_boosting: n_rounds must be >= 0");
  if (params.learning_rate <= 0.0)
    throw std::invalid_argument(
        "fit_gradient_boosting: learning_rate must be > 0");

  EnsembleModel model;
  model.kind = EnsembleKind::kGradientBoosting;
  model.class_names = ds.class_names;
  model.n_features = ds.n_features();
  model.n_estimators = params.n_rounds;
  model.learning_rate = params.learning_rate;
  model.base_scores = prior_log_odds(ds);

  const std::size_t n = ds.size();
  const std::size_t k_classes = ds.class_names.size();
  std::vector<double> scores(n * k_classes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < k_classes; ++k)
      scores[i * k_classes + k] = model.base_scores[k];

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.criterion = SplitCriterion::kSquaredError;

  const double t0 = steady_now();
  // Leaves hold the mean negative gradient (one-hot minus probability).
  run_boosting_rounds(
      ds, params.n_rounds, params.learning_rate, model, scores,
      [&](const std::vector<double>& p_k, int k) {
        std::vector<double> residual(n);
        for (std::size_t i = 0; i < n; ++i)
          residual[i] = (ds.labels[i] == k ? 1.0 : 0.0) - p_k[i];
        return fit_regression_tree(ds.rows, residual, tree_params);
      });

  TrainReport report;
  report.fit_wall_time = steady_now() - t0;
  report.n_estimators = params.n_rounds;
  report.training_accuracy = model_accuracy(model, ds);
  return {std::move(model), report};
}

std::pair<EnsembleModel, TrainReport> fit_xgb_style(const LabeledDataset& ds,
                                                    const XgbParams& params) {
  validate_training_input(ds.rows);
  if (params.n_rounds < 0)
    throw std::invalid_argument("fit_xgb_style: n_rounds must be >= 0");
  if (params.learning_rate <= 0.0)
    throw std::invalid_argument("fit_xgb_style: learning_rate must be > 0");
  if (params.lambda_l2 < 0.0)
    throw std::invalid_argument("fit_xgb_style: lambda must be >= 0");
  if (params.gamma < 0.0)
    throw std::invalid_argument("fit_xgb_style: gamma must be >= 0");

  EnsembleModel model;
  model.kind = EnsembleKind::kXgbStyle;
  model.class_names = ds.class_names;
  model.n_features = ds.n_features();
  model.n_estimators = params.n_rounds;
  model.learning_rate = params.learning_rate;
  model.base_scores = prior_log_odds(ds);

  const std::size_t n = ds.size();
  const std::size_t k_classes = ds.class_names.size();
  std::vector<double> scores(n * k_classes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < k_classes; ++k)
      scores[i * k_classes + k] = model.base_scores[k];

  const double t0 = steady_now();
  // Softmax log-loss: g = p - y, h = p(1 - p).
  run_boosting_rounds(
      ds, params.n_rounds, params.learning_rate, model, scores,
      [&](const std::vector<double>& p_k, int k) {
        std::vector<double> g(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
          g[i] = p_k[i] - (ds.labels[i] == k ? 1.0 : 0.0);
          h[i] = p_k[i] * (1.0 - p_k[i]);
        }
        return fit_xgb_tree(ds.rows, g, h, params.max_depth, params.lambda_l2,
                            params.gamma, params.min_samples_leaf);
      });

  TrainReport report;
  report.fit_wall_time = steady_now() - t0;
  report.n_estimators = params.n_rounds;
  report.training_accuracy = model_accuracy(model, ds);
  return {std::move(model), report};
}

std::pair<EnsembleModel, TrainReport> fit_ensemble(
    const LabeledDataset& ds, const EnsembleSpec& spec,
    std::optional<int> n_estimators_override) {
  switch (spec.kind) {
    case EnsembleKind::kRandomForest: {
      RandomForestParams p = spec.rf;
      if (n_estimators_override) p.n_trees = *n_estimators_override;
      return fit_random_forest(ds, p);
    }
    case EnsembleKind::kGradientBoosting: {
      GradientBoostingParams p = spec.gb;
      if (n_estimators_override) p.n_rounds = *n_estimators_override;
      return fit_gradient_boosting(ds, p);
    }
    case EnsembleKind::kXgbStyle: {
      XgbParams p = spec.xgb;
      if (n_estimators_override) p.n_rounds = *n_estimators_override;
      return fit_xgb_style(ds, p);
    }
  }
  throw std::invalid_argument("unknown ensemble kind");
}

std::vector<double> predict_proba(const EnsembleModel& model,
                                  const FeatureVector& x) {
  if (model.n_features == 0 || model.class_names.empty())
    throw std::invalid_argument("predict_proba: model not fitted");
  if (static_cast<int>(x.size()) != model.n_features)
    throw std::invalid_argument("predict_proba: feature dimension mismatch");

  const std::size_t k_classes = model.class_names.size();
  std::vector<double> out(k_classes, 0.0);

  if (model.kind == EnsembleKind::kRandomForest) {
    for (const DecisionTree& tree : model.bag_trees) {
      const auto& dist = tree.predict_distribution(x);
      for (std::size_t k = 0; k < k_classes; ++k) out[k] += dist[k];
    }
    const double n_trees = static_cast<double>(model.bag_trees.size());
    for (double& v : out) v /= n_trees;
  } else {
    out = model.base_scores;
    for (const auto& round : model.round_trees)
      for (std::size_t k = 0; k < k_classes; ++k)
        out[k] += model.learning_rate * round[k].predict_value(x);
    softmax_inplace(out);
  }

  for (double& v : out) v = std::max(v, kProbFloor);
  return out;
}

int predict_class(const EnsembleModel& model, const FeatureVector& x) {
  return argmax(predict_proba(model, x));
}

double model_accuracy(const EnsembleModel& model, const LabeledDataset& ds) {
  if (ds.empty()) throw std::invalid_argument("model_accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (predict_class(model, ds.rows[i]) == ds.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// --- Serialization ----------------------------------------------------------
//
// Line-oriented text, doubles printed with %.17g so reloaded models predict
// bitwise identically.

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tree(std::ostringstream& out, const DecisionTree& tree) {
  out << "tree " << tree.nodes.size() << ' '
      << (tree.regression ? 'r' : 'c') << '\n';
  for (const TreeNode& node : tree.nodes) {
    if (!node.is_leaf) {
      out << "s " << node.feature_index << ' ' << g17(node.threshold) << ' '
          << node.left << ' ' << node.right << '\n';
    } else if (tree.regression) {
      out << "v " << g17(node.leaf_value) << '\n';
    } else {
      out << "l";
      for (double p : node.class_distribution) out << ' ' << g17(p);
      out << '\n';
    }
  }
}

DecisionTree read_tree(std::istream& in, int n_features,
                       std::size_t k_classes) {
  std::string keyword, mode;
  std::size_t n_nodes = 0;
  if (!(in >> keyword >> n_nodes >> mode) || keyword != "tree" ||
      (mode != "r" && mode != "c"))
    throw std::runtime_error("model file: bad tree header");

  DecisionTree tree;
  tree.n_features = n_features;
  tree.regression = (mode == "r");
  tree.nodes.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::string tag;
    if (!(in >> tag)) throw std::runtime_error("model file: truncated tree");
    TreeNode& node = tree.nodes[i];
    if (tag == "s") {
      node.is_leaf = false;
      if (!(in >> node.feature_index >> node.threshold >> node.left >>
            node.right))
        throw std::runtime_error("model file: bad split node");
      if (node.feature_index < 0 || node.feature_index >= n_features)
        throw std::runtime_error("model file: feature index out of range");
      const auto lo = static_cast<long long>(i);
      if (node.left <= lo || node.right <= lo ||
          node.left >= static_cast<long long>(n_nodes) ||
          node.right >= static_cast<long long>(n_nodes))
        throw std::runtime_error("model file: child index out of range");
    } else if (tag == "v" && tree.regression) {
      if (!(in >> node.leaf_value))
        throw std::runtime_error("model file: bad regression leaf");
    } else if (tag == "l" && !tree.regression) {
      node.class_distribution.resize(k_classes);
      for (double& p : node.class_distribution)
        if (!(in >> p))
          throw std::runtime_error("model file: bad class leaf");
    } else {
      throw std::runtime_error("model file: unknown node tag '" + tag + "'");
    }
  }
  return tree;
}

}  // namespace

std::size_t save_model(const EnsembleModel& model, std::ostream& out) {
  for (const auto& name : model.class_names)
    if (name.find_first_of(" \t\n,") != std::string::npos)
      throw std::invalid_argument("class name '" + name +
                                  "' not serializable");

  std::ostringstream buf;
  buf << "canbench-model v1\n";
  buf << "kind " << to_string(model.kind) << '\n';
  buf << "n_features " << model.n_features << '\n';
  buf << "n_estimators " << model.n_estimators << '\n';
  buf << "learning_rate " << g17(model.learning_rate) << '\n';
  buf << "classes " << model.class_names.size();
  for (const auto& name : model.class_names) buf << ' ' << name;
  buf << '\n';
  buf << "base_scores " << model.base_scores.size();
  for (double b : model.base_scores) buf << ' ' << g17(b);
  buf << '\n';

  if (model.kind == EnsembleKind::kRandomForest) {
    buf << "bag " << model.bag_trees.size() << '\n';
    for (const auto& tree : model.bag_trees) write_tree(buf, tree);
  } else {
    buf << "rounds " << model.round_trees.size() << ' '
        << model.class_names.size() << '\n';
    for (const auto& round : model.round_trees)
      for (const auto& tree : round) write_tree(buf, tree);
  }
  buf << "end\n";

  const std::string text = buf.str();
  out << text;
  if (!out) throw std::runtime_error("save_model: write failed");
  return text.size();
}

void save_model_file(const EnsembleModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  save_model(model, out);
}

EnsembleModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "canbench-model v1")
    throw std::runtime_error("model file: bad header");

  auto expect_key = [&](const char* key) {
    std::string word;
    if (!(in >> word) || word != key)
      throw std::runtime_error(std::string("model file: expected '") + key +
                               "'");
  };

  EnsembleModel model;
  std::string kind_name;
  expect_key("kind");
  in >> kind_name;
  model.kind = ensemble_kind_from_string(kind_name);

  expect_key("n_features");
  in >> model.n_features;
  expect_key("n_estimators");
  in >> model.n_estimators;
  expect_key("learning_rate");
  in >> model.learning_rate;

  expect_key("classes");
  std::size_t k_classes = 0;
  in >> k_classes;
  if (!in || k_classes == 0 || model.n_features <= 0)
    throw std::runtime_error("model file: bad dimensions");
  model.class_names.resize(k_classes);
  for (auto& name : model.class_names) in >> name;

  expect_key("base_scores");
  std::size_t n_base = 0;
  in >> n_base;
  model.base_scores.resize(n_base);
  for (double& b : model.base_scores) in >> b;
  if (!in) throw std::runtime_error("model file: bad base scores");

  std::string section;
  in >> section;
  if (section == "bag") {
    std::size_t n_trees = 0;
    in >> n_trees;
    model.bag_trees.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t)
      model.bag_trees.push_back(read_tree(in, model.n_features, k_classes));
  } else if (section == "rounds") {
    std::size_t n_rounds = 0, per_round = 0;
    in >> n_rounds >> per_round;
    if (per_round != k_classes)
      throw std::runtime_error("model file: rounds/classes mismatch");
    model.round_trees.reserve(n_rounds);
    for (std::size_t r = 0; r < n_rounds; ++r) {
      std::vector<DecisionTree> round;
      round.reserve(per_round);
      for (std::size_t k = 0; k < per_round; ++k)
        round.push_back(read_tree(in, model.n_features, k_classes));
      model.round_trees.push_back(std::move(round));
    }
  } else {
    throw std::runtime_error("model file: unknown section '" + section + "'");
  }

  std::string tail;
  if (!(in >> tail) || tail != "end")
    throw std::runtime_error("model file: missing end marker");
  return model;
}

EnsembleModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace canbench
