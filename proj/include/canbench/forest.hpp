#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "canbench/candata.hpp"

namespace canbench {

enum class SplitCriterion { kGini, kSquaredError };

struct TreeParams {
  int max_depth = -1;  // negative: unlimited
  int min_samples_leaf = 1;
  SplitCriterion criterion = SplitCriterion::kGini;
  int feature_subsample = 0;  // candidate features per split; 0: all
  std::uint64_t seed = 0;
};

struct TreeNode {
  bool is_leaf = true;
  int feature_index = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> class_distribution;  // classification leaves
  double leaf_value = 0.0;                 // regression leaves
};

/// Axis-aligned binary tree stored as a flat node array, root at index 0.
/// Routing: x[feature] < threshold goes left.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  int n_features = 0;
  bool regression = false;

  const TreeNode& leaf_for(const FeatureVector& x) const;
  const std::vector<double>& predict_distribution(const FeatureVector& x) const;
  double predict_value(const FeatureVector& x) const;
};

/// CART induction. Classification trees split on gini, regression trees on
/// squared error; both accept zero-gain splits as long as the node is
/// impure, so depth-limited trees can still carve XOR-like patterns.
DecisionTree fit_tree(const LabeledDataset& ds, const TreeParams& params);

DecisionTree fit_regression_tree(const std::vector<FeatureVector>& x,
                                 const std::vector<double>& targets,
                                 const TreeParams& params);

/// Second-order tree: leaf weight -G/(H+lambda), split gain
/// 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma, non-positive gains
/// rejected. H+lambda is floored at 1e-12 before any division.
DecisionTree fit_xgb_tree(const std::vector<FeatureVector>& x,
                          const std::vector<double>& grad,
                          const std::vector<double>& hess, int max_depth,
                          double lambda_l2, double gamma,
                          int min_samples_leaf = 1);

enum class EnsembleKind { kRandomForest, kGradientBoosting, kXgbStyle };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

/// Fitted model. Random forests hold bag_trees; boosted models hold one
/// regression tree per class per round plus prior log-odds base scores.
struct EnsembleModel {
  EnsembleKind kind = EnsembleKind::kRandomForest;
  std::vector<std::string> class_names;
  int n_features = 0;
  int n_estimators = 0;
  double learning_rate = 0.0;
  std::vector<double> base_scores;
  std::vector<DecisionTree> bag_trees;
  std::vector<std::vector<DecisionTree>> round_trees;  // [round][class]
};

struct TrainReport {
  double fit_wall_time = 0.0;
  int n_estimators = 0;
  double training_accuracy = 0.0;
};

struct RandomForestParams {
  int n_trees = 100;
  int max_depth = -1;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  bool feature_subsample = true;  // sqrt(d) candidate features per split
  std::uint64_t seed = 42;
  int n_threads = 1;
};

struct GradientBoostingParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;
  std::uint64_t seed = 42;
};

struct XgbParams {
  int n_rounds = 100;
  double learning_rate = 0.3;
  int max_depth = 6;
  double lambda_l2 = 1.0;
  double gamma = 0.0;
  int min_samples_leaf = 1;
  std::uint64_t seed = 42;
};

std::pair<EnsembleModel, TrainReport> fit_random_forest(
    const LabeledDataset& ds, const RandomForestParams& params);

std::pair<EnsembleModel, TrainReport> fit_gradient_boosting(
    const LabeledDataset& ds, const GradientBoostingParams& params);

std::pair<EnsembleModel, TrainReport> fit_xgb_style(const LabeledDataset& ds,
                                                    const XgbParams& params);

/// Kind plus the per-kind hyperparameters, so callers can pick a model
/// family once and override only the estimator count.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::kRandomForest;
  RandomForestParams rf{};
  GradientBoostingParams gb{};
  XgbParams xgb{};
};

std::pair<EnsembleModel, TrainReport> fit_ensemble(
    const LabeledDataset& ds, const EnsembleSpec& spec,
    std::optional<int> n_estimators_override = std::nullopt);

/// Distribution over class_names: components >= 1e-12, sum 1 within 1e-9.
std::vector<double> predict_proba(const EnsembleModel& model,
                                  const FeatureVector& x);
int predict_class(const EnsembleModel& model, const FeatureVector& x);
double model_accuracy(const EnsembleModel& model, const LabeledDataset& ds);

// Versioned text serialization; loading reproduces predictions bitwise.
std::size_t save_model(const EnsembleModel& model, std::ostream& out);
void save_model_file(const EnsembleModel& model, const std::string& path);
EnsembleModel load_model(std::istream& in);
EnsembleModel load_model_file(const std::string& path);

}  // namespace canbench
