#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "canbench/candata.hpp"
#include "canbench/clock.hpp"
#include "canbench/forest.hpp"
#include "canbench/zoo.hpp"

namespace canbench {

/// Workload the measured attack rate is extrapolated to: one adversarial
/// example per row of B at full scale.
inline constexpr int kFullScaleAdversarialTarget = 92270;

/// Full-scale A+B+B' retraining set size (equals the source dataset size,
/// since |B'| = |B|).
inline constexpr int kFullScaleDatasetSize = 461350;

struct SweepRecord {
  EnsembleKind model_kind = EnsembleKind::kRandomForest;
  std::string param_name;  // "n_trees" | "n_rounds"
  int value = 0;
  int n_done = 0;
  double elapsed = 0.0;
  double est_total = 0.0;
  std::optional<double> at_time;  // adversarial-training fit time
};

struct RegressionFit {
  double slope = 0.0;      // seconds per estimator
  double intercept = 0.0;  // seconds
  double r2 = 0.0;
  int n_points = 0;
};

struct ThroughputResult {
  int n_done = 0;
  double elapsed = 0.0;
};

std::string param_name_for(EnsembleKind kind);

/// Grid used by the figures: 1, then multiples of 5 up to 105.
std::vector<int> default_sweep_grid();

struct SweepConfig {
  std::vector<int> grid = default_sweep_grid();
  double budget_s = 300.0;
  int n_target = kFullScaleAdversarialTarget;
};

using AttackRunner = std::function<void(const FeatureVector&, int)>;

/// Runs attacks sequentially until the first example whose completion time
/// reaches the budget (that example still counts), or the list is
/// exhausted. elapsed is the clock reading right after the last completed
/// example, so the in-flight overshoot is included.
ThroughputResult measure_attack_throughput(
    const AttackRunner& attack, const std::vector<AttackExample>& examples,
    double budget_s, const Clock& clock);

ThroughputResult measure_attack_throughput(
    const EnsembleModel& model, const std::vector<AttackExample>& examples,
    double budget_s, const ZooConfig& cfg, const Clock& clock);

/// elapsed * n_target / n_done, exact when n_target == n_done.
double extrapolate_total_time(int n_done, double elapsed_s,
                              long long n_target);

/// Closed-form OLS over (x, y); r2 = 1 - SSres/SStot, defined as 1 for
/// constant y. Needs at least two distinct x.
RegressionFit fit_linear_regression(
    const std::vector<std::pair<double, double>>& points);

struct SweepResult {
  std::vector<SweepRecord> records;
  RegressionFit fit;
};

/// For each grid value: fit the model on A with that estimator count,
/// measure attack throughput over B within the budget (cycling the B pool
/// so the budget stays the binding constraint at desk scale), extrapolate
/// to n_target; OLS over (value, est_total). Timing paths are
/// single-threaded by contract and reject parallel fit settings.
SweepResult run_attack_time_sweep(const DataSplits& splits,
                                  const EnsembleSpec& spec,
                                  const SweepConfig& cfg,
                                  const ZooConfig& zoo_cfg, const Clock& clock);

/// For each grid value: time one fit on A+B+B'. b_primes holds either one
/// dataset (reused for every value) or one per grid value. OLS over
/// (value, at_time).
SweepResult run_at_time_sweep(const DataSplits& splits,
                              const std::vector<LabeledDataset>& b_primes,
                              const EnsembleSpec& spec,
                              const std::vector<int>& grid, const Clock& clock);

}  // namespace canbench
