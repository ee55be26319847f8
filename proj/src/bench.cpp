#include "canbench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canbench {

std::string param_name_for(EnsembleKind kind) {
  return kind == EnsembleKind::kRandomForest ? "n_trees" : "n_rounds";
}

std::vector<int> default_sweep_grid() {
  std::vector<int> grid{1};
  for (int v = 5; v <= 105; v += 5) grid.push_back(v);
  return grid;
}

namespace {

void validate_grid(const std::vector<int>& grid) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1)
      throw std::invalid_argument("sweep: grid values must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument("sweep: grid must be strictly increasing");
  }
}

void require_single_threaded(const EnsembleSpec& spec) {
  if (spec.kind == EnsembleKind::kRandomForest && spec.rf.n_threads != 1)
    throw std::invalid_argument(
        "timing sweep: parallel fitting is not allowed in timed runs");
}

}  // namespace

ThroughputResult measure_attack_throughput(
    const AttackRunner& attack, const std::vector<AttackExample>& examples,
    double budget_s, const Clock& clock) {
  if (budget_s <= 0.0)
    throw std::invalid_argument("measure_attack_throughput: budget must be > 0");
  if (examples.empty())
    throw std::invalid_argument("measure_attack_throughput: no examples");

  const double start = clock.now_seconds();
  ThroughputResult result;
  for (const AttackExample& example : examples) {
    attack(example.x, example.label);
    ++result.n_done;
    result.elapsed = clock.now_seconds() - start;
    if (result.elapsed >= budget_s) break;
  }
  return result;
}

ThroughputResult measure_attack_throughput(
    const EnsembleModel& model, const std::vector<AttackExample>& examples,
    double budget_s, const ZooConfig& cfg, const Clock& clock) {
  const Oracle oracle = make_model_oracle(model);
  std::size_t index = 0;
  return measure_attack_throughput(
      [&](const FeatureVector& x, int label) {
        ZooConfig per_example = cfg;
        per_example.seed = cfg.seed + index++;
        zoo_attack(oracle, x, label, per_example, clock);
      },
      examples, budget_s, clock);
}

namespace {

// Same stop rule as measure_attack_throughput, but the example pool is
// cycled, so the budget stays the binding constraint at desk scale just as
// it is against the full-size B.
ThroughputResult measure_attack_throughput_cycled(
    const EnsembleModel& model, const std::vector<AttackExample>& examples,
    double budget_s, const ZooConfig& cfg, const Clock& clock) {
  if (budget_s <= 0.0)
    throw std::invalid_argument("measure_attack_throughput: budget must be > 0");
  if (examples.empty())
    throw std::invalid_argument("measure_attack_throughput: no examples");

  const Oracle oracle = make_model_oracle(model);
  const double start = clock.now_seconds();
  ThroughputResult result;
  for (std::size_t index = 0;; ++index) {
    const AttackExample& example = examples[index % examples.size()];
    ZooConfig per_example = cfg;
    per_example.seed = cfg.seed + index;
    zoo_attack(oracle, example.x, example.label, per_example, clock);
    ++result.n_done;
    result.elapsed = clock.now_seconds() - start;
    if (result.elapsed >= budget_s) break;
  }
  return result;
}

}  // namespace

double extrapolate_total_time(int n_done, double elapsed_s,
                              long long n_target) {
  if (n_done < 1)
    throw std::invalid_argument("extrapolate_total_time: n_done must be >= 1");
  if (elapsed_s <= 0.0)
    throw std::invalid_argument("extrapolate_total_time: elapsed must be > 0");
  if (n_target < 1)
    throw std::invalid_argument("extrapolate_total_time: n_target must be >= 1");
  if (n_target == n_done) return elapsed_s;
  return elapsed_s * static_cast<double>(n_target) /
         static_cast<double>(n_done);
}

RegressionFit fit_linear_regression(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("fit_linear_regression: need >= 2 points");
  bool distinct = false;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].first != points[0].first) distinct = true;
  if (!distinct)
    throw std::invalid_argument("fit_linear_regression: need >= 2 distinct x");

  const double n = static_cast<double>(points.size());
  double x_mean = 0.0, y_mean = 0.0;
  for (const auto& [x, y] : points) {
    x_mean += x;
    y_mean += y;
  }
  x_mean /= n;
  y_mean /= n;

  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - x_mean) * (x - x_mean);
    sxy += (x - x_mean) * (y - y_mean);
  }

  RegressionFit fit;
  fit.n_points = static_cast<int>(points.size());
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;

  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [x, y] : points) {
    const double pred = fit.slope * x + fit.intercept;
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - y_mean) * (y - y_mean);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

SweepResult run_attack_time_sweep(const DataSplits& splits,
                                  const EnsembleSpec& spec,
                                  const SweepConfig& cfg,
                                  const ZooConfig& zoo_cfg,
                                  const Clock& clock) {
  validate_grid(cfg.grid);
  require_single_threaded(spec);
  if (splits.a.empty() || splits.b.empty())
    throw std::invalid_argument("run_attack_time_sweep: empty splits");

  const auto examples = dataset_to_attack_examples(splits.b);
  SweepResult result;
  result.records.reserve(cfg.grid.size());
  std::vector<std::pair<double, double>> points;
  points.reserve(cfg.grid.size());

  for (int value : cfg.grid) {
    auto [model, report] = fit_ensemble(splits.a, spec, value);
    const ThroughputResult tp = measure_attack_throughput_cycled(
        model, examples, cfg.budget_s, zoo_cfg, clock);
    SweepRecord record;
    record.model_kind = spec.kind;
    record.param_name = param_name_for(spec.kind);
    record.value = value;
    record.n_done = tp.n_done;
    record.elapsed = tp.elapsed;
    record.est_total =
        extrapolate_total_time(tp.n_done, tp.elapsed, cfg.n_target);
    points.emplace_back(static_cast<double>(value), record.est_total);
    result.records.push_back(std::move(record));
  }

  result.fit = fit_linear_regression(points);
  return result;
}

SweepResult run_at_time_sweep(const DataSplits& splits,
                              const std::vector<LabeledDataset>& b_primes,
                              const EnsembleSpec& spec,
                              const std::vector<int>& grid,
                              const Clock& clock) {
  validate_grid(grid);
  require_single_threaded(spec);
  if (b_primes.size() != 1 && b_primes.size() != grid.size())
    throw std::invalid_argument(
        "run_at_time_sweep: need one B' or one per grid value");

  SweepResult result;
  result.records.reserve(grid.size());
  std::vector<std::pair<double, double>> points;
  points.reserve(grid.size());

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const LabeledDataset& b_prime =
        b_primes[b_primes.size() == 1 ? 0 : i];
    if (b_prime.size() != splits.b.size())
      throw std::invalid_argument("run_at_time_sweep: |B'| != |B|");
    const LabeledDataset train =
        concat_datasets(concat_datasets(splits.a, splits.b), b_prime);

    const double t0 = clock.now_seconds();
    fit_ensemble(train, spec, grid[i]);
    const double at_time = clock.now_seconds() - t0;

    SweepRecord record;
    record.model_kind = spec.kind;
    record.param_name = param_name_for(spec.kind);
    record.value = grid[i];
    record.at_time = at_time;
    points.emplace_back(static_cast<double>(grid[i]), at_time);
    result.records.push_back(std::move(record));
  }

  result.fit = fit_linear_regression(points);
  return result;
}

}  // namespace canbench
