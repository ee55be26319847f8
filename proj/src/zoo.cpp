#include "canbench/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace canbench {

namespace {

constexpr double kProbFloor = 1e-12;

int argmax(const std::vector<double>& v) {
  return static_cast<int>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

double squared_l2(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double l2(const FeatureVector& a, const FeatureVector& b) {
  return std::sqrt(squared_l2(a, b));
}

void validate_config(const ZooConfig& cfg, int dimension) {
  if (cfg.learning_rate <= 0.0)
    throw std::invalid_argument("zoo: learning_rate must be > 0");
  if (cfg.variable_h <= 0.0)
    throw std::invalid_argument("zoo: variable_h must be > 0");
  if (cfg.max_iter < 0)
    throw std::invalid_argument("zoo: max_iter must be >= 0");
  if (cfg.coord_batch < 1 || cfg.coord_batch > dimension)
    throw std::invalid_argument("zoo: coord_batch must be in [1, dimension]");
  if (cfg.kappa < 0.0) throw std::invalid_argument("zoo: kappa must be >= 0");
  if (!(cfg.clip_lo < cfg.clip_hi))
    throw std::invalid_argument("zoo: empty clip box");
}

}  // namespace

Oracle make_model_oracle(const EnsembleModel& model) {
  return [&model](const FeatureVector& x) { return predict_proba(model, x); };
}

std::vector<AttackExample> dataset_to_attack_examples(
    const LabeledDataset& ds) {
  std::vector<AttackExample> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.push_back({ds.rows[i], ds.labels[i]});
  return out;
}

double attack_loss(const std::vector<double>& probs, int true_class,
                   double kappa) {
  if (true_class < 0 || true_class >= static_cast<int>(probs.size()))
    throw std::invalid_argument("attack_loss: true_class out of range");
  if (probs.size() < 2)
    throw std::invalid_argument("attack_loss: need at least two classes");

  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (static_cast<int>(j) == true_class) continue;
    best_other = std::max(best_other, probs[j]);
  }
  const double log_true =
      std::log(std::max(probs[static_cast<std::size_t>(true_class)],
                        kProbFloor));
  const double log_other = std::log(std::max(best_other, kProbFloor));
  return std::max(log_true - log_other, -kappa);
}

double zoo_objective(const FeatureVector& x, const FeatureVector& x0,
                     const Oracle& oracle, int true_class, double c,
                     double kappa) {
  if (x.size() != x0.size())
    throw std::invalid_argument("zoo_objective: dimension mismatch");
  return squared_l2(x, x0) + c * attack_loss(oracle(x), true_class, kappa);
}

double estimate_coord_gradient(
    const std::function<double(const FeatureVector&)>& objective,
    const FeatureVector& x, int coord, double h, std::optional<Box> box) {
  if (h <= 0.0) throw std::invalid_argument("estimate_coord_gradient: h <= 0");
  if (coord < 0 || coord >= static_cast<int>(x.size()))
    throw std::invalid_argument("estimate_coord_gradient: bad coordinate");

  double up_val = x[static_cast<std::size_t>(coord)] + h;
  double dn_val = x[static_cast<std::size_t>(coord)] - h;
  if (box) {
    up_val = std::clamp(up_val, box->lo, box->hi);
    dn_val = std::clamp(dn_val, box->lo, box->hi);
  }
  const double span = up_val - dn_val;
  if (span <= 0.0) return 0.0;

  FeatureVector up = x, dn = x;
  up[static_cast<std::size_t>(coord)] = up_val;
  dn[static_cast<std::size_t>(coord)] = dn_val;
  return (objective(up) - objective(dn)) / span;
}

double adam_coord_update(AdamState& state, double gradient,
                         const ZooConfig& cfg) {
  state.t += 1;
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * gradient;
  state.v =
      cfg.adam_beta2 * state.v + (1.0 - cfg.adam_beta2) * gradient * gradient;
  const double m_hat =
      state.m / (1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t)));
  const double v_hat =
      state.v / (1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t)));
  return -cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
}

AdversarialExample zoo_attack(const Oracle& oracle, const FeatureVector& x,
                              int true_class, const ZooConfig& cfg,
                              const Clock& clock) {
  const int dimension = static_cast<int>(x.size());
  if (dimension == 0) throw std::invalid_argument("zoo_attack: empty input");
  validate_config(cfg, dimension);
  for (double v : x)
    if (v < cfg.clip_lo || v > cfg.clip_hi)
      throw std::invalid_argument("zoo_attack: input outside clip box");

  const double t_start = clock.now_seconds();

  std::uint64_t queries = 0;
  struct Candidate {
    FeatureVector point;
    int predicted = 0;
    double distortion = 0.0;
    bool valid = false;
  };
  Candidate best;
  bool found_this_iteration = false;

  // Every oracle response is inspected for an evasion, so success detection
  // rides on the gradient probes instead of spending extra queries.
  auto query = [&](const FeatureVector& point) {
    ++queries;
    std::vector<double> probs = oracle(point);
    if (static_cast<int>(probs.size()) <= true_class)
      throw std::invalid_argument("zoo_attack: true_class out of range");
    const int predicted = argmax(probs);
    if (predicted != true_class) {
      const double dist = l2(point, x);
      if (!best.valid || dist < best.distortion) {
        best = {point, predicted, dist, true};
        found_this_iteration = true;
      }
    }
    return probs;
  };

  auto objective = [&](const FeatureVector& point) {
    return squared_l2(point, x) +
           cfg.init_const * attack_loss(query(point), true_class, cfg.kappa);
  };

  AdversarialExample out;
  out.original = x;
  out.true_class = true_class;

  const std::vector<double> initial = query(x);
  const int initial_class = argmax(initial);
  if (initial_class != true_class) {
    out.adversarial = x;
    out.predicted_class_after = initial_class;
    out.success = true;
    out.queries = queries;
    out.l2_distortion = 0.0;
    out.wall_time = clock.now_seconds() - t_start;
    return out;
  }

  FeatureVector z = x;
  std::vector<AdamState> adam(static_cast<std::size_t>(dimension));
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> coords(static_cast<std::size_t>(dimension));
  std::iota(coords.begin(), coords.end(), 0);
  const Box box{cfg.clip_lo, cfg.clip_hi};
  std::vector<double> grads(static_cast<std::size_t>(cfg.coord_batch));

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    found_this_iteration = false;
    for (int j = 0; j < cfg.coord_batch; ++j) {
      std::uniform_int_distribution<int> pick(j, dimension - 1);
      std::swap(coords[static_cast<std::size_t>(j)],
                coords[static_cast<std::size_t>(pick(rng))]);
    }
    for (int j = 0; j < cfg.coord_batch; ++j)
      grads[static_cast<std::size_t>(j)] = estimate_coord_gradient(
          objective, z, coords[static_cast<std::size_t>(j)], cfg.variable_h,
          box);
    for (int j = 0; j < cfg.coord_batch; ++j) {
      const auto c = static_cast<std::size_t>(coords[static_cast<std::size_t>(j)]);
      const double delta =
          adam_coord_update(adam[c], grads[static_cast<std::size_t>(j)], cfg);
      z[c] = std::clamp(z[c] + delta, cfg.clip_lo, cfg.clip_hi);
    }
    if (cfg.abort_early && found_this_iteration) break;
  }

  if (best.valid) {
    out.adversarial = std::move(best.point);
    out.predicted_class_after = best.predicted;
    out.success = true;
  } else {
    out.adversarial = std::move(z);
    out.predicted_class_after = true_class;
    out.success = false;
  }
  out.queries = queries;
  out.l2_distortion = l2(out.adversarial, x);
  out.wall_time = clock.now_seconds() - t_start;
  return out;
}

BatchStats attack_batch(const Oracle& oracle,
                        const std::vector<AttackExample>& examples,
                        const ZooConfig& cfg, const Clock& clock,
                        const StopHook& stop) {
  if (examples.empty() && !stop)
    throw std::invalid_argument("attack_batch: empty examples and no budget");

  BatchStats stats;
  stats.results.reserve(examples.size());
  std::size_t successes = 0;
  std::uint64_t total_queries = 0;

  for (std::size_t i = 0; i < examples.size(); ++i) {
    ZooConfig per_example = cfg;
    per_example.seed = cfg.seed + i;
    AdversarialExample result =
        zoo_attack(oracle, examples[i].x, examples[i].label, per_example,
                   clock);
    if (result.success) ++successes;
    total_queries += result.queries;
    stats.total_wall_time += result.wall_time;
    stats.results.push_back(std::move(result));
    if (stop && stop()) break;
  }

  if (!stats.results.empty()) {
    stats.success_rate = static_cast<double>(successes) /
                         static_cast<double>(stats.results.size());
    stats.mean_queries = static_cast<double>(total_queries) /
                         static_cast<double>(stats.results.size());
  }
  return stats;
}

}  // namespace canbench
