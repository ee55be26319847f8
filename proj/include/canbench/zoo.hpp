#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "canbench/candata.hpp"
#include "canbench/clock.hpp"
#include "canbench/forest.hpp"

namespace canbench {

/// Black-box prediction interface: feature vector in, class distribution out.
using Oracle = std::function<std::vector<double>(const FeatureVector&)>;

Oracle make_model_oracle(const EnsembleModel& model);

struct ZooConfig {
  double learning_rate = 0.1;
  int max_iter = 50;
  double variable_h = 0.2;  // finite-difference step
  int coord_batch = 10;     // coordinates updated per iteration
  double kappa = 0.0;       // confidence margin
  double init_const = 1e-3; // weight of the attack loss in the objective
  double clip_lo = 0.0;
  double clip_hi = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool abort_early = true;
  std::uint64_t seed = 0;
};

struct AdversarialExample {
  FeatureVector original;
  FeatureVector adversarial;
  int true_class = 0;
  int predicted_class_after = 0;
  bool success = false;
  std::uint64_t queries = 0;
  double wall_time = 0.0;
  double l2_distortion = 0.0;
};

struct AttackExample {
  FeatureVector x;
  int label = 0;
};

std::vector<AttackExample> dataset_to_attack_examples(const LabeledDataset& ds);

struct BatchStats {
  std::vector<AdversarialExample> results;
  double success_rate = 0.0;
  double mean_queries = 0.0;
  double total_wall_time = 0.0;
};

/// Untargeted hinge loss on log-probabilities:
/// max(log p_t - max_{j != t} log p_j, -kappa). Positive while the oracle
/// still prefers the true class; floored once the input evades.
double attack_loss(const std::vector<double>& probs, int true_class,
                   double kappa);

/// ||x - x0||_2^2 + c * attack_loss(oracle(x)).
double zoo_objective(const FeatureVector& x, const FeatureVector& x0,
                     const Oracle& oracle, int true_class, double c,
                     double kappa);

struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

/// Central difference along coordinate i using exactly two objective
/// evaluations. When a box is given, both evaluation points are clipped
/// into it first and the actually used displacement divides.
double estimate_coord_gradient(
    const std::function<double(const FeatureVector&)>& objective,
    const FeatureVector& x, int coord, double h,
    std::optional<Box> box = std::nullopt);

struct AdamState {
  double m = 0.0;
  double v = 0.0;
  int t = 0;
};

/// Bias-corrected per-coordinate Adam step; mutates the state, returns the
/// delta to add to the coordinate.
double adam_coord_update(AdamState& state, double gradient,
                         const ZooConfig& cfg);

/// Zeroth-order evasion attack. Per iteration: sample coord_batch distinct
/// coordinates, estimate objective gradients by clipped central differences
/// (two oracle queries each), apply Adam per coordinate, clip the iterate.
/// Misclassification is detected from the responses the gradient probes
/// already produced, so no extra queries are spent on checks; with
/// abort_early the attack stops at the end of the first iteration that
/// observed one. Returns the lowest-distortion successful point seen, else
/// the final iterate.
AdversarialExample zoo_attack(const Oracle& oracle, const FeatureVector& x,
                              int true_class, const ZooConfig& cfg,
                              const Clock& clock);

using StopHook = std::function<bool()>;

/// Sequential attack over examples, example i seeded with cfg.seed + i.
/// An optional stop hook is consulted after each completed example; stats
/// cover exactly the processed prefix.
BatchStats attack_batch(const Oracle& oracle,
                        const std::vector<AttackExample>& examples,
                        const ZooConfig& cfg, const Clock& clock,
                        const StopHook& stop = nullptr);

}  // namespace canbench
