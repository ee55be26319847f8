#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "canbench/candata.hpp"
#include "canbench/clock.hpp"
#include "canbench/forest.hpp"
#include "canbench/zoo.hpp"

namespace canbench {

struct PipelineConfig {
  EnsembleSpec model{};
  ZooConfig zoo{};
  SplitRatios ratios{};
  std::uint64_t split_seed = 42;
  int k_folds = 5;
  bool generate_c_prime = true;
};

/// Everything the three-phase procedure produces: the victim Model_A with
/// its cross-validation scores, the adversarial sets B'/C' (one row per
/// source row, source labels kept), and the retrained Model_{A+B+B'}.
struct PipelineArtifacts {
  DataSplits splits;
  EnsembleModel model_a;
  TrainReport report_a;
  std::vector<double> cv_scores;
  LabeledDataset b_prime;
  LabeledDataset c_prime;
  BatchStats stats_b;
  BatchStats stats_c;
  EnsembleModel model_abb;
  TrainReport report_abb;
};

/// Phase 1: diagnostic k-fold stratified CV on A, then the final fit on all
/// of A.
std::tuple<EnsembleModel, TrainReport, std::vector<double>> run_phase1_train_a(
    const DataSplits& splits, const PipelineConfig& cfg);

struct AdversarialSets {
  LabeledDataset b_prime;
  LabeledDataset c_prime;
  BatchStats stats_b;
  BatchStats stats_c;
};

/// Phase 2: one adversarial vector per row of B (and of C unless skipped),
/// generated against model_a. Failed attacks contribute their final
/// iterate, so cardinalities match the sources exactly.
AdversarialSets run_phase2_generate_adv(const EnsembleModel& model_a,
                                        const DataSplits& splits,
                                        const ZooConfig& zoo_cfg,
                                        const Clock& clock,
                                        bool make_c_prime = true);

/// Phase 3: retrain on A + B + B' (adversarial rows keep true labels).
std::pair<EnsembleModel, TrainReport> run_phase3_adv_training(
    const DataSplits& splits, const LabeledDataset& b_prime,
    const PipelineConfig& cfg);

struct PerClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalMetrics {
  double accuracy = 0.0;
  std::vector<PerClassMetrics> per_class;
};

EvalMetrics evaluate_model(const EnsembleModel& model, const LabeledDataset& ds);

PipelineArtifacts run_full_pipeline(const LabeledDataset& ds,
                                    const PipelineConfig& cfg,
                                    const Clock& clock);

/// Writes model_a.txt, model_abb.txt, b_prime.csv, c_prime.csv (when
/// present) and metrics.txt under dir.
void save_pipeline_artifacts(const PipelineArtifacts& artifacts,
                             const std::string& dir);

std::string hardware_string();

}  // namespace canbench
