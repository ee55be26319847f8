#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "canbench/candata.hpp"
#include "canbench/clock.hpp"
#include "canbench/pipeline.hpp"
#include "test_util.hpp"

using namespace canbench;

namespace {

PipelineConfig desk_config() {
  PipelineConfig cfg;
  cfg.model.kind = EnsembleKind::kRandomForest;
  cfg.model.rf.n_trees = 25;
  cfg.zoo.seed = 42;
  return cfg;
}

// single-leaf forest that always answers the same class
EnsembleModel constant_model(int winner, int n_classes, int n_features) {
  EnsembleModel model;
  model.kind = EnsembleKind::kRandomForest;
  for (int c = 0; c < n_classes; ++c)
    model.class_names.push_back("Class" + std::to_string(c));
  model.n_features = n_features;
  model.n_estimators = 1;
  DecisionTree tree;
  tree.n_features = n_features;
  TreeNode leaf;
  leaf.class_distribution.assign(static_cast<std::size_t>(n_classes), 0.0);
  leaf.class_distribution[static_cast<std::size_t>(winner)] = 1.0;
  tree.nodes.push_back(leaf);
  model.bag_trees.push_back(tree);
  return model;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("phase 1 runs diagnostic cross-validation then the final fit") {
  const LabeledDataset ds = generate_synthetic({1000, 4, 0.9, 42});
  const DataSplits splits = split_dataset(ds, {}, 42);
  const PipelineConfig cfg = desk_config();

  auto [model, report, cv_scores] = run_phase1_train_a(splits, cfg);
  REQUIRE(cv_scores.size() == 5);
  double mean = 0.0;
  for (double s : cv_scores) mean += s;
  mean /= 5.0;
  CHECK(mean >= 0.9);
  CHECK(model.n_estimators == 25);

  const auto folds = stratified_kfold(splits.a, 5);
  for (const FoldPair& fold : folds) CHECK(fold.validation.size() == 120);

  auto [model2, report2, cv2] = run_phase1_train_a(splits, cfg);
  CHECK(cv_scores == cv2);
}

TEST_CASE("phase 2 produces one labeled adversarial row per source row") {
  const LabeledDataset ds = generate_synthetic({500, 4, 0.9, 42});
  const DataSplits splits = split_dataset(ds, {}, 42);
  const PipelineConfig cfg = desk_config();
  auto [model_a, report, cv] = run_phase1_train_a(splits, cfg);

  FakeClock clock;
  const AdversarialSets sets =
      run_phase2_generate_adv(model_a, splits, cfg.zoo, clock);
  CHECK(sets.b_prime.size() == splits.b.size());
  CHECK(sets.c_prime.size() == splits.c.size());
  CHECK(sets.b_prime.labels == splits.b.labels);
  CHECK(sets.c_prime.labels == splits.c.labels);
  CHECK(sets.b_prime.class_names == splits.b.class_names);
  CHECK(sets.stats_b.results.size() == splits.b.size());

  // the attack must degrade the victim on its own adversarial set
  CHECK(model_accuracy(model_a, sets.b_prime) <
        model_accuracy(model_a, splits.b));

  const AdversarialSets no_c =
      run_phase2_generate_adv(model_a, splits, cfg.zoo, clock, false);
  CHECK(no_c.c_prime.empty());
  CHECK(no_c.stats_c.results.empty());
}

TEST_CASE("phase 3 trains on A plus B plus B-prime") {
  const LabeledDataset ds = generate_synthetic({500, 4, 0.9, 42});
  const DataSplits splits = split_dataset(ds, {}, 42);
  const PipelineConfig cfg = desk_config();
  auto [model_a, report, cv] = run_phase1_train_a(splits, cfg);
  FakeClock clock;
  const AdversarialSets sets =
      run_phase2_generate_adv(model_a, splits, cfg.zoo, clock, false);

  auto [model_abb, report_abb] =
      run_phase3_adv_training(splits, sets.b_prime, cfg);
  CHECK(report_abb.training_accuracy > 0.0);

  const LabeledDataset train =
      concat_datasets(concat_datasets(splits.a, splits.b), sets.b_prime);
  CHECK(train.size() == splits.a.size() + 2 * splits.b.size());

  LabeledDataset wrong = sets.b_prime;
  wrong.rows.pop_back();
  wrong.labels.pop_back();
  CHECK_THROWS_AS(run_phase3_adv_training(splits, wrong, cfg),
                  std::invalid_argument);
}

TEST_CASE("evaluation metrics") {
  LabeledDataset ds;
  ds.class_names = {"Class0", "Class1", "Class2", "Class3"};
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 5; ++i) ds.push_row({0.1, 0.2}, c);

  const EnsembleModel constant = constant_model(0, 4, 2);
  const EvalMetrics metrics = evaluate_model(constant, ds);
  CHECK(metrics.accuracy == doctest::Approx(0.25));
  CHECK(metrics.per_class[0].recall == doctest::Approx(1.0));
  CHECK(metrics.per_class[0].precision == doctest::Approx(0.25));
  CHECK(metrics.per_class[1].precision == 0.0);
  CHECK(metrics.per_class[1].recall == 0.0);
  CHECK(metrics.per_class[1].f1 == 0.0);

  LabeledDataset three;
  three.class_names = {"Class0", "Class1"};
  three.push_row({0.0}, 0);
  three.push_row({0.0}, 0);
  three.push_row({0.0}, 1);
  const EvalMetrics partial = evaluate_model(constant_model(0, 2, 1), three);
  CHECK(partial.accuracy == doctest::Approx(2.0 / 3.0));

  LabeledDataset all_zero;
  all_zero.class_names = {"Class0", "Class1"};
  all_zero.push_row({0.0}, 0);
  all_zero.push_row({1.0}, 0);
  all_zero.push_row({2.0}, 0);
  CHECK(evaluate_model(constant_model(0, 2, 1), all_zero).accuracy == 1.0);

  CHECK_THROWS_AS(evaluate_model(constant, LabeledDataset{}),
                  std::invalid_argument);
}

TEST_CASE("the pipeline also runs the boosting models end to end") {
  const LabeledDataset ds = generate_synthetic({300, 3, 0.9, 8});
  PipelineConfig cfg;
  cfg.model.kind = EnsembleKind::kGradientBoosting;
  cfg.model.gb.n_rounds = 8;
  cfg.zoo.max_iter = 10;
  cfg.k_folds = 2;
  cfg.generate_c_prime = false;
  FakeClock clock;
  const PipelineArtifacts artifacts = run_full_pipeline(ds, cfg, clock);
  CHECK(artifacts.model_a.kind == EnsembleKind::kGradientBoosting);
  CHECK(artifacts.b_prime.size() == artifacts.splits.b.size());
  CHECK(artifacts.cv_scores.size() == 2);
  CHECK(model_accuracy(artifacts.model_a, artifacts.b_prime) <
        model_accuracy(artifacts.model_a, artifacts.splits.b));
}

TEST_CASE("the full pipeline is reproducible") {
  const LabeledDataset ds = generate_synthetic({400, 4, 0.9, 42});
  PipelineConfig cfg = desk_config();
  cfg.model.rf.n_trees = 10;
  cfg.k_folds = 2;
  FakeClock clock;

  const PipelineArtifacts a = run_full_pipeline(ds, cfg, clock);
  const PipelineArtifacts b = run_full_pipeline(ds, cfg, clock);
  CHECK(a.cv_scores == b.cv_scores);
  CHECK(a.b_prime.rows == b.b_prime.rows);
  CHECK(a.c_prime.rows == b.c_prime.rows);

  std::ostringstream ma, mb;
  save_model(a.model_abb, ma);
  save_model(b.model_abb, mb);
  CHECK(ma.str() == mb.str());

  CHECK(a.b_prime.size() == a.splits.b.size());
  CHECK(a.stats_b.success_rate > 0.0);
}

TEST_CASE("artifacts are persisted to the run directory") {
  const LabeledDataset ds = generate_synthetic({400, 4, 0.9, 42});
  PipelineConfig cfg = desk_config();
  cfg.model.rf.n_trees = 10;
  cfg.k_folds = 2;
  FakeClock clock;
  const PipelineArtifacts artifacts = run_full_pipeline(ds, cfg, clock);

  const auto dir = testutil::fresh_dir("pipeline_artifacts");
  save_pipeline_artifacts(artifacts, dir.string());
  CHECK(std::filesystem::exists(dir / "model_a.txt"));
  CHECK(std::filesystem::exists(dir / "model_abb.txt"));
  CHECK(std::filesystem::exists(dir / "b_prime.csv"));
  CHECK(std::filesystem::exists(dir / "c_prime.csv"));
  CHECK(std::filesystem::exists(dir / "metrics.txt"));

  const EnsembleModel reloaded =
      load_model_file((dir / "model_a.txt").string());
  CHECK(model_accuracy(reloaded, artifacts.splits.b) ==
        model_accuracy(artifacts.model_a, artifacts.splits.b));
  const LabeledDataset b_prime =
      load_dataset_file((dir / "b_prime.csv").string());
  CHECK(b_prime.rows == artifacts.b_prime.rows);

  std::ifstream metrics(dir / "metrics.txt");
  std::stringstream text;
  text << metrics.rdbuf();
  CHECK(text.str().find("cv_scores =") != std::string::npos);
  CHECK(text.str().find("model_a.on_b_prime.accuracy") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
