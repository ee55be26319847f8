#include "canbench/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

namespace canbench {

std::tuple<EnsembleModel, TrainReport, std::vector<double>> run_phase1_train_a(
    const DataSplits& splits, const PipelineConfig& cfg) {
  if (cfg.k_folds < 2)
    throw std::invalid_argument("pipeline: k_folds must be >= 2");

  std::vector<double> cv_scores;
  cv_scores.reserve(static_cast<std::size_t>(cfg.k_folds));
  for (const FoldPair& fold : stratified_kfold(splits.a, cfg.k_folds)) {
    auto [model, report] = fit_ensemble(fold.train, cfg.model);
    cv_scores.push_back(model_accuracy(model, fold.validation));
  }

  auto [model, report] = fit_ensemble(splits.a, cfg.model);
  return {std::move(model), report, std::move(cv_scores)};
}

namespace {

LabeledDataset adversarial_rows(const LabeledDataset& source,
                                const BatchStats& stats) {
  LabeledDataset out;
  out.class_names = source.class_names;
  out.rows.reserve(stats.results.size());
  for (std::size_t i = 0; i < stats.results.size(); ++i)
    out.push_row(stats.results[i].adversarial, source.labels[i]);
  return out;
}

}  // namespace

AdversarialSets run_phase2_generate_adv(const EnsembleModel& model_a,
                                        const DataSplits& splits,
                                        const ZooConfig& zoo_cfg,
                                        const Clock& clock,
                                        bool make_c_prime) {
  const Oracle oracle = make_model_oracle(model_a);

  AdversarialSets sets;
  sets.stats_b =
      attack_batch(oracle, dataset_to_attack_examples(splits.b), zoo_cfg,
                   clock);
  sets.b_prime = adversarial_rows(splits.b, sets.stats_b);

  if (make_c_prime) {
    sets.stats_c =
        attack_batch(oracle, dataset_to_attack_examples(splits.c), zoo_cfg,
                     clock);
    sets.c_prime = adversarial_rows(splits.c, sets.stats_c);
  } else {
    sets.c_prime.class_names = splits.c.class_names;
  }
  return sets;
}

std::pair<EnsembleModel, TrainReport> run_phase3_adv_training(
    const DataSplits& splits, const LabeledDataset& b_prime,
    const PipelineConfig& cfg) {
  if (b_prime.size() != splits.b.size())
    throw std::invalid_argument("phase 3: |B'| != |B|");
  const LabeledDataset train =
      concat_datasets(concat_datasets(splits.a, splits.b), b_prime);
  return fit_ensemble(train, cfg.model);
}

EvalMetrics evaluate_model(const EnsembleModel& model,
                           const LabeledDataset& ds) {
  if (ds.empty()) throw std::invalid_argument("evaluate_model: empty dataset");

  const std::size_t k = ds.class_names.size();
  std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int predicted = predict_class(model, ds.rows[i]);
    const int truth = ds.labels[i];
    if (predicted == truth) {
      ++correct;
      ++tp[static_cast<std::size_t>(truth)];
    } else {
      ++fp[static_cast<std::size_t>(predicted)];
      ++fn[static_cast<std::size_t>(truth)];
    }
  }

  EvalMetrics metrics;
  metrics.accuracy =
      static_cast<double>(correct) / static_cast<double>(ds.size());
  metrics.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double p_den = static_cast<double>(tp[c] + fp[c]);
    const double r_den = static_cast<double>(tp[c] + fn[c]);
    auto& m = metrics.per_class[c];
    m.precision = p_den > 0.0 ? static_cast<double>(tp[c]) / p_den : 0.0;
    m.recall = r_den > 0.0 ? static_cast<double>(tp[c]) / r_den : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  return metrics;
}

PipelineArtifacts run_full_pipeline(const LabeledDataset& ds,
                                    const PipelineConfig& cfg,
                                    const Clock& clock) {
  PipelineArtifacts artifacts;
  artifacts.splits = split_dataset(ds, cfg.ratios, cfg.split_seed);

  auto [model_a, report_a, cv_scores] =
      run_phase1_train_a(artifacts.splits, cfg);
  artifacts.model_a = std::move(model_a);
  artifacts.report_a = report_a;
  artifacts.cv_scores = std::move(cv_scores);

  AdversarialSets sets =
      run_phase2_generate_adv(artifacts.model_a, artifacts.splits, cfg.zoo,
                              clock, cfg.generate_c_prime);
  artifacts.b_prime = std::move(sets.b_prime);
  artifacts.c_prime = std::move(sets.c_prime);
  artifacts.stats_b = std::move(sets.stats_b);
  artifacts.stats_c = std::move(sets.stats_c);

  auto [model_abb, report_abb] =
      run_phase3_adv_training(artifacts.splits, artifacts.b_prime, cfg);
  artifacts.model_abb = std::move(model_abb);
  artifacts.report_abb = report_abb;
  return artifacts;
}

namespace {

void write_batch_stats(std::ostream& out, const char* name,
                       const BatchStats& stats) {
  out << name << ".examples = " << stats.results.size() << '\n'
      << name << ".success_rate = " << stats.success_rate << '\n'
      << name << ".mean_queries = " << stats.mean_queries << '\n'
      << name << ".total_wall_time_s = " << stats.total_wall_time << '\n';
}

void write_eval(std::ostream& out, const char* name, const EvalMetrics& m,
                const std::vector<std::string>& class_names) {
  out << name << ".accuracy = " << m.accuracy << '\n';
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    out << name << '.' << class_names[c]
        << ".precision = " << m.per_class[c].precision << '\n'
        << name << '.' << class_names[c]
        << ".recall = " << m.per_class[c].recall << '\n'
        << name << '.' << class_names[c] << ".f1 = " << m.per_class[c].f1
        << '\n';
  }
}

}  // namespace

void save_pipeline_artifacts(const PipelineArtifacts& artifacts,
                             const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  save_model_file(artifacts.model_a, (fs::path(dir) / "model_a.txt").string());
  save_model_file(artifacts.model_abb,
                  (fs::path(dir) / "model_abb.txt").string());
  save_dataset_file(artifacts.b_prime,
                    (fs::path(dir) / "b_prime.csv").string());
  if (!artifacts.c_prime.empty())
    save_dataset_file(artifacts.c_prime,
                      (fs::path(dir) / "c_prime.csv").string());

  std::ofstream out(fs::path(dir) / "metrics.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics file");

  out << "cv_scores =";
  for (double score : artifacts.cv_scores) out << ' ' << score;
  out << '\n';
  out << "model_a.fit_wall_time_s = " << artifacts.report_a.fit_wall_time
      << '\n'
      << "model_a.training_accuracy = " << artifacts.report_a.training_accuracy
      << '\n'
      << "model_abb.fit_wall_time_s = " << artifacts.report_abb.fit_wall_time
      << '\n'
      << "model_abb.training_accuracy = "
      << artifacts.report_abb.training_accuracy << '\n';

  write_batch_stats(out, "attack_b", artifacts.stats_b);
  if (!artifacts.c_prime.empty())
    write_batch_stats(out, "attack_c", artifacts.stats_c);

  const auto& names = artifacts.splits.b.class_names;
  write_eval(out, "model_a.on_b", evaluate_model(artifacts.model_a,
                                                 artifacts.splits.b),
             names);
  write_eval(out, "model_a.on_b_prime",
             evaluate_model(artifacts.model_a, artifacts.b_prime), names);
  write_eval(out, "model_abb.on_b_prime",
             evaluate_model(artifacts.model_abb, artifacts.b_prime), names);
  if (!artifacts.c_prime.empty()) {
    write_eval(out, "model_a.on_c_prime",
               evaluate_model(artifacts.model_a, artifacts.c_prime), names);
    write_eval(out, "model_abb.on_c_prime",
               evaluate_model(artifacts.model_abb, artifacts.c_prime), names);
  }
}

std::string hardware_string() {
  std::string cpu = "unknown-cpu";
  std::ifstream info("/proc/cpuinfo");
  std::string line;
  while (std::getline(info, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        const auto start = cpu.find_first_not_of(" \t");
        if (start != std::string::npos) cpu = cpu.substr(start);
      }
      break;
    }
  }
  return cpu + " x" + std::to_string(std::thread::hardware_concurrency());
}

}  // namespace canbench
