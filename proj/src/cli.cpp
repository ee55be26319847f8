#include "canbench/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "canbench/bench.hpp"
#include "canbench/candata.hpp"
#include "canbench/clock.hpp"
#include "canbench/forest.hpp"
#include "canbench/pipeline.hpp"
#include "canbench/report.hpp"
#include "canbench/zoo.hpp"

namespace fs = std::filesystem;

namespace canbench {

namespace {

int parse_int_strict(const std::string& token) {
  int value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw std::invalid_argument("bad integer '" + token + "' in grid spec");
  return value;
}

}  // namespace

std::vector<int> parse_grid_spec(const std::string& spec) {
  if (spec.empty()) throw std::invalid_argument("empty grid spec");

  std::vector<int> grid;
  if (spec.find(':') != std::string::npos) {
    // start:stop:step, stop always included
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3)
      throw std::invalid_argument("grid spec must be start:stop:step");
    const int start = parse_int_strict(parts[0]);
    const int stop = parse_int_strict(parts[1]);
    const int step = parse_int_strict(parts[2]);
    if (start < 1 || stop < start || step < 1)
      throw std::invalid_argument("grid spec must satisfy 1 <= start <= stop, step >= 1");
    for (int v = start; v <= stop; v += step) grid.push_back(v);
    if (grid.back() != stop) grid.push_back(stop);
  } else {
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) grid.push_back(parse_int_strict(part));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < 1 || (i > 0 && grid[i] <= grid[i - 1]))
        throw std::invalid_argument(
            "grid list must be strictly increasing and >= 1");
    }
    if (grid.empty()) throw std::invalid_argument("empty grid list");
  }
  return grid;
}

namespace {

struct CommonOpts {
  std::string out_dir = "canbench-out";
  double fake_clock_step = 0.0;
  std::string config_path;  // handled by apply_config_file before parsing
};

void add_common_options(CLI::App* cmd, CommonOpts& common) {
  cmd->add_option("--out", common.out_dir, "Output directory")
      ->envname("CANBENCH_OUT")
      ->capture_default_str();
  cmd->add_option("--fake-clock-step", common.fake_clock_step,
                  "Use a deterministic clock advancing this many seconds per "
                  "reading (0 = real clock)")
      ->capture_default_str();
  cmd->add_option("--config", common.config_path,
                  "Read flag defaults from a key = value file (flags given "
                  "on the command line win)");
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

// Flat key = value files; each key becomes --key=value unless that flag was
// already given, so the command line always wins.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line is not key = value", line_number);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line has an empty key", line_number);

    const std::string flag = "--" + key;
    bool present = false;
    for (const std::string& arg : args)
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) present = true;
    if (!present) args.push_back(flag + "=" + value);
  }
  return args;
}

std::unique_ptr<Clock> make_clock(const CommonOpts& common) {
  if (common.fake_clock_step > 0.0)
    return std::make_unique<TickingClock>(common.fake_clock_step);
  return std::make_unique<SteadyClock>();
}

struct ModelOpts {
  std::string name = "rf";
  int n_estimators = -1;  // -1: per-kind default
  int max_depth = -2;     // -2: per-kind default
  double learning_rate = -1.0;
  double lambda_l2 = 1.0;
  double gamma = 0.0;
  std::uint64_t seed = 42;
  int threads = 1;
};

void add_model_options(CLI::App* cmd, ModelOpts& opts, bool required) {
  auto* model = cmd->add_option("--model", opts.name, "Model kind: rf|gb|xgb")
                    ->check(CLI::IsMember({"rf", "gb", "xgb"}))
                    ->capture_default_str();
  if (required) model->required();
  cmd->add_option("--n-estimators", opts.n_estimators,
                  "Trees (rf) or boosting rounds (gb/xgb); -1 = kind default");
  cmd->add_option("--model-depth", opts.max_depth,
                  "Tree depth limit; -2 = kind default, -1 = unlimited");
  cmd->add_option("--model-lr", opts.learning_rate,
                  "Boosting learning rate; -1 = kind default");
  cmd->add_option("--lambda", opts.lambda_l2, "xgb L2 leaf regularizer")
      ->capture_default_str();
  cmd->add_option("--gamma", opts.gamma, "xgb split gain penalty")
      ->capture_default_str();
  cmd->add_option("--model-seed", opts.seed, "Model seed")
      ->capture_default_str();
  cmd->add_option("--threads", opts.threads,
                  "Fitting threads (rf only; timed paths require 1)")
      ->capture_default_str();
}

EnsembleSpec make_spec(const ModelOpts& opts) {
  EnsembleSpec spec;
  spec.kind = ensemble_kind_from_string(opts.name);
  spec.rf.seed = spec.gb.seed = spec.xgb.seed = opts.seed;
  spec.rf.n_threads = opts.threads;
  spec.xgb.lambda_l2 = opts.lambda_l2;
  spec.xgb.gamma = opts.gamma;
  if (opts.n_estimators >= 0) {
    spec.rf.n_trees = opts.n_estimators;
    spec.gb.n_rounds = opts.n_estimators;
    spec.xgb.n_rounds = opts.n_estimators;
  }
  if (opts.max_depth >= -1) {
    spec.rf.max_depth = opts.max_depth;
    spec.gb.max_depth = opts.max_depth;
    spec.xgb.max_depth = opts.max_depth;
  }
  if (opts.learning_rate > 0.0) {
    spec.gb.learning_rate = opts.learning_rate;
    spec.xgb.learning_rate = opts.learning_rate;
  }
  return spec;
}

void add_zoo_options(CLI::App* cmd, ZooConfig& zoo, bool& no_abort_early) {
  cmd->add_option("--learning-rate", zoo.learning_rate,
                  "ZOO Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--max-iter", zoo.max_iter, "ZOO iterations per example")
      ->capture_default_str();
  cmd->add_option("--variable-h", zoo.variable_h,
                  "ZOO finite-difference step")
      ->capture_default_str();
  cmd->add_option("--coord-batch", zoo.coord_batch,
                  "Coordinates updated per iteration")
      ->capture_default_str();
  cmd->add_option("--kappa", zoo.kappa, "Confidence margin")
      ->capture_default_str();
  cmd->add_option("--init-const", zoo.init_const,
                  "Weight of the attack loss in the objective")
      ->capture_default_str();
  cmd->add_flag("--no-abort-early", no_abort_early,
                "Keep iterating after the first evasion");
  cmd->add_option("--zoo-seed", zoo.seed, "Attack seed")
      ->capture_default_str();
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const fs::path& dir, const std::string& command,
                    const KeyValues& config, const KeyValues& info) {
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest");
  out << "# command = " << command << '\n';
  out << "# canbench = 0.1.0\n";
  out << "# hardware = " << hardware_string() << '\n';
  for (const auto& [key, value] : info) out << "# " << key << " = " << value << '\n';
  for (const auto& [key, value] : config) out << key << " = " << value << '\n';
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

KeyValues zoo_config_entries(const ZooConfig& zoo) {
  return {{"learning-rate", fmt(zoo.learning_rate)},
          {"max-iter", std::to_string(zoo.max_iter)},
          {"variable-h", fmt(zoo.variable_h)},
          {"coord-batch", std::to_string(zoo.coord_batch)},
          {"kappa", fmt(zoo.kappa)},
          {"init-const", fmt(zoo.init_const)},
          {"no-abort-early", zoo.abort_early ? "false" : "true"},
          {"zoo-seed", std::to_string(zoo.seed)}};
}

KeyValues model_config_entries(const ModelOpts& opts) {
  return {{"model", opts.name},
          {"n-estimators", std::to_string(opts.n_estimators)},
          {"model-depth", std::to_string(opts.max_depth)},
          {"model-lr", fmt(opts.learning_rate)},
          {"lambda", fmt(opts.lambda_l2)},
          {"gamma", fmt(opts.gamma)},
          {"model-seed", std::to_string(opts.seed)},
          {"threads", std::to_string(opts.threads)}};
}

struct Stopwatch {
  SteadyClock clock;
  double start = 0.0;
  Stopwatch() { start = clock.now_seconds(); }
  std::string elapsed() const { return fmt(clock.now_seconds() - start); }
};

std::string default_dataset_path(const CommonOpts& common) {
  return (fs::path(common.out_dir) / "dataset.csv").string();
}

LabeledDataset load_dataset_arg(const std::string& path,
                                const CommonOpts& common) {
  return load_dataset_file(path.empty() ? default_dataset_path(common) : path);
}

// --- subcommand handlers ---------------------------------------------------

struct SynthOpts {
  CommonOpts common;
  std::size_t n = 1000;
  int classes = 4;
  double separation = SyntheticConfig::kHighSeparation;
  std::uint64_t seed = 42;
  std::string dataset_out;
  std::string log_out;
};

void run_synth(const SynthOpts& opts) {
  Stopwatch watch;
  SyntheticConfig cfg;
  cfg.n = opts.n;
  cfg.n_classes = opts.classes;
  cfg.class_separation = opts.separation;
  cfg.seed = opts.seed;

  const auto frames = generate_synthetic_frames(cfg);
  const LabeledDataset ds =
      frames_to_dataset(frames, synthetic_class_names(cfg.n_classes), false);

  fs::create_directories(opts.common.out_dir);
  const std::string dataset_path = opts.dataset_out.empty()
                                       ? default_dataset_path(opts.common)
                                       : opts.dataset_out;
  save_dataset_file(ds, dataset_path);

  if (!opts.log_out.empty()) {
    std::ofstream log(opts.log_out, std::ios::binary);
    if (!log) throw std::runtime_error("cannot write log: " + opts.log_out);
    for (const CanFrame& frame : frames) log << format_otids_record(frame) << '\n';
  }

  write_manifest(opts.common.out_dir, "synth",
                 {{"n", std::to_string(opts.n)},
                  {"classes", std::to_string(opts.classes)},
                  {"separation", fmt(opts.separation)},
                  {"seed", std::to_string(opts.seed)},
                  {"dataset-out", dataset_path}},
                 {{"rows", std::to_string(ds.size())},
                  {"wall_time_s", watch.elapsed()}});
  std::cout << "wrote " << ds.size() << " rows to " << dataset_path << '\n';
}

struct PrepareOpts {
  CommonOpts common;
  std::vector<std::string> logs;
  std::vector<std::string> labels;
  std::string class_list = "Normal,DoS,Fuzzy,Impersonation";
  bool include_remote = false;
  std::string dataset_out;
};

void run_prepare(const PrepareOpts& opts) {
  Stopwatch watch;
  if (opts.logs.empty())
    throw std::invalid_argument("prepare: at least one --log is required");
  if (opts.logs.size() != opts.labels.size())
    throw std::invalid_argument("prepare: need one --label per --log");

  std::vector<std::string> classes;
  std::stringstream ss(opts.class_list);
  std::string name;
  while (std::getline(ss, name, ',')) classes.push_back(name);

  std::vector<CanFrame> frames;
  for (std::size_t i = 0; i < opts.logs.size(); ++i) {
    auto file_frames = load_otids_log(opts.logs[i], opts.labels[i]);
    frames.insert(frames.end(), file_frames.begin(), file_frames.end());
  }
  const LabeledDataset ds =
      frames_to_dataset(frames, classes, opts.include_remote);

  fs::create_directories(opts.common.out_dir);
  const std::string dataset_path = opts.dataset_out.empty()
                                       ? default_dataset_path(opts.common)
                                       : opts.dataset_out;
  save_dataset_file(ds, dataset_path);

  KeyValues config{{"classes", opts.class_list},
                   {"dataset-out", dataset_path}};
  for (std::size_t i = 0; i < opts.logs.size(); ++i) {
    config.emplace_back("log", opts.logs[i]);
    config.emplace_back("label", opts.labels[i]);
  }
  write_manifest(opts.common.out_dir, "prepare", config,
                 {{"rows", std::to_string(ds.size())},
                  {"wall_time_s", watch.elapsed()}});
  std::cout << "wrote " << ds.size() << " rows to " << dataset_path << '\n';
}

struct TrainOpts {
  CommonOpts common;
  ModelOpts model;
  std::string dataset;
  std::string model_out;
};

void run_train(const TrainOpts& opts) {
  Stopwatch watch;
  const LabeledDataset ds = load_dataset_arg(opts.dataset, opts.common);
  const EnsembleSpec spec = make_spec(opts.model);
  auto [model, report] = fit_ensemble(ds, spec);

  fs::create_directories(opts.common.out_dir);
  const std::string model_path =
      opts.model_out.empty()
          ? (fs::path(opts.common.out_dir) / "model.txt").string()
          : opts.model_out;
  save_model_file(model, model_path);

  KeyValues config = model_config_entries(opts.model);
  config.emplace_back("dataset", opts.dataset.empty()
                                     ? default_dataset_path(opts.common)
                                     : opts.dataset);
  config.emplace_back("model-out", model_path);
  write_manifest(opts.common.out_dir, "train", config,
                 {{"fit_wall_time_s", fmt(report.fit_wall_time)},
                  {"training_accuracy", fmt(report.training_accuracy)},
                  {"wall_time_s", watch.elapsed()}});
  std::cout << "fit " << opts.model.name << " in " << report.fit_wall_time
            << " s, training accuracy " << report.training_accuracy << '\n';
}

struct AttackOpts {
  CommonOpts common;
  ZooConfig zoo;
  bool no_abort_early = false;
  std::string dataset;
  std::string model_file;
  std::size_t limit = 0;
};

void run_attack(const AttackOpts& opts) {
  Stopwatch watch;
  const LabeledDataset ds = load_dataset_arg(opts.dataset, opts.common);
  const std::string model_path =
      opts.model_file.empty()
          ? (fs::path(opts.common.out_dir) / "model.txt").string()
          : opts.model_file;
  const EnsembleModel model = load_model_file(model_path);

  ZooConfig zoo = opts.zoo;
  zoo.abort_early = !opts.no_abort_early;

  auto examples = dataset_to_attack_examples(ds);
  if (opts.limit > 0 && examples.size() > opts.limit)
    examples.resize(opts.limit);

  const auto clock = make_clock(opts.common);
  const Oracle oracle = make_model_oracle(model);
  const BatchStats stats = attack_batch(oracle, examples, zoo, *clock);

  LabeledDataset adversarial;
  adversarial.class_names = ds.class_names;
  for (std::size_t i = 0; i < stats.results.size(); ++i)
    adversarial.push_row(stats.results[i].adversarial, examples[i].label);

  fs::create_directories(opts.common.out_dir);
  save_dataset_file(adversarial,
                    (fs::path(opts.common.out_dir) / "adversarial.csv").string());

  std::ofstream stats_out(fs::path(opts.common.out_dir) / "attack_stats.txt",
                          std::ios::binary);
  stats_out << "examples = " << stats.results.size() << '\n'
            << "success_rate = " << stats.success_rate << '\n'
            << "mean_queries = " << stats.mean_queries << '\n'
            << "total_wall_time_s = " << stats.total_wall_time << '\n';

  KeyValues config = zoo_config_entries(zoo);
  config.emplace_back("dataset", opts.dataset.empty()
                                     ? default_dataset_path(opts.common)
                                     : opts.dataset);
  config.emplace_back("model-file", model_path);
  config.emplace_back("limit", std::to_string(opts.limit));
  write_manifest(opts.common.out_dir, "attack", config,
                 {{"success_rate", fmt(stats.success_rate)},
                  {"mean_queries", fmt(stats.mean_queries)},
                  {"wall_time_s", watch.elapsed()}});
  std::cout << "attacked " << stats.results.size() << " examples, success rate "
            << stats.success_rate << '\n';
}

struct PipelineOpts {
  CommonOpts common;
  ModelOpts model;
  ZooConfig zoo;
  bool no_abort_early = false;
  std::string dataset;
  int k_folds = 5;
  std::uint64_t split_seed = 42;
  bool skip_c_prime = false;
};

void run_pipeline_cmd(const PipelineOpts& opts) {
  Stopwatch watch;
  const LabeledDataset ds = load_dataset_arg(opts.dataset, opts.common);

  PipelineConfig cfg;
  cfg.model = make_spec(opts.model);
  cfg.zoo = opts.zoo;
  cfg.zoo.abort_early = !opts.no_abort_early;
  cfg.k_folds = opts.k_folds;
  cfg.split_seed = opts.split_seed;
  cfg.generate_c_prime = !opts.skip_c_prime;

  const auto clock = make_clock(opts.common);
  const PipelineArtifacts artifacts = run_full_pipeline(ds, cfg, *clock);
  save_pipeline_artifacts(artifacts, opts.common.out_dir);

  KeyValues config = model_config_entries(opts.model);
  const KeyValues zoo_entries = zoo_config_entries(cfg.zoo);
  config.insert(config.end(), zoo_entries.begin(), zoo_entries.end());
  config.emplace_back("dataset", opts.dataset.empty()
                                     ? default_dataset_path(opts.common)
                                     : opts.dataset);
  config.emplace_back("k", std::to_string(opts.k_folds));
  config.emplace_back("split-seed", std::to_string(opts.split_seed));

  double cv_mean = 0.0;
  for (double s : artifacts.cv_scores) cv_mean += s;
  if (!artifacts.cv_scores.empty()) cv_mean /= artifacts.cv_scores.size();
  write_manifest(opts.common.out_dir, "pipeline", config,
                 {{"cv_mean_accuracy", fmt(cv_mean)},
                  {"b_prime_rows", std::to_string(artifacts.b_prime.size())},
                  {"attack_b_success_rate", fmt(artifacts.stats_b.success_rate)},
                  {"model_a_fit_s", fmt(artifacts.report_a.fit_wall_time)},
                  {"model_abb_fit_s", fmt(artifacts.report_abb.fit_wall_time)},
                  {"wall_time_s", watch.elapsed()}});
  std::cout << "pipeline done: |B'| = " << artifacts.b_prime.size()
            << ", attack success rate on B = "
            << artifacts.stats_b.success_rate << '\n';
}

struct SweepOpts {
  CommonOpts common;
  ModelOpts model;
  ZooConfig zoo;
  bool no_abort_early = false;
  std::string dataset;
  std::string grid_spec;
  double budget_s = 300.0;
  int n_target = kFullScaleAdversarialTarget;
  std::string mode = "attack";
  std::uint64_t split_seed = 42;
};

void run_sweep(const SweepOpts& opts) {
  Stopwatch watch;
  const LabeledDataset ds = load_dataset_arg(opts.dataset, opts.common);
  const DataSplits splits = split_dataset(ds, {}, opts.split_seed);

  const EnsembleSpec spec = make_spec(opts.model);
  ZooConfig zoo = opts.zoo;
  zoo.abort_early = !opts.no_abort_early;

  SweepConfig sweep_cfg;
  if (!opts.grid_spec.empty()) sweep_cfg.grid = parse_grid_spec(opts.grid_spec);
  sweep_cfg.budget_s = opts.budget_s;
  sweep_cfg.n_target = opts.n_target;

  const auto clock = make_clock(opts.common);
  fs::create_directories(opts.common.out_dir);

  SweepMeta meta;
  meta.model_kind = spec.kind;
  meta.grid = sweep_cfg.grid;
  meta.budget_s = sweep_cfg.budget_s;
  meta.n_target = sweep_cfg.n_target;
  meta.hardware = hardware_string();
  meta.model_seed = opts.model.seed;
  meta.zoo_seed = zoo.seed;

  KeyValues info;
  const std::string base =
      (fs::path(opts.common.out_dir) / ("sweep_" + opts.model.name)).string();

  if (opts.mode == "attack" || opts.mode == "both") {
    const SweepResult result =
        run_attack_time_sweep(splits, spec, sweep_cfg, zoo, *clock);
    const SweepTable table = make_sweep_table(result.records, meta);
    emit_sweep_csv_file(table, base + "_attack.csv");
    emit_svg_plot_file(table, PlotKind::kAttackTime, base + "_attack.svg");
    info.emplace_back("attack_slope_s_per_estimator", fmt(table.fit.slope));
    info.emplace_back("attack_r2", fmt(table.fit.r2));
  }
  if (opts.mode == "at" || opts.mode == "both") {
    // B' comes from one default-size Model_A and is reused across the grid
    const EnsembleModel model_a = fit_ensemble(splits.a, spec).first;
    const AdversarialSets sets =
        run_phase2_generate_adv(model_a, splits, zoo, *clock, false);
    const SweepResult result =
        run_at_time_sweep(splits, {sets.b_prime}, spec, sweep_cfg.grid, *clock);
    const SweepTable table = make_sweep_table(result.records, meta);
    emit_sweep_csv_file(table, base + "_at.csv");
    emit_svg_plot_file(table, PlotKind::kAtTime, base + "_at.svg");
    info.emplace_back("at_slope_s_per_estimator", fmt(table.fit.slope));
    info.emplace_back("at_r2", fmt(table.fit.r2));
  }

  std::ostringstream grid_str;
  for (std::size_t i = 0; i < sweep_cfg.grid.size(); ++i)
    grid_str << (i ? "," : "") << sweep_cfg.grid[i];

  KeyValues config = model_config_entries(opts.model);
  const KeyValues zoo_entries = zoo_config_entries(zoo);
  config.insert(config.end(), zoo_entries.begin(), zoo_entries.end());
  config.emplace_back("dataset", opts.dataset.empty()
                                     ? default_dataset_path(opts.common)
                                     : opts.dataset);
  config.emplace_back("grid", grid_str.str());
  config.emplace_back("budget-s", fmt(sweep_cfg.budget_s));
  config.emplace_back("n-target", std::to_string(sweep_cfg.n_target));
  config.emplace_back("mode", opts.mode);
  config.emplace_back("split-seed", std::to_string(opts.split_seed));
  config.emplace_back("fake-clock-step", fmt(opts.common.fake_clock_step));
  info.emplace_back("wall_time_s", watch.elapsed());
  write_manifest(opts.common.out_dir, "sweep", config, info);
  std::cout << "sweep artifacts written under " << opts.common.out_dir << '\n';
}

struct ReportOpts {
  CommonOpts common;
  bool impact = false;
  std::string format = "text";
};

void run_report(const ReportOpts& opts) {
  Stopwatch watch;
  if (!opts.impact)
    throw std::invalid_argument("report: nothing selected; pass --impact");
  fs::create_directories(opts.common.out_dir);
  const ImpactFormat format =
      opts.format == "csv" ? ImpactFormat::kCsv : ImpactFormat::kText;
  const std::string path =
      (fs::path(opts.common.out_dir) /
       (opts.format == "csv" ? "impact.csv" : "impact.txt"))
          .string();
  emit_impact_report_file(path, format);
  write_manifest(opts.common.out_dir, "report",
                 {{"impact", "true"}, {"format", opts.format}},
                 {{"wall_time_s", watch.elapsed()}});
  std::cout << "impact table written to " << path << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"CAN-bus intrusion-detection ensembles under a black-box "
               "evasion attack: train, attack, retrain, and benchmark how "
               "hyperparameters scale attack and retraining time"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic labeled CAN dataset");
  add_common_options(synth_cmd, synth.common);
  synth_cmd->add_option("--n", synth.n, "Number of frames")
      ->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "Number of classes")
      ->capture_default_str();
  synth_cmd->add_option("--separation", synth.separation,
                        "Class separation in [0,1]")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")
      ->capture_default_str();
  synth_cmd->add_option("--dataset-out", synth.dataset_out,
                        "Dataset cache path (default <out>/dataset.csv)");
  synth_cmd->add_option("--log-out", synth.log_out,
                        "Also write the frames as an OTIDS-style log");
  synth_cmd->callback([&] { run_synth(synth); });

  PrepareOpts prepare;
  auto* prepare_cmd = app.add_subcommand(
      "prepare", "Parse OTIDS-style logs into the dataset cache format");
  add_common_options(prepare_cmd, prepare.common);
  prepare_cmd->add_option("--log", prepare.logs, "Log file (repeatable)");
  prepare_cmd->add_option("--label", prepare.labels,
                          "Session label for the matching --log (repeatable)");
  prepare_cmd->add_option("--classes", prepare.class_list,
                          "Comma-separated class list")
      ->capture_default_str();
  prepare_cmd->add_flag("--include-remote", prepare.include_remote,
                        "Append the remote-frame flag as an 11th feature");
  prepare_cmd->add_option("--dataset-out", prepare.dataset_out,
                          "Dataset cache path (default <out>/dataset.csv)");
  prepare_cmd->callback([&] { run_prepare(prepare); });

  TrainOpts train;
  auto* train_cmd =
      app.add_subcommand("train", "Fit one ensemble on a dataset cache");
  add_common_options(train_cmd, train.common);
  add_model_options(train_cmd, train.model, false);
  train_cmd->add_option("--dataset", train.dataset,
                        "Dataset cache (default <out>/dataset.csv)");
  train_cmd->add_option("--model-out", train.model_out,
                        "Model path (default <out>/model.txt)");
  train_cmd->callback([&] { run_train(train); });

  AttackOpts attack;
  auto* attack_cmd = app.add_subcommand(
      "attack", "Run the ZOO evasion attack against a saved model");
  add_common_options(attack_cmd, attack.common);
  add_zoo_options(attack_cmd, attack.zoo, attack.no_abort_early);
  attack_cmd->add_option("--dataset", attack.dataset,
                         "Examples to attack (default <out>/dataset.csv)");
  attack_cmd->add_option("--model-file", attack.model_file,
                         "Victim model (default <out>/model.txt)");
  attack_cmd->add_option("--limit", attack.limit,
                         "Attack only the first N examples (0 = all)")
      ->capture_default_str();
  attack_cmd->callback([&] { run_attack(attack); });

  PipelineOpts pipeline;
  auto* pipeline_cmd = app.add_subcommand(
      "pipeline",
      "Three-phase run: train Model_A, generate B'/C', retrain on A+B+B'");
  add_common_options(pipeline_cmd, pipeline.common);
  add_model_options(pipeline_cmd, pipeline.model, false);
  add_zoo_options(pipeline_cmd, pipeline.zoo, pipeline.no_abort_early);
  pipeline_cmd->add_option("--dataset", pipeline.dataset,
                           "Dataset cache (default <out>/dataset.csv)");
  pipeline_cmd->add_option("--k", pipeline.k_folds,
                           "Stratified cross-validation folds")
      ->capture_default_str();
  pipeline_cmd->add_option("--split-seed", pipeline.split_seed,
                           "A/B/C split seed")
      ->capture_default_str();
  pipeline_cmd->add_flag("--skip-c-prime", pipeline.skip_c_prime,
                         "Skip generating C'");
  pipeline_cmd->callback([&] { run_pipeline_cmd(pipeline); });

  SweepOpts sweep;
  auto* sweep_cmd = app.add_subcommand(
      "sweep",
      "Measure attack time (and optionally retraining time) over a "
      "hyperparameter grid and fit a regression line");
  add_common_options(sweep_cmd, sweep.common);
  add_model_options(sweep_cmd, sweep.model, true);
  add_zoo_options(sweep_cmd, sweep.zoo, sweep.no_abort_early);
  sweep_cmd->add_option("--dataset", sweep.dataset,
                        "Dataset cache (default <out>/dataset.csv)");
  sweep_cmd->add_option("--grid", sweep.grid_spec,
                        "start:stop:step (stop included) or comma list; "
                        "default 1,5,10,...,105");
  sweep_cmd->add_option("--budget-s", sweep.budget_s,
                        "Attack measurement budget per grid value, seconds")
      ->capture_default_str();
  sweep_cmd->add_option("--n-target", sweep.n_target,
                        "Workload the measured rate is extrapolated to")
      ->capture_default_str();
  sweep_cmd->add_option("--mode", sweep.mode, "attack|at|both")
      ->check(CLI::IsMember({"attack", "at", "both"}))
      ->capture_default_str();
  sweep_cmd->add_option("--split-seed", sweep.split_seed, "A/B/C split seed")
      ->capture_default_str();
  sweep_cmd->callback([&] { run_sweep(sweep); });

  ReportOpts report;
  auto* report_cmd =
      app.add_subcommand("report", "Emit static report tables");
  add_common_options(report_cmd, report.common);
  report_cmd->add_flag("--impact", report.impact,
                       "Emit the CSS-MDO impact table");
  report_cmd->add_option("--format", report.format, "text|csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  report_cmd->callback([&] { run_report(report); });

  try {
    const std::vector<std::string> effective = apply_config_file(args);
    std::vector<const char*> argv;
    argv.reserve(effective.size() + 1);
    argv.push_back("canbench");
    for (const std::string& arg : effective) argv.push_back(arg.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace canbench
