#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "canbench/candata.hpp"
#include "canbench/cli.hpp"
#include "test_util.hpp"

using namespace canbench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("grid specs") {
  CHECK(parse_grid_spec("1:105:5") ==
        std::vector<int>{1,  6,  11, 16, 21, 26, 31, 36, 41, 46, 51,
                         56, 61, 66, 71, 76, 81, 86, 91, 96, 101, 105});
  CHECK(parse_grid_spec("5:50:5") ==
        std::vector<int>{5, 10, 15, 20, 25, 30, 35, 40, 45, 50});
  CHECK(parse_grid_spec("10,80") == std::vector<int>{10, 80});
  CHECK_THROWS_AS(parse_grid_spec(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("5:1:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("0:10:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("1:10"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("3,2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid_spec("a,b"), std::invalid_argument);
}

TEST_CASE("missing subcommand and unknown flags are user errors") {
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"frobnicate"}) == 1);
  CHECK(run_cli({"synth", "--definitely-not-a-flag"}) == 1);
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("synth writes a dataset and a manifest") {
  const auto dir = testutil::fresh_dir("cli_synth");
  CHECK(run_cli({"synth", "--out", dir.string(), "--n", "120"}) == 0);
  CHECK(fs::exists(dir / "dataset.csv"));
  CHECK(fs::exists(dir / "manifest.txt"));
  const LabeledDataset ds = load_dataset_file((dir / "dataset.csv").string());
  CHECK(ds.size() == 120);
  CHECK(ds.n_features() == 10);
  const std::string manifest = slurp(dir / "manifest.txt");
  CHECK(manifest.find("# command = synth") != std::string::npos);
  CHECK(manifest.find("n = 120") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("synth log output feeds prepare") {
  const auto dir = testutil::fresh_dir("cli_prepare");
  const auto log = dir / "normal.log";
  CHECK(run_cli({"synth", "--out", dir.string(), "--n", "60", "--classes",
                 "2", "--log-out", log.string()}) == 0);
  CHECK(run_cli({"prepare", "--out", dir.string(), "--log", log.string(),
                 "--label", "Normal", "--classes", "Normal,DoS",
                 "--dataset-out", (dir / "prepared.csv").string()}) == 0);
  const LabeledDataset ds = load_dataset_file((dir / "prepared.csv").string());
  CHECK(ds.size() == 60);
  for (int label : ds.labels) CHECK(label == 0);

  CHECK(run_cli({"prepare", "--out", dir.string(), "--log", log.string()}) ==
        1);  // missing label
  fs::remove_all(dir);
}

TEST_CASE("train then attack against the saved model") {
  const auto dir = testutil::fresh_dir("cli_attack");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--n", "200"}) == 0);
  REQUIRE(run_cli({"train", "--out", dir.string(), "--model", "rf",
                   "--n-estimators", "5"}) == 0);
  CHECK(fs::exists(dir / "model.txt"));

  CHECK(run_cli({"attack", "--out", dir.string(), "--learning-rate", "0.1",
                 "--max-iter", "50", "--variable-h", "0.2", "--limit",
                 "20"}) == 0);
  CHECK(fs::exists(dir / "adversarial.csv"));
  CHECK(fs::exists(dir / "attack_stats.txt"));
  const LabeledDataset adversarial =
      load_dataset_file((dir / "adversarial.csv").string());
  CHECK(adversarial.size() == 20);

  const std::string manifest = slurp(dir / "manifest.txt");
  CHECK(manifest.find("learning-rate = 0.1") != std::string::npos);
  CHECK(manifest.find("max-iter = 50") != std::string::npos);
  CHECK(manifest.find("variable-h = 0.2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("synth then pipeline on defaults leaves the full artifact set") {
  const auto dir = testutil::fresh_dir("cli_pipeline");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--n", "300"}) == 0);
  CHECK(run_cli({"pipeline", "--out", dir.string(), "--model", "rf",
                 "--n-estimators", "10", "--k", "2", "--max-iter", "10"}) ==
        0);
  for (const char* name : {"manifest.txt", "model_a.txt", "model_abb.txt",
                           "b_prime.csv", "c_prime.csv", "metrics.txt"})
    CHECK(fs::exists(dir / name));

  const LabeledDataset b_prime =
      load_dataset_file((dir / "b_prime.csv").string());
  CHECK(b_prime.size() == 60);  // 20% of 300
  fs::remove_all(dir);
}

TEST_CASE("pipeline can skip the C-prime set") {
  const auto dir = testutil::fresh_dir("cli_skip_c");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--n", "200"}) == 0);
  CHECK(run_cli({"pipeline", "--out", dir.string(), "--model", "rf",
                 "--n-estimators", "5", "--k", "2", "--max-iter", "5",
                 "--skip-c-prime"}) == 0);
  CHECK(fs::exists(dir / "b_prime.csv"));
  CHECK(!fs::exists(dir / "c_prime.csv"));
  fs::remove_all(dir);
}

TEST_CASE("sweep emits csv and svg and replays byte-identically") {
  const auto dir = testutil::fresh_dir("cli_sweep");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--n", "200"}) == 0);

  const std::vector<std::string> sweep_args{
      "sweep",          "--out",       dir.string(),
      "--model",        "rf",          "--grid",
      "2:6:2",          "--budget-s",  "0.02",
      "--max-iter",     "3",           "--fake-clock-step",
      "0.0002",         "--mode",      "both"};
  CHECK(run_cli(sweep_args) == 0);
  for (const char* name : {"sweep_rf_attack.csv", "sweep_rf_attack.svg",
                           "sweep_rf_at.csv", "sweep_rf_at.svg"})
    CHECK(fs::exists(dir / name));

  const std::string first_csv = slurp(dir / "sweep_rf_attack.csv");
  const std::string first_at = slurp(dir / "sweep_rf_at.csv");
  CHECK(run_cli(sweep_args) == 0);
  CHECK(slurp(dir / "sweep_rf_attack.csv") == first_csv);
  CHECK(slurp(dir / "sweep_rf_at.csv") == first_at);

  // header sanity on the emitted table
  CHECK(first_csv.rfind("model,param,value,", 0) == 0);

  // the manifest alone replays the run byte-for-byte
  const auto replay_dir = testutil::fresh_dir("cli_sweep_replay");
  CHECK(run_cli({"sweep", "--config", (dir / "manifest.txt").string(),
                 "--out", replay_dir.string()}) == 0);
  CHECK(slurp(replay_dir / "sweep_rf_attack.csv") == first_csv);
  CHECK(slurp(replay_dir / "sweep_rf_at.csv") == first_at);
  fs::remove_all(replay_dir);
  fs::remove_all(dir);
}

TEST_CASE("timed sweeps refuse parallel fitting") {
  const auto dir = testutil::fresh_dir("cli_threads");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--n", "200"}) == 0);
  CHECK(run_cli({"sweep", "--out", dir.string(), "--model", "rf", "--grid",
                 "2,4", "--budget-s", "0.01", "--max-iter", "2", "--threads",
                 "2"}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("report --impact writes the table") {
  const auto dir = testutil::fresh_dir("cli_report");
  CHECK(run_cli({"report", "--impact", "--out", dir.string()}) == 0);
  CHECK(slurp(dir / "impact.txt").find("Improve deterrence") !=
        std::string::npos);
  CHECK(run_cli({"report", "--impact", "--format", "csv", "--out",
                 dir.string()}) == 0);
  CHECK(slurp(dir / "impact.csv").find("Prevention,H,") != std::string::npos);
  CHECK(run_cli({"report", "--out", dir.string()}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("config file values are overridden by flags") {
  const auto dir = testutil::fresh_dir("cli_config");
  const auto cfg_path = dir / "run.cfg";
  std::ofstream cfg(cfg_path);
  cfg << "n = 140\nclasses = 2\n";
  cfg.close();

  CHECK(run_cli({"synth", "--out", dir.string(), "--config",
                 cfg_path.string()}) == 0);
  CHECK(load_dataset_file((dir / "dataset.csv").string()).size() == 140);

  CHECK(run_cli({"synth", "--out", dir.string(), "--config", cfg_path.string(),
                 "--n", "80"}) == 0);
  CHECK(load_dataset_file((dir / "dataset.csv").string()).size() == 80);
  fs::remove_all(dir);
}

TEST_CASE("missing dataset is a user error") {
  const auto dir = testutil::fresh_dir("cli_missing");
  CHECK(run_cli({"train", "--out", dir.string(), "--dataset",
                 (dir / "nope.csv").string()}) == 1);
  fs::remove_all(dir);
}

TEST_SUITE_END();
