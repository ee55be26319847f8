#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "doctest.h"

#include "canbench/report.hpp"

using namespace canbench;

namespace {

SweepRecord attack_record(int value, double est_total) {
  SweepRecord r;
  r.model_kind = EnsembleKind::kRandomForest;
  r.param_name = "n_trees";
  r.value = value;
  r.n_done = 200;
  r.elapsed = 2.0;
  r.est_total = est_total;
  return r;
}

SweepRecord at_record(int value, double at_time) {
  SweepRecord r = attack_record(value, 0.0);
  r.param_name = "n_rounds";
  r.model_kind = EnsembleKind::kGradientBoosting;
  r.n_done = 0;
  r.elapsed = 0.0;
  r.at_time = at_time;
  return r;
}

std::size_t count_occurrences(const std::string& text,
                              const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++count;
  return count;
}

double attr(const std::string& svg, const std::string& name,
            std::size_t from) {
  const auto pos = svg.find(name + "=\"", from);
  REQUIRE(pos != std::string::npos);
  return std::stod(svg.substr(pos + name.size() + 2));
}

}  // namespace

TEST_SUITE_BEGIN("report");

TEST_CASE("csv header and line counts") {
  const std::string header =
      "model,param,value,n_done,elapsed_s,est_total_s,at_time_s,slope,"
      "intercept,r2\n";

  SweepTable empty = make_sweep_table({}, {});
  std::ostringstream out;
  CHECK(emit_sweep_csv(empty, out) == header.size());
  CHECK(out.str() == header);

  SweepTable one = make_sweep_table({attack_record(5, 10.0)}, {});
  std::ostringstream out1;
  emit_sweep_csv(one, out1);
  CHECK(count_occurrences(out1.str(), "\n") == 2);
  CHECK(out1.str().rfind(header, 0) == 0);
}

TEST_CASE("csv emission is deterministic and round-trips at 6 digits") {
  std::vector<SweepRecord> records;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.001, 5000.0);
  for (int v = 5; v <= 50; v += 5) records.push_back(attack_record(v, unit(rng)));
  const SweepTable table = make_sweep_table(records, {});

  std::ostringstream a, b;
  emit_sweep_csv(table, a);
  emit_sweep_csv(table, b);
  CHECK(a.str() == b.str());

  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);  // header
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::stringstream fields(line);
    std::string field;
    std::vector<std::string> cols;
    while (std::getline(fields, field, ',')) cols.push_back(field);
    REQUIRE(cols.size() == 10);
    for (std::size_t j : {4u, 5u, 7u, 8u, 9u}) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.6g", std::stod(cols[j]));
      CHECK(cols[j] == buf);
    }
    CHECK(cols[0] == "rf");
    CHECK(cols[6].empty());
    ++row;
  }
  CHECK(row == records.size());
}

TEST_CASE("the fit is computed from exactly the contained records") {
  std::vector<SweepRecord> records{attack_record(1, 2.0), attack_record(2, 4.0),
                                   attack_record(3, 6.0)};
  const SweepTable table = make_sweep_table(records, {});
  CHECK(table.fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(table.fit.intercept == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(table.fit.r2 == 1.0);
  CHECK(table.fit.n_points == 3);
}

TEST_CASE("svg structure: one marker per record, a single fit line") {
  const SweepTable table = make_sweep_table(
      {attack_record(5, 100.0), attack_record(50, 900.0)}, {});
  std::ostringstream out;
  emit_svg_plot(table, PlotKind::kAttackTime, out);
  const std::string svg = out.str();
  CHECK(count_occurrences(svg, "<circle") == 2);
  CHECK(count_occurrences(svg, "<line") == 1);
  CHECK(svg.find("Estimated Time for Attacks (seconds)") != std::string::npos);
  CHECK(svg.find("Number of Estimators (number of trees)") !=
        std::string::npos);
  CHECK(svg.find("Attack Time") != std::string::npos);
  CHECK(svg.find("Lin. Reg.") != std::string::npos);

  char slope[40];
  std::snprintf(slope, sizeof slope, "%.6g", table.fit.slope);
  CHECK(svg.find(slope) != std::string::npos);
  char intercept[40];
  std::snprintf(intercept, sizeof intercept, "%.6g", table.fit.intercept);
  CHECK(svg.find(intercept) != std::string::npos);
}

TEST_CASE("training-time plots use the training axis label") {
  const SweepTable table =
      make_sweep_table({at_record(5, 1.0), at_record(50, 9.0)}, {});
  std::ostringstream out;
  emit_svg_plot(table, PlotKind::kAtTime, out);
  const std::string svg = out.str();
  CHECK(svg.find("Estimated Time for Training (seconds)") !=
        std::string::npos);
  CHECK(svg.find("Number of Estimators (number of boosting rounds)") !=
        std::string::npos);
  CHECK(svg.find("Training Time") != std::string::npos);
}

TEST_CASE("regression line endpoints evaluate the fit at the grid range") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(1.0, 2000.0);
  for (int round = 0; round < 50; ++round) {
    std::vector<SweepRecord> records;
    const int m = 2 + static_cast<int>(rng() % 10);
    int value = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < m; ++i) {
      records.push_back(attack_record(value, unit(rng)));
      value += 1 + static_cast<int>(rng() % 20);
    }
    const SweepTable table = make_sweep_table(records, {});
    const PlotMapping mapping = make_plot_mapping(table, PlotKind::kAttackTime);

    std::ostringstream out;
    emit_svg_plot(table, PlotKind::kAttackTime, out);
    const std::string svg = out.str();
    const auto line_pos = svg.find("<line");
    REQUIRE(line_pos != std::string::npos);

    const double x0 = static_cast<double>(records.front().value);
    const double x1 = static_cast<double>(records.back().value);
    CHECK(std::abs(attr(svg, "x1", line_pos) - mapping.map_x(x0)) <= 1e-6);
    CHECK(std::abs(attr(svg, "y1", line_pos) -
                   mapping.map_y(table.fit.slope * x0 + table.fit.intercept)) <=
          1e-6);
    CHECK(std::abs(attr(svg, "x2", line_pos) - mapping.map_x(x1)) <= 1e-6);
    CHECK(std::abs(attr(svg, "y2", line_pos) -
                   mapping.map_y(table.fit.slope * x1 + table.fit.intercept)) <=
          1e-6);
  }
}

TEST_CASE("svg emission rejects unusable tables") {
  const SweepTable empty = make_sweep_table({}, {});
  std::ostringstream out;
  CHECK_THROWS_AS(emit_svg_plot(empty, PlotKind::kAttackTime, out),
                  std::invalid_argument);
  const SweepTable no_at =
      make_sweep_table({attack_record(5, 1.0), attack_record(10, 2.0)}, {});
  CHECK_THROWS_AS(emit_svg_plot(no_at, PlotKind::kAtTime, out),
                  std::invalid_argument);
}

TEST_CASE("impact table content") {
  std::ostringstream a, b;
  emit_impact_report(a);
  emit_impact_report(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("Prevention") != std::string::npos);
  CHECK(a.str().find("Improve deterrence") != std::string::npos);
  CHECK(count_occurrences(a.str(), "Gain of time to detect") == 2);
  CHECK(count_occurrences(a.str(), "VH") == 2);

  std::ostringstream csv;
  emit_impact_report(csv, ImpactFormat::kCsv);
  CHECK(csv.str().find("Prevention,H,Improve deterrence") !=
        std::string::npos);
  CHECK(csv.str().rfind("axis,impact,motivation\n", 0) == 0);
}

TEST_SUITE_END();
