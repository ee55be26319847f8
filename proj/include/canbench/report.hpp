#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "canbench/bench.hpp"

namespace canbench {

struct SweepMeta {
  EnsembleKind model_kind = EnsembleKind::kRandomForest;
  std::vector<int> grid;
  double budget_s = 0.0;
  int n_target = 0;
  std::string hardware;
  std::uint64_t model_seed = 0;
  std::uint64_t zoo_seed = 0;
};

struct SweepTable {
  std::vector<SweepRecord> records;
  RegressionFit fit;
  SweepMeta meta;
};

/// Builds a table whose fit is recomputed from exactly the given records
/// (over at_time when every record carries one, est_total otherwise).
SweepTable make_sweep_table(std::vector<SweepRecord> records, SweepMeta meta);

/// Header `model,param,value,n_done,elapsed_s,est_total_s,at_time_s,slope,
/// intercept,r2`, one row per record with the fit columns repeated, LF line
/// endings, 6 significant digits. Returns bytes written.
std::size_t emit_sweep_csv(const SweepTable& table, std::ostream& out);
std::size_t emit_sweep_csv_file(const SweepTable& table,
                                const std::string& path);

enum class PlotKind { kAttackTime, kAtTime };

/// Data-to-pixel mapping used by the SVG emitter, exposed so structural
/// tests can recompute expected coordinates.
struct PlotMapping {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double px0 = 0.0, px1 = 0.0;  // plot area left/right, pixels
  double py0 = 0.0, py1 = 0.0;  // plot area bottom/top, pixels (y down)

  double map_x(double x) const;
  double map_y(double y) const;
};

PlotMapping make_plot_mapping(const SweepTable& table, PlotKind kind);

/// Standalone SVG 1.1 scatter of the records plus the OLS line spanning the
/// grid range; the regression line is the document's only <line> element.
std::size_t emit_svg_plot(const SweepTable& table, PlotKind kind,
                          std::ostream& out);
std::size_t emit_svg_plot_file(const SweepTable& table, PlotKind kind,
                               const std::string& path);

enum class ImpactFormat { kText, kCsv };

/// Static qualitative impact table over the CSS-MDO framework axes.
std::size_t emit_impact_report(std::ostream& out,
                               ImpactFormat format = ImpactFormat::kText);
std::size_t emit_impact_report_file(const std::string& path,
                                    ImpactFormat format = ImpactFormat::kText);

}  // namespace canbench
