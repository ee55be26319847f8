#include "canbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace canbench {

namespace {

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string px(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool all_have_at_time(const std::vector<SweepRecord>& records) {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const SweepRecord& r) { return r.at_time.has_value(); });
}

double record_y(const SweepRecord& record, PlotKind kind) {
  if (kind == PlotKind::kAtTime) {
    if (!record.at_time)
      throw std::invalid_argument("plot: record has no training time");
    return *record.at_time;
  }
  return record.est_total;
}

std::size_t write_out(const std::string& text, std::ostream& out) {
  out << text;
  if (!out) throw std::runtime_error("report: write failed");
  return text.size();
}

std::ofstream open_file(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  return out;
}

}  // namespace

SweepTable make_sweep_table(std::vector<SweepRecord> records, SweepMeta meta) {
  SweepTable table;
  table.records = std::move(records);
  table.meta = std::move(meta);

  const bool use_at = all_have_at_time(table.records);
  std::vector<std::pair<double, double>> points;
  points.reserve(table.records.size());
  for (const SweepRecord& r : table.records)
    points.emplace_back(static_cast<double>(r.value),
                        use_at ? *r.at_time : r.est_total);

  bool distinct = false;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].first != points[0].first) distinct = true;
  if (distinct) {
    table.fit = fit_linear_regression(points);
  } else {
    // Degenerate tables (single grid value) get a flat line through the data.
    double mean = 0.0;
    for (const auto& [x, y] : points) mean += y;
    table.fit.slope = 0.0;
    table.fit.intercept = points.empty() ? 0.0 : mean / points.size();
    table.fit.r2 = 1.0;
    table.fit.n_points = static_cast<int>(points.size());
  }
  return table;
}

std::size_t emit_sweep_csv(const SweepTable& table, std::ostream& out) {
  std::ostringstream buf;
  buf << "model,param,value,n_done,elapsed_s,est_total_s,at_time_s,slope,"
         "intercept,r2\n";
  for (const SweepRecord& r : table.records) {
    buf << to_string(r.model_kind) << ',' << r.param_name << ',' << r.value
        << ',' << r.n_done << ',' << g6(r.elapsed) << ',' << g6(r.est_total)
        << ',';
    if (r.at_time) buf << g6(*r.at_time);
    buf << ',' << g6(table.fit.slope) << ',' << g6(table.fit.intercept) << ','
        << g6(table.fit.r2) << '\n';
  }
  return write_out(buf.str(), out);
}

std::size_t emit_sweep_csv_file(const SweepTable& table,
                                const std::string& path) {
  auto out = open_file(path);
  return emit_sweep_csv(table, out);
}

// --- SVG ---------------------------------------------------------------

namespace {

constexpr double kCanvasW = 800.0;
constexpr double kCanvasH = 560.0;
constexpr double kPlotLeft = 90.0;
constexpr double kPlotRight = 570.0;  // legend sits to the right
constexpr double kPlotTop = 40.0;
constexpr double kPlotBottom = 490.0;

}  // namespace

double PlotMapping::map_x(double x) const {
  const double range = x_max - x_min;
  return px0 + (x - x_min) / (range == 0.0 ? 1.0 : range) * (px1 - px0);
}

double PlotMapping::map_y(double y) const {
  const double range = y_max - y_min;
  return py0 + (y - y_min) / (range == 0.0 ? 1.0 : range) * (py1 - py0);
}

PlotMapping make_plot_mapping(const SweepTable& table, PlotKind kind) {
  if (table.records.empty())
    throw std::invalid_argument("plot: no records");

  double x_lo = table.records.front().value;
  double x_hi = x_lo;
  double y_lo = record_y(table.records.front(), kind);
  double y_hi = y_lo;
  for (const SweepRecord& r : table.records) {
    x_lo = std::min(x_lo, static_cast<double>(r.value));
    x_hi = std::max(x_hi, static_cast<double>(r.value));
    const double y = record_y(r, kind);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  // The regression line spans the x range; keep its endpoints inside.
  for (double x : {x_lo, x_hi}) {
    const double y = table.fit.slope * x + table.fit.intercept;
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }

  const double x_pad = (x_hi - x_lo) == 0.0 ? 1.0 : 0.05 * (x_hi - x_lo);
  const double y_pad = (y_hi - y_lo) == 0.0 ? 1.0 : 0.05 * (y_hi - y_lo);

  PlotMapping m;
  m.x_min = x_lo - x_pad;
  m.x_max = x_hi + x_pad;
  m.y_min = y_lo - y_pad;
  m.y_max = y_hi + y_pad;
  m.px0 = kPlotLeft;
  m.px1 = kPlotRight;
  m.py0 = kPlotBottom;
  m.py1 = kPlotTop;
  return m;
}

std::size_t emit_svg_plot(const SweepTable& table, PlotKind kind,
                          std::ostream& out) {
  if (table.records.empty())
    throw std::invalid_argument("emit_svg_plot: no records");

  const PlotMapping m = make_plot_mapping(table, kind);
  const std::string x_label =
      table.records.front().param_name == "n_trees"
          ? "Number of Estimators (number of trees)"
          : "Number of Estimators (number of boosting rounds)";
  const std::string y_label = kind == PlotKind::kAttackTime
                                  ? "Estimated Time for Attacks (seconds)"
                                  : "Estimated Time for Training (seconds)";
  const std::string series_label =
      kind == PlotKind::kAttackTime ? "Attack Time" : "Training Time";

  std::ostringstream buf;
  buf << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
      << "width=\"" << kCanvasW << "\" height=\"" << kCanvasH
      << "\" viewBox=\"0 0 " << kCanvasW << ' ' << kCanvasH << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kCanvasW << "\" height=\""
      << kCanvasH << "\" fill=\"white\"/>\n"
      << "  <rect x=\"" << px(m.px0) << "\" y=\"" << px(m.py1) << "\" width=\""
      << px(m.px1 - m.px0) << "\" height=\"" << px(m.py0 - m.py1)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Ticks and tick labels, five per axis.
  buf << "  <g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i < 5; ++i) {
    const double f = static_cast<double>(i) / 4.0;
    const double xv = m.x_min + f * (m.x_max - m.x_min);
    const double yv = m.y_min + f * (m.y_max - m.y_min);
    const double sx = m.map_x(xv);
    const double sy = m.map_y(yv);
    buf << "    <path d=\"M " << px(sx) << ' ' << px(m.py0) << " v 6\" "
        << "stroke=\"black\"/>\n"
        << "    <text x=\"" << px(sx) << "\" y=\"" << px(m.py0 + 20)
        << "\" text-anchor=\"middle\">" << g6(xv) << "</text>\n"
        << "    <path d=\"M " << px(m.px0 - 6) << ' ' << px(sy)
        << " h 6\" stroke=\"black\"/>\n"
        << "    <text x=\"" << px(m.px0 - 10) << "\" y=\"" << px(sy + 4)
        << "\" text-anchor=\"end\">" << g6(yv) << "</text>\n";
  }
  buf << "  </g>\n";

  // Axis labels.
  buf << "  <text x=\"" << px((m.px0 + m.px1) / 2.0) << "\" y=\""
      << px(kCanvasH - 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << x_label << "</text>\n";
  buf << "  <text x=\"22\" y=\"" << px((m.py0 + m.py1) / 2.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 22 "
      << px((m.py0 + m.py1) / 2.0) << ")\">" << y_label << "</text>\n";

  // Scatter markers, one circle per record.
  buf << "  <g fill=\"#1f77b4\">\n";
  for (const SweepRecord& r : table.records) {
    buf << "    <circle class=\"pt\" cx=\""
        << px(m.map_x(static_cast<double>(r.value))) << "\" cy=\""
        << px(m.map_y(record_y(r, kind))) << "\" r=\"4\"/>\n";
  }
  buf << "  </g>\n";

  // Regression line across the grid range; the only <line> in the document.
  const double x_first = table.records.front().value;
  const double x_last = table.records.back().value;
  const double gx0 = std::min(x_first, x_last);
  const double gx1 = std::max(x_first, x_last);
  buf << "  <line class=\"fit\" x1=\"" << px(m.map_x(gx0)) << "\" y1=\""
      << px(m.map_y(table.fit.slope * gx0 + table.fit.intercept))
      << "\" x2=\"" << px(m.map_x(gx1)) << "\" y2=\""
      << px(m.map_y(table.fit.slope * gx1 + table.fit.intercept))
      << "\" stroke=\"red\" stroke-width=\"2\"/>\n";

  // Legend, to the right of the plot area.
  const double lx = kPlotRight + 18.0;
  buf << "  <g font-family=\"sans-serif\" font-size=\"12\" fill=\"#000\">\n"
      << "    <rect x=\"" << px(lx) << "\" y=\"54\" width=\"10\" height=\"10\""
      << " fill=\"#1f77b4\"/>\n"
      << "    <text x=\"" << px(lx + 16) << "\" y=\"63\">" << series_label
      << "</text>\n"
      << "    <rect x=\"" << px(lx) << "\" y=\"76\" width=\"10\" height=\"3\""
      << " fill=\"red\"/>\n"
      << "    <text x=\"" << px(lx + 16) << "\" y=\"83\">"
      << g6(table.fit.slope) << "*x + " << g6(table.fit.intercept)
      << " Lin. Reg.</text>\n"
      << "    <text x=\"" << px(lx + 16) << "\" y=\"101\">R^2 = "
      << g6(table.fit.r2) << "</text>\n"
      << "  </g>\n"
      << "</svg>\n";

  return write_out(buf.str(), out);
}

std::size_t emit_svg_plot_file(const SweepTable& table, PlotKind kind,
                               const std::string& path) {
  auto out = open_file(path);
  return emit_svg_plot(table, kind, out);
}

// --- Impact table ------------------------------------------------------

namespace {

struct ImpactRow {
  const char* axis;
  const char* impact;
  const char* motivation;
};

constexpr ImpactRow kImpactRows[] = {
    {"Detection", "VH", "Gain of time to detect/respond to VAPT attempt"},
    {"Response", "VH", "Gain of time to detect/respond to VAPT attempt"},
    {"Prevention", "H", "Improve deterrence"},
};

}  // namespace

std::size_t emit_impact_report(std::ostream& out, ImpactFormat format) {
  std::ostringstream buf;
  if (format == ImpactFormat::kCsv) {
    buf << "axis,impact,motivation\n";
    for (const ImpactRow& row : kImpactRows)
      buf << row.axis << ',' << row.impact << ',' << row.motivation << '\n';
  } else {
    buf << "Axis of CSS-MDO Framework | Impact | Motivation\n"
        << "--------------------------+--------+----------------------------"
           "--------------------\n";
    for (const ImpactRow& row : kImpactRows) {
      char line[160];
      std::snprintf(line, sizeof line, "%-26s| %-7s| %s\n", row.axis,
                    row.impact, row.motivation);
      buf << line;
    }
  }
  return write_out(buf.str(), out);
}

std::size_t emit_impact_report_file(const std::string& path,
                                    ImpactFormat format) {
  auto out = open_file(path);
  return emit_impact_report(out, format);
}

}  // namespace canbench
