#include "canbench/candata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace canbench {

namespace {

bool parse_hex(const std::string& token, std::size_t max_digits,
               std::uint32_t& out) {
  if (token.empty() || token.size() > max_digits) return false;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out, 16);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_uint(const std::string& token, std::uint32_t& out) {
  if (token.empty()) return false;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out, 10);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t line_number)
    : std::runtime_error(message + " (line " + std::to_string(line_number) +
                         ")"),
      line_number_(line_number) {}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (int label : labels) counts.at(static_cast<std::size_t>(label))++;
  return counts;
}

void LabeledDataset::push_row(FeatureVector x, int label) {
  if (label < 0 || label >= static_cast<int>(class_names.size()))
    throw std::invalid_argument("label index out of range");
  rows.push_back(std::move(x));
  labels.push_back(label);
}

LabeledDataset concat_datasets(const LabeledDataset& a,
                               const LabeledDataset& b) {
  if (a.class_names != b.class_names)
    throw std::invalid_argument("concat_datasets: class lists differ");
  LabeledDataset out = a;
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

CanFrame parse_otids_record(const std::string& line, std::size_t line_number,
                            const std::string& session_label) {
  std::string clean = line;
  if (!clean.empty() && clean.back() == '\r') clean.pop_back();

  std::istringstream in(clean);
  std::vector<std::string> tok;
  std::string t;
  while (in >> t) tok.push_back(t);

  if (tok.empty()) throw ParseError("blank line", line_number);
  if (tok.size() < 7 || tok[0] != "Timestamp:" || tok[2] != "ID:" ||
      tok[5] != "DLC:")
    throw ParseError("malformed record", line_number);

  CanFrame frame;
  frame.label = session_label;

  if (!parse_double(tok[1], frame.timestamp) || frame.timestamp < 0.0)
    throw ParseError("bad timestamp '" + tok[1] + "'", line_number);

  std::uint32_t id = 0;
  if (!parse_hex(tok[3], 4, id))
    throw ParseError("bad id '" + tok[3] + "'", line_number);
  if (id > kMaxCanId)
    throw ParseError("id 0x" + tok[3] + " exceeds 11 bits", line_number);
  frame.can_id = static_cast<std::uint16_t>(id);

  if (tok[4] == "000")
    frame.remote = false;
  else if (tok[4] == "100")
    frame.remote = true;
  else
    throw ParseError("bad frame flag '" + tok[4] + "'", line_number);

  std::uint32_t dlc = 0;
  if (!parse_uint(tok[6], dlc))
    throw ParseError("bad dlc '" + tok[6] + "'", line_number);
  if (dlc > static_cast<std::uint32_t>(kMaxDlc))
    throw ParseError("dlc " + tok[6] + " exceeds 8", line_number);
  frame.dlc = static_cast<std::uint8_t>(dlc);

  const std::size_t n_bytes = tok.size() - 7;
  if (n_bytes != dlc)
    throw ParseError("expected " + std::to_string(dlc) + " data bytes, got " +
                         std::to_string(n_bytes),
                     line_number);
  for (std::size_t i = 0; i < n_bytes; ++i) {
    std::uint32_t b = 0;
    if (!parse_hex(tok[7 + i], 2, b) || b > 0xFF)
      throw ParseError("bad data byte '" + tok[7 + i] + "'", line_number);
    frame.data[i] = static_cast<std::uint8_t>(b);
  }
  return frame;
}

std::string format_otids_record(const CanFrame& frame) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "Timestamp: %.6f ID: %04x %s DLC: %d",
                frame.timestamp, frame.can_id, frame.remote ? "100" : "000",
                static_cast<int>(frame.dlc));
  std::string out = buf;
  for (int i = 0; i < frame.dlc; ++i) {
    std::snprintf(buf, sizeof buf, " %02x", frame.data[i]);
    out += buf;
  }
  return out;
}

std::vector<CanFrame> parse_otids_log(std::istream& in,
                                      const std::string& session_label) {
  std::vector<CanFrame> frames;
  std::string line;
  std::size_t line_number = 0;
  double last_t = 0.0;
  while (std::getline(in, line)) {
    ++line_number;
    CanFrame frame = parse_otids_record(line, line_number, session_label);
    if (!frames.empty() && frame.timestamp < last_t)
      throw ParseError("timestamp went backwards", line_number);
    last_t = frame.timestamp;
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<CanFrame> load_otids_log(const std::string& path,
                                     const std::string& session_label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  return parse_otids_log(in, session_label);
}

FeatureVector extract_features(const CanFrame& frame,
                               bool include_remote_flag) {
  FeatureVector x;
  x.reserve(include_remote_flag ? 11 : 10);
  x.push_back(static_cast<double>(frame.can_id) / 2047.0);
  x.push_back(static_cast<double>(frame.dlc) / 8.0);
  for (int i = 0; i < 8; ++i)
    x.push_back(static_cast<double>(frame.data[i]) / 255.0);
  if (include_remote_flag) x.push_back(frame.remote ? 1.0 : 0.0);
  return x;
}

std::vector<std::string> default_class_names() {
  return {"Normal", "DoS", "Fuzzy", "Impersonation"};
}

LabeledDataset frames_to_dataset(const std::vector<CanFrame>& frames,
                                 std::vector<std::string> class_names,
                                 bool include_remote_flag) {
  LabeledDataset ds;
  ds.class_names = std::move(class_names);
  ds.rows.reserve(frames.size());
  ds.labels.reserve(frames.size());
  for (const CanFrame& frame : frames) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(),
                        frame.label);
    if (it == ds.class_names.end())
      throw std::invalid_argument("frame label '" + frame.label +
                                  "' not in class list");
    ds.rows.push_back(extract_features(frame, include_remote_flag));
    ds.labels.push_back(
        static_cast<int>(std::distance(ds.class_names.begin(), it)));
  }
  return ds;
}

LabeledDataset frames_to_dataset(const std::vector<CanFrame>& frames) {
  return frames_to_dataset(frames, default_class_names(), false);
}

namespace {

// Allocates n members to the three splits by rounding the cumulative
// ratio boundaries, which keeps every split within one of its exact share
// and makes the totals land on the intended sizes.
std::array<std::size_t, 3> allocate_three_way(std::size_t n,
                                              const SplitRatios& r) {
  const double dn = static_cast<double>(n);
  const long long cut_a = std::llround(dn * r.a);
  const long long cut_ab = std::llround(dn * (r.a + r.b));
  std::array<std::size_t, 3> out{};
  out[0] = static_cast<std::size_t>(std::clamp<long long>(cut_a, 0, (long long)n));
  const auto ab = static_cast<std::size_t>(
      std::clamp<long long>(cut_ab, (long long)out[0], (long long)n));
  out[1] = ab - out[0];
  out[2] = n - ab;
  return out;
}

}  // namespace

DataSplits split_dataset(const LabeledDataset& ds, SplitRatios ratios,
                         std::uint64_t seed) {
  if (ds.empty()) throw std::invalid_argument("split_dataset: empty dataset");
  if (std::abs(ratios.a + ratios.b + ratios.c - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  if (ratios.a < 0 || ratios.b < 0 || ratios.c < 0)
    throw std::invalid_argument("split_dataset: negative ratio");

  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 3)
      throw std::invalid_argument("split_dataset: class '" +
                                  ds.class_names[c] +
                                  "' has fewer than 3 members");
  }

  DataSplits splits;
  splits.a.class_names = ds.class_names;
  splits.b.class_names = ds.class_names;
  splits.c.class_names = ds.class_names;

  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.labels[i] == static_cast<int>(c)) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);

    const auto sizes = allocate_three_way(members.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes[0]; ++i, ++pos)
      splits.a.push_row(ds.rows[members[pos]], ds.labels[members[pos]]);
    for (std::size_t i = 0; i < sizes[1]; ++i, ++pos)
      splits.b.push_row(ds.rows[members[pos]], ds.labels[members[pos]]);
    for (std::size_t i = 0; i < sizes[2]; ++i, ++pos)
      splits.c.push_row(ds.rows[members[pos]], ds.labels[members[pos]]);
  }
  return splits;
}

std::vector<FoldPair> stratified_kfold(const LabeledDataset& ds, int k) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < static_cast<std::size_t>(k))
      throw std::invalid_argument("stratified_kfold: class '" +
                                  ds.class_names[c] +
                                  "' has fewer than k members");
  }

  // Deal each class's rows round-robin over the folds, in dataset order.
  std::vector<int> fold_of(ds.size(), 0);
  std::vector<int> next_fold(ds.class_names.size(), 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int c = ds.labels[i];
    fold_of[i] = next_fold[c];
    next_fold[c] = (next_fold[c] + 1) % k;
  }

  std::vector<FoldPair> folds(static_cast<std::size_t>(k));
  for (auto& fold : folds) {
    fold.train.class_names = ds.class_names;
    fold.validation.class_names = ds.class_names;
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      auto& target = (fold_of[i] == f) ? folds[f].validation : folds[f].train;
      target.push_row(ds.rows[i], ds.labels[i]);
    }
  }
  return folds;
}

std::vector<std::string> synthetic_class_names(int n_classes) {
  std::vector<std::string> names = default_class_names();
  if (n_classes <= static_cast<int>(names.size())) {
    names.resize(static_cast<std::size_t>(n_classes));
    return names;
  }
  for (int c = static_cast<int>(names.size()); c < n_classes; ++c)
    names.push_back("Class" + std::to_string(c));
  return names;
}

std::vector<CanFrame> generate_synthetic_frames(const SyntheticConfig& cfg) {
  if (cfg.n_classes < 2)
    throw std::invalid_argument("generate_synthetic: need at least 2 classes");
  if (cfg.n < static_cast<std::size_t>(cfg.n_classes))
    throw std::invalid_argument("generate_synthetic: n < n_classes");
  if (cfg.class_separation < 0.0 || cfg.class_separation > 1.0)
    throw std::invalid_argument("generate_synthetic: separation not in [0,1]");

  const int k = cfg.n_classes;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> base_uniform(60.0, 195.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Each traffic class owns a stripe of the 11-bit id space whose width is
  // controlled by the separation; payload bytes share a global profile with
  // a weak class-conditional offset, so the id carries the dominant signal
  // the way attack sessions differ from normal traffic mainly by id.
  const double id_stripe = 2048.0 / k;
  const double id_sd = ((1.0 - cfg.class_separation) * 0.5 + 0.02) * id_stripe;
  const double byte_sd = 25.0;
  const double offset_amp = 4.0 + 8.0 * cfg.class_separation;

  std::array<double, 8> byte_base{};
  for (auto& b : byte_base) b = base_uniform(rng);
  std::vector<double> id_mean(static_cast<std::size_t>(k));
  std::vector<std::array<double, 8>> byte_offset(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    id_mean[c] = (c + 0.5) * id_stripe;
    for (auto& o : byte_offset[c]) o = unit(rng) * offset_amp;
  }

  const auto names = synthetic_class_names(k);
  std::vector<CanFrame> frames;
  frames.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(k));
    CanFrame frame;
    frame.timestamp = static_cast<double>(i) * 5e-4;
    frame.can_id = static_cast<std::uint16_t>(std::clamp<long long>(
        std::llround(id_mean[c] + gauss(rng) * id_sd), 0, kMaxCanId));
    frame.remote = false;
    frame.dlc = 8;
    for (int j = 0; j < 8; ++j) {
      frame.data[j] = static_cast<std::uint8_t>(std::clamp<long long>(
          std::llround(byte_base[j] + byte_offset[c][j] + gauss(rng) * byte_sd),
          0, 255));
    }
    frame.label = names[static_cast<std::size_t>(c)];
    frames.push_back(std::move(frame));
  }
  return frames;
}

LabeledDataset generate_synthetic(const SyntheticConfig& cfg) {
  return frames_to_dataset(generate_synthetic_frames(cfg),
                           synthetic_class_names(cfg.n_classes), false);
}

std::size_t save_dataset(const LabeledDataset& ds, std::ostream& out) {
  std::ostringstream buf;
  buf << "canbench-dataset v1," << ds.n_features();
  for (const auto& name : ds.class_names) buf << ',' << name;
  buf << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.rows[i]) buf << g17(v) << ',';
    buf << ds.class_names[static_cast<std::size_t>(ds.labels[i])] << '\n';
  }
  const std::string text = buf.str();
  out << text;
  if (!out) throw std::runtime_error("save_dataset: write failed");
  return text.size();
}

void save_dataset_file(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  save_dataset(ds, out);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

LabeledDataset load_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file", 1);
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "canbench-dataset v1")
    throw ParseError("bad dataset header", 1);

  std::uint32_t n_features = 0;
  if (!parse_uint(header[1], n_features) || n_features == 0)
    throw ParseError("bad feature count in header", 1);

  LabeledDataset ds;
  ds.class_names.assign(header.begin() + 2, header.end());

  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) throw ParseError("blank row", line_number);
    auto fields = split_csv_line(line);
    if (fields.size() != n_features + 1)
      throw ParseError("expected " + std::to_string(n_features + 1) +
                           " fields, got " + std::to_string(fields.size()),
                       line_number);
    FeatureVector x(n_features);
    for (std::uint32_t j = 0; j < n_features; ++j) {
      if (!parse_double(fields[j], x[j]))
        throw ParseError("bad feature value '" + fields[j] + "'", line_number);
    }
    const std::string& label = fields[n_features];
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), label);
    if (it == ds.class_names.end())
      throw ParseError("unknown label '" + label + "'", line_number);
    ds.rows.push_back(std::move(x));
    ds.labels.push_back(
        static_cast<int>(std::distance(ds.class_names.begin(), it)));
  }
  return ds;
}

LabeledDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return load_dataset(in);
}

}  // namespace canbench
