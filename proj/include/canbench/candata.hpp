#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace canbench {

inline constexpr int kDefaultFeatureDim = 10;
inline constexpr std::uint16_t kMaxCanId = 0x7FF;
inline constexpr int kMaxDlc = 8;

using FeatureVector = std::vector<double>;

/// One CAN frame as it appears in an OTIDS-style capture. Data bytes at
/// index >= dlc stay zero.
struct CanFrame {
  double timestamp = 0.0;
  std::uint16_t can_id = 0;
  bool remote = false;
  std::uint8_t dlc = 0;
  std::array<std::uint8_t, 8> data{};
  std::string label = "Normal";
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line_number);
  std::size_t line_number() const { return line_number_; }

 private:
  std::size_t line_number_;
};

struct LabeledDataset {
  std::vector<FeatureVector> rows;
  std::vector<int> labels;  // index into class_names
  std::vector<std::string> class_names;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  int n_features() const {
    return rows.empty() ? 0 : static_cast<int>(rows.front().size());
  }
  std::vector<std::size_t> class_counts() const;
  void push_row(FeatureVector x, int label);
};

/// Concatenates rows; class lists must match exactly.
LabeledDataset concat_datasets(const LabeledDataset& a, const LabeledDataset& b);

struct SplitRatios {
  double a = 0.6;
  double b = 0.2;
  double c = 0.2;
};

struct DataSplits {
  LabeledDataset a;
  LabeledDataset b;
  LabeledDataset c;
};

struct FoldPair {
  LabeledDataset train;
  LabeledDataset validation;
};

struct SyntheticConfig {
  std::size_t n = 1000;
  int n_classes = 4;
  double class_separation = 0.9;  // 0 = fully mixed, 1 = tight clusters
  std::uint64_t seed = 42;

  static constexpr double kLowSeparation = 0.3;
  static constexpr double kHighSeparation = 0.9;
};

// --- OTIDS log parsing -----------------------------------------------------
//
// One record per line:
//   Timestamp: <decimal seconds> ID: <hex id> <000|100> DLC: <0-8> <bytes...>
// with exactly DLC two-digit hex bytes. 000 marks a data frame, 100 a
// remote frame. The session label is assigned by the caller (one traffic
// condition per capture file).

CanFrame parse_otids_record(const std::string& line, std::size_t line_number = 0,
                            const std::string& session_label = "Normal");

/// Canonical single-space rendering; parse followed by format reproduces a
/// canonical line byte for byte.
std::string format_otids_record(const CanFrame& frame);

std::vector<CanFrame> parse_otids_log(std::istream& in,
                                      const std::string& session_label);
std::vector<CanFrame> load_otids_log(const std::string& path,
                                     const std::string& session_label);

// --- Feature extraction ----------------------------------------------------

/// 10 components in [0,1]: id/0x7FF, dlc/8, data[0..7]/255. With
/// include_remote_flag an 11th 0/1 component is appended.
FeatureVector extract_features(const CanFrame& frame,
                               bool include_remote_flag = false);

std::vector<std::string> default_class_names();

LabeledDataset frames_to_dataset(const std::vector<CanFrame>& frames,
                                 std::vector<std::string> class_names,
                                 bool include_remote_flag = false);
LabeledDataset frames_to_dataset(const std::vector<CanFrame>& frames);

// --- Splits and folds ------------------------------------------------------

/// Stratified seeded split into A/B/C. Per class, the shuffled members are
/// allocated by cumulative rounding, so each split's class count stays
/// within one example of the exact ratio share.
DataSplits split_dataset(const LabeledDataset& ds, SplitRatios ratios = {},
                         std::uint64_t seed = 42);

/// k disjoint validation folds covering ds, class counts within one of
/// proportional. Deterministic (dataset order, round-robin dealing).
std::vector<FoldPair> stratified_kfold(const LabeledDataset& ds, int k);

// --- Synthetic traffic -----------------------------------------------------

std::vector<CanFrame> generate_synthetic_frames(const SyntheticConfig& cfg);
LabeledDataset generate_synthetic(const SyntheticConfig& cfg);
std::vector<std::string> synthetic_class_names(int n_classes);

// --- Dataset cache ---------------------------------------------------------
//
// Header: `canbench-dataset v1,<n_features>,<class 0>,<class 1>,...`
// then one CSV row per example: f0,...,f{d-1},label.

std::size_t save_dataset(const LabeledDataset& ds, std::ostream& out);
void save_dataset_file(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(std::istream& in);
LabeledDataset load_dataset_file(const std::string& path);

}  // namespace canbench
