#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"

#include "canbench/candata.hpp"
#include "canbench/forest.hpp"
#include "test_util.hpp"

using namespace canbench;

TEST_SUITE_BEGIN("candata");

TEST_CASE("parse canonical data frame") {
  const CanFrame f = parse_otids_record(
      "Timestamp: 1.234000 ID: 0316 000 DLC: 8 05 21 68 09 21 21 00 6f", 1);
  CHECK(f.timestamp == doctest::Approx(1.234).epsilon(1e-12));
  CHECK(f.can_id == 0x316);
  CHECK(!f.remote);
  CHECK(f.dlc == 8);
  CHECK(f.data == std::array<std::uint8_t, 8>{0x05, 0x21, 0x68, 0x09, 0x21,
                                              0x21, 0x00, 0x6f});
}

TEST_CASE("parse remote frame with empty payload") {
  const CanFrame f = parse_otids_record("Timestamp: 0.000100 ID: 0000 100 DLC: 0");
  CHECK(f.timestamp == doctest::Approx(0.0001).epsilon(1e-9));
  CHECK(f.can_id == 0);
  CHECK(f.remote);
  CHECK(f.dlc == 0);
  CHECK(std::all_of(f.data.begin(), f.data.end(),
                    [](std::uint8_t b) { return b == 0; }));
}

TEST_CASE("parse errors carry the line number") {
  CHECK_THROWS_AS(parse_otids_record("Timestamp: 1.0 ID: 0316 000 DLC: 8 05 21", 7),
                  ParseError);
  try {
    parse_otids_record("Timestamp: 1.0 ID: 0316 000 DLC: 8 05 21", 7);
  } catch (const ParseError& e) {
    CHECK(e.line_number() == 7);
  }
  CHECK_THROWS_AS(parse_otids_record("Timestamp: 1.0 ID: 0800 000 DLC: 0", 1),
                  ParseError);
  CHECK_THROWS_AS(parse_otids_record("Timestamp: 1.0 ID: 0316 000 DLC: 9 "
                                     "00 00 00 00 00 00 00 00 00", 1),
                  ParseError);
  CHECK_THROWS_AS(parse_otids_record("", 3), ParseError);
  CHECK_THROWS_AS(parse_otids_record("garbage line", 2), ParseError);
  CHECK_THROWS_AS(parse_otids_record("Timestamp: 1.0 ID: 0316 010 DLC: 0", 1),
                  ParseError);
  CHECK_THROWS_AS(
      parse_otids_record("Timestamp: 1.0 ID: 0316 000 DLC: 1 05 21", 1),
      ParseError);
}

TEST_CASE("format then parse round-trips canonical lines byte for byte") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const CanFrame frame = testutil::random_frame(rng);
    const std::string line = format_otids_record(frame);
    const CanFrame parsed = parse_otids_record(line, 0, frame.label);
    CHECK(format_otids_record(parsed) == line);
    CHECK(parsed.can_id == frame.can_id);
    CHECK(parsed.remote == frame.remote);
    CHECK(parsed.dlc == frame.dlc);
    CHECK(parsed.data == frame.data);
  }
}

TEST_CASE("junk lines raise parse errors instead of crashing") {
  std::mt19937_64 rng(99);
  const std::string alphabet =
      "0123456789abcdefABCDEF :.TimestampIDLC\t-+xyz";
  for (int i = 0; i < 1000; ++i) {
    std::string line;
    const std::size_t len = rng() % 60;
    for (std::size_t j = 0; j < len; ++j)
      line.push_back(alphabet[rng() % alphabet.size()]);
    try {
      parse_otids_record(line, i);
    } catch (const ParseError&) {
    }
  }
}

TEST_CASE("log parsing labels every frame and enforces time order") {
  std::istringstream log(
      "Timestamp: 0.000100 ID: 0153 000 DLC: 2 00 80\n"
      "Timestamp: 0.000300 ID: 0220 000 DLC: 1 ff\n");
  const auto frames = parse_otids_log(log, "DoS");
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].label == "DoS");
  CHECK(frames[1].can_id == 0x220);

  std::istringstream backwards(
      "Timestamp: 0.5 ID: 0153 000 DLC: 0\n"
      "Timestamp: 0.4 ID: 0153 000 DLC: 0\n");
  try {
    parse_otids_log(backwards, "Normal");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number() == 2);
  }
}

TEST_CASE("feature extraction bounds") {
  CanFrame top;
  top.can_id = 0x7FF;
  top.dlc = 8;
  top.data.fill(0xFF);
  for (double v : extract_features(top)) CHECK(v == 1.0);

  const FeatureVector zero = extract_features(CanFrame{});
  CHECK(zero.size() == 10);
  for (double v : zero) CHECK(v == 0.0);

  CanFrame mid;
  mid.can_id = 0x316;
  mid.dlc = 8;
  const FeatureVector x = extract_features(mid);
  CHECK(x[0] == doctest::Approx(790.0 / 2047.0).epsilon(1e-12));
  CHECK(x[1] == 1.0);
}

TEST_CASE("feature components stay in unit range for random frames") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    for (double v : extract_features(testutil::random_frame(rng))) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("remote flag feature is opt-in") {
  CanFrame f;
  f.remote = true;
  CHECK(extract_features(f).size() == 10);
  const FeatureVector with_flag = extract_features(f, true);
  CHECK(with_flag.size() == 11);
  CHECK(with_flag[10] == 1.0);
}

TEST_CASE("full-scale split sizes") {
  // 461350 rows over four classes: A/B/C must land on 276810/92270/92270.
  std::vector<int> labels;
  labels.reserve(461350);
  const std::size_t class_sizes[4] = {115338, 115338, 115337, 115337};
  for (int c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < class_sizes[c]; ++i) labels.push_back(c);
  const LabeledDataset ds = testutil::tagged_dataset(labels, 4);

  const DataSplits splits = split_dataset(ds, {}, 42);
  CHECK(splits.a.size() == 276810);
  CHECK(splits.b.size() == 92270);
  CHECK(splits.c.size() == 92270);
}

TEST_CASE("small balanced split sizes") {
  const LabeledDataset ds =
      testutil::tagged_dataset({0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
  const DataSplits splits = split_dataset(ds, {}, 1);
  CHECK(splits.a.size() == 6);
  CHECK(splits.b.size() == 2);
  CHECK(splits.c.size() == 2);
}

TEST_CASE("split is deterministic per seed") {
  const LabeledDataset ds = generate_synthetic({200, 4, 0.5, 3});
  const DataSplits s1 = split_dataset(ds, {}, 42);
  const DataSplits s2 = split_dataset(ds, {}, 42);
  CHECK(s1.a.rows == s2.a.rows);
  CHECK(s1.b.rows == s2.b.rows);
  CHECK(s1.c.rows == s2.c.rows);
  const DataSplits s3 = split_dataset(ds, {}, 43);
  CHECK(s1.a.rows != s3.a.rows);
}

TEST_CASE("split validation") {
  const LabeledDataset ds = testutil::tagged_dataset({0, 0, 0, 1, 1, 1}, 2);
  CHECK_THROWS_AS(split_dataset(LabeledDataset{}, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(ds, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(testutil::tagged_dataset({0, 0, 1, 1, 1}, 2),
                                {}, 1),
                  std::invalid_argument);
}

TEST_CASE("split partition properties") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 60; ++round) {
    const int n_classes = 2 + static_cast<int>(rng() % 3);
    std::vector<int> labels;
    for (int c = 0; c < n_classes; ++c) {
      const int count = 4 + static_cast<int>(rng() % 40);
      for (int i = 0; i < count; ++i) labels.push_back(c);
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const LabeledDataset ds = testutil::tagged_dataset(labels, n_classes);
    const DataSplits splits = split_dataset(ds, {}, rng());

    std::multiset<double> seen;
    for (const auto* part : {&splits.a, &splits.b, &splits.c})
      for (const auto& row : part->rows) seen.insert(row[0]);
    CHECK(seen.size() == ds.size());
    std::multiset<double> expected;
    for (const auto& row : ds.rows) expected.insert(row[0]);
    CHECK(seen == expected);

    const auto global = ds.class_counts();
    const double ratios[3] = {0.6, 0.2, 0.2};
    const LabeledDataset* parts[3] = {&splits.a, &splits.b, &splits.c};
    for (int p = 0; p < 3; ++p) {
      const auto counts = parts[p]->class_counts();
      for (std::size_t c = 0; c < counts.size(); ++c) {
        const double exact = ratios[p] * static_cast<double>(global[c]);
        CHECK(std::abs(static_cast<double>(counts[c]) - exact) <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("stratified folds partition the dataset") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) {
    labels.push_back(0);
    labels.push_back(1);
  }
  const LabeledDataset ds = testutil::tagged_dataset(labels, 2);
  const auto folds = stratified_kfold(ds, 5);
  REQUIRE(folds.size() == 5);

  std::multiset<double> validation_rows;
  for (const FoldPair& fold : folds) {
    CHECK(fold.validation.size() == 20);
    const auto counts = fold.validation.class_counts();
    CHECK(counts[0] == 10);
    CHECK(counts[1] == 10);
    CHECK(fold.train.size() == 80);
    for (const auto& row : fold.validation.rows)
      validation_rows.insert(row[0]);
  }
  CHECK(validation_rows.size() == 100);
}

TEST_CASE("kfold validation") {
  const LabeledDataset ds = testutil::tagged_dataset({0, 0, 0, 1, 1, 1}, 2);
  CHECK_THROWS_AS(stratified_kfold(ds, 1), std::invalid_argument);
  CHECK_THROWS_AS(stratified_kfold(ds, 4), std::invalid_argument);
}

TEST_CASE("synthetic generator basics") {
  const LabeledDataset ds = generate_synthetic({1000, 4, 0.9, 42});
  CHECK(ds.size() == 1000);
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < 4; ++c) CHECK(counts[c] == 250);

  const LabeledDataset again = generate_synthetic({1000, 4, 0.9, 42});
  CHECK(ds.rows == again.rows);
  CHECK(ds.labels == again.labels);

  CHECK_THROWS_AS(generate_synthetic({1, 4, 0.5, 1}), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic({10, 1, 0.5, 1}), std::invalid_argument);
}

TEST_CASE("high separation is learnable by a depth-8 tree") {
  const LabeledDataset ds =
      generate_synthetic({1000, 4, SyntheticConfig::kHighSeparation, 42});
  TreeParams params;
  params.max_depth = 8;
  const DecisionTree tree = fit_tree(ds, params);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& dist = tree.predict_distribution(ds.rows[i]);
    const int predicted = static_cast<int>(
        std::distance(dist.begin(), std::max_element(dist.begin(), dist.end())));
    if (predicted == ds.labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) >= 0.95);
}

TEST_CASE("dataset cache round-trip") {
  const LabeledDataset ds = generate_synthetic({120, 3, 0.7, 9});
  std::ostringstream out;
  const std::size_t bytes = save_dataset(ds, out);
  CHECK(bytes == out.str().size());
  CHECK(out.str().rfind("canbench-dataset v1,10,Normal,DoS,Fuzzy\n", 0) == 0);

  std::istringstream in(out.str());
  const LabeledDataset loaded = load_dataset(in);
  CHECK(loaded.class_names == ds.class_names);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.rows == ds.rows);
}

TEST_CASE("dataset cache rejects malformed input") {
  std::istringstream bad_header("nonsense\n");
  CHECK_THROWS_AS(load_dataset(bad_header), ParseError);
  std::istringstream bad_label(
      "canbench-dataset v1,2,A,B\n0.5,0.5,C\n");
  CHECK_THROWS_AS(load_dataset(bad_label), ParseError);
  std::istringstream bad_width("canbench-dataset v1,2,A,B\n0.5,A\n");
  CHECK_THROWS_AS(load_dataset(bad_width), ParseError);
}

TEST_CASE("concat requires matching class lists") {
  const LabeledDataset a = testutil::tagged_dataset({0, 1}, 2);
  LabeledDataset b = testutil::tagged_dataset({0, 1}, 2);
  CHECK(concat_datasets(a, b).size() == 4);
  b.class_names.push_back("Extra");
  CHECK_THROWS_AS(concat_datasets(a, b), std::invalid_argument);
}

TEST_SUITE_END();
