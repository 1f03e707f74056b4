/*
 * Copyright 2026 The shapcal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shapcal/dataset.hpp"

#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "shapcal/knn.hpp"
#include "test_util.hpp"

namespace shapcal {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

TEST(LoadCsv, DensifiesLabelsByFirstAppearance) {
  auto dir = testing::temp_dir("load_basic");
  auto path = testing::write_file(dir / "d.csv", "f1,f2,y\n1,2,a\n3,4,b\n5,6,a\n");
  auto ds = load_csv(path, "y", true);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.num_classes(), 2);
  EXPECT_THAT(ds.labels(), ElementsAre(0, 1, 0));
  EXPECT_THAT(ds.feature_matrix(), ElementsAre(1, 2, 3, 4, 5, 6));
}

TEST(LoadCsv, LabelColumnMayBeAnywhere) {
  auto dir = testing::temp_dir("load_middle");
  auto path = testing::write_file(dir / "d.csv", "a,label,b\n1.5,7,-2\n0,3,1e3\n");
  auto ds = load_csv(path, "label", true);
  EXPECT_THAT(ds.labels(), ElementsAre(0, 1));
  EXPECT_THAT(ds.feature_matrix(), ElementsAre(1.5, -2, 0, 1000));
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
  auto dir = testing::temp_dir("load_bad_cell");
  auto path = testing::write_file(dir / "d.csv", "f1,f2,y\n1,2,a\n3,oops,b\n");
  try {
    load_csv(path, "y", true);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_THAT(e.what(), HasSubstr("row 3"));
    EXPECT_THAT(e.what(), HasSubstr("'f2'"));
    EXPECT_THAT(e.what(), HasSubstr("oops"));
  }
}

TEST(LoadCsv, SingleRow) {
  auto dir = testing::temp_dir("load_single");
  auto path = testing::write_file(dir / "d.csv", "x,y\n0.5,z\n");
  auto ds = load_csv(path, "y", true);
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.num_classes(), 1);
}

TEST(LoadCsv, Errors) {
  auto dir = testing::temp_dir("load_errors");
  EXPECT_THROW(load_csv(testing::write_file(dir / "e.csv", ""), "y", true), DataError);
  EXPECT_THROW(load_csv(testing::write_file(dir / "h.csv", "x,y\n"), "y", true), DataError);
  EXPECT_THROW(load_csv(testing::write_file(dir / "r.csv", "x,y\n1,a\n1,2,a\n"), "y", true),
               DataError);
  EXPECT_THROW(load_csv(testing::write_file(dir / "m.csv", "x,y\n1,a\n"), "label", true),
               DataError);
  EXPECT_THROW(load_csv((dir / "missing.csv").string(), "y", true), DataError);
}

TEST(LoadCsv, HeaderlessUsesColumnIndex) {
  auto dir = testing::temp_dir("load_noheader");
  auto path = testing::write_file(dir / "d.csv", "1,0.5,2\n0,1.5,3\n");
  auto ds = load_csv(path, "0", false);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_THAT(ds.labels(), ElementsAre(0, 1));
  EXPECT_THAT(ds.feature_matrix(), ElementsAre(0.5, 2, 1.5, 3));
  EXPECT_THROW(load_csv(path, "y", false), DataError);
  EXPECT_THROW(load_csv(path, "5", false), DataError);
}

TEST(LoadCsv, SharedLabelMapKeepsIndicesConsistent) {
  auto dir = testing::temp_dir("load_shared");
  auto train = testing::write_file(dir / "t.csv", "x,y\n1,cat\n2,dog\n");
  auto val = testing::write_file(dir / "v.csv", "x,y\n1,dog\n2,cat\n");
  LabelMap map;
  auto t = load_csv(train, "y", true, &map);
  auto v = load_csv(val, "y", true, &map);
  EXPECT_THAT(t.labels(), ElementsAre(0, 1));
  EXPECT_THAT(v.labels(), ElementsAre(1, 0));
}

TEST(WriteCsv, RoundTripsBitExactly) {
  auto ds = synth_blobs(37, 3, 3, 2.5, 0.7, 11);
  auto dir = testing::temp_dir("write_roundtrip");
  write_csv(ds, (dir / "d.csv").string());
  LabelMap map;
  for (int c = 0; c < ds.num_classes(); ++c) map.intern(std::to_string(c));
  auto back = load_csv((dir / "d.csv").string(), "label", true, &map);
  EXPECT_EQ(back.feature_matrix(), ds.feature_matrix());
  EXPECT_EQ(back.labels(), ds.labels());
}

TEST(SynthBlobs, ZeroNoiseGivesPointsAtCenters) {
  auto ds = synth_blobs(4, 2, 2, 10.0, 0.0, 7);
  ASSERT_EQ(ds.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ds.features(i)[0], 10.0 * ds.label(i));
    EXPECT_EQ(ds.features(i)[1], 0.0);
  }
  EXPECT_EQ(std::count(ds.labels().begin(), ds.labels().end(), 0), 2);
}

TEST(SynthBlobs, DeterministicForSameSeed) {
  auto a = synth_blobs(200, 3, 4, 3.0, 1.0, 42);
  auto b = synth_blobs(200, 3, 4, 3.0, 1.0, 42);
  auto c = synth_blobs(200, 3, 4, 3.0, 1.0, 43);
  EXPECT_EQ(a.feature_matrix(), b.feature_matrix());
  EXPECT_EQ(a.labels(), b.labels());
  EXPECT_NE(a.feature_matrix(), c.feature_matrix());
}

TEST(SynthBlobs, ClassCountsBalancedWithinOne) {
  for (std::size_t n : {5u, 17u, 100u, 101u}) {
    for (int c : {2, 3, 5}) {
      if (n < static_cast<std::size_t>(c)) continue;
      auto ds = synth_blobs(n, 2, c, 1.0, 1.0, n * 31 + c);
      std::vector<std::size_t> counts(c, 0);
      for (int y : ds.labels()) ++counts[y];
      auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      EXPECT_LE(*hi - *lo, 1u) << "n=" << n << " c=" << c;
    }
  }
}

TEST(SynthBlobs, InvalidArguments) {
  EXPECT_THROW(synth_blobs(1, 2, 2, 1.0, 1.0, 0), UsageError);
  EXPECT_THROW(synth_blobs(10, 2, 1, 1.0, 1.0, 0), UsageError);
  EXPECT_THROW(synth_blobs(10, 2, 2, 0.0, 1.0, 0), UsageError);
  EXPECT_THROW(synth_blobs(10, 2, 2, 1.0, -1.0, 0), UsageError);
}

// Regression value pinned from the first seeded run.
TEST(SynthBlobs, TenNearestNeighborValidationAccuracy) {
  auto ds = synth_blobs(1000, 2, 2, 4.0, 1.0, 1);
  auto parts = split(ds, {0.9, 0.1, 0.0}, 1);
  const double acc = accuracy(parts[0], parts[1], 10);
  EXPECT_GE(acc, 0.9);
  EXPECT_DOUBLE_EQ(acc, 0.98);
}

TEST(FlipLabels, ZeroRatioIsIdentity) {
  auto ds = synth_blobs(50, 2, 3, 2.0, 1.0, 3);
  auto [flipped, mask] = flip_labels(ds, 0.0, 9);
  EXPECT_EQ(flipped.labels(), ds.labels());
  EXPECT_EQ(mask.count(), 0u);
}

TEST(FlipLabels, FullRatioBinaryInvertsEverything) {
  auto ds = synth_blobs(40, 2, 2, 2.0, 1.0, 3);
  auto [flipped, mask] = flip_labels(ds, 1.0, 9);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(flipped.label(i), 1 - ds.label(i));
    EXPECT_EQ(mask.original_labels[i], ds.label(i));
  }
}

TEST(FlipLabels, ExactCountAndEveryFlipDiffers) {
  auto ds = synth_blobs(1000, 2, 4, 2.0, 1.0, 5);
  auto [flipped, mask] = flip_labels(ds, 0.3, 17);
  EXPECT_EQ(mask.count(), 300u);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (mask.flipped[i]) {
      EXPECT_NE(flipped.label(i), ds.label(i));
      EXPECT_EQ(mask.original_labels[i], ds.label(i));
    } else {
      EXPECT_EQ(flipped.label(i), ds.label(i));
      EXPECT_FALSE(mask.original_labels[i].has_value());
    }
  }
  auto again = flip_labels(ds, 0.3, 17);
  EXPECT_EQ(again.first.labels(), flipped.labels());
}

TEST(FlipLabels, RequiresTwoClasses) {
  Dataset one({0.0, 1.0}, {0, 0}, 1, 1);
  EXPECT_THROW(flip_labels(one, 0.5, 1), UsageError);
}

TEST(Split, SizesFollowFloorThenRemainder) {
  auto ds = synth_blobs(10, 2, 2, 1.0, 1.0, 1);
  auto parts = split(ds, {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(parts[0].size(), 8u);
  EXPECT_EQ(parts[1].size(), 1u);
  EXPECT_EQ(parts[2].size(), 1u);

  auto seven = split(synth_blobs(7, 2, 2, 1.0, 1.0, 1), {0.5, 0.25, 0.25}, 4);
  // floors (3, 1, 1); remainder 2 goes to train then val.
  EXPECT_EQ(seven[0].size(), 4u);
  EXPECT_EQ(seven[1].size(), 2u);
  EXPECT_EQ(seven[2].size(), 1u);
}

TEST(Split, IdentityPartition) {
  auto ds = synth_blobs(10, 2, 2, 1.0, 1.0, 1);
  auto parts = split(ds, {1.0, 0.0, 0.0}, 4);
  EXPECT_EQ(parts[0].size(), 10u);
  EXPECT_TRUE(parts[1].empty());
  EXPECT_TRUE(parts[2].empty());
  std::set<std::size_t> origins(parts[0].origins().begin(), parts[0].origins().end());
  EXPECT_EQ(origins.size(), 10u);
}

TEST(Split, IsADeterministicPartition) {
  auto ds = synth_blobs(101, 2, 2, 1.0, 1.0, 1);
  auto a = split(ds, {0.6, 0.3, 0.1}, 99);
  auto b = split(ds, {0.6, 0.3, 0.1}, 99);
  std::multiset<std::size_t> seen;
  for (int p = 0; p < 3; ++p) {
    EXPECT_EQ(a[p].origins(), b[p].origins());
    for (std::size_t i = 0; i < a[p].size(); ++i) {
      seen.insert(a[p].origin(i));
      EXPECT_EQ(a[p].label(i), ds.label(a[p].origin(i)));
    }
  }
  EXPECT_EQ(seen.size(), 101u);
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 101u);
}

TEST(Split, RejectsEmptyNonzeroPart) {
  auto ds = synth_blobs(5, 2, 2, 1.0, 1.0, 1);
  EXPECT_THROW(split(ds, {0.9, 0.1, 0.0}, 1), UsageError);
  EXPECT_THROW(split(ds, {0.5, 0.4, 0.0}, 1), UsageError);
  EXPECT_THROW(split(ds, {0.5, -0.5, 1.0}, 1), UsageError);
}

TEST(Chunk, EarlierShardsTakeRemainder) {
  auto ds = synth_blobs(23, 2, 2, 1.0, 1.0, 1);
  auto shards = chunk(ds, 5);
  std::vector<std::size_t> sizes;
  for (auto& s : shards) sizes.push_back(s.size());
  EXPECT_THAT(sizes, ElementsAre(5, 5, 5, 4, 4));
  EXPECT_EQ(shards[1].origin(0), 5u);
}

TEST(BalancedSubsample, DownsamplesToMinority) {
  std::vector<int> y = {0, 0, 0, 0, 1, 1, 0, 1};
  Dataset ds(std::vector<double>(y.size(), 0.0), y, 1, 2);
  auto b = balanced_subsample(ds, 3);
  EXPECT_EQ(std::count(b.labels().begin(), b.labels().end(), 0), 3);
  EXPECT_EQ(std::count(b.labels().begin(), b.labels().end(), 1), 3);
  EXPECT_TRUE(std::is_sorted(b.origins().begin(), b.origins().end()));
}

TEST(Standardizer, ZeroMeanUnitVarianceOnFitData) {
  auto ds = synth_blobs(200, 3, 2, 5.0, 2.0, 8);
  auto s = Standardizer::fit(ds);
  auto z = s.apply(ds);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) m += z.features(i)[j];
    m /= z.size();
    for (std::size_t i = 0; i < z.size(); ++i) v += std::pow(z.features(i)[j] - m, 2);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / z.size(), 1.0, 1e-12);
  }
}

TEST(Dataset, RejectsOutOfRangeLabels) {
  EXPECT_THROW(Dataset({0.0}, {2}, 1, 2), DataError);
  EXPECT_THROW(Dataset({0.0, 1.0}, {0}, 1, 2), DataError);
}

}  // namespace
}  // namespace shapcal
