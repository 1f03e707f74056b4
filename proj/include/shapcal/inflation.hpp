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

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shapcal/dataset.hpp"
#include "shapcal/errors.hpp"
#include "shapcal/knn.hpp"
#include "shapcal/parallel.hpp"

namespace shapcal {

inline constexpr std::size_t kDefaultBins = 100;

// Equal-size bins over samples sorted ascending by (value, id). Bins are
// 0-based here; reports use 1-based bin numbers.
struct BinSegmentation {
  std::size_t num_bins = 0;
  std::vector<std::size_t> assignment;  // bin per training id
  std::vector<double> bin_value;        // maximum value inside each bin
  std::vector<std::size_t> sorted_ids;  // ids in ascending (value, id) order
  std::vector<std::size_t> bin_start;   // offsets into sorted_ids, size B + 1

  std::span<const std::size_t> members(std::size_t bin) const {
    return std::span<const std::size_t>(sorted_ids)
        .subspan(bin_start[bin], bin_start[bin + 1] - bin_start[bin]);
  }
};

struct RemovalCurve {
  double p0 = 0.0;        // accuracy with the full training set
  std::vector<double> p;  // accuracy with bin j removed
};

enum class InflationStatus { ok, no_detrimental_boundary, no_zero_crossing };

inline std::string_view to_string(InflationStatus s) {
  switch (s) {
    case InflationStatus::ok: return "ok";
    case InflationStatus::no_detrimental_boundary: return "no_detrimental_boundary";
    case InflationStatus::no_zero_crossing: return "no_zero_crossing";
  }
  return "?";
}

// Threshold t = nu_{j*} and misidentification ratio r = (j* - i*) / j*, with
// 1-based bin indices.
struct InflationReport {
  InflationStatus status = InflationStatus::ok;
  std::optional<double> t;
  std::optional<double> r;
  std::optional<std::size_t> j_star;
  std::optional<std::size_t> i_star;
};

// First (N mod B) bins hold ceil(N/B) samples, the rest floor(N/B).
inline BinSegmentation segment_bins(std::span<const double> values, std::size_t num_bins) {
  const std::size_t n = values.size();
  if (num_bins == 0) throw UsageError("number of bins must be positive");
  if (num_bins > n) {
    throw UsageError("cannot split " + std::to_string(n) + " samples into " +
                     std::to_string(num_bins) + " bins");
  }
  BinSegmentation seg;
  seg.num_bins = num_bins;
  seg.sorted_ids.resize(n);
  std::iota(seg.sorted_ids.begin(), seg.sorted_ids.end(), std::size_t{0});
  std::stable_sort(seg.sorted_ids.begin(), seg.sorted_ids.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  seg.bin_start.assign(num_bins + 1, 0);
  const std::size_t base = n / num_bins, extra = n % num_bins;
  for (std::size_t b = 0; b < num_bins; ++b) {
    seg.bin_start[b + 1] = seg.bin_start[b] + base + (b < extra ? 1 : 0);
  }
  seg.assignment.assign(n, 0);
  seg.bin_value.assign(num_bins, 0.0);
  for (std::size_t b = 0; b < num_bins; ++b) {
    for (std::size_t id : seg.members(b)) seg.assignment[id] = b;
    seg.bin_value[b] = values[seg.sorted_ids[seg.bin_start[b + 1] - 1]];
  }
  return seg;
}

// Accuracy on `eval_set` with the full training set and with each bin
// removed. Bins are evaluated concurrently and gathered in index order.
inline RemovalCurve bin_removal_curve(const Dataset& train, const Dataset& eval_set,
                                      const BinSegmentation& seg, std::size_t k,
                                      Metric metric = Metric::euclidean,
                                      std::size_t threads = 1) {
  if (eval_set.empty()) throw DataError("bin_removal_curve: empty evaluation set");
  if (seg.assignment.size() != train.size()) {
    throw DataError("bin segmentation does not match training set size");
  }
  for (std::size_t b = 0; b < seg.num_bins; ++b) {
    if (seg.members(b).size() == train.size()) {
      throw UsageError("removing bin " + std::to_string(b + 1) + " empties the training set");
    }
  }
  RemovalCurve curve;
  curve.p0 = accuracy(train, eval_set, k, metric, std::nullopt, threads);
  curve.p.assign(seg.num_bins, 0.0);
  parallel_for(seg.num_bins, threads, [&](std::size_t b) {
    std::vector<std::size_t> keep;
    keep.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (seg.assignment[i] != b) keep.push_back(i);
    }
    curve.p[b] = accuracy(train.subset(keep), eval_set, k, metric);
  });
  return curve;
}

// j* is the first bin j (1..B-1) with p_j < p_0 and p_{j+1} < p_0. i* is the
// last bin whose maximum value is <= 0. If j* does not exist, t and r are
// absent. If no bin is non-positive, i* = 0 and r = 1. When i* > j* the
// valuation flags more bins than the curve, nothing detrimental is missed,
// and r is reported as 0.
inline InflationReport inflation_metrics(const RemovalCurve& curve, const BinSegmentation& seg) {
  const std::size_t b = curve.p.size();
  if (b < 2) throw UsageError("inflation metrics need at least 2 bins");
  if (seg.bin_value.size() != b) throw DataError("curve and segmentation disagree on bin count");

  InflationReport report;
  for (std::size_t i = b; i >= 1; --i) {
    if (seg.bin_value[i - 1] <= 0.0) {
      report.i_star = i;
      break;
    }
  }
  for (std::size_t j = 1; j < b; ++j) {
    if (curve.p[j - 1] < curve.p0 && curve.p[j] < curve.p0) {
      report.j_star = j;
      break;
    }
  }
  if (!report.j_star) {
    report.status = InflationStatus::no_detrimental_boundary;
    return report;
  }
  const std::size_t j = *report.j_star;
  report.t = seg.bin_value[j - 1];
  if (!report.i_star) {
    report.status = InflationStatus::no_zero_crossing;
    report.i_star = 0;
    report.r = 1.0;
    return report;
  }
  const std::size_t i = std::min(*report.i_star, j);
  report.r = static_cast<double>(j - i) / static_cast<double>(j);
  return report;
}

}  // namespace shapcal
