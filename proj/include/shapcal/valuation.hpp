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
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
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

enum class Method { exact, knn_shapley, cknn_shapley };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::knn_shapley: return "knn_shapley";
    case Method::cknn_shapley: return "cknn_shapley";
  }
  return "?";
}

// Short spelling used by the command line and config files.
inline std::string_view short_name(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::knn_shapley: return "knn";
    case Method::cknn_shapley: return "cknn";
  }
  return "?";
}

// Accepts both the short CLI spellings (exact, knn, cknn) and the long names.
inline Method parse_method(std::string_view s) {
  if (s == "exact") return Method::exact;
  if (s == "knn" || s == "knn_shapley") return Method::knn_shapley;
  if (s == "cknn" || s == "cknn_shapley") return Method::cknn_shapley;
  throw UsageError("unknown valuation method '" + std::string(s) + "'");
}

// Normalizer of the KNN confidence utility when the coalition has fewer than
// K members. Dividing by K is the convention under which the closed-form
// recursion equals the exact Shapley value, and is the default.
enum class UtilityDivisor { k, subset_size };

enum class Aggregation { single, summed };

inline std::string_view to_string(Aggregation a) {
  return a == Aggregation::single ? "single" : "summed";
}

struct ValuationParams {
  std::size_t k = 10;
  // Number of far samples zeroed by the calibrated recursion; nullopt means
  // max(N - 2K, 0).
  std::optional<std::size_t> t;
  Metric metric = Metric::euclidean;
  UtilityDivisor divisor = UtilityDivisor::k;

  std::size_t resolved_t(std::size_t n) const {
    if (t) {
      if (*t >= n) {
        throw UsageError("T=" + std::to_string(*t) + " must be < N=" + std::to_string(n));
      }
      return *t;
    }
    return n > 2 * k ? n - 2 * k : 0;
  }
};

struct ValuationVector {
  Method method = Method::knn_shapley;
  std::size_t k = 10;
  std::size_t t = 0;  // 0 for non-calibrated methods
  Metric metric = Metric::euclidean;
  Aggregation aggregation = Aggregation::single;
  std::size_t validation_size = 1;
  bool mean_normalized = false;
  std::vector<double> values;  // indexed by training id
};

inline constexpr std::size_t kDefaultExactCap = 16;

namespace detail {

inline void check_k(std::size_t k) {
  if (k == 0) throw UsageError("K must be at least 1");
}

// Utility of the coalition whose members, in ranking order, have the given
// match flags.
inline double utility_of_matches(std::span<const char> member_matches, std::size_t k,
                                 UtilityDivisor divisor) {
  if (member_matches.empty()) return 0.0;
  const std::size_t take = std::min(k, member_matches.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < take; ++i) hits += member_matches[i] ? 1 : 0;
  const double denom = divisor == UtilityDivisor::k ? static_cast<double>(k)
                                                    : static_cast<double>(take);
  return static_cast<double>(hits) / denom;
}

// Closed-form recursion over the `head` = N - T nearest ids; everything past
// the head is exactly zero. The sample at rank `head` gets
// 1[match] / base_denominator and each closer rank i adds
// (1[match_i] - 1[match_{i+1}]) / max(K, i).
inline std::vector<double> shapley_recursion(std::span<const std::size_t> order,
                                             std::span<const int> labels, int y_v,
                                             std::size_t k, std::size_t t,
                                             std::size_t base_denominator) {
  const std::size_t n = labels.size();
  const std::size_t head = n - t;
  if (order.size() < head) {
    throw DataError("ranking covers " + std::to_string(order.size()) + " samples, need " +
                    std::to_string(head));
  }
  std::vector<double> values(n, 0.0);
  if (head == 0) return values;
  auto match = [&](std::size_t rank) {  // 1-based rank
    return labels[order[rank - 1]] == y_v ? 1.0 : 0.0;
  };
  double v = match(head) / static_cast<double>(base_denominator);
  values[order[head - 1]] = v;
  for (std::size_t i = head - 1; i >= 1; --i) {
    v += (match(i) - match(i + 1)) / static_cast<double>(std::max(k, i));
    values[order[i - 1]] = v;
  }
  return values;
}

}  // namespace detail

// U(S) for a KNN classifier restricted to `subset`, scored on z_v. Neighbors
// are taken in the global ranking order (distance, then id). U(empty) = 0.
inline double utility_knn(std::span<const std::size_t> subset, const Dataset& train,
                          const Sample& z_v, std::size_t k, Metric metric = Metric::euclidean,
                          UtilityDivisor divisor = UtilityDivisor::k) {
  detail::check_k(k);
  std::vector<char> in_subset(train.size(), 0);
  for (std::size_t id : subset) {
    if (id >= train.size()) throw DataError("utility_knn: invalid id " + std::to_string(id));
    in_subset[id] = 1;
  }
  if (subset.empty()) return 0.0;
  const auto ranking = rank_neighbors(train, z_v.features, metric);
  std::vector<char> matches;
  for (std::size_t id : ranking.order) {
    if (in_subset[id]) matches.push_back(train.label(id) == z_v.label);
  }
  return detail::utility_of_matches(matches, k, divisor);
}

// Brute-force Shapley value over all 2^N coalitions with the KNN utility.
// Exponential; refuses N above `max_n`.
inline ValuationVector exact_shapley(const Dataset& train, const Sample& z_v,
                                     const ValuationParams& params,
                                     std::size_t max_n = kDefaultExactCap) {
  detail::check_k(params.k);
  const std::size_t n = train.size();
  if (n == 0) throw DataError("exact_shapley: empty training set");
  if (n > max_n || n > 30) {
    throw UsageError("exact Shapley enumerates 2^N subsets; N=" + std::to_string(n) +
                     " exceeds the cap of " + std::to_string(std::min<std::size_t>(max_n, 30)));
  }
  const auto ranking = rank_neighbors(train, z_v.features, params.metric);
  std::vector<char> match_by_rank(n);
  for (std::size_t r = 0; r < n; ++r) match_by_rank[r] = train.label(ranking.order[r]) == z_v.label;

  // Utility of every coalition; bit r of the mask is the sample at rank r.
  const std::uint64_t full = std::uint64_t{1} << n;
  std::vector<double> utility(full);
  std::vector<char> members;
  members.reserve(n);
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    members.clear();
    for (std::size_t r = 0; r < n && members.size() < params.k; ++r) {
      if (mask >> r & 1) members.push_back(match_by_rank[r]);
    }
    const std::size_t size = static_cast<std::size_t>(std::popcount(mask));
    if (size == 0) {
      utility[mask] = 0.0;
      continue;
    }
    std::size_t hits = 0;
    for (char m : members) hits += m ? 1 : 0;
    const double denom = params.divisor == UtilityDivisor::k
                             ? static_cast<double>(params.k)
                             : static_cast<double>(std::min(params.k, size));
    utility[mask] = static_cast<double>(hits) / denom;
  }

  // 1 / C(N-1, s) for every coalition size s.
  std::vector<double> inv_binom(n);
  for (std::size_t s = 0; s < n; ++s) {
    double c = 1.0;
    for (std::size_t j = 1; j <= s; ++j) {
      c = c * static_cast<double>(n - 1 - s + j) / static_cast<double>(j);
    }
    inv_binom[s] = 1.0 / c;
  }

  ValuationVector out;
  out.method = Method::exact;
  out.k = params.k;
  out.metric = params.metric;
  out.values.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint64_t bit = std::uint64_t{1} << r;
    double sum = 0.0;
    for (std::uint64_t mask = 0; mask < full; ++mask) {
      if (mask & bit) continue;
      sum += (utility[mask | bit] - utility[mask]) *
             inv_binom[static_cast<std::size_t>(std::popcount(mask))];
    }
    out.values[ranking.order[r]] = sum / static_cast<double>(n);
  }
  return out;
}

// KNN-Shapley recursion for one validation point: the farthest sample gets
// 1[match] / max(K, N) and each closer sample adds
// (1[match_i] - 1[match_{i+1}]) / max(K, i). Values are returned in
// training-id order.
//
// For N >= K the base is the familiar 1[match] / N. For N < K the farthest
// sample is among the K nearest of every coalition it joins, so its exact
// Shapley value under the divide-by-K utility is 1[match] / K.
inline ValuationVector knn_shapley(const NeighborRanking& ranking, std::span<const int> labels,
                                   int y_v, std::size_t k) {
  detail::check_k(k);
  if (ranking.order.size() != labels.size()) {
    throw DataError("knn_shapley needs a full ranking of all training samples");
  }
  ValuationVector out;
  out.method = Method::knn_shapley;
  out.k = k;
  out.values = detail::shapley_recursion(ranking.order, labels, y_v, k, 0,
                                         std::max(k, labels.size()));
  return out;
}

// Calibrated recursion: the T farthest samples get exactly zero and the
// recursion restarts at rank N - T with base 1[match]/(N - T). T = 0 is
// exactly knn_shapley. Only the N - T nearest entries of `ranking` are read,
// so a partial ranking from rank_nearest is sufficient.
inline ValuationVector cknn_shapley(const NeighborRanking& ranking, std::span<const int> labels,
                                    int y_v, std::size_t k, std::size_t t) {
  detail::check_k(k);
  if (labels.empty()) throw DataError("cknn_shapley: empty training set");
  if (t >= labels.size()) {
    throw UsageError("T=" + std::to_string(t) + " must be < N=" + std::to_string(labels.size()));
  }
  ValuationVector out;
  out.method = Method::cknn_shapley;
  out.k = k;
  out.t = t;
  const std::size_t base = t == 0 ? std::max(k, labels.size()) : labels.size() - t;
  out.values = detail::shapley_recursion(ranking.order, labels, y_v, k, t, base);
  return out;
}

// Values of every training sample with respect to a single validation sample.
inline ValuationVector value_single(const Dataset& train, const Sample& z_v, Method method,
                                    const ValuationParams& params,
                                    std::size_t exact_cap = kDefaultExactCap) {
  if (train.empty()) throw DataError("valuation: empty training set");
  ValuationVector out;
  switch (method) {
    case Method::exact:
      out = exact_shapley(train, z_v, params, exact_cap);
      break;
    case Method::knn_shapley:
      out = knn_shapley(rank_neighbors(train, z_v.features, params.metric), train.labels(),
                        z_v.label, params.k);
      break;
    case Method::cknn_shapley: {
      const std::size_t t = params.resolved_t(train.size());
      out = cknn_shapley(rank_nearest(train, z_v.features, train.size() - t, params.metric),
                         train.labels(), z_v.label, params.k, t);
      break;
    }
  }
  out.metric = params.metric;
  return out;
}

struct AggregateOptions {
  std::size_t threads = 1;
  bool mean_normalize = false;  // divide the sum by |val|
  std::size_t exact_cap = kDefaultExactCap;
};

// Per-validation values are summed in 2^-40 fixed point. Integer addition is
// associative, so the sum is bit-identical for any thread count or
// accumulation order and additive over disjoint validation sets.
inline constexpr double kFixedPointScale = 0x1.0p40;
inline constexpr std::size_t kMaxValidationSize = std::size_t{1} << 22;

namespace detail {

inline std::int64_t to_fixed(double v) {
  if (!std::isfinite(v) || std::abs(v) > 2.0) {
    throw NumericError("single-validation value " + std::to_string(v) + " out of range");
  }
  return std::llround(v * kFixedPointScale);
}

}  // namespace detail

// Element-wise sum of the single-validation vectors over all of `val`.
inline ValuationVector aggregate_over_validation(const Dataset& train, const Dataset& val,
                                                 Method method, const ValuationParams& params,
                                                 const AggregateOptions& options = {}) {
  if (val.empty()) throw DataError("aggregate_over_validation: empty validation set");
  if (train.empty()) throw DataError("aggregate_over_validation: empty training set");
  if (val.dim() != train.dim()) throw DataError("validation dim does not match training dim");
  if (val.size() > kMaxValidationSize) {
    throw UsageError("validation set larger than " + std::to_string(kMaxValidationSize));
  }
  detail::check_k(params.k);
  const std::size_t n = train.size();
  const std::size_t t = method == Method::cknn_shapley ? params.resolved_t(n) : 0;

  const std::size_t chunks = std::max<std::size_t>(1, std::min(options.threads, val.size()));
  std::vector<std::vector<std::int64_t>> partial(chunks);
  parallel_for(chunks, chunks, [&](std::size_t c) {
    auto& acc = partial[c];
    acc.assign(n, 0);
    const std::size_t begin = val.size() * c / chunks, end = val.size() * (c + 1) / chunks;
    for (std::size_t v = begin; v < end; ++v) {
      const auto single = value_single(train, val.sample(v), method, params, options.exact_cap);
      for (std::size_t i = 0; i < n; ++i) acc[i] += detail::to_fixed(single.values[i]);
    }
  });

  ValuationVector out;
  out.method = method;
  out.k = params.k;
  out.t = t;
  out.metric = params.metric;
  out.aggregation = Aggregation::summed;
  out.validation_size = val.size();
  out.mean_normalized = options.mean_normalize;
  out.values.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t total = 0;
    for (const auto& acc : partial) total += acc[i];
    double v = static_cast<double>(total) / kFixedPointScale;
    if (options.mean_normalize) v /= static_cast<double>(val.size());
    out.values[i] = v;
  }
  return out;
}

}  // namespace shapcal
