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
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shapcal/dataset.hpp"
#include "shapcal/errors.hpp"
#include "shapcal/parallel.hpp"

namespace shapcal {

enum class Metric { euclidean, cosine };

inline std::string_view to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "cosine";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw UsageError("unknown metric '" + std::string(s) + "'");
}

// Training ids by ascending distance to one query. Ties are broken by
// ascending training id, so the ranking is a deterministic function of the
// data. When produced by rank_nearest, only the first m entries are present.
struct NeighborRanking {
  std::size_t query_id = 0;
  std::vector<std::size_t> order;
  std::vector<double> distances;
};

struct ClassScores {
  std::vector<double> scores;
  bool degenerate = false;  // every score is zero
};

struct Prediction {
  int label = 0;
  ClassScores scores;
  bool fallback = false;  // weighted vote collapsed to the unweighted one
};

// How valuations become vote weights. `clipped` uses max(w, 0); `minmax`
// rescales to [0, 1] over the whole weight vector.
enum class Weighting { clipped, minmax };

inline Weighting parse_weighting(std::string_view s) {
  if (s == "clipped") return Weighting::clipped;
  if (s == "minmax") return Weighting::minmax;
  throw UsageError("unknown weighting '" + std::string(s) + "'");
}

inline std::string_view to_string(Weighting w) {
  return w == Weighting::clipped ? "clipped" : "minmax";
}

namespace detail {

inline std::vector<double> all_distances(const Dataset& train, std::span<const double> query,
                                         Metric metric) {
  if (query.size() != train.dim()) {
    throw DataError("query dim " + std::to_string(query.size()) + " != train dim " +
                    std::to_string(train.dim()));
  }
  const std::size_t n = train.size(), d = train.dim();
  const double* x = train.feature_matrix().data();
  std::vector<double> dist(n);
  if (metric == Metric::euclidean) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[i * d + j] - query[j];
        s += diff * diff;
      }
      dist[i] = std::sqrt(s);
    }
    return dist;
  }
  double qn = 0.0;
  for (double v : query) qn += v * v;
  if (qn == 0.0) throw DataError("cosine metric: query has zero norm");
  qn = std::sqrt(qn);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0, xn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += x[i * d + j] * query[j];
      xn += x[i * d + j] * x[i * d + j];
    }
    if (xn == 0.0) {
      throw DataError("cosine metric: training sample " + std::to_string(i) + " has zero norm");
    }
    dist[i] = 1.0 - dot / (std::sqrt(xn) * qn);
  }
  return dist;
}

inline NeighborRanking to_ranking(std::vector<std::pair<double, std::size_t>>& keyed,
                                  std::size_t m) {
  NeighborRanking r;
  r.order.resize(m);
  r.distances.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    r.distances[i] = keyed[i].first;
    r.order[i] = keyed[i].second;
  }
  return r;
}

inline std::vector<std::pair<double, std::size_t>> keyed_distances(
    const Dataset& train, std::span<const double> query, Metric metric) {
  auto dist = all_distances(train, query, metric);
  std::vector<std::pair<double, std::size_t>> keyed(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) keyed[i] = {dist[i], i};
  return keyed;
}

}  // namespace detail

// Full O(N log N) ranking of every training sample.
inline NeighborRanking rank_neighbors(const Dataset& train, std::span<const double> query,
                                      Metric metric = Metric::euclidean) {
  auto keyed = detail::keyed_distances(train, query, metric);
  std::sort(keyed.begin(), keyed.end());
  return detail::to_ranking(keyed, keyed.size());
}

// The m nearest samples in ranking order, in O(N + m log m). Identical to the
// first m entries of rank_neighbors.
inline NeighborRanking rank_nearest(const Dataset& train, std::span<const double> query,
                                    std::size_t m, Metric metric = Metric::euclidean) {
  auto keyed = detail::keyed_distances(train, query, metric);
  m = std::min(m, keyed.size());
  if (m < keyed.size()) {
    std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(m),
                     keyed.end());
  }
  std::sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(m));
  return detail::to_ranking(keyed, m);
}

namespace detail {

inline Prediction vote(const Dataset& train, std::span<const std::size_t> neighbors,
                       const std::vector<double>* weights) {
  const int c = train.num_classes();
  Prediction p;
  p.scores.scores.assign(c, 0.0);
  double total = 0.0;
  if (weights) {
    for (std::size_t id : neighbors) {
      const double w = (*weights)[id];
      p.scores.scores[train.label(id)] += w;
      total += w;
    }
  }
  if (!weights || total <= 0.0) {
    p.fallback = weights != nullptr;
    std::fill(p.scores.scores.begin(), p.scores.scores.end(), 0.0);
    for (std::size_t id : neighbors) p.scores.scores[train.label(id)] += 1.0;
    total = static_cast<double>(neighbors.size());
  }
  for (double& s : p.scores.scores) s /= total;
  p.label = static_cast<int>(std::max_element(p.scores.scores.begin(), p.scores.scores.end()) -
                             p.scores.scores.begin());
  p.scores.degenerate = total == 0.0;
  return p;
}

}  // namespace detail

// Vote fractions among the min(K, N) nearest; argmax with ties to the
// smallest category index.
inline Prediction knn_predict(const Dataset& train, std::size_t k, std::span<const double> query,
                              Metric metric = Metric::euclidean) {
  if (k == 0) throw UsageError("K must be at least 1");
  if (train.empty()) throw DataError("knn_predict: empty training set");
  auto ranking = rank_nearest(train, query, k, metric);
  return detail::vote(train, ranking.order, nullptr);
}

// Effective vote weights for weighted_knn_predict.
inline std::vector<double> effective_weights(std::span<const double> weights,
                                             Weighting scheme = Weighting::clipped) {
  std::vector<double> w(weights.begin(), weights.end());
  if (scheme == Weighting::clipped) {
    for (double& v : w) v = std::max(v, 0.0);
    return w;
  }
  if (w.empty()) return w;
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  const double min = *lo, range = *hi - *lo;
  for (double& v : w) v = range > 0.0 ? (v - min) / range : 1.0;
  return w;
}

// Like knn_predict, but each neighbor votes with its effective weight. When
// all K neighbors carry zero weight the unweighted vote is used and
// `fallback` is set.
inline Prediction weighted_knn_predict(const Dataset& train, std::span<const double> weights,
                                       std::size_t k, std::span<const double> query,
                                       Metric metric = Metric::euclidean,
                                       Weighting scheme = Weighting::clipped) {
  if (weights.size() != train.size()) {
    throw DataError("weight count " + std::to_string(weights.size()) + " != training size " +
                    std::to_string(train.size()));
  }
  if (k == 0) throw UsageError("K must be at least 1");
  if (train.empty()) throw DataError("weighted_knn_predict: empty training set");
  const auto w = effective_weights(weights, scheme);
  auto ranking = rank_nearest(train, query, k, metric);
  return detail::vote(train, ranking.order, &w);
}

// Fraction of eval samples predicted correctly. Parallel over eval samples;
// the result is a count, so it does not depend on the thread count.
inline double accuracy(const Dataset& train, const Dataset& eval_set, std::size_t k,
                       Metric metric = Metric::euclidean,
                       std::optional<std::span<const double>> weights = std::nullopt,
                       std::size_t threads = 1, Weighting scheme = Weighting::clipped) {
  if (eval_set.empty()) throw DataError("accuracy: empty evaluation set");
  if (train.empty()) throw DataError("accuracy: empty training set");
  if (eval_set.dim() != train.dim()) throw DataError("accuracy: dim mismatch");
  if (k == 0) throw UsageError("K must be at least 1");
  std::vector<double> w;
  if (weights) {
    if (weights->size() != train.size()) throw DataError("accuracy: weight length mismatch");
    w = effective_weights(*weights, scheme);
  }
  std::vector<char> correct(eval_set.size(), 0);
  parallel_for(eval_set.size(), threads, [&](std::size_t i) {
    auto ranking = rank_nearest(train, eval_set.features(i), k, metric);
    auto p = detail::vote(train, ranking.order, weights ? &w : nullptr);
    correct[i] = p.label == eval_set.label(i);
  });
  const auto hits = std::count(correct.begin(), correct.end(), char{1});
  return static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

// query_id,rank,train_id,distance; rank is 1-based.
inline void write_rankings_csv(const std::string& path,
                               std::span<const NeighborRanking> rankings) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.precision(17);
  out << "query_id,rank,train_id,distance\n";
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < r.order.size(); ++i) {
      out << r.query_id << ',' << i + 1 << ',' << r.order[i] << ',' << r.distances[i] << '\n';
    }
  }
}

}  // namespace shapcal
