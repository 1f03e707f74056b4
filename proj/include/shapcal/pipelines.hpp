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
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shapcal/dataset.hpp"
#include "shapcal/errors.hpp"
#include "shapcal/knn.hpp"
#include "shapcal/regressor.hpp"
#include "shapcal/rng.hpp"
#include "shapcal/valuation.hpp"

namespace shapcal {

// ---------------------------------------------------------------------------
// Removal

struct RemovalPolicy {
  enum class Kind { negative_values, bottom_fraction };
  Kind kind = Kind::negative_values;
  double q = 0.0;      // bottom_fraction only, in (0, 1)
  bool strict = true;  // negative_values: remove v < 0 (strict) or v <= 0

  static RemovalPolicy negative(bool strict = true) {
    return {Kind::negative_values, 0.0, strict};
  }
  static RemovalPolicy bottom(double q) { return {Kind::bottom_fraction, q, true}; }
};

inline std::string_view to_string(RemovalPolicy::Kind k) {
  return k == RemovalPolicy::Kind::negative_values ? "negative" : "bottom";
}

struct RemovalResult {
  Dataset kept;
  std::vector<std::size_t> removed;  // ids in the input training set, ascending
};

inline RemovalResult apply_removal(const Dataset& train, std::span<const double> values,
                                   const RemovalPolicy& policy) {
  const std::size_t n = train.size();
  if (values.size() != n) {
    throw DataError("valuation length " + std::to_string(values.size()) +
                    " != training size " + std::to_string(n));
  }
  std::vector<char> drop(n, 0);
  if (policy.kind == RemovalPolicy::Kind::negative_values) {
    for (std::size_t i = 0; i < n; ++i) {
      drop[i] = policy.strict ? values[i] < 0.0 : values[i] <= 0.0;
    }
  } else {
    if (!(policy.q > 0.0 && policy.q < 1.0)) throw UsageError("removal fraction q must be in (0, 1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const auto count = static_cast<std::size_t>(std::floor(policy.q * static_cast<double>(n)));
    for (std::size_t i = 0; i < count; ++i) drop[order[i]] = 1;
  }
  RemovalResult out{Dataset(train.dim(), train.num_classes()), {}};
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) (drop[i] ? out.removed : keep).push_back(i);
  if (keep.empty()) throw DataError("removal policy would empty the training set");
  out.kept = train.subset(keep);
  return out;
}

// ---------------------------------------------------------------------------
// Mislabel analysis

// Set I: value <= 0 and clean. Set II: value <= 0 and flipped. Set III:
// value > 0 and flipped.
struct MislabelAnalysis {
  std::vector<std::size_t> non_positive_clean;
  std::vector<std::size_t> non_positive_flipped;
  std::vector<std::size_t> positive_flipped;
  std::optional<double> precision;  // |II| / (|I| + |II|)
  std::optional<double> recall;     // |II| / (|II| + |III|)
};

inline MislabelAnalysis mislabel_analysis(std::span<const double> values, const FlipMask& mask) {
  if (values.size() != mask.flipped.size()) throw DataError("valuation and flip mask differ in length");
  MislabelAnalysis a;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool flagged = values[i] <= 0.0;
    if (flagged && !mask.flipped[i]) a.non_positive_clean.push_back(i);
    if (flagged && mask.flipped[i]) a.non_positive_flipped.push_back(i);
    if (!flagged && mask.flipped[i]) a.positive_flipped.push_back(i);
  }
  const double two = static_cast<double>(a.non_positive_flipped.size());
  const std::size_t flagged = a.non_positive_clean.size() + a.non_positive_flipped.size();
  const std::size_t flipped = a.non_positive_flipped.size() + a.positive_flipped.size();
  if (flagged > 0) a.precision = two / static_cast<double>(flagged);
  if (flipped > 0) a.recall = two / static_cast<double>(flipped);
  return a;
}

// ---------------------------------------------------------------------------
// Online stream valuation

struct OnlineBatchRecord {
  std::size_t batch = 0;  // 1-based
  std::size_t arrivals = 0;
  std::size_t candidates = 0;
  std::size_t removed = 0;
  std::size_t survivors = 0;
  double accuracy = 0.0;           // survivors, on the validation set
  double baseline_accuracy = 0.0;  // every arrival so far, no removal
};

struct SampleLifecycle {
  std::size_t admitted = 0;                                // batch
  std::optional<std::size_t> removed;                      // batch
  std::vector<std::pair<std::size_t, double>> trajectory;  // (batch, value)
};

struct OnlineRunReport {
  std::vector<OnlineBatchRecord> batches;
  std::map<std::size_t, SampleLifecycle> samples;  // keyed by origin id
};

struct RunOptions {
  std::size_t threads = 1;
  std::size_t exact_cap = kDefaultExactCap;
};

// Each batch: candidates = previous survivors followed by the new shard;
// value candidates against `val`, apply the policy, record accuracy. Samples
// are tracked by origin id, which must be unique across shards.
inline OnlineRunReport online_run(std::span<const Dataset> shards, const Dataset& val,
                                  Method method, const ValuationParams& params,
                                  const RemovalPolicy& policy, const RunOptions& options = {}) {
  if (shards.empty()) throw UsageError("online_run needs at least one batch");
  for (const auto& s : shards) {
    if (s.dim() != shards.front().dim() || s.dim() != val.dim()) {
      throw DataError("online_run: shards and validation set must share dim");
    }
  }
  OnlineRunReport report;
  std::optional<Dataset> survivors;
  std::optional<Dataset> everything;
  for (std::size_t b = 0; b < shards.size(); ++b) {
    const Dataset& shard = shards[b];
    const std::size_t batch = b + 1;
    for (std::size_t i = 0; i < shard.size(); ++i) {
      auto [it, inserted] = report.samples.try_emplace(shard.origin(i));
      if (!inserted) {
        throw DataError("online_run: origin id " + std::to_string(shard.origin(i)) +
                        " appears in more than one shard");
      }
      it->second.admitted = batch;
    }
    Dataset candidates = survivors ? Dataset::concat(*survivors, shard) : shard;
    everything = everything ? Dataset::concat(*everything, shard) : shard;

    const auto values = aggregate_over_validation(candidates, val, method, params,
                                                  {options.threads, false, options.exact_cap});
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      report.samples.at(candidates.origin(i)).trajectory.emplace_back(batch, values.values[i]);
    }
    auto removal = apply_removal(candidates, values.values, policy);
    for (std::size_t id : removal.removed) report.samples.at(candidates.origin(id)).removed = batch;

    OnlineBatchRecord rec;
    rec.batch = batch;
    rec.arrivals = shard.size();
    rec.candidates = candidates.size();
    rec.removed = removal.removed.size();
    rec.survivors = removal.kept.size();
    rec.accuracy = accuracy(removal.kept, val, params.k, params.metric, std::nullopt, options.threads);
    rec.baseline_accuracy =
        accuracy(*everything, val, params.k, params.metric, std::nullopt, options.threads);
    report.batches.push_back(rec);
    survivors = std::move(removal.kept);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Active learning

enum class Strategy { shapley_pred, random, entropy, margin, uncertainty };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::shapley_pred: return "shapley_pred";
    case Strategy::random: return "random";
    case Strategy::entropy: return "entropy";
    case Strategy::margin: return "margin";
    case Strategy::uncertainty: return "uncertainty";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::shapley_pred, Strategy::random, Strategy::entropy, Strategy::margin,
                  Strategy::uncertainty}) {
    if (s == to_string(st)) return st;
  }
  throw UsageError("unknown acquisition strategy '" + std::string(s) + "'");
}

struct ActiveConfig {
  Strategy strategy = Strategy::shapley_pred;
  std::size_t rounds = 8;
  std::size_t batch_size = 200;
  Method method = Method::cknn_shapley;
  ValuationParams params;
  RegressorConfig regressor;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct ActiveRoundRecord {
  std::size_t round = 0;  // 0 = initial labeled pool
  std::size_t labeled = 0;
  std::vector<std::size_t> acquired;  // pool ids, ascending
  double accuracy = 0.0;              // KNN on the labeled pool, on the test set
  std::optional<double> regressor_final_loss;
};

struct ActiveRunReport {
  Strategy strategy = Strategy::shapley_pred;
  std::vector<ActiveRoundRecord> rounds;
};

namespace detail {

// Summed in ascending probability order, independent of category indices.
inline double entropy(const ClassScores& s) {
  std::vector<double> sorted = s.scores;
  std::sort(sorted.begin(), sorted.end());
  double h = 0.0;
  for (double p : sorted) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

inline double neg_margin(const ClassScores& s) {
  double top = 0.0, second = 0.0;
  for (double p : s.scores) {
    if (p > top) {
      second = top;
      top = p;
    } else if (p > second) {
      second = p;
    }
  }
  return -(top - second);
}

}  // namespace detail

// Acquisition scores for `unlabeled` (higher = acquire first). Only the
// features of unlabeled samples are read.
inline std::vector<double> acquisition_scores(Strategy strategy, const Dataset& labeled,
                                              const Dataset& unlabeled, const Dataset& val,
                                              const ActiveConfig& config, Rng& run_rng,
                                              std::uint64_t round_seed,
                                              std::optional<double>* final_loss = nullptr) {
  std::vector<double> scores(unlabeled.size());
  switch (strategy) {
    case Strategy::random:
      for (double& s : scores) s = run_rng.uniform();
      return scores;
    case Strategy::shapley_pred: {
      const auto values = aggregate_over_validation(labeled, val, config.method, config.params,
                                                    {config.threads, false, kDefaultExactCap});
      RegressorConfig rc = config.regressor;
      rc.seed = round_seed;
      const auto reg = train_value_regressor(labeled.feature_matrix(), labeled.dim(),
                                             values.values, rc);
      if (final_loss) *final_loss = reg.final_loss();
      return predict_values(reg, unlabeled.feature_matrix(), unlabeled.dim());
    }
    case Strategy::entropy:
    case Strategy::margin:
    case Strategy::uncertainty:
      parallel_for(unlabeled.size(), config.threads, [&](std::size_t i) {
        const auto p = knn_predict(labeled, config.params.k, unlabeled.features(i),
                                   config.params.metric);
        if (strategy == Strategy::entropy) {
          scores[i] = detail::entropy(p.scores);
        } else if (strategy == Strategy::margin) {
          scores[i] = detail::neg_margin(p.scores);
        } else {
          // Fraction of the K nearest labeled neighbors disagreeing with the
          // plurality label.
          scores[i] = 1.0 - p.scores.scores[p.label];
        }
      });
      return scores;
  }
  return scores;
}

// Simulated annotation loop: each round values the labeled pool, scores the
// unlabeled pool, moves the top `batch_size` by (score desc, id asc) into the
// labeled pool, and records test accuracy. The labeled pool is always kept
// in ascending pool-id order.
inline ActiveRunReport active_learning_run(const Dataset& pool,
                                           std::span<const std::size_t> initial_labeled,
                                           const Dataset& val, const Dataset& test,
                                           const ActiveConfig& config) {
  if (initial_labeled.empty()) throw UsageError("active learning needs a nonempty initial pool");
  if (config.batch_size == 0) throw UsageError("acquisition batch size must be positive");
  std::set<std::size_t> labeled(initial_labeled.begin(), initial_labeled.end());
  if (labeled.size() != initial_labeled.size()) throw UsageError("initial labeled ids repeat");
  if (*labeled.rbegin() >= pool.size()) throw UsageError("initial labeled id out of range");
  const std::size_t unlabeled_count = pool.size() - labeled.size();
  if (config.rounds * config.batch_size > unlabeled_count) {
    throw UsageError("rounds x batch_size = " + std::to_string(config.rounds * config.batch_size) +
                     " exceeds the " + std::to_string(unlabeled_count) + " unlabeled samples");
  }

  ActiveRunReport report;
  report.strategy = config.strategy;
  Rng run_rng(config.seed);

  auto labeled_set = [&] {
    std::vector<std::size_t> ids(labeled.begin(), labeled.end());
    return pool.subset(ids);
  };
  auto record = [&](std::size_t round, std::vector<std::size_t> acquired,
                    std::optional<double> loss) {
    ActiveRoundRecord rec;
    rec.round = round;
    rec.labeled = labeled.size();
    rec.acquired = std::move(acquired);
    rec.accuracy = accuracy(labeled_set(), test, config.params.k, config.params.metric,
                            std::nullopt, config.threads);
    rec.regressor_final_loss = loss;
    report.rounds.push_back(std::move(rec));
  };

  record(0, {}, std::nullopt);
  for (std::size_t round = 1; round <= config.rounds; ++round) {
    std::vector<std::size_t> unlabeled_ids;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!labeled.contains(i)) unlabeled_ids.push_back(i);
    }
    if (unlabeled_ids.size() < config.batch_size) {
      throw DataError("unlabeled pool exhausted in round " + std::to_string(round));
    }
    const Dataset unlabeled = pool.subset(unlabeled_ids);
    std::optional<double> loss;
    const auto scores =
        acquisition_scores(config.strategy, labeled_set(), unlabeled, val, config, run_rng,
                           Rng(config.seed).split(round).engine()(), &loss);
    for (double s : scores) {
      if (!std::isfinite(s)) throw NumericError("non-finite acquisition score");
    }
    std::vector<std::size_t> order(unlabeled_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> acquired;
    for (std::size_t i = 0; i < config.batch_size; ++i) acquired.push_back(unlabeled_ids[order[i]]);
    std::sort(acquired.begin(), acquired.end());
    labeled.insert(acquired.begin(), acquired.end());
    record(round, std::move(acquired), loss);
  }
  return report;
}

}  // namespace shapcal
