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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_util.hpp"
#include "shapcal/dataset.hpp"
#include "shapcal/inflation.hpp"
#include "shapcal/knn.hpp"
#include "shapcal/pipelines.hpp"
#include "shapcal/regressor.hpp"
#include "shapcal/valuation.hpp"
#include "test_util.hpp"

namespace shapcal {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shared by the oracle-equivalence and axiom criteria.
struct OracleInstance {
  Dataset train;
  Sample query;
  std::size_t k;
};

std::vector<OracleInstance> oracle_instances() {
  std::mt19937_64 gen(20260101);
  std::vector<OracleInstance> out;
  constexpr std::size_t kKs[] = {1, 3, 5};
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 4 + static_cast<std::size_t>(i % 9);
    const std::size_t k = kKs[(i / 9) % 3];
    const int classes = 2 + (i / 27) % 2;
    auto inst = testing::random_instance(gen, n, classes);
    out.push_back({std::move(inst.train), std::move(inst.query), k});
  }
  return out;
}

ValuationParams with_k(std::size_t k) {
  ValuationParams p;
  p.k = k;
  return p;
}

Outcome oracle_equivalence() {
  Outcome o;
  double worst = 0.0;
  for (const auto& inst : oracle_instances()) {
    const auto fast = value_single(inst.train, inst.query, Method::knn_shapley, with_k(inst.k));
    const auto brute = exact_shapley(inst.train, inst.query, with_k(inst.k));
    for (std::size_t i = 0; i < fast.values.size(); ++i) {
      worst = std::max(worst, std::abs(fast.values[i] - brute.values[i]));
    }
  }
  o.require(worst <= 1e-9, "max |closed form - brute force| = " + num(worst));
  if (o.pass) o.note("200 instances, max diff " + num(worst));
  return o;
}

Outcome calibrated_structure() {
  Outcome o;
  std::mt19937_64 gen(20260102);
  std::size_t tail_violations = 0, base_violations = 0, t0_violations = 0;
  double offset_dev = 0.0;
  constexpr std::size_t kKs[] = {1, 3, 5};
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = kKs[i % 3];
    const std::size_t lo = std::max<std::size_t>(4, 2 * k);
    const std::size_t n = lo + static_cast<std::size_t>(i / 3) % (13 - lo);
    auto inst = testing::random_instance(gen, n, 2 + i % 2);
    const auto ranking = rank_neighbors(inst.train, inst.query.features);
    const auto& labels = inst.train.labels();
    const int y = inst.query.label;
    const auto plain = knn_shapley(ranking, labels, y, k);
    for (std::size_t t : {std::size_t{0}, std::size_t{1}, n - 2 * k, n - 1}) {
      const auto cal = cknn_shapley(ranking, labels, y, k, t);
      const std::size_t head = n - t;
      for (std::size_t r = head; r < n; ++r) tail_violations += cal.values[ranking.order[r]] != 0.0;
      const std::size_t last = ranking.order[head - 1];
      const double base = (labels[last] == y ? 1.0 : 0.0) / static_cast<double>(head);
      base_violations += std::abs(cal.values[last] - base) > 0.0;
      if (t == 0) {
        t0_violations += std::memcmp(cal.values.data(), plain.values.data(),
                                     n * sizeof(double)) != 0;
      }
      const double offset = cal.values[last] - plain.values[last];
      for (std::size_t r = 0; r < head; ++r) {
        const std::size_t id = ranking.order[r];
        offset_dev = std::max(offset_dev, std::abs(cal.values[id] - plain.values[id] - offset));
      }
    }
  }
  o.require(tail_violations == 0, std::to_string(tail_violations) + " nonzero tail values");
  o.require(base_violations == 0, std::to_string(base_violations) + " base-term mismatches");
  o.require(t0_violations == 0, std::to_string(t0_violations) + " T=0 outputs not bit-identical");
  o.require(offset_dev <= 1e-12, "offset deviation " + num(offset_dev));
  if (o.pass) o.note("200 instances x 4 T values, offset deviation " + num(offset_dev));
  return o;
}

Outcome axioms() {
  Outcome o;
  double efficiency_gap = 0.0;
  std::size_t asymmetric = 0;
  std::mt19937_64 gen(20260103);
  for (const auto& inst : oracle_instances()) {
    const auto v = value_single(inst.train, inst.query, Method::knn_shapley, with_k(inst.k));
    std::vector<std::size_t> all(inst.train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const double total = std::accumulate(v.values.begin(), v.values.end(), 0.0);
    efficiency_gap = std::max(
        efficiency_gap, std::abs(total - utility_knn(all, inst.train, inst.query, inst.k)));

    // Duplicate one training point; the copy must receive the same value.
    const std::size_t src = std::uniform_int_distribution<std::size_t>(
        0, inst.train.size() - 1)(gen);
    auto copy = inst.train.subset(std::vector<std::size_t>{src});
    auto doubled = Dataset::concat(inst.train, copy);
    for (Method m : {Method::knn_shapley, Method::exact}) {
      const auto d = value_single(doubled, inst.query, m, with_k(inst.k));
      asymmetric += d.values[src] != d.values[inst.train.size()] &&
                    (m == Method::knn_shapley ||
                     std::abs(d.values[src] - d.values[inst.train.size()]) > 1e-12);
    }
  }
  o.require(efficiency_gap <= 1e-9, "efficiency gap " + num(efficiency_gap));
  o.require(asymmetric == 0, std::to_string(asymmetric) + " duplicate pairs valued differently");

  std::size_t additivity = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto train = synth_blobs(60 + trial, 3, 3, 1.0, 1.5, 500 + trial);
    auto val = synth_blobs(12, 3, 3, 1.0, 1.5, 900 + trial);
    std::vector<std::size_t> a_ids, b_ids;
    for (std::size_t i = 0; i < val.size(); ++i) (i % 3 ? a_ids : b_ids).push_back(i);
    for (Method m : {Method::knn_shapley, Method::cknn_shapley}) {
      const auto whole = aggregate_over_validation(train, val, m, with_k(5));
      const auto a = aggregate_over_validation(train, val.subset(a_ids), m, with_k(5));
      const auto b = aggregate_over_validation(train, val.subset(b_ids), m, with_k(5));
      for (std::size_t i = 0; i < train.size(); ++i) {
        additivity += whole.values[i] != a.values[i] + b.values[i];
      }
    }
  }
  o.require(additivity == 0, std::to_string(additivity) + " additivity mismatches");
  if (o.pass) o.note("efficiency gap " + num(efficiency_gap) + ", symmetry and additivity exact");
  return o;
}

Outcome worked_examples() {
  Outcome o;
  using testing::line_instance;
  using testing::origin_query;
  auto check = [&](const std::string& name, const std::vector<double>& got,
                   const std::vector<double>& want, const std::vector<double>& oracle) {
    for (std::size_t i = 0; i < want.size(); ++i) {
      o.require(std::abs(got[i] - want[i]) <= 1e-12 && std::abs(got[i] - oracle[i]) <= 1e-12,
                name + " value " + std::to_string(i) + " = " + num(got[i]));
    }
  };
  const auto q = origin_query(1);
  {
    auto train = line_instance({1, 0, 1});
    const auto brute = exact_shapley(train, q, with_k(1)).values;
    check("N=3 exact", brute, {5.0 / 6, -1.0 / 6, 1.0 / 3}, brute);
    check("N=3 knn", value_single(train, q, Method::knn_shapley, with_k(1)).values,
          {5.0 / 6, -1.0 / 6, 1.0 / 3}, brute);
  }
  {
    auto train = line_instance({1, 0, 1, 1, 0});
    const auto brute = exact_shapley(train, q, with_k(1)).values;
    check("N=5 knn", value_single(train, q, Method::knn_shapley, with_k(1)).values,
          {0.75, -0.25, 0.25, 0.25, 0.0}, brute);
  }
  // The calibrated values match brute force on the N - T nearest samples,
  // with zeros for the rest.
  for (const auto& labels : {std::vector<int>{1, 0, 1, 1, 0}, std::vector<int>(5, 1)}) {
    auto train = line_instance(labels);
    auto p = with_k(1);
    p.t = 2;
    const std::vector<std::size_t> head = {0, 1, 2};
    auto brute = exact_shapley(train.subset(head), q, with_k(1)).values;
    brute.push_back(0.0);
    brute.push_back(0.0);
    const std::vector<double> want = labels[1] == 0
                                         ? std::vector<double>{5.0 / 6, -1.0 / 6, 1.0 / 3, 0, 0}
                                         : std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0};
    check(labels[1] == 0 ? "N=5 T=2 cknn" : "N=5 T=2 all-match cknn",
          value_single(train, q, Method::cknn_shapley, p).values, want, brute);
  }
  if (o.pass) o.note("4 vectors match closed forms and brute force");
  return o;
}

Outcome inflation_metrics_criterion() {
  Outcome o;
  // 8 bins of 10 samples; bins 1..3 strictly negative.
  std::vector<double> values;
  for (int b = 0; b < 8; ++b) {
    for (int i = 0; i < 10; ++i) values.push_back(b < 3 ? -4.0 + b + 0.05 * i : b + 0.1 * i);
  }
  const auto seg = segment_bins(values, 8);
  const RemovalCurve crossing{0.8, {0.9, 0.85, 0.7, 0.6, 0.6, 0.7, 0.75, 0.6}};
  const auto r = inflation_metrics(crossing, seg);
  o.require(r.status == InflationStatus::ok && r.j_star == 3u && r.i_star == 3u,
            "calibrated construction: unexpected j*/i*");
  o.require(r.r && *r.r == 0.0, "calibrated construction: r != 0");
  o.require(r.t && *r.t == seg.bin_value[2], "calibrated construction: t != nu_m");

  const RemovalCurve flat{0.8, std::vector<double>(8, 0.85)};
  const auto none = inflation_metrics(flat, seg);
  o.require(none.status == InflationStatus::no_detrimental_boundary && !none.t && !none.r,
            "all-beneficial curve did not report no_detrimental_boundary");

  const auto hand_seg = segment_bins(std::vector<double>{-3, -2, -1, 1, 2, 3, 4, 5}, 8);
  const RemovalCurve hand{0.5, {0.6, 0.6, 0.55, 0.5, 0.4, 0.4, 0.45, 0.4}};
  const auto h = inflation_metrics(hand, hand_seg);
  o.require(h.j_star == 5u && h.i_star == 3u && h.r && std::abs(*h.r - 0.4) <= 1e-15,
            "hand case: expected j*=5, i*=3, r=0.4");
  if (o.pass) o.note("r=0 and t=nu_m, degenerate status, hand case r=0.4");
  return o;
}

struct SeedComparison {
  std::optional<double> r_knn, r_cknn;
  double vanilla = 0, knn = 0, cknn = 0;
};

SeedComparison compare_on_seed(std::uint64_t seed) {
  const auto blobs = testing::noisy_blobs(seed);
  SeedComparison s;
  s.vanilla = accuracy(blobs.train, blobs.val, 10);
  for (Method m : {Method::knn_shapley, Method::cknn_shapley}) {
    const auto v = aggregate_over_validation(blobs.train, blobs.val, m, with_k(10));
    const auto seg = segment_bins(v.values, 20);
    const auto report =
        inflation_metrics(bin_removal_curve(blobs.train, blobs.val, seg, 10), seg);
    const auto kept = apply_removal(blobs.train, v.values, RemovalPolicy::negative()).kept;
    const double acc = accuracy(kept, blobs.val, 10);
    if (m == Method::knn_shapley) {
      s.r_knn = report.r;
      s.knn = acc;
    } else {
      s.r_cknn = report.r;
      s.cknn = acc;
    }
  }
  return s;
}

Outcome calibration_property() {
  Outcome o;
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = compare_on_seed(seed);
    const bool r_ok = s.r_cknn && (!s.r_knn || *s.r_cknn <= *s.r_knn + 0.02);
    const bool ok = r_ok && s.cknn >= s.knn - 0.02 && s.knn >= s.vanilla - 0.02;
    wins += ok;
    per_seed += " seed" + std::to_string(seed) + "[r " +
                (s.r_cknn ? num(*s.r_cknn) : "-") + "/" + (s.r_knn ? num(*s.r_knn) : "-") +
                ", acc " + num(s.cknn) + "/" + num(s.knn) + "/" + num(s.vanilla) +
                (ok ? "]" : " x]");
  }
  o.require(wins >= 3, std::to_string(wins) + "/5 seeds hold");
  o.note(std::to_string(wins) + "/5 seeds; r cknn/knn, acc cknn/knn/vanilla:" + per_seed);
  return o;
}

Outcome mislabel_detection() {
  Outcome o;
  const auto blobs = testing::noisy_blobs(1);
  const auto v = aggregate_over_validation(blobs.train, blobs.val, Method::cknn_shapley, with_k(10));
  const auto a = mislabel_analysis(v.values, blobs.mask);
  o.require(a.recall && *a.recall >= 0.8, "recall " + num(a.recall.value_or(-1)));
  // Pinned from the first seeded run.
  o.require(a.non_positive_clean.size() == 113 && a.non_positive_flipped.size() == 295 &&
                a.positive_flipped.size() == 5,
            "set sizes changed: I=" + std::to_string(a.non_positive_clean.size()) +
                " II=" + std::to_string(a.non_positive_flipped.size()) +
                " III=" + std::to_string(a.positive_flipped.size()));
  o.note("recall " + num(*a.recall) + ", precision " + num(a.precision.value_or(-1)));
  return o;
}

Outcome online_stream() {
  Outcome o;
  const auto blobs = testing::noisy_blobs(1);
  const auto shards = chunk(blobs.train, 10);
  const auto report = online_run(shards, blobs.val, Method::cknn_shapley, with_k(10),
                                 RemovalPolicy::negative());
  o.require(report.batches.size() == 10, "expected 10 batch records");
  std::size_t prev = 0, admitted = 0;
  for (const auto& b : report.batches) {
    o.require(b.candidates == prev + b.arrivals && b.survivors == b.candidates - b.removed,
              "recurrence broken at batch " + std::to_string(b.batch));
    prev = b.survivors;
    admitted += b.arrivals;
  }
  o.require(admitted == blobs.train.size() && report.samples.size() == admitted,
            "admitted total != sum of shard sizes");
  std::size_t alive = 0;
  for (const auto& [origin, life] : report.samples) {
    const std::size_t last = life.trajectory.back().first;
    o.require(life.removed ? last == *life.removed : last == 10,
              "sample " + std::to_string(origin) + " valued after removal");
    alive += !life.removed;
  }
  o.require(alive == report.batches.back().survivors, "survivor count mismatch");
  const auto& last = report.batches.back();
  o.require(last.accuracy >= last.baseline_accuracy - 0.01,
            "final " + num(last.accuracy) + " < baseline " + num(last.baseline_accuracy));
  // Pinned from the first seeded run.
  o.require(last.accuracy == 1.0 && last.baseline_accuracy == 0.85,
            "pinned accuracies changed");
  o.note("final " + num(last.accuracy) + " vs no-removal " + num(last.baseline_accuracy));
  return o;
}

Outcome regressor() {
  Outcome o;
  std::mt19937_64 gen(20260109);
  std::normal_distribution<double> normal;
  auto random_vec = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(gen);
    return v;
  };
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 4, h = 2 + trial % 6, n = 3 + trial % 5;
    auto params = init_mlp(d, h, 700 + trial);
    const auto x = random_vec(n * d);
    const auto y = random_vec(n);
    std::vector<double> grad;
    mse_loss(params, x, y, &grad);
    for (std::size_t i = 0; i < params.theta.size(); ++i) {
      auto plus = params, minus = params;
      plus.theta[i] += kStep;
      minus.theta[i] -= kStep;
      const double numeric = (mse_loss(plus, x, y) - mse_loss(minus, x, y)) / (2 * kStep);
      const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
      worst = std::max(worst, scale > 1e-8 ? std::abs(numeric - grad[i]) / scale : 0.0);
    }
  }
  o.require(worst < 1e-4, "gradient relative error " + num(worst));
  // Constant targets on 10 points, 20 initializations.
  double worst_loss = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto x = random_vec(30);
    RegressorConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 2000;
    const auto reg = train_value_regressor(x, 3, std::vector<double>(10, 0.7), cfg);
    worst_loss = std::max(worst_loss, reg.final_loss());
  }
  o.require(worst_loss < 1e-3, "constant-target loss " + num(worst_loss));
  o.note("gradient error " + num(worst) + ", worst constant-target loss " + num(worst_loss));
  return o;
}

Outcome performance() {
  Outcome o;
  auto make = [](std::size_t n) {
    std::mt19937_64 gen(n);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(n * 2);
    std::vector<int> y(n);
    for (auto& v : f) v = u(gen);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(gen() & 1);
    return Dataset(std::move(f), std::move(y), 2, 2);
  };
  auto median_time = [](const Dataset& train, Method m) {
    const Sample q{0, {0.1, -0.2}, 1};
    std::vector<double> times;
    for (int rep = 0; rep < 7; ++rep) {
      const auto start = Clock::now();
      const auto v = value_single(train, q, m, with_k(10));
      times.push_back(seconds_since(start));
      if (v.values.size() != train.size()) std::abort();
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  const auto small = make(100000), large = make(200000);
  const double k100 = median_time(small, Method::knn_shapley);
  const double k200 = median_time(large, Method::knn_shapley);
  const double c100 = median_time(small, Method::cknn_shapley);
  const double c200 = median_time(large, Method::cknn_shapley);
  const double ratio = k200 / k100;
  o.require(ratio <= 2.6, "200k/100k ratio " + num(ratio));
  o.require(c100 <= k100 && c200 <= k200, "calibrated slower than plain");
  o.note("knn " + num(k100 * 1e3) + "/" + num(k200 * 1e3) + " ms (ratio " + num(ratio) +
         "), cknn " + num(c100 * 1e3) + "/" + num(c200 * 1e3) + " ms");
  return o;
}

Outcome cli_determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const auto dir = testing::temp_dir("acceptance_cli");
  auto p = [&](const std::string& rel) { return (dir / rel).string(); };
  auto run = [&](std::vector<std::string> args) {
    const auto r = testing::run_cli(args);
    if (r.code != 0) {
      std::string joined;
      for (const auto& a : args) joined += a + " ";
      o.require(false, "exit " + std::to_string(r.code) + " for: " + joined + r.err);
    }
  };
  run({"synth", "--n", "900", "--flip", "0.3", "--seed", "13", "--out-dir", p("raw")});
  run({"split", "--input", p("raw/data.csv"), "--seed", "14", "--out-dir", p("data")});
  testing::write_file(dir / "mislabel.json", R"({"seed": 5})");
  testing::write_file(dir / "online.json", R"({"seed": 5, "batches": 10})");
  testing::write_file(dir / "active.json",
                      R"({"seed": 5, "dataset": {"train": 1400}, "rounds": 4,
                          "batch_size": 100, "initial_size": 200,
                          "regressor": {"epochs": 150}})");
  const std::vector<std::string> in = {"--train", p("data/train.csv"), "--val",
                                       p("data/val.csv"), "--test", p("data/test.csv")};
  auto cat = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const std::vector<std::vector<std::string>> commands = {
      cat({"value", "--method", "cknn", "--policy", "negative"}, in),
      cat({"value", "--method", "knn", "--metric", "cosine", "--normalize"}, in),
      cat({"inflation", "--bins", "20"}, in),
      {"scenario", "mislabel", "--config", p("mislabel.json")},
      {"scenario", "online", "--config", p("online.json")},
      {"scenario", "active", "--config", p("active.json")},
      {"synth", "--n", "500", "--classes", "3", "--flip", "0.1", "--seed", "2"},
      {"split", "--input", p("raw/data.csv"), "--seed", "3"},
  };
  std::size_t compared = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto tag = std::to_string(i);
    run(cat(commands[i], {"--threads", "1", "--out-dir", p("t1_" + tag)}));
    run(cat(commands[i], {"--threads", "8", "--out-dir", p("t8_" + tag)}));
    run(cat(commands[i], {"--threads", "1", "--out-dir", p("again_" + tag)}));
    if (!o.pass) break;
    const auto a = testing::dir_contents(p("t1_" + tag));
    o.require(!a.empty(), "no files for command " + commands[i][0]);
    o.require(a == testing::dir_contents(p("t8_" + tag)),
              commands[i][0] + ": --threads 1 and 8 differ");
    o.require(a == testing::dir_contents(p("again_" + tag)), commands[i][0] + ": rerun differs");
    compared += a.size();
  }
  if (o.pass) {
    o.note(std::to_string(commands.size()) + " commands, " + std::to_string(compared) +
           " files byte-identical");
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace shapcal

int main() {
  using namespace shapcal;
  const std::vector<Criterion> criteria = {
      {1, "oracle-equivalence", 10, oracle_equivalence},
      {2, "calibrated-structure", 5, calibrated_structure},
      {3, "axioms", 5, axioms},
      {4, "worked-examples", 0, worked_examples},
      {5, "inflation-metrics", 0, inflation_metrics_criterion},
      {6, "calibration-property", 60, calibration_property},
      {7, "mislabel-detection", 0, mislabel_detection},
      {8, "online-stream", 60, online_stream},
      {9, "regressor", 0, regressor},
      {10, "performance", 0, performance},
      {11, "cli-determinism", 0, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(start);
    if (c.budget_seconds > 0 && elapsed > c.budget_seconds) {
      o.require(false, "took " + num(elapsed) + " s, budget " + num(c.budget_seconds) + " s");
    }
    failures += !o.pass;
    std::printf("%s  %2d %-22s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, elapsed,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
