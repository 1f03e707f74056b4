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
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shapcal/dataset.hpp"
#include "shapcal/errors.hpp"
#include "shapcal/knn.hpp"
#include "shapcal/pipelines.hpp"
#include "shapcal/report.hpp"
#include "shapcal/rng.hpp"
#include "shapcal/valuation.hpp"

namespace shapcal {

// Every schema violation in a config document, one per line.
class ConfigError : public UsageError {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : UsageError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid config (" + std::to_string(p.size()) + " problem" +
                    (p.size() == 1 ? "" : "s") + ")";
    for (const auto& line : p) s += "\n  " + line;
    return s;
  }
  std::vector<std::string> problems_;
};

// Files produced by one command, in write order, plus a stdout summary.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
};

// ---------------------------------------------------------------------------
// Input loading

struct LoadedData {
  Dataset train;
  Dataset val;
  std::optional<Dataset> test;
  std::vector<std::string> label_names;
};

// Loads train/val/test through one label map so category indices agree.
// With `normalize`, z-scores every split with training statistics.
inline LoadedData load_inputs(const std::string& train_path, const std::string& val_path,
                              const std::optional<std::string>& test_path,
                              const std::string& label, bool header, bool normalize) {
  LabelMap labels;
  Dataset train = load_csv(train_path, label, header, &labels);
  Dataset val = load_csv(val_path, label, header, &labels);
  std::optional<Dataset> test;
  if (test_path) test = load_csv(*test_path, label, header, &labels);
  const int c = static_cast<int>(labels.size());
  train = train.with_num_classes(c);
  val = val.with_num_classes(c);
  if (test) test = test->with_num_classes(c);
  for (const auto* ds : {&val, test ? &*test : nullptr}) {
    if (ds && ds->dim() != train.dim()) {
      throw DataError("feature count " + std::to_string(ds->dim()) +
                      " does not match the training file's " + std::to_string(train.dim()));
    }
  }
  if (normalize) {
    const auto z = Standardizer::fit(train);
    train = z.apply(train);
    val = z.apply(val);
    if (test) test = z.apply(*test);
  }
  return {std::move(train), std::move(val), std::move(test), labels.names()};
}

// ---------------------------------------------------------------------------
// Scenario configuration

enum class ScenarioKind { mislabel, online, active };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::mislabel: return "mislabel";
    case ScenarioKind::online: return "online";
    case ScenarioKind::active: return "active";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
  for (auto k : {ScenarioKind::mislabel, ScenarioKind::online, ScenarioKind::active}) {
    if (s == to_string(k)) return k;
  }
  throw UsageError("unknown scenario '" + std::string(s) + "'");
}

struct DataSourceConfig {
  bool synthetic = true;
  // synth
  std::size_t train_size = 1000;
  std::size_t val_size = 100;
  std::size_t test_size = 200;
  std::size_t dim = 2;
  int classes = 2;
  double separation = 4.0;
  double stddev = 1.0;
  // csv
  std::string train_path;
  std::string val_path;
  std::optional<std::string> test_path;
  std::string label = "label";
  bool header = true;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::mislabel;
  std::uint64_t seed = 0;
  DataSourceConfig dataset;
  bool normalize = false;
  Method method = Method::cknn_shapley;
  ValuationParams params;
  std::size_t exact_cap = kDefaultExactCap;
  RemovalPolicy policy;
  double flip_ratio = 0.3;
  std::size_t batches = 10;
  Strategy strategy = Strategy::shapley_pred;
  std::size_t rounds = 8;
  std::size_t batch_size = 200;
  std::size_t initial_size = 400;
  RegressorConfig regressor;
};

namespace detail {

inline std::string describe(const Json& v) {
  auto s = v.dump();
  return s.size() > 40 ? s.substr(0, 37) + "..." : s;
}

// Reads fields of one JSON object, recording problems instead of throwing,
// and reports fields it was never asked about.
class FieldReader {
 public:
  FieldReader(const Json& obj, std::string prefix, std::vector<std::string>& problems)
      : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {}

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class F>
  void visit(const std::string& key, F&& parse) {
    known_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    if (auto err = parse(*it)) problems_.push_back(where(key) + ": " + *err);
  }

  void count(const std::string& key, std::size_t& out, std::size_t min = 0) {
    visit(key, [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        return "expected a non-negative integer, got " + describe(v);
      }
      const auto n = v.get<std::uint64_t>();
      if (n < min) return "must be >= " + std::to_string(min) + ", got " + std::to_string(n);
      out = static_cast<std::size_t>(n);
      return std::nullopt;
    });
  }

  void seed(const std::string& key, std::optional<std::uint64_t>& out) {
    visit(key, [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        return "expected a non-negative integer, got " + describe(v);
      }
      out = v.get<std::uint64_t>();
      return std::nullopt;
    });
  }

  void real(const std::string& key, double& out, double lo, double hi, bool lo_open,
            bool hi_open) {
    visit(key, [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_number()) return "expected a number, got " + describe(v);
      const double x = v.get<double>();
      const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
      if (!ok) {
        return "must lie in " + std::string(lo_open ? "(" : "[") + format_double(lo) + ", " +
               format_double(hi) + (hi_open ? ")" : "]") + ", got " + format_double(x);
      }
      out = x;
      return std::nullopt;
    });
  }

  void flag(const std::string& key, bool& out) {
    visit(key, [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_boolean()) return "expected true or false, got " + describe(v);
      out = v.get<bool>();
      return std::nullopt;
    });
  }

  void text(const std::string& key, std::string& out) {
    visit(key, [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_string() || v.get<std::string>().empty()) {
        return "expected a nonempty string, got " + describe(v);
      }
      out = v.get<std::string>();
      return std::nullopt;
    });
  }

  // String field parsed by `parse`, which throws UsageError on bad input.
  template <class T, class P>
  void choice(const std::string& key, T& out, P&& parse) {
    visit(key, [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_string()) return "expected a string, got " + describe(v);
      try {
        out = parse(v.get<std::string>());
      } catch (const UsageError& e) {
        return std::string(e.what());
      }
      return std::nullopt;
    });
  }

  void finish() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!known_.contains(it.key())) problems_.push_back(where(it.key()) + ": unknown field");
    }
  }

  std::string where(const std::string& key) const { return prefix_ + key; }

 private:
  const Json& obj_;
  std::string prefix_;
  std::vector<std::string>& problems_;
  std::set<std::string> known_;
};

}  // namespace detail

// Validates a scenario document and fills defaults. All problems are
// collected before throwing ConfigError. A missing seed falls back to
// `default_seed`.
inline ScenarioConfig parse_scenario_config(const Json& doc, ScenarioKind kind,
                                            std::uint64_t default_seed) {
  std::vector<std::string> problems;
  if (!doc.is_object()) throw ConfigError({"config: expected a JSON object"});
  ScenarioConfig c;
  c.kind = kind;
  if (kind == ScenarioKind::active) c.dataset.train_size = 3000;

  detail::FieldReader top(doc, "", problems);
  top.visit("scenario", [&](const Json& v) -> std::optional<std::string> {
    if (!v.is_string() || v.get<std::string>() != to_string(kind)) {
      return "expected \"" + std::string(to_string(kind)) + "\", got " + detail::describe(v);
    }
    return std::nullopt;
  });
  std::optional<std::uint64_t> seed;
  top.seed("seed", seed);
  c.seed = seed.value_or(default_seed);

  top.visit("dataset", [&](const Json& v) -> std::optional<std::string> {
    if (!v.is_object()) return "expected an object, got " + detail::describe(v);
    detail::FieldReader ds(v, "dataset.", problems);
    std::string source = "synth";
    ds.text("source", source);
    auto& d = c.dataset;
    if (source == "synth") {
      ds.count("train", d.train_size, 1);
      ds.count("val", d.val_size, 1);
      ds.count("test", d.test_size, 1);
      ds.count("dim", d.dim, 1);
      std::size_t classes = static_cast<std::size_t>(d.classes);
      ds.count("classes", classes, 2);
      d.classes = static_cast<int>(std::min<std::size_t>(classes, 1u << 20));
      ds.real("separation", d.separation, 0.0, 1e300, false, false);
      ds.real("std", d.stddev, 0.0, 1e300, true, false);
    } else if (source == "csv") {
      d.synthetic = false;
      for (const char* key : {"train", "val"}) {
        if (!ds.has(key)) problems.push_back(ds.where(key) + ": required for csv sources");
      }
      ds.text("train", d.train_path);
      ds.text("val", d.val_path);
      std::string test;
      ds.text("test", test);
      if (!test.empty()) d.test_path = test;
      ds.text("label", d.label);
      ds.flag("header", d.header);
    } else {
      problems.push_back("dataset.source: expected \"synth\" or \"csv\", got \"" + source + "\"");
    }
    ds.finish();
    return std::nullopt;
  });

  top.flag("normalize", c.normalize);
  top.choice("method", c.method, [](const std::string& s) { return parse_method(s); });
  top.count("k", c.params.k, 1);
  std::size_t t = 0;
  bool has_t = false;
  top.visit("t", [&](const Json& v) -> std::optional<std::string> {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      return "expected a non-negative integer or null, got " + detail::describe(v);
    }
    t = v.get<std::uint64_t>();
    has_t = true;
    return std::nullopt;
  });
  if (has_t) c.params.t = t;
  top.choice("metric", c.params.metric, [](const std::string& s) { return parse_metric(s); });
  top.count("exact_cap", c.exact_cap, 1);

  if (kind != ScenarioKind::active) {
    std::string policy = "negative";
    top.text("policy", policy);
    if (policy == "negative") {
      c.policy = RemovalPolicy::negative(true);
      top.flag("strict", c.policy.strict);
      if (top.has("q")) problems.push_back("q: only valid with policy \"bottom\"");
      top.visit("q", [](const Json&) { return std::optional<std::string>(); });
    } else if (policy == "bottom") {
      c.policy = RemovalPolicy::bottom(0.1);
      top.real("q", c.policy.q, 0.0, 1.0, true, true);
      if (!top.has("q")) problems.push_back("q: required with policy \"bottom\"");
      if (top.has("strict")) problems.push_back("strict: only valid with policy \"negative\"");
      top.visit("strict", [](const Json&) { return std::optional<std::string>(); });
    } else {
      problems.push_back("policy: expected \"negative\" or \"bottom\", got \"" + policy + "\"");
      top.visit("q", [](const Json&) { return std::optional<std::string>(); });
      top.visit("strict", [](const Json&) { return std::optional<std::string>(); });
    }
    top.real("flip_ratio", c.flip_ratio, 0.0, 1.0, false, false);
  }
  if (kind == ScenarioKind::online) top.count("batches", c.batches, 1);
  if (kind == ScenarioKind::active) {
    top.choice("strategy", c.strategy, [](const std::string& s) { return parse_strategy(s); });
    top.count("rounds", c.rounds, 1);
    top.count("batch_size", c.batch_size, 1);
    top.count("initial_size", c.initial_size, 1);
    top.visit("regressor", [&](const Json& v) -> std::optional<std::string> {
      if (!v.is_object()) return "expected an object, got " + detail::describe(v);
      detail::FieldReader reg(v, "regressor.", problems);
      reg.count("hidden", c.regressor.hidden, 1);
      reg.real("learning_rate", c.regressor.learning_rate, 0.0, 1e300, true, false);
      reg.count("epochs", c.regressor.epochs, 0);
      reg.flag("standardize", c.regressor.standardize);
      reg.finish();
      return std::nullopt;
    });
  }
  top.finish();

  const auto& d = c.dataset;
  if (d.synthetic) {
    if (c.params.t && *c.params.t >= d.train_size) {
      problems.push_back("t: must be < the training size " + std::to_string(d.train_size));
    }
    if (kind == ScenarioKind::online && c.batches > d.train_size) {
      problems.push_back("batches: " + std::to_string(c.batches) + " exceeds the " +
                         std::to_string(d.train_size) + " training samples");
    }
    if (kind == ScenarioKind::active) {
      if (c.initial_size >= d.train_size) {
        problems.push_back("initial_size: must be < the pool size " +
                           std::to_string(d.train_size));
      } else if (c.rounds * c.batch_size > d.train_size - c.initial_size) {
        problems.push_back("rounds x batch_size: " + std::to_string(c.rounds * c.batch_size) +
                           " exceeds the " + std::to_string(d.train_size - c.initial_size) +
                           " unlabeled samples");
      }
    }
  } else if (kind == ScenarioKind::active && !d.test_path) {
    problems.push_back("dataset.test: required by the active scenario");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

// The fully resolved document; parsing it again yields the same config.
inline Json to_json(const ScenarioConfig& c) {
  Json j;
  j["scenario"] = to_string(c.kind);
  j["seed"] = c.seed;
  const auto& d = c.dataset;
  if (d.synthetic) {
    j["dataset"] = {{"source", "synth"}, {"train", d.train_size}, {"val", d.val_size},
                    {"test", d.test_size}, {"dim", d.dim},        {"classes", d.classes},
                    {"separation", d.separation}, {"std", d.stddev}};
  } else {
    j["dataset"] = {{"source", "csv"},           {"train", d.train_path},
                    {"val", d.val_path},         {"test", optional_json(d.test_path)},
                    {"label", d.label},          {"header", d.header}};
  }
  j["normalize"] = c.normalize;
  j["method"] = short_name(c.method);
  j["k"] = c.params.k;
  j["t"] = optional_json(c.params.t);
  j["metric"] = to_string(c.params.metric);
  j["exact_cap"] = c.exact_cap;
  if (c.kind != ScenarioKind::active) {
    j["policy"] = to_string(c.policy.kind);
    if (c.policy.kind == RemovalPolicy::Kind::bottom_fraction) {
      j["q"] = c.policy.q;
    } else {
      j["strict"] = c.policy.strict;
    }
    j["flip_ratio"] = c.flip_ratio;
  }
  if (c.kind == ScenarioKind::online) j["batches"] = c.batches;
  if (c.kind == ScenarioKind::active) {
    j["strategy"] = to_string(c.strategy);
    j["rounds"] = c.rounds;
    j["batch_size"] = c.batch_size;
    j["initial_size"] = c.initial_size;
    j["regressor"] = {{"hidden", c.regressor.hidden},
                      {"learning_rate", c.regressor.learning_rate},
                      {"epochs", c.regressor.epochs},
                      {"standardize", c.regressor.standardize}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

// Independent sub-seeds of the scenario seed.
enum SeedStream : std::uint64_t {
  kTrainStream = 1,
  kValStream,
  kTestStream,
  kFlipStream,
  kInitialStream,
  kActiveStream
};

inline std::uint64_t sub_seed(std::uint64_t seed, SeedStream s) {
  return Rng(seed).split(s).engine()();
}

inline LoadedData scenario_data(const ScenarioConfig& c) {
  const auto& d = c.dataset;
  if (!d.synthetic) {
    return load_inputs(d.train_path, d.val_path, d.test_path, d.label, d.header, c.normalize);
  }
  auto blobs = [&](std::size_t n, SeedStream s) {
    return synth_blobs(n, d.dim, d.classes, d.separation, d.stddev, sub_seed(c.seed, s));
  };
  LoadedData data{blobs(d.train_size, kTrainStream), blobs(d.val_size, kValStream),
                  blobs(d.test_size, kTestStream), {}};
  for (int k = 0; k < d.classes; ++k) data.label_names.push_back(std::to_string(k));
  if (c.normalize) {
    const auto z = Standardizer::fit(data.train);
    data.train = z.apply(data.train);
    data.val = z.apply(data.val);
    data.test = z.apply(*data.test);
  }
  return data;
}

inline Json eval_accuracies(const Dataset& kept, const Dataset& full,
                            std::span<const double> values, const LoadedData& data,
                            const ValuationParams& p, std::size_t threads) {
  Json j;
  auto one = [&](const Dataset& eval) {
    return Json{{"vanilla", accuracy(full, eval, p.k, p.metric, std::nullopt, threads)},
                {"after_removal", accuracy(kept, eval, p.k, p.metric, std::nullopt, threads)},
                {"weighted", accuracy(full, eval, p.k, p.metric, values, threads)}};
  };
  j["val"] = one(data.val);
  if (data.test) j["test"] = one(*data.test);
  return j;
}

inline Artifacts run_mislabel(const ScenarioConfig& c, const LoadedData& data,
                              std::size_t threads) {
  auto [train, mask] = flip_labels(data.train, c.flip_ratio, sub_seed(c.seed, kFlipStream));
  const auto values = aggregate_over_validation(train, data.val, c.method, c.params,
                                                {threads, false, c.exact_cap});
  check_finite(values.values, "value of training sample");
  const auto analysis = mislabel_analysis(values.values, mask);
  const auto removal = apply_removal(train, values.values, c.policy);

  Json result;
  result["valuation"] = to_json(values);
  result["valuation"].erase("values");
  result["summary"] = to_json(summarize(values.values));
  result["flipped"] = mask.count();
  result["analysis"] = to_json(analysis);
  result["removal"] = {{"policy", to_json(c.policy)}, {"removed", removal.removed.size()}};
  result["accuracy"] = eval_accuracies(removal.kept, train, values.values, data, c.params, threads);

  std::vector<char> in_set(train.size(), '-');
  for (auto id : analysis.non_positive_clean) in_set[id] = '1';
  for (auto id : analysis.non_positive_flipped) in_set[id] = '2';
  for (auto id : analysis.positive_flipped) in_set[id] = '3';
  CsvTable t({"train_id", "value", "label", "flipped", "original_label", "set"});
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto orig = mask.original_labels[i];
    const std::string set = in_set[i] == '-'   ? ""
                            : in_set[i] == '1' ? "I"
                            : in_set[i] == '2' ? "II"
                                               : "III";
    t.row(i, values.values[i], data.label_names[train.label(i)], bool(mask.flipped[i]),
          orig ? data.label_names[*orig] : std::string(), set);
  }

  Artifacts a;
  a.files.emplace_back("mislabel.json", render(make_report("scenario", to_json(c), result)));
  a.files.emplace_back("mislabel.csv", t.str());
  const auto& an = analysis;
  a.summary = "flipped " + std::to_string(mask.count()) + ": set I " +
              std::to_string(an.non_positive_clean.size()) + ", set II " +
              std::to_string(an.non_positive_flipped.size()) + ", set III " +
              std::to_string(an.positive_flipped.size()) + ", recall " +
              (an.recall ? format_double(*an.recall) : "n/a") + ", precision " +
              (an.precision ? format_double(*an.precision) : "n/a") + "\n";
  return a;
}

inline Artifacts run_online(const ScenarioConfig& c, const LoadedData& data,
                            std::size_t threads) {
  auto [train, mask] = flip_labels(data.train, c.flip_ratio, sub_seed(c.seed, kFlipStream));
  if (c.batches > train.size()) {
    throw UsageError("batches: " + std::to_string(c.batches) + " exceeds the " +
                     std::to_string(train.size()) + " training samples");
  }
  const auto shards = chunk(train, c.batches);
  const auto report =
      online_run(shards, data.val, c.method, c.params, c.policy, {threads, c.exact_cap});
  Json result = to_json(report);
  result["flipped"] = mask.count();

  Artifacts a;
  a.files.emplace_back("online.json", render(make_report("scenario", to_json(c), result)));
  a.files.emplace_back("online.csv", online_batches_csv(report));
  a.files.emplace_back("online_lifecycle.csv", online_lifecycle_csv(report));
  a.files.emplace_back("online_trajectories.csv", online_trajectories_csv(report));
  const auto& last = report.batches.back();
  a.summary = std::to_string(report.batches.size()) + " batches, " +
              std::to_string(last.survivors) + " survivors, final accuracy " +
              format_double(last.accuracy) + " (no removal " +
              format_double(last.baseline_accuracy) + ")\n";
  return a;
}

inline Artifacts run_active(const ScenarioConfig& c, const LoadedData& data,
                            std::size_t threads) {
  if (!data.test) throw UsageError("the active scenario needs a test set");
  const std::size_t n = data.train.size();
  if (c.initial_size >= n) {
    throw UsageError("initial_size " + std::to_string(c.initial_size) +
                     " must be < the pool size " + std::to_string(n));
  }
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::shuffle(ids.begin(), ids.end(), Rng(sub_seed(c.seed, kInitialStream)).engine());
  ids.resize(c.initial_size);
  std::sort(ids.begin(), ids.end());

  ActiveConfig ac;
  ac.strategy = c.strategy;
  ac.rounds = c.rounds;
  ac.batch_size = c.batch_size;
  ac.method = c.method;
  ac.params = c.params;
  ac.regressor = c.regressor;
  ac.seed = sub_seed(c.seed, kActiveStream);
  ac.threads = threads;
  const auto report = active_learning_run(data.train, ids, data.val, *data.test, ac);
  Json result = to_json(report);
  result["initial_labeled"] = ids;

  Artifacts a;
  a.files.emplace_back("active.json", render(make_report("scenario", to_json(c), result)));
  a.files.emplace_back("active.csv", active_rounds_csv(report));
  a.summary = std::string(to_string(c.strategy)) + ": " + std::to_string(report.rounds.size()) +
              " accuracy rows, final " + format_double(report.rounds.back().accuracy) + "\n";
  return a;
}

}  // namespace detail

inline Artifacts run_scenario(const ScenarioConfig& c, std::size_t threads) {
  const auto data = detail::scenario_data(c);
  switch (c.kind) {
    case ScenarioKind::mislabel: return detail::run_mislabel(c, data, threads);
    case ScenarioKind::online: return detail::run_online(c, data, threads);
    case ScenarioKind::active: return detail::run_active(c, data, threads);
  }
  throw UsageError("unknown scenario");
}

}  // namespace shapcal
