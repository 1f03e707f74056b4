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
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shapcal/dataset.hpp"
#include "shapcal/errors.hpp"
#include "shapcal/inflation.hpp"
#include "shapcal/pipelines.hpp"
#include "shapcal/report.hpp"
#include "shapcal/scenario.hpp"
#include "shapcal/valuation.hpp"

namespace shapcal::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumeric = 4 };

inline constexpr const char* kSeedEnv = "SHAPCAL_SEED";

// Seed used when neither a flag nor a config supplies one.
inline std::uint64_t env_seed() {
  const char* raw = std::getenv(kSeedEnv);
  if (!raw || !*raw) return 0;
  std::uint64_t v = 0;
  const std::string_view s(raw);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError(std::string(kSeedEnv) + " must be a non-negative integer, got '" + raw + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Command configurations. Each round-trips through JSON so a report can be
// replayed from its embedded config alone.

struct InputConfig {
  std::string train;
  std::string val;
  std::optional<std::string> test;
  std::string label = "label";
  bool header = true;
  bool normalize = false;
};

struct ValuationConfig {
  Method method = Method::cknn_shapley;
  ValuationParams params;
  bool mean_normalize = false;
  std::size_t exact_cap = kDefaultExactCap;
};

struct ValueConfig {
  InputConfig input;
  ValuationConfig valuation;
  std::optional<RemovalPolicy> policy;
  std::uint64_t seed = 0;
};

struct InflationConfig {
  InputConfig input;
  ValuationConfig valuation;
  std::size_t bins = kDefaultBins;
  std::string eval = "val";
  std::optional<std::string> values;
  std::uint64_t seed = 0;
};

struct SynthConfig {
  std::size_t n = 1000;
  std::size_t dim = 2;
  std::size_t classes = 2;
  double separation = 4.0;
  double stddev = 1.0;
  double flip = 0.0;
  std::uint64_t seed = 0;
};

struct SplitConfig {
  std::string input;
  std::string label = "label";
  bool header = true;
  std::array<double, 3> fractions{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
};

inline void put(Json& j, const InputConfig& c) {
  j["train"] = c.train;
  j["val"] = c.val;
  j["test"] = optional_json(c.test);
  j["label"] = c.label;
  j["header"] = c.header;
  j["normalize"] = c.normalize;
}

inline void put(Json& j, const ValuationConfig& c) {
  j["method"] = short_name(c.method);
  j["k"] = c.params.k;
  j["t"] = optional_json(c.params.t);
  j["metric"] = to_string(c.params.metric);
  j["mean_normalize"] = c.mean_normalize;
  j["exact_cap"] = c.exact_cap;
}

inline Json to_json(const ValueConfig& c) {
  Json j;
  put(j, c.input);
  put(j, c.valuation);
  j["policy"] = c.policy ? shapcal::to_json(*c.policy) : Json(nullptr);
  j["seed"] = c.seed;
  return j;
}

inline Json to_json(const InflationConfig& c) {
  Json j;
  put(j, c.input);
  put(j, c.valuation);
  j["bins"] = c.bins;
  j["eval"] = c.eval;
  j["values"] = optional_json(c.values);
  j["seed"] = c.seed;
  return j;
}

inline Json to_json(const SynthConfig& c) {
  return {{"n", c.n},         {"dim", c.dim},   {"classes", c.classes},
          {"separation", c.separation}, {"std", c.stddev}, {"flip", c.flip},
          {"seed", c.seed}};
}

inline Json to_json(const SplitConfig& c) {
  return {{"input", c.input},
          {"label", c.label},
          {"header", c.header},
          {"fractions", c.fractions},
          {"seed", c.seed}};
}

namespace detail {

using shapcal::detail::FieldReader;

inline void get(FieldReader& r, InputConfig& c) {
  r.text("train", c.train);
  r.text("val", c.val);
  std::string test;
  r.text("test", test);
  if (!test.empty()) c.test = test;
  r.text("label", c.label);
  r.flag("header", c.header);
  r.flag("normalize", c.normalize);
}

inline void get(FieldReader& r, ValuationConfig& c) {
  r.choice("method", c.method, [](const std::string& s) { return parse_method(s); });
  r.count("k", c.params.k, 1);
  std::optional<std::uint64_t> t;
  r.seed("t", t);
  if (t) c.params.t = static_cast<std::size_t>(*t);
  r.choice("metric", c.params.metric, [](const std::string& s) { return parse_metric(s); });
  r.flag("mean_normalize", c.mean_normalize);
  r.count("exact_cap", c.exact_cap, 1);
}

inline std::uint64_t get_seed(FieldReader& r) {
  std::optional<std::uint64_t> seed;
  r.seed("seed", seed);
  return seed.value_or(0);
}

template <class F>
void read_config(const Json& j, F&& body) {
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  std::vector<std::string> problems;
  FieldReader r(j, "", problems);
  body(r, problems);
  r.finish();
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

}  // namespace detail

inline ValueConfig value_config_from_json(const Json& j) {
  ValueConfig c;
  detail::read_config(j, [&](detail::FieldReader& r, std::vector<std::string>& problems) {
    detail::get(r, c.input);
    detail::get(r, c.valuation);
    r.visit("policy", [&](const Json& p) -> std::optional<std::string> {
      if (!p.is_object()) return "expected an object or null";
      detail::FieldReader pr(p, "policy.", problems);
      std::string kind;
      pr.text("kind", kind);
      if (kind == "negative") {
        c.policy = RemovalPolicy::negative(true);
        pr.flag("strict", c.policy->strict);
      } else if (kind == "bottom") {
        c.policy = RemovalPolicy::bottom(0.1);
        pr.real("q", c.policy->q, 0.0, 1.0, true, true);
      } else {
        problems.push_back("policy.kind: expected \"negative\" or \"bottom\"");
      }
      pr.finish();
      return std::nullopt;
    });
    c.seed = detail::get_seed(r);
  });
  return c;
}

inline InflationConfig inflation_config_from_json(const Json& j) {
  InflationConfig c;
  detail::read_config(j, [&](detail::FieldReader& r, std::vector<std::string>&) {
    detail::get(r, c.input);
    detail::get(r, c.valuation);
    r.count("bins", c.bins, 1);
    r.choice("eval", c.eval, [](const std::string& s) {
      if (s != "val" && s != "test") throw UsageError("expected \"val\" or \"test\"");
      return s;
    });
    std::string values;
    r.text("values", values);
    if (!values.empty()) c.values = values;
    c.seed = detail::get_seed(r);
  });
  return c;
}

inline SynthConfig synth_config_from_json(const Json& j) {
  SynthConfig c;
  detail::read_config(j, [&](detail::FieldReader& r, std::vector<std::string>&) {
    r.count("n", c.n, 1);
    r.count("dim", c.dim, 1);
    r.count("classes", c.classes, 1);
    r.real("separation", c.separation, 0.0, 1e300, false, false);
    r.real("std", c.stddev, 0.0, 1e300, true, false);
    r.real("flip", c.flip, 0.0, 1.0, false, false);
    c.seed = detail::get_seed(r);
  });
  return c;
}

inline SplitConfig split_config_from_json(const Json& j) {
  SplitConfig c;
  detail::read_config(j, [&](detail::FieldReader& r, std::vector<std::string>&) {
    r.text("input", c.input);
    r.text("label", c.label);
    r.flag("header", c.header);
    r.visit("fractions", [&](const Json& f) -> std::optional<std::string> {
      if (!f.is_array() || f.size() != 3) return "expected three numbers";
      for (std::size_t i = 0; i < 3; ++i) {
        if (!f[i].is_number()) return "expected three numbers";
        c.fractions[i] = f[i].get<double>();
      }
      return std::nullopt;
    });
    c.seed = detail::get_seed(r);
  });
  return c;
}

// ---------------------------------------------------------------------------
// Command bodies

inline LoadedData load(const InputConfig& c) {
  return load_inputs(c.train, c.val, c.test, c.label, c.header, c.normalize);
}

inline ValuationVector compute_values(const Dataset& train, const Dataset& val,
                                      const ValuationConfig& c, std::size_t threads) {
  auto v = aggregate_over_validation(train, val, c.method, c.params,
                                     {threads, c.mean_normalize, c.exact_cap});
  check_finite(v.values, "value of training sample");
  return v;
}

inline std::string summary_line(const ValueSummary& s) {
  return "n=" + std::to_string(s.count) + " min=" + format_double(s.min) +
         " max=" + format_double(s.max) + " mean=" + format_double(s.mean) +
         " non_positive=" + std::to_string(s.non_positive) + "\n";
}

inline Artifacts run_value(const ValueConfig& c, std::size_t threads) {
  const auto data = load(c.input);
  const auto values = compute_values(data.train, data.val, c.valuation, threads);
  const auto summary = summarize(values.values);

  Json result;
  result["valuation"] = to_json(values);
  result["summary"] = to_json(summary);
  result["label_names"] = data.label_names;
  std::string removal_line;
  if (c.policy) {
    const auto removal = apply_removal(data.train, values.values, *c.policy);
    result["removal"] = {
        {"policy", shapcal::to_json(*c.policy)},
        {"removed", removal.removed},
        {"accuracy", shapcal::detail::eval_accuracies(removal.kept, data.train, values.values,
                                                      data, c.valuation.params, threads)}};
    removal_line = "removed " + std::to_string(removal.removed.size()) + " samples\n";
  }
  Artifacts a;
  a.files.emplace_back("values.json", render(make_report("value", to_json(c), result)));
  a.files.emplace_back("values.csv", values_csv(values.values));
  a.summary = summary_line(summary) + removal_line;
  return a;
}

inline Artifacts run_inflation(const InflationConfig& c, std::size_t threads) {
  const auto data = load(c.input);
  if (c.eval == "test" && !data.test) throw UsageError("--eval test needs --test");
  std::vector<double> values;
  Json valuation;
  if (c.values) {
    values = read_values_csv(*c.values);
    if (values.size() != data.train.size()) {
      throw DataError(*c.values + ": " + std::to_string(values.size()) + " values for " +
                      std::to_string(data.train.size()) + " training samples");
    }
    check_finite(values, "value of training sample");
    valuation = {{"source", *c.values}};
  } else {
    auto v = compute_values(data.train, data.val, c.valuation, threads);
    values = std::move(v.values);
    valuation = to_json(v);
    valuation.erase("values");
    valuation["source"] = "computed";
  }
  const Dataset& eval = c.eval == "test" ? *data.test : data.val;
  const auto seg = segment_bins(values, c.bins);
  const auto curve = bin_removal_curve(data.train, eval, seg, c.valuation.params.k,
                                       c.valuation.params.metric, threads);
  const auto report = inflation_metrics(curve, seg);

  Json result;
  result["valuation"] = std::move(valuation);
  result["summary"] = to_json(summarize(values));
  result["eval_set"] = c.eval;
  result["p0"] = curve.p0;
  result["inflation"] = to_json(report);
  Json bins = Json::array();
  for (std::size_t b = 0; b < seg.num_bins; ++b) {
    bins.push_back({{"bin", b + 1},
                    {"size", seg.members(b).size()},
                    {"nu", seg.bin_value[b]},
                    {"p", curve.p[b]}});
  }
  result["curve"] = std::move(bins);

  Artifacts a;
  a.files.emplace_back("inflation.json", render(make_report("inflation", to_json(c), result)));
  a.files.emplace_back("curve.csv", curve_csv(curve, seg));
  if (!c.values) a.files.emplace_back("values.csv", values_csv(values));
  a.summary = "status=" + std::string(to_string(report.status)) +
              " t=" + (report.t ? format_double(*report.t) : "absent") +
              " r=" + (report.r ? format_double(*report.r) : "absent") +
              " j*=" + (report.j_star ? std::to_string(*report.j_star) : "absent") +
              " i*=" + (report.i_star ? std::to_string(*report.i_star) : "absent") +
              " p0=" + format_double(curve.p0) + "\n";
  return a;
}

inline Artifacts run_synth(const SynthConfig& c) {
  if (c.classes > 1u << 20) throw UsageError("too many classes");
  const int classes = static_cast<int>(c.classes);
  auto ds = synth_blobs(c.n, c.dim, classes, c.separation, c.stddev, c.seed);
  Json result;
  Artifacts a;
  std::string flips;
  if (c.flip > 0.0) {
    auto [noisy, mask] = flip_labels(ds, c.flip, Rng(c.seed).split(1).engine()());
    ds = std::move(noisy);
    CsvTable t({"id", "flipped", "original_label"});
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      t.row(i, bool(mask.flipped[i]), mask.original_labels[i]);
      if (mask.flipped[i]) ids.push_back(i);
    }
    flips = t.str();
    result["flipped"] = ids;
  }
  std::vector<std::size_t> counts(c.classes, 0);
  for (int y : ds.labels()) ++counts[static_cast<std::size_t>(y)];
  result["class_counts"] = counts;
  a.files.emplace_back("synth.json", render(make_report("synth", to_json(c), result)));
  a.files.emplace_back("data.csv", to_csv(ds));
  if (!flips.empty()) a.files.emplace_back("flips.csv", flips);
  a.summary = "wrote " + std::to_string(ds.size()) + " samples\n";
  return a;
}

inline Artifacts run_split(const SplitConfig& c) {
  LabelMap labels;
  const auto ds = load_csv(c.input, c.label, c.header, &labels);
  const auto parts = split(ds, c.fractions, c.seed);
  static constexpr const char* kNames[] = {"train", "val", "test"};
  Json result;
  Artifacts a;
  for (int p = 0; p < 3; ++p) {
    const auto& part = parts[static_cast<std::size_t>(p)];
    result[kNames[p]] = {{"size", part.size()}, {"rows", part.origins()}};
  }
  a.files.emplace_back("split.json", render(make_report("split", to_json(c), result)));
  for (int p = 0; p < 3; ++p) {
    const auto& part = parts[static_cast<std::size_t>(p)];
    if (part.empty()) continue;
    a.files.emplace_back(std::string(kNames[p]) + ".csv", to_csv(part, c.label, &labels.names()));
  }
  a.summary = "train=" + std::to_string(parts[0].size()) + " val=" +
              std::to_string(parts[1].size()) + " test=" + std::to_string(parts[2].size()) + "\n";
  return a;
}

// Re-executes a command from its embedded config.
inline Artifacts execute(std::string_view command, const Json& config, std::size_t threads) {
  if (command == "value") return run_value(value_config_from_json(config), threads);
  if (command == "inflation") return run_inflation(inflation_config_from_json(config), threads);
  if (command == "synth") return run_synth(synth_config_from_json(config));
  if (command == "split") return run_split(split_config_from_json(config));
  if (command == "scenario") {
    if (!config.is_object() || !config.contains("scenario") || !config["scenario"].is_string()) {
      throw ConfigError({"scenario: missing"});
    }
    const auto kind = parse_scenario_kind(config["scenario"].get<std::string>());
    return run_scenario(parse_scenario_config(config, kind, 0), threads);
  }
  throw DataError("unknown command '" + std::string(command) + "' in report");
}

inline void write_artifacts(const Artifacts& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : a.files) write_text(dir / name, text);
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace detail {

struct Common {
  std::size_t threads = 1;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

inline void add_common(CLI::App& app, Common& c, std::uint64_t& seed) {
  app.add_option("--threads", c.threads, "Worker threads for valuation fan-out")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1024}))
      ->capture_default_str();
  app.add_option("--out-dir", c.out_dir, "Directory receiving report files")
      ->capture_default_str();
  app.add_option("--seed", seed, "Seed (falls back to $SHAPCAL_SEED, then 0)");
}

struct ValueFlags {
  InputConfig input;
  ValuationConfig valuation;
  std::size_t t = 0;
  CLI::Option* t_opt = nullptr;
  std::string method = "cknn";
  std::string metric = "euclidean";
  bool no_header = false;
};

inline void add_inputs(CLI::App& app, ValueFlags& f, bool test_required = false) {
  app.add_option("--train", f.input.train, "Training CSV")->required();
  app.add_option("--val", f.input.val, "Validation CSV")->required();
  auto* test = app.add_option("--test", f.input.test, "Held-out test CSV");
  if (test_required) test->required();
  app.add_option("--label", f.input.label, "Label column name (index with --no-header)")
      ->capture_default_str();
  app.add_flag("--no-header", f.no_header, "Input files have no header row");
  app.add_flag("--normalize", f.input.normalize, "z-score features with training statistics");
}

inline void add_valuation(CLI::App& app, ValueFlags& f) {
  app.add_option("--method", f.method, "Valuation method")
      ->check(CLI::IsMember({"exact", "knn", "cknn"}))
      ->capture_default_str();
  app.add_option("--k", f.valuation.params.k, "Neighbors K")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  f.t_opt = app.add_option("--t", f.t, "Calibration T (default max(N-2K, 0))");
  app.add_option("--metric", f.metric, "Distance metric")
      ->check(CLI::IsMember({"euclidean", "cosine"}))
      ->capture_default_str();
  app.add_flag("--mean-normalize", f.valuation.mean_normalize,
               "Divide summed values by the validation size");
  app.add_option("--exact-cap", f.valuation.exact_cap, "Largest N accepted by --method exact")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

inline void finish_value_flags(ValueFlags& f) {
  f.input.header = !f.no_header;
  f.valuation.method = parse_method(f.method);
  f.valuation.params.metric = parse_metric(f.metric);
  if (f.t_opt->count()) f.valuation.params.t = f.t;
}

inline std::uint64_t resolve_seed(const CLI::App& app, std::uint64_t flag) {
  return app.get_option("--seed")->count() ? flag : env_seed();
}

}  // namespace detail

// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"KNN-Shapley and calibrated KNN-Shapley data valuation", "shapcal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "shapcal 0.1.0");

  detail::Common common;
  std::uint64_t seed_flag = 0;
  std::function<Artifacts()> action;

  // value
  auto* value = app.add_subcommand("value", "Value every training sample");
  detail::ValueFlags vf;
  std::string policy;
  double q = 0.0;
  bool strict = false, inclusive = false;
  detail::add_inputs(*value, vf);
  detail::add_valuation(*value, vf);
  auto* policy_opt = value->add_option("--policy", policy, "Also apply a removal policy")
                         ->check(CLI::IsMember({"negative", "bottom"}));
  auto* q_opt = value->add_option("--q", q, "Fraction removed by --policy bottom");
  auto* strict_opt = value->add_flag("--strict", strict, "Remove values < 0 (default)");
  auto* inclusive_opt = value->add_flag("--inclusive", inclusive, "Remove values <= 0");
  inclusive_opt->excludes(strict_opt);
  detail::add_common(*value, common, seed_flag);
  value->callback([&] {
    detail::finish_value_flags(vf);
    ValueConfig c{vf.input, vf.valuation, std::nullopt, detail::resolve_seed(*value, seed_flag)};
    if (!policy_opt->count()) {
      if (q_opt->count() || strict_opt->count() || inclusive_opt->count()) {
        throw UsageError("--q, --strict and --inclusive need --policy");
      }
    } else if (policy == "negative") {
      if (q_opt->count()) throw UsageError("--q needs --policy bottom");
      c.policy = RemovalPolicy::negative(!inclusive);
    } else {
      if (strict_opt->count() || inclusive_opt->count()) {
        throw UsageError("--strict and --inclusive need --policy negative");
      }
      if (!q_opt->count()) throw UsageError("--policy bottom needs --q");
      if (!(q > 0.0 && q < 1.0)) throw UsageError("--q must lie in (0, 1)");
      c.policy = RemovalPolicy::bottom(q);
    }
    action = [c, &common] { return run_value(c, common.threads); };
  });

  // inflation
  auto* inflation = app.add_subcommand("inflation", "Bin removal curve and inflation metrics");
  detail::ValueFlags inf;
  InflationConfig ic;
  std::string values_path;
  detail::add_inputs(*inflation, inf);
  detail::add_valuation(*inflation, inf);
  inflation->add_option("--bins", ic.bins, "Number of equal-size bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  inflation->add_option("--eval", ic.eval, "Set measuring removal accuracy")
      ->check(CLI::IsMember({"val", "test"}))
      ->capture_default_str();
  auto* values_opt =
      inflation->add_option("--values", values_path, "Precomputed values CSV (train_id,value)");
  detail::add_common(*inflation, common, seed_flag);
  inflation->callback([&] {
    detail::finish_value_flags(inf);
    ic.input = inf.input;
    ic.valuation = inf.valuation;
    if (values_opt->count()) ic.values = values_path;
    ic.seed = detail::resolve_seed(*inflation, seed_flag);
    action = [&] { return run_inflation(ic, common.threads); };
  });

  // scenario
  auto* scenario = app.add_subcommand("scenario", "Run a mislabel, online or active scenario");
  std::string kind, config_path;
  scenario->add_option("kind", kind, "Scenario")
      ->required()
      ->check(CLI::IsMember({"mislabel", "online", "active"}));
  scenario->add_option("--config", config_path, "Scenario JSON document")->required();
  detail::add_common(*scenario, common, seed_flag);
  scenario->callback([&] {
    Json doc;
    try {
      doc = Json::parse(read_text(config_path));
    } catch (const Json::parse_error& e) {
      throw DataError(config_path + ": " + e.what());
    }
    auto c = parse_scenario_config(doc, parse_scenario_kind(kind), env_seed());
    if (scenario->get_option("--seed")->count()) c.seed = seed_flag;
    action = [c, &common] { return run_scenario(c, common.threads); };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Write seeded Gaussian blobs");
  SynthConfig sc;
  synth->add_option("--n", sc.n, "Samples")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--dim", sc.dim, "Features")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--classes", sc.classes, "Classes")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20))
      ->capture_default_str();
  synth->add_option("--separation", sc.separation, "Distance between class centers")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--std", sc.stddev, "Per-axis standard deviation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--flip", sc.flip, "Fraction of labels flipped")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  detail::add_common(*synth, common, seed_flag);
  synth->callback([&] {
    sc.seed = detail::resolve_seed(*synth, seed_flag);
    action = [&] { return run_synth(sc); };
  });

  // split
  auto* split_cmd = app.add_subcommand("split", "Seeded train/val/test split of one CSV");
  SplitConfig pc;
  bool split_no_header = false;
  split_cmd->add_option("--input", pc.input, "CSV to split")->required();
  split_cmd->add_option("--label", pc.label, "Label column name")->capture_default_str();
  split_cmd->add_flag("--no-header", split_no_header, "Input has no header row");
  split_cmd->add_option("--fractions", pc.fractions, "Train, val and test fractions")
      ->delimiter(',')
      ->capture_default_str();
  detail::add_common(*split_cmd, common, seed_flag);
  split_cmd->callback([&] {
    pc.header = !split_no_header;
    pc.seed = detail::resolve_seed(*split_cmd, seed_flag);
    action = [&] { return run_split(pc); };
  });

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a report and compare it byte for byte");
  std::string report_path;
  replay->add_option("report", report_path, "Report JSON written by any command")->required();
  detail::add_common(*replay, common, seed_flag);
  std::string replay_name, original;
  replay->callback([&] {
    original = read_text(report_path);
    Json doc;
    try {
      doc = Json::parse(original);
    } catch (const Json::parse_error& e) {
      throw DataError(report_path + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("schema_version", -1) != kSchemaVersion ||
        !doc.contains("command") || !doc["command"].is_string() || !doc.contains("config")) {
      throw DataError(report_path + ": not a schema version " + std::to_string(kSchemaVersion) +
                      " report");
    }
    replay_name = std::filesystem::path(report_path).filename().string();
    const auto command = doc["command"].get<std::string>();
    const auto config = doc["config"];
    action = [command, config, &common] { return execute(command, config, common.threads); };
  });

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }
    const Artifacts a = action();
    write_artifacts(a, common.out_dir);
    out << a.summary;
    if (replay->parsed()) {
      const auto it = std::find_if(a.files.begin(), a.files.end(),
                                   [&](const auto& f) { return f.first == replay_name; });
      if (it == a.files.end() || it->second != original) {
        err << "shapcal: replay of " << report_path << " differs\n";
        return kData;
      }
      out << "replay: identical\n";
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "shapcal: usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "shapcal: data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    err << "shapcal: numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "shapcal: data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "shapcal: internal error: " << e.what() << "\n";
    return kInternal;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"shapcal"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace shapcal::cli
