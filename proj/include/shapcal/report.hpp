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

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapcal/errors.hpp"
#include "shapcal/inflation.hpp"
#include "shapcal/pipelines.hpp"
#include "shapcal/valuation.hpp"

namespace shapcal {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// 17 significant digits, '.' separator, shortest exponent form.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw NumericError("cannot render value");
  return std::string(buf, end);
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Header plus rows of pre-rendered cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : width_(header.size()) {
    append(header);
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    std::vector<std::string> r{cell(cells)...};
    if (r.size() != width_) throw DataError("csv row width mismatch");
    append(r);
  }

  const std::string& str() const { return text_; }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const char* v) { return v; }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) { return std::to_string(v); }
  template <class T>
  static std::string cell(const std::optional<T>& v) { return v ? cell(*v) : std::string(); }

  void append(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t width_;
  std::string text_;
};

// Top-level report envelope shared by every command.
inline Json make_report(std::string_view command, Json config, Json result) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = std::move(config);
  j["result"] = std::move(result);
  return j;
}

inline std::string render(const Json& j) { return j.dump(2) + "\n"; }

struct ValueSummary {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t non_positive = 0;
};

inline ValueSummary summarize(std::span<const double> values) {
  ValueSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.min = s.max = values[0];
  double sum = 0.0;
  for (double v : values) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
    s.non_positive += v <= 0.0;
  }
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

inline Json to_json(const ValueSummary& s) {
  return {{"count", s.count}, {"min", s.min}, {"max", s.max}, {"mean", s.mean},
          {"non_positive", s.non_positive}};
}

inline void check_finite(std::span<const double> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string(what) + " " + std::to_string(i) + " is not finite");
    }
  }
}

inline Json to_json(const ValuationVector& v) {
  Json j;
  j["method"] = to_string(v.method);
  j["params"] = {{"k", v.k}, {"t", v.t}, {"metric", to_string(v.metric)}};
  j["aggregation"] = {{"kind", to_string(v.aggregation)},
                      {"validation_size", v.validation_size},
                      {"mean_normalized", v.mean_normalized}};
  j["values"] = v.values;
  return j;
}

inline std::string values_csv(std::span<const double> values) {
  CsvTable t({"train_id", "value"});
  for (std::size_t i = 0; i < values.size(); ++i) t.row(i, values[i]);
  return t.str();
}

// Reads (train_id, value) rows as written by values_csv.
inline std::vector<double> read_values_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<double> values;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || detail::trim(line).empty()) continue;
    auto cells = detail::split_commas(line);
    if (cells.size() != 2) {
      throw DataError(path + ": row " + std::to_string(line_no) + " needs train_id,value");
    }
    std::size_t id = 0;
    auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), id);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size() || id != values.size()) {
      throw DataError(path + ": row " + std::to_string(line_no) + ", column 'train_id': expected " +
                      std::to_string(values.size()));
    }
    auto v = detail::parse_double(cells[1]);
    if (!v) {
      throw DataError(path + ": row " + std::to_string(line_no) +
                      ", column 'value': cannot parse '" + std::string(cells[1]) + "'");
    }
    values.push_back(*v);
  }
  if (values.empty()) throw DataError(path + ": no values");
  return values;
}

inline Json to_json(const InflationReport& r) {
  return {{"status", to_string(r.status)}, {"t", optional_json(r.t)},
          {"r", optional_json(r.r)},       {"j_star", optional_json(r.j_star)},
          {"i_star", optional_json(r.i_star)}};
}

// One row per 1-based bin: size, right-edge value, accuracy without the bin.
inline std::string curve_csv(const RemovalCurve& curve, const BinSegmentation& seg) {
  CsvTable t({"bin", "size", "nu", "p"});
  for (std::size_t b = 0; b < seg.num_bins; ++b) {
    t.row(b + 1, seg.members(b).size(), seg.bin_value[b], curve.p[b]);
  }
  return t.str();
}

inline Json to_json(const RemovalPolicy& p) {
  Json j{{"kind", to_string(p.kind)}};
  if (p.kind == RemovalPolicy::Kind::bottom_fraction) {
    j["q"] = p.q;
  } else {
    j["strict"] = p.strict;
  }
  return j;
}

inline Json to_json(const MislabelAnalysis& a) {
  return {{"set_i", a.non_positive_clean.size()},
          {"set_ii", a.non_positive_flipped.size()},
          {"set_iii", a.positive_flipped.size()},
          {"precision", optional_json(a.precision)},
          {"recall", optional_json(a.recall)},
          {"set_i_ids", a.non_positive_clean},
          {"set_ii_ids", a.non_positive_flipped},
          {"set_iii_ids", a.positive_flipped}};
}

inline std::string online_batches_csv(const OnlineRunReport& r) {
  CsvTable t({"batch", "arrivals", "candidates", "removed", "survivors", "accuracy",
              "baseline_accuracy"});
  for (const auto& b : r.batches) {
    t.row(b.batch, b.arrivals, b.candidates, b.removed, b.survivors, b.accuracy,
          b.baseline_accuracy);
  }
  return t.str();
}

inline std::string online_lifecycle_csv(const OnlineRunReport& r) {
  CsvTable t({"origin", "admitted", "removed"});
  for (const auto& [origin, life] : r.samples) t.row(origin, life.admitted, life.removed);
  return t.str();
}

inline std::string online_trajectories_csv(const OnlineRunReport& r) {
  CsvTable t({"origin", "batch", "value"});
  for (const auto& [origin, life] : r.samples) {
    for (const auto& [batch, value] : life.trajectory) t.row(origin, batch, value);
  }
  return t.str();
}

inline Json to_json(const OnlineRunReport& r) {
  Json batches = Json::array();
  for (const auto& b : r.batches) {
    batches.push_back({{"batch", b.batch},
                       {"arrivals", b.arrivals},
                       {"candidates", b.candidates},
                       {"removed", b.removed},
                       {"survivors", b.survivors},
                       {"accuracy", b.accuracy},
                       {"baseline_accuracy", b.baseline_accuracy}});
  }
  std::size_t removed = 0;
  for (const auto& [origin, life] : r.samples) removed += life.removed.has_value();
  return {{"batches", std::move(batches)},
          {"admitted_total", r.samples.size()},
          {"removed_total", removed}};
}

inline std::string active_rounds_csv(const ActiveRunReport& r) {
  CsvTable t({"round", "labeled", "acquired", "accuracy", "regressor_final_loss"});
  for (const auto& rec : r.rounds) {
    t.row(rec.round, rec.labeled, rec.acquired.size(), rec.accuracy, rec.regressor_final_loss);
  }
  return t.str();
}

inline Json to_json(const ActiveRunReport& r) {
  Json rounds = Json::array();
  for (const auto& rec : r.rounds) {
    rounds.push_back({{"round", rec.round},
                      {"labeled", rec.labeled},
                      {"accuracy", rec.accuracy},
                      {"regressor_final_loss", optional_json(rec.regressor_final_loss)},
                      {"acquired", rec.acquired}});
  }
  return {{"strategy", to_string(r.strategy)}, {"rounds", std::move(rounds)}};
}

}  // namespace shapcal
