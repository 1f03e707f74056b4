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
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shapcal/errors.hpp"
#include "shapcal/rng.hpp"

namespace shapcal {

struct Sample {
  std::size_t id = 0;
  std::vector<double> features;
  int label = 0;
};

// Immutable labeled feature matrix. Features are stored row-major; sample ids
// are the row indices 0..N-1. `origin(i)` traces row i back to the dataset it
// was derived from (split, subset, removal), so ids stay traceable across
// renumbering.
class Dataset {
 public:
  Dataset(std::size_t dim, int num_classes) : dim_(dim), num_classes_(num_classes) {
    if (dim == 0) throw DataError("dataset dimensionality must be positive");
    if (num_classes < 1) throw DataError("dataset needs at least one class");
  }

  Dataset(std::vector<double> features, std::vector<int> labels, std::size_t dim,
          int num_classes, std::vector<std::size_t> origin = {})
      : dim_(dim),
        num_classes_(num_classes),
        features_(std::move(features)),
        labels_(std::move(labels)),
        origin_(std::move(origin)) {
    if (dim_ == 0) throw DataError("dataset dimensionality must be positive");
    if (num_classes_ < 1) throw DataError("dataset needs at least one class");
    if (features_.size() != labels_.size() * dim_) {
      throw DataError("feature matrix size does not match label count x dim");
    }
    for (int y : labels_) {
      if (y < 0 || y >= num_classes_) {
        throw DataError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes_) + ")");
      }
    }
    if (origin_.empty()) {
      origin_.resize(labels_.size());
      std::iota(origin_.begin(), origin_.end(), std::size_t{0});
    } else if (origin_.size() != labels_.size()) {
      throw DataError("origin id list does not match sample count");
    }
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return dim_; }
  int num_classes() const { return num_classes_; }

  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  const std::vector<double>& feature_matrix() const { return features_; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  std::size_t origin(std::size_t i) const { return origin_[i]; }
  const std::vector<std::size_t>& origins() const { return origin_; }

  Sample sample(std::size_t i) const {
    auto f = features(i);
    return Sample{i, {f.begin(), f.end()}, labels_[i]};
  }

  // Rows `ids` in the given order, renumbered from 0; origins carried over.
  Dataset subset(std::span<const std::size_t> ids) const {
    std::vector<double> f;
    f.reserve(ids.size() * dim_);
    std::vector<int> y;
    y.reserve(ids.size());
    std::vector<std::size_t> o;
    o.reserve(ids.size());
    for (std::size_t id : ids) {
      if (id >= size()) throw DataError("subset id " + std::to_string(id) + " out of range");
      auto row = features(id);
      f.insert(f.end(), row.begin(), row.end());
      y.push_back(labels_[id]);
      o.push_back(origin_[id]);
    }
    return Dataset(std::move(f), std::move(y), dim_, num_classes_, std::move(o));
  }

  Dataset with_labels(std::vector<int> labels) const {
    return Dataset(features_, std::move(labels), dim_, num_classes_, origin_);
  }

  Dataset with_num_classes(int num_classes) const {
    return Dataset(features_, labels_, dim_, num_classes, origin_);
  }

  Dataset with_features(std::vector<double> features) const {
    return Dataset(std::move(features), labels_, dim_, num_classes_, origin_);
  }

  // Rows of `a` followed by rows of `b`.
  static Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.dim() != b.dim()) throw DataError("cannot concatenate datasets of different dim");
    std::vector<double> f = a.features_;
    f.insert(f.end(), b.features_.begin(), b.features_.end());
    std::vector<int> y = a.labels_;
    y.insert(y.end(), b.labels_.begin(), b.labels_.end());
    std::vector<std::size_t> o = a.origin_;
    o.insert(o.end(), b.origin_.begin(), b.origin_.end());
    return Dataset(std::move(f), std::move(y), a.dim(),
                   std::max(a.num_classes(), b.num_classes()), std::move(o));
  }

 private:
  std::size_t dim_;
  int num_classes_;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<std::size_t> origin_;
};

struct FlipMask {
  std::vector<bool> flipped;
  // Set exactly for flipped ids.
  std::vector<std::optional<int>> original_labels;

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(flipped.begin(), flipped.end(), true));
  }
};

// Maps raw label strings to dense category indices by first appearance.
// Share one map across files that must agree on label indices.
class LabelMap {
 public:
  int intern(const std::string& raw) {
    auto [it, inserted] = index_.try_emplace(raw, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(raw);
    return it->second;
  }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> names_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace detail

// Reads a comma-separated file. With a header, `label_column` names the label
// column; without one it is a zero-based column index. Labels are densified
// through `labels` (first appearance wins); pass a shared map when loading
// train/validation/test files that must agree. C is the map size afterwards.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        bool has_header, LabelMap* labels = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  LabelMap local;
  LabelMap& map = labels ? *labels : local;

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> column_names;
  std::optional<std::size_t> label_idx;
  std::size_t width = 0;
  std::vector<double> features;
  std::vector<int> y;

  auto column_name = [&](std::size_t c) {
    return c < column_names.size() ? "'" + column_names[c] + "'" : std::to_string(c);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_commas(line);
    if (!label_idx) {
      width = cells.size();
      if (has_header) {
        for (auto c : cells) column_names.emplace_back(c);
        auto it = std::find(column_names.begin(), column_names.end(), label_column);
        if (it == column_names.end()) {
          throw DataError(path + ": label column '" + label_column + "' not in header");
        }
        label_idx = static_cast<std::size_t>(it - column_names.begin());
        if (width < 2) throw DataError(path + ": need at least one feature column");
        continue;
      }
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(label_column.data(),
                                       label_column.data() + label_column.size(), idx);
      if (ec != std::errc() || ptr != label_column.data() + label_column.size()) {
        throw DataError("without a header the label column must be an index, got '" +
                        label_column + "'");
      }
      if (idx >= width) {
        throw DataError(path + ": label column index " + label_column + " >= column count " +
                        std::to_string(width));
      }
      if (width < 2) throw DataError(path + ": need at least one feature column");
      label_idx = idx;
    }
    if (cells.size() != width) {
      throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (c == *label_idx) {
        if (cells[c].empty()) {
          throw DataError(path + ": row " + std::to_string(line_no) + ", column " +
                          column_name(c) + ": empty label");
        }
        y.push_back(map.intern(std::string(cells[c])));
        continue;
      }
      auto v = detail::parse_double(cells[c]);
      if (!v) {
        throw DataError(path + ": row " + std::to_string(line_no) + ", column " +
                        column_name(c) + ": cannot parse '" + std::string(cells[c]) +
                        "' as a number");
      }
      features.push_back(*v);
    }
  }
  if (y.empty()) throw DataError(path + ": no data rows");
  return Dataset(std::move(features), std::move(y), width - 1,
                 static_cast<int>(map.size()));
}

// Renders features as x0..x{d-1} followed by the label column, 17
// significant digits, header included. Labels print as their category index
// unless `label_names` is given.
inline std::string to_csv(const Dataset& ds, const std::string& label_column = "label",
                          const std::vector<std::string>* label_names = nullptr) {
  std::ostringstream out;
  for (std::size_t j = 0; j < ds.dim(); ++j) out << 'x' << j << ',';
  out << label_column << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features(i)) out << v << ',';
    const int y = ds.label(i);
    if (label_names) {
      out << label_names->at(static_cast<std::size_t>(y)) << '\n';
    } else {
      out << y << '\n';
    }
  }
  return out.str();
}

inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_csv(ds);
}

// Balanced Gaussian clusters. Class c is centered at c * separation along the
// first axis, so centers are pairwise at least `separation` apart. Class
// counts differ by at most one; sample order is a seeded shuffle.
inline Dataset synth_blobs(std::size_t n, std::size_t dim, int num_classes,
                           double separation, double noise_std, std::uint64_t seed) {
  if (num_classes < 2) throw UsageError("synth_blobs needs at least 2 classes");
  if (n < static_cast<std::size_t>(num_classes)) {
    throw UsageError("synth_blobs needs n >= number of classes");
  }
  if (dim == 0) throw UsageError("synth_blobs needs dim >= 1");
  if (!(separation > 0.0)) throw UsageError("synth_blobs needs separation > 0");
  if (!(noise_std >= 0.0)) throw UsageError("synth_blobs needs noise_std >= 0");

  Rng rng(seed);
  Rng order_rng = rng.split(1);
  Rng noise_rng = rng.split(2);

  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % num_classes);
  std::shuffle(y.begin(), y.end(), order_rng.engine());

  std::vector<double> f(n * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    f[i * dim] = y[i] * separation;
    if (noise_std > 0.0) {
      for (std::size_t j = 0; j < dim; ++j) f[i * dim + j] += noise_rng.normal(0.0, noise_std);
    }
  }
  return Dataset(std::move(f), std::move(y), dim, num_classes);
}

// Flips exactly round(ratio * N) labels, chosen uniformly without
// replacement, each to a uniformly drawn different category.
inline std::pair<Dataset, FlipMask> flip_labels(const Dataset& ds, double ratio,
                                                std::uint64_t seed) {
  if (ds.num_classes() < 2) throw UsageError("flip_labels needs at least 2 classes");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw UsageError("flip ratio must be in [0, 1]");
  const std::size_t n = ds.size();
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));

  Rng rng(seed);
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(ids[i], ids[i + rng.below(n - i)]);
  }

  FlipMask mask{std::vector<bool>(n, false), std::vector<std::optional<int>>(n)};
  std::vector<int> y = ds.labels();
  const auto others = static_cast<std::uint64_t>(ds.num_classes() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t id = ids[i];
    const int old = y[id];
    const int draw = static_cast<int>(rng.below(others));
    y[id] = draw < old ? draw : draw + 1;
    mask.flipped[id] = true;
    mask.original_labels[id] = old;
  }
  return {ds.with_labels(std::move(y)), std::move(mask)};
}

// Seeded shuffle then partition. Sizes are floor(f * N); the remainder is
// handed out one sample at a time to train, then val, then test, skipping
// parts whose fraction is exactly zero.
inline std::array<Dataset, 3> split(const Dataset& ds, std::array<double, 3> fractions,
                                    std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw UsageError("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");

  const std::size_t n = ds.size();
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int p = 0; p < 3; ++p) {
    sizes[p] = static_cast<std::size_t>(std::floor(fractions[p] * static_cast<double>(n) + 1e-9));
    assigned += sizes[p];
  }
  std::size_t remainder = n - std::min(n, assigned);
  while (remainder > 0) {
    for (int p = 0; p < 3 && remainder > 0; ++p) {
      if (fractions[p] > 0.0) {
        ++sizes[p];
        --remainder;
      }
    }
  }
  static constexpr std::array<const char*, 3> kNames{"train", "val", "test"};
  for (int p = 0; p < 3; ++p) {
    if (fractions[p] > 0.0 && sizes[p] == 0) {
      throw UsageError(std::string("split: nonzero fraction for ") + kNames[p] +
                       " yields an empty part at N=" + std::to_string(n));
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng.engine());

  std::span<const std::size_t> all(perm);
  return {ds.subset(all.subspan(0, sizes[0])), ds.subset(all.subspan(sizes[0], sizes[1])),
          ds.subset(all.subspan(sizes[0] + sizes[1], sizes[2]))};
}

// Consecutive shards of near-equal size; earlier shards take the remainder.
inline std::vector<Dataset> chunk(const Dataset& ds, std::size_t parts) {
  if (parts == 0 || parts > ds.size()) throw UsageError("chunk: need 1 <= parts <= N");
  std::vector<Dataset> out;
  const std::size_t base = ds.size() / parts, extra = ds.size() % parts;
  std::size_t start = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    std::vector<std::size_t> ids(len);
    std::iota(ids.begin(), ids.end(), start);
    out.push_back(ds.subset(ids));
    start += len;
  }
  return out;
}

// Uniform per-class downsampling to the minority class count. Keeps file
// order among the retained rows.
inline Dataset balanced_subsample(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.label(i)].push_back(i);
  std::size_t minority = ds.size();
  for (const auto& ids : by_class) {
    if (!ids.empty()) minority = std::min(minority, ids.size());
  }
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& ids : by_class) {
    std::shuffle(ids.begin(), ids.end(), rng.engine());
    keep.insert(keep.end(), ids.begin(), ids.begin() + std::min(minority, ids.size()));
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

// Per-feature z-score parameters fitted on one dataset, applied to others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(std::span<const double> rows, std::size_t dim) {
    Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
    const std::size_t n = dim ? rows.size() / dim : 0;
    if (n == 0) return s;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) s.mean[j] += rows[i * dim + j];
    for (double& m : s.mean) m /= static_cast<double>(n);
    std::vector<double> var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = rows[i * dim + j] - s.mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < dim; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(n));
      s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  static Standardizer fit(const Dataset& ds) { return fit(ds.feature_matrix(), ds.dim()); }

  std::vector<double> apply(std::span<const double> rows) const {
    const std::size_t dim = mean.size();
    std::vector<double> out(rows.begin(), rows.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t j = i % dim;
      out[i] = (out[i] - mean[j]) / scale[j];
    }
    return out;
  }

  Dataset apply(const Dataset& ds) const {
    if (ds.dim() != mean.size()) throw DataError("standardizer dim mismatch");
    return ds.with_features(apply(ds.feature_matrix()));
  }
};

}  // namespace shapcal
