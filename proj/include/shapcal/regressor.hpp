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
#include <span>
#include <string>
#include <vector>

#include "shapcal/dataset.hpp"
#include "shapcal/errors.hpp"
#include "shapcal/rng.hpp"

namespace shapcal {

struct RegressorConfig {
  std::size_t hidden = 64;
  double learning_rate = 1e-2;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
  bool standardize = true;  // z-score inputs with training statistics
};

// Parameters of a one-hidden-layer ReLU network with scalar output, stored
// flat in the order W1 (hidden x input, row-major), b1, w2, b2.
struct MlpParams {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::vector<double> theta;

  MlpParams() = default;
  MlpParams(std::size_t in, std::size_t h)
      : input_dim(in), hidden(h), theta(h * in + h + h + 1, 0.0) {}

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return hidden * input_dim; }
  std::size_t w2_offset() const { return hidden * input_dim + hidden; }
  std::size_t b2_offset() const { return hidden * input_dim + 2 * hidden; }

  double forward(std::span<const double> x, std::vector<double>& act) const {
    act.resize(hidden);
    const double* w1 = theta.data() + w1_offset();
    const double* b1 = theta.data() + b1_offset();
    const double* w2 = theta.data() + w2_offset();
    double out = theta[b2_offset()];
    for (std::size_t h = 0; h < hidden; ++h) {
      double z = b1[h];
      for (std::size_t j = 0; j < input_dim; ++j) z += w1[h * input_dim + j] * x[j];
      act[h] = z > 0.0 ? z : 0.0;
      out += w2[h] * act[h];
    }
    return out;
  }
};

// Mean squared error over rows of `x`; fills `grad` (same layout as theta)
// when non-null.
inline double mse_loss(const MlpParams& params, std::span<const double> x,
                       std::span<const double> y, std::vector<double>* grad = nullptr) {
  const std::size_t n = y.size(), d = params.input_dim, hid = params.hidden;
  if (grad) grad->assign(params.theta.size(), 0.0);
  std::vector<double> act;
  double loss = 0.0;
  const double* w2 = params.theta.data() + params.w2_offset();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.subspan(i * d, d);
    const double err = params.forward(row, act) - y[i];
    loss += err * err;
    if (!grad) continue;
    const double g_out = 2.0 * err / static_cast<double>(n);
    double* g = grad->data();
    g[params.b2_offset()] += g_out;
    for (std::size_t h = 0; h < hid; ++h) {
      g[params.w2_offset() + h] += g_out * act[h];
      if (act[h] <= 0.0) continue;
      const double g_hidden = g_out * w2[h];
      g[params.b1_offset() + h] += g_hidden;
      for (std::size_t j = 0; j < d; ++j) g[params.w1_offset() + h * d + j] += g_hidden * row[j];
    }
  }
  return loss / static_cast<double>(n);
}

// Symmetric uniform initialization scaled by 1/sqrt(fan_in) per layer.
inline MlpParams init_mlp(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  MlpParams p(input_dim, hidden);
  Rng rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < p.w2_offset(); ++i) p.theta[i] = a1 * (2.0 * rng.uniform() - 1.0);
  for (std::size_t i = p.w2_offset(); i < p.theta.size(); ++i) {
    p.theta[i] = a2 * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

// Feature -> value regressor used to score unlabeled samples.
struct ValueRegressor {
  MlpParams params;
  Standardizer standardizer;
  RegressorConfig config;
  std::vector<double> loss_curve;  // loss before training and after each epoch

  double initial_loss() const { return loss_curve.empty() ? 0.0 : loss_curve.front(); }
  double final_loss() const { return loss_curve.empty() ? 0.0 : loss_curve.back(); }
};

// Full-batch gradient descent on mean squared error.
inline ValueRegressor train_value_regressor(std::span<const double> features, std::size_t dim,
                                            std::span<const double> targets,
                                            const RegressorConfig& config = {}) {
  if (dim == 0) throw UsageError("regressor input dim must be positive");
  if (config.hidden == 0) throw UsageError("regressor hidden width must be positive");
  if (targets.empty()) throw DataError("regressor needs at least one training pair");
  if (features.size() != targets.size() * dim) {
    throw DataError("regressor features do not match target count x dim");
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw DataError("regressor targets must be finite");
  }
  ValueRegressor reg;
  reg.config = config;
  reg.standardizer = config.standardize
                         ? Standardizer::fit(features, dim)
                         : Standardizer{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  const auto x = reg.standardizer.apply(features);
  reg.params = init_mlp(dim, config.hidden, config.seed);

  std::vector<double> grad;
  reg.loss_curve.reserve(config.epochs + 1);
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
    const double loss = mse_loss(reg.params, x, targets, epoch < config.epochs ? &grad : nullptr);
    if (!std::isfinite(loss)) {
      throw NumericError("regressor loss became non-finite at epoch " + std::to_string(epoch) +
                         "; use a smaller learning rate");
    }
    reg.loss_curve.push_back(loss);
    if (epoch == config.epochs) break;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      reg.params.theta[i] -= config.learning_rate * grad[i];
    }
  }
  return reg;
}

inline std::vector<double> predict_values(const ValueRegressor& reg,
                                          std::span<const double> features, std::size_t dim) {
  const std::size_t d = reg.params.input_dim;
  if (dim != d || features.size() % d != 0) {
    throw DataError("predict_values: input dim " + std::to_string(dim) +
                    " does not match regressor dim " + std::to_string(d));
  }
  const auto x = reg.standardizer.apply(features);
  std::vector<double> out(features.size() / d);
  std::vector<double> act;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = reg.params.forward(std::span<const double>(x).subspan(i * d, d), act);
  }
  return out;
}

}  // namespace shapcal
