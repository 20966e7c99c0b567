/* Copyright 2026 The ntk Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NTK_TRAINING_HPP
#define NTK_TRAINING_HPP

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"
#include "ntk/mlp.hpp"
#include "ntk/ntk_explicit.hpp"

// Full-batch gradient-descent trainer with per-step kernel snapshots. The
// readout is mapped through a sigmoid for binary decisions; all kernels are
// computed on the pre-sigmoid output.

namespace ntk {

enum class LossKind { kBce, kMse };

inline const char* loss_name(LossKind kind) {
  return kind == LossKind::kBce ? "bce" : "mse";
}

inline LossKind parse_loss(const std::string& name) {
  if (name == "bce") return LossKind::kBce;
  if (name == "mse") return LossKind::kMse;
  throw Error("unknown loss '" + name + "'");
}

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t steps = 1;
  LossKind loss = LossKind::kBce;
  bool freeze_biases = false;
  std::size_t snapshot_every = 0;  // 0 = never snapshot
  bool snapshot_components = false;

  void validate() const {
    if (learning_rate < 0.0) throw Error("TrainConfig: learning_rate must be >= 0");
    if (steps < 1) throw Error("TrainConfig: steps must be >= 1");
  }
};

/// Kernel state captured at one training step (step counts updates applied so
/// far; the final record carries step == steps).
struct SnapshotRecord {
  std::size_t step = 0;
  double loss = 0.0;
  Mat full;
  std::optional<NTKComponents> components;

  SnapshotRecord(std::size_t s, double l, Mat f) : step(s), loss(l), full(std::move(f)) {}
};

struct SnapshotSeries {
  std::vector<SnapshotRecord> records;
};

struct TrainResult {
  MLPState state;
  SnapshotSeries snapshots;
};

/// Mean loss over the batch and dLoss/df per datapoint, for pre-sigmoid
/// outputs f and 0/1 labels.
///   bce: -mean(y ln p + (1-y) ln(1-p)) with p = sigmoid(f), grad (p - y)/n
///   mse: mean (p - y)^2, grad 2 (p - y) p (1 - p) / n
/// p is clamped to [1e-12, 1 - 1e-12] inside the logs only.
inline std::pair<double, std::vector<double>> loss_and_grad(
    const std::vector<double>& pred_logits, const std::vector<double>& labels, LossKind kind) {
  if (pred_logits.size() != labels.size()) {
    throw ShapeMismatch("loss_and_grad: " + std::to_string(pred_logits.size()) +
                        " logits vs " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = pred_logits.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  constexpr double eps = 1e-12;

  double loss = 0.0;
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-pred_logits[i]));
    const double y = labels[i];
    if (kind == LossKind::kBce) {
      const double pc = std::min(std::max(p, eps), 1.0 - eps);
      loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc)) * inv_n;
      grad[i] = (p - y) * inv_n;
    } else {
      const double d = p - y;
      loss += d * d * inv_n;
      grad[i] = 2.0 * d * p * (1.0 - p) * inv_n;
    }
  }
  return {loss, std::move(grad)};
}

/// Fraction of points where sigmoid(f) lands on the correct side of 1/2.
inline double binary_accuracy(const std::vector<double>& pred_logits,
                              const std::vector<double>& labels) {
  if (pred_logits.size() != labels.size())
    throw ShapeMismatch("binary_accuracy: size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred_logits.size(); ++i) {
    const int predicted = pred_logits[i] >= 0.0 ? 1 : 0;
    if (predicted == static_cast<int>(labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred_logits.size());
}

/// Vanilla full-batch gradient descent: theta <- theta - lr * dLoss/dtheta.
///
/// Snapshots are taken before the update at steps 0, snapshot_every,
/// 2*snapshot_every, ..., plus one final record of the trained network at
/// step == steps. With freeze_biases, bias tensors are excluded from both the
/// updates and the snapshot kernels.
inline TrainResult train(MLPState state, const NetworkConfig& config, const TrainConfig& tc,
                         const Mat& x, const std::vector<double>& labels) {
  tc.validate();
  config.validate();
  if (labels.size() != x.cols()) {
    throw ShapeMismatch("train: " + std::to_string(x.cols()) + " datapoints vs " +
                        std::to_string(labels.size()) + " labels");
  }
  for (const double y : labels)
    if (y != 0.0 && y != 1.0) throw Error("train: labels must be 0 or 1");

  const std::size_t depth = config.depth();
  const bool update_biases = config.use_bias && !tc.freeze_biases;
  const bool snapshot_bias = config.use_bias && !tc.freeze_biases;
  const std::size_t n = x.cols();

  SnapshotSeries series;
  auto take_snapshot = [&](std::size_t step, double loss, const ForwardTrace& trace) {
    NTKComponents components = explicit_ntk(trace, state, config, snapshot_bias);
    SnapshotRecord record(step, loss, sum_components(components));
    if (tc.snapshot_components) record.components = std::move(components);
    series.records.push_back(std::move(record));
  };

  for (std::size_t step = 0; step < tc.steps; ++step) {
    const ForwardTrace trace = forward(state, config, x);
    const auto [loss, dJdf] = loss_and_grad(trace.output, labels, tc.loss);
    if (!std::isfinite(loss)) {
      throw NonfiniteLoss("loss became non-finite at step " + std::to_string(step));
    }
    if (tc.snapshot_every > 0 && step % tc.snapshot_every == 0) take_snapshot(step, loss, trace);

    // Batched reverse sweep: scaling the S columns by dLoss/df turns the
    // per-sample output gradients into loss gradients.
    if (depth > 0) {
      const SMatrices s = compute_s_matrices(trace, state, config);
      for (std::size_t l = 1; l <= depth; ++l) {
        MatT<double> scaled = s.s[l - 1];
        for (std::size_t col = 0; col < n; ++col) {
          double* c = scaled.col(col);
          for (std::size_t i = 0; i < scaled.rows(); ++i) c[i] *= dJdf[col];
        }
        const Mat wgrad = multiply_a_bt(trace.acts[l - 1], scaled);
        Mat& w = state.weights[l - 1];
        for (std::size_t idx = 0; idx < w.size(); ++idx)
          w.data()[idx] -= tc.learning_rate * wgrad.data()[idx];
        if (update_biases) {
          std::vector<double>& b = state.biases[l - 1];
          for (std::size_t i = 0; i < b.size(); ++i) {
            double acc = 0.0;
            for (std::size_t col = 0; col < n; ++col) acc += scaled(i, col);
            b[i] -= tc.learning_rate * acc;
          }
        }
      }
    }
    const Mat& last = trace.acts.back();
    for (std::size_t i = 0; i < state.readout_weight.size(); ++i) {
      double acc = 0.0;
      for (std::size_t col = 0; col < n; ++col) acc += last(i, col) * dJdf[col];
      state.readout_weight[i] -= tc.learning_rate * acc;
    }
    if (update_biases) {
      double acc = 0.0;
      for (std::size_t col = 0; col < n; ++col) acc += dJdf[col];
      state.readout_bias -= tc.learning_rate * acc;
    }
  }

  if (tc.snapshot_every > 0) {
    const ForwardTrace trace = forward(state, config, x);
    const auto [loss, dJdf] = loss_and_grad(trace.output, labels, tc.loss);
    (void)dJdf;
    if (!std::isfinite(loss)) throw NonfiniteLoss("final loss is non-finite");
    take_snapshot(tc.steps, loss, trace);
  }
  return {std::move(state), std::move(series)};
}

}  // namespace ntk

#endif  // NTK_TRAINING_HPP
