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

#ifndef NTK_KERNEL_MACHINE_HPP
#define NTK_KERNEL_MACHINE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"

// Unit-weight sign kernel machine: y_i = sgn(sum_k Y_k K(x_i, X_k)), scoring
// a kernel's discriminatory power without any fitting.

namespace ntk {

/// Cross-kernel block plus the training labels it scores against. Rows of
/// k_eval index evaluation points, columns index training points.
struct LabeledKernel {
  Mat k_eval;
  std::vector<double> train_labels;  // each exactly -1 or +1
};

inline std::vector<double> labels01_to_pm1(const std::vector<int>& labels01) {
  std::vector<double> out(labels01.size());
  for (std::size_t i = 0; i < labels01.size(); ++i) out[i] = labels01[i] == 0 ? -1.0 : 1.0;
  return out;
}

/// Sign predictions for every evaluation row; sign(0) maps to +1 (fixed
/// tie-break so golden outputs are stable).
inline std::vector<double> kernel_predict(const LabeledKernel& lk) {
  if (lk.k_eval.cols() != lk.train_labels.size()) {
    throw ShapeMismatch("kernel_predict: kernel has " + std::to_string(lk.k_eval.cols()) +
                        " columns, labels have " + std::to_string(lk.train_labels.size()));
  }
  for (const double y : lk.train_labels) {
    if (y != 1.0 && y != -1.0) throw Error("kernel_predict: train labels must be +/-1");
  }
  const std::size_t m = lk.k_eval.rows();
  const std::size_t n = lk.k_eval.cols();
  std::vector<double> predictions(m);
  for (std::size_t i = 0; i < m; ++i) {
    double score = 0.0;
    for (std::size_t k = 0; k < n; ++k) score += lk.train_labels[k] * lk.k_eval(i, k);
    predictions[i] = score >= 0.0 ? 1.0 : -1.0;
  }
  return predictions;
}

/// Fraction of predictions whose sign agrees with true_labels.
inline double kernel_accuracy(const LabeledKernel& lk, const std::vector<double>& true_labels) {
  if (lk.k_eval.rows() != true_labels.size()) {
    throw ShapeMismatch("kernel_accuracy: " + std::to_string(lk.k_eval.rows()) +
                        " predictions vs " + std::to_string(true_labels.size()) + " labels");
  }
  const std::vector<double> predictions = kernel_predict(lk);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == true_labels[i]) ++agree;
  return static_cast<double>(agree) / static_cast<double>(predictions.size());
}

}  // namespace ntk

#endif  // NTK_KERNEL_MACHINE_HPP
