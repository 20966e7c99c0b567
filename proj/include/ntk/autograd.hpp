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

#ifndef NTK_AUTOGRAD_HPP
#define NTK_AUTOGRAD_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"
#include "ntk/mlp.hpp"
#include "ntk/ntk_explicit.hpp"
#include "ntk/parallel.hpp"

// Ground-truth differentiation path. This is a second, standalone derivation
// of the per-sample gradients (plain reverse-mode backprop over one column at
// a time), kept independent of the S-matrix sweep so the two code paths catch
// each other's convention errors.

namespace ntk {

/// Flattened per-sample gradients, one parameter tensor per entry: block t has
/// shape (p_t x n) and column alpha is the gradient of f(x_alpha) with respect
/// to that tensor (column-major flattening for weight matrices).
template <class T>
using PerSampleGradientsT = NamedMatsT<T>;
using PerSampleGradients = PerSampleGradientsT<double>;

namespace detail {

/// Scratch space for one sample's forward/backward sweep.
template <class T>
struct BackpropScratch {
  std::vector<std::vector<T>> acts;     // x^0 .. x^L
  std::vector<std::vector<T>> preacts;  // z^1 .. z^L
  std::vector<T> delta;
  std::vector<T> back;
};

/// Per-sample reverse sweep. Runs its own scalar forward pass on one input
/// column, then accumulates df/dtensor for every tensor, written through
/// `emit(tensor_index, values, count)` in parameter_names order.
template <class T, class Emit>
void backprop_single(const MLPStateT<T>& state, const NetworkConfig& config,
                     const T* x_col, BackpropScratch<T>& scratch, Emit&& emit) {
  const std::size_t depth = config.depth();
  scratch.acts.resize(depth + 1);
  scratch.preacts.resize(depth);

  scratch.acts[0].assign(x_col, x_col + config.input_width());
  for (std::size_t l = 1; l <= depth; ++l) {
    const MatT<T>& w = state.weights[l - 1];
    const std::vector<T>& prev = scratch.acts[l - 1];
    std::vector<T>& z = scratch.preacts[l - 1];
    std::vector<T>& act = scratch.acts[l];
    z.assign(config.widths[l], T{0});
    act.assign(config.widths[l], T{0});
    for (std::size_t i = 0; i < z.size(); ++i) {
      const T* wc = w.col(i);
      T acc{0};
      for (std::size_t k = 0; k < prev.size(); ++k) acc += wc[k] * prev[k];
      if (config.use_bias) acc += state.biases[l - 1][i];
      z[i] = acc;
    }
    const T scale = config.layer_scale<T>(l);
    for (std::size_t i = 0; i < z.size(); ++i)
      act[i] = scale * activation_and_derivative(config.activation, z[i]).first;
  }

  // Tensor indices follow parameter_names(config): interleaved layer tensors,
  // then the readout pair.
  const std::size_t per_layer = config.use_bias ? 2 : 1;
  const std::size_t readout_weight_idx = depth * per_layer;

  emit(readout_weight_idx, scratch.acts[depth].data(), scratch.acts[depth].size());
  if (config.use_bias) {
    const T one{1};
    emit(readout_weight_idx + 1, &one, 1);
  }
  if (depth == 0) return;

  // delta_l = df/dZ_l for this sample.
  std::vector<T>& delta = scratch.delta;
  std::vector<T>& back = scratch.back;
  delta.assign(config.widths[depth], T{0});
  const T scale_last = config.layer_scale<T>(depth);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const T d = activation_and_derivative(config.activation, scratch.preacts[depth - 1][i]).second;
    delta[i] = scale_last * d * state.readout_weight[i];
  }

  for (std::size_t l = depth; l >= 1; --l) {
    const std::vector<T>& prev = scratch.acts[l - 1];
    const std::size_t rows = prev.size();
    const std::size_t cols = config.widths[l];

    // df/dW_l = prev (outer) delta, flattened column-major.
    std::vector<T> wgrad(rows * cols);
    for (std::size_t i = 0; i < cols; ++i)
      for (std::size_t k = 0; k < rows; ++k) wgrad[k + i * rows] = prev[k] * delta[i];
    emit((l - 1) * per_layer, wgrad.data(), wgrad.size());
    if (config.use_bias) emit((l - 1) * per_layer + 1, delta.data(), delta.size());

    if (l == 1) break;
    const MatT<T>& w = state.weights[l - 1];
    back.assign(rows, T{0});
    for (std::size_t i = 0; i < cols; ++i) {
      const T* wc = w.col(i);
      const T di = delta[i];
      for (std::size_t k = 0; k < rows; ++k) back[k] += wc[k] * di;
    }
    const T scale = config.layer_scale<T>(l - 1);
    delta.assign(rows, T{0});
    for (std::size_t k = 0; k < rows; ++k) {
      const T d = activation_and_derivative(config.activation, scratch.preacts[l - 2][k]).second;
      delta[k] = scale * d * back[k];
    }
  }
}

}  // namespace detail

/// Per-sample gradients for every parameter tensor, one input column at a
/// time. Samples are independent, so the loop may run in parallel; each
/// column is written by exactly one worker.
template <class T>
PerSampleGradientsT<T> per_sample_gradients(const MLPStateT<T>& state,
                                            const NetworkConfig& config, const MatT<T>& x) {
  config.validate();
  if (x.rows() != config.input_width()) {
    throw ShapeMismatch("per_sample_gradients: input has " + std::to_string(x.rows()) +
                        " rows, network expects " + std::to_string(config.input_width()));
  }
  const std::size_t n = x.cols();
  const std::vector<std::string> names = parameter_names(config);

  PerSampleGradientsT<T> grads;
  for (const auto& name : names) grads.add(name, MatT<T>(parameter_count(config, name), n));

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    detail::BackpropScratch<T> scratch;
    for (std::size_t sample = begin; sample < end; ++sample) {
      detail::backprop_single(state, config, x.col(sample), scratch,
                              [&](std::size_t tensor, const T* values, std::size_t count) {
                                T* dst = grads.items[tensor].second.col(sample);
                                for (std::size_t i = 0; i < count; ++i) dst[i] = values[i];
                              });
    }
  });
  return grads;
}

/// Full NTK from per-sample gradients: sum of the per-tensor Gram matrices.
template <class T>
MatT<T> oracle_full_ntk(const PerSampleGradientsT<T>& grads) {
  if (grads.empty()) throw Error("oracle_full_ntk: no gradient blocks");
  MatT<T> total = gram(grads.items.front().second);
  for (std::size_t t = 1; t < grads.items.size(); ++t)
    add_inplace(total, gram(grads.items[t].second));
  return total;
}

/// Layerwise NTK from per-sample gradients; names align with explicit_ntk.
template <class T>
NTKComponentsT<T> oracle_layerwise_ntk(const PerSampleGradientsT<T>& grads) {
  NTKComponentsT<T> components;
  for (const auto& [name, block] : grads.items) components.add(name, gram(block));
  return components;
}

/// The whole Jacobian as one stacked (P x n) matrix, blocks in
/// parameter_names order. Deliberately memory-hungry; this is the
/// full-Jacobian benchmark method.
template <class T>
MatT<T> full_jacobian(const MLPStateT<T>& state, const NetworkConfig& config,
                      const MatT<T>& x) {
  config.validate();
  const std::size_t n = x.cols();
  const std::vector<std::string> names = parameter_names(config);
  std::vector<std::size_t> offsets(names.size() + 1, 0);
  for (std::size_t t = 0; t < names.size(); ++t)
    offsets[t + 1] = offsets[t] + parameter_count(config, names[t]);

  MatT<T> jac(offsets.back(), n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    detail::BackpropScratch<T> scratch;
    for (std::size_t sample = begin; sample < end; ++sample) {
      detail::backprop_single(state, config, x.col(sample), scratch,
                              [&](std::size_t tensor, const T* values, std::size_t count) {
                                T* dst = jac.col(sample) + offsets[tensor];
                                for (std::size_t i = 0; i < count; ++i) dst[i] = values[i];
                              });
    }
  });
  return jac;
}

/// Full NTK via the stacked Jacobian (benchmark method: peak memory holds the
/// whole P x n matrix).
template <class T>
MatT<T> oracle_full_ntk(const MLPStateT<T>& state, const NetworkConfig& config,
                        const MatT<T>& x) {
  return gram(full_jacobian(state, config, x));
}

/// Layerwise NTK holding only one gradient block at a time: for each tensor,
/// re-runs the per-sample sweep, keeps that tensor's block, Grams it and
/// drops it. Slower than the stacked method (the sweep repeats per tensor)
/// but its peak memory is the largest single block instead of the sum.
template <class T>
NTKComponentsT<T> oracle_layerwise_ntk(const MLPStateT<T>& state, const NetworkConfig& config,
                                       const MatT<T>& x) {
  config.validate();
  const std::size_t n = x.cols();
  const std::vector<std::string> names = parameter_names(config);

  NTKComponentsT<T> components;
  for (std::size_t t = 0; t < names.size(); ++t) {
    MatT<T> block(parameter_count(config, names[t]), n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      detail::BackpropScratch<T> scratch;
      for (std::size_t sample = begin; sample < end; ++sample) {
        detail::backprop_single(state, config, x.col(sample), scratch,
                                [&](std::size_t tensor, const T* values, std::size_t count) {
                                  if (tensor != t) return;
                                  T* dst = block.col(sample);
                                  for (std::size_t i = 0; i < count; ++i) dst[i] = values[i];
                                });
      }
    });
    components.add(names[t], gram(block));
  }
  return components;
}

/// Mutable reference to one flattened parameter element.
template <class T>
T& parameter_element(MLPStateT<T>& state, const NetworkConfig& config,
                     const std::string& tensor_name, std::size_t index) {
  const std::size_t count = parameter_count(config, tensor_name);
  if (index >= count) {
    throw IndexOutOfRange("index " + std::to_string(index) + " out of range for " +
                          tensor_name + " (" + std::to_string(count) + " elements)");
  }
  if (tensor_name == "readout.weight") return state.readout_weight[index];
  if (tensor_name == "readout.bias") return state.readout_bias;
  for (std::size_t l = 1; l <= config.depth(); ++l) {
    if (tensor_name == "layer" + std::to_string(l) + ".weight")
      return state.weights[l - 1].data()[index];
    if (tensor_name == "layer" + std::to_string(l) + ".bias")
      return state.biases[l - 1][index];
  }
  throw IndexOutOfRange("unknown parameter tensor '" + tensor_name + "'");
}

/// Default central-difference step: 1e-6 * max(1, |theta|) balances
/// truncation against cancellation at fp64.
template <class T>
T default_fd_step(T theta) {
  return T{1e-6} * std::max(T{1}, std::abs(theta));
}

/// Central finite difference of f with respect to one parameter element,
/// evaluated for all n datapoints: (f(theta + h e) - f(theta - h e)) / 2h.
template <class T>
std::vector<T> finite_diff_gradient(const MLPStateT<T>& state, const NetworkConfig& config,
                                    const MatT<T>& x, const std::string& tensor_name,
                                    std::size_t index, T h) {
  if (!(h > T{0})) throw Error("finite_diff_gradient: h must be positive");
  MLPStateT<T> perturbed = state;
  T& element = parameter_element(perturbed, config, tensor_name, index);
  const T original = element;

  element = original + h;
  const std::vector<T> plus = forward(perturbed, config, x).output;
  element = original - h;
  const std::vector<T> minus = forward(perturbed, config, x).output;

  std::vector<T> grad(plus.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (plus[i] - minus[i]) / (2 * h);
  return grad;
}

}  // namespace ntk

#endif  // NTK_AUTOGRAD_HPP
