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

#ifndef NTK_MLP_HPP
#define NTK_MLP_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"
#include "ntk/rng.hpp"

namespace ntk {

enum class Activation { kTanh, kRelu, kIdentity, kSigmoid };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw Error("unknown activation '" + name + "'");
}

/// sigma(z) and sigma'(z) for one scalar. The relu derivative at exactly 0 is
/// defined as 0; the choice is pinned so both differentiation paths agree.
template <class T>
std::pair<T, T> activation_and_derivative(Activation kind, T z) {
  switch (kind) {
    case Activation::kTanh: {
      const T t = std::tanh(z);
      return {t, T{1} - t * t};
    }
    case Activation::kRelu:
      return z > T{0} ? std::pair<T, T>{z, T{1}} : std::pair<T, T>{T{0}, T{0}};
    case Activation::kIdentity:
      return {z, T{1}};
    case Activation::kSigmoid: {
      const T s = T{1} / (T{1} + std::exp(-z));
      return {s, s * (T{1} - s)};
    }
  }
  return {T{0}, T{0}};
}

/// Architecture of a single-output MLP. widths = [d_0, d_1, ..., d_L] lists
/// the input width followed by the hidden widths; the readout is always one
/// neuron. With ntk_parameterization, each hidden layer's activation output
/// is divided by sqrt(layer width).
struct NetworkConfig {
  std::vector<std::size_t> widths;
  Activation activation = Activation::kTanh;
  bool use_bias = false;
  bool ntk_parameterization = true;
  bool normal_bias_init = false;  // biases start at zero unless set

  std::size_t depth() const { return widths.size() - 1; }  // hidden layer count L
  std::size_t input_width() const { return widths.front(); }
  std::size_t last_width() const { return widths.back(); }  // d_L feeding the readout

  void validate() const {
    if (widths.empty()) throw Error("NetworkConfig: widths must be nonempty");
    for (const std::size_t w : widths)
      if (w == 0) throw Error("NetworkConfig: all widths must be >= 1");
  }

  /// Scale multiplying sigma(Z_l); 1/sqrt(d_l) under the kernel
  /// parameterization, 1 otherwise.
  template <class T = double>
  T layer_scale(std::size_t l) const {
    return ntk_parameterization ? T{1} / std::sqrt(static_cast<T>(widths[l])) : T{1};
  }
};

/// All parameter tensors of an MLP. W_l has shape (d_{l-1}, d_l) so the
/// forward pass computes W_l^T X. Bias vectors are present iff use_bias.
template <class T>
struct MLPStateT {
  std::vector<MatT<T>> weights;        // W_1 .. W_L
  std::vector<std::vector<T>> biases;  // B_1 .. B_L, empty when bias-free
  std::vector<T> readout_weight;       // w, length d_L
  T readout_bias = T{0};               // b
};

using MLPState = MLPStateT<double>;

/// Everything the backward recursions need from one forward pass:
/// Z_l = W_l^T X_{l-1} (+ B_l), X_l = scale_l * sigma(Z_l), X_0 = input.
/// output is f = w^T X_L + b, before any readout activation.
template <class T>
struct ForwardTraceT {
  std::vector<MatT<T>> preacts;  // Z_1 .. Z_L
  std::vector<MatT<T>> acts;     // X_0 .. X_L
  std::vector<T> output;         // f, length n
};

using ForwardTrace = ForwardTraceT<double>;

/// Ordered parameter-tensor names: layer{l}.weight (and .bias) per hidden
/// layer, then readout.weight (and readout.bias). This ordering is the one
/// every per-tensor map in the library enumerates in.
inline std::vector<std::string> parameter_names(const NetworkConfig& config) {
  std::vector<std::string> names;
  for (std::size_t l = 1; l <= config.depth(); ++l) {
    names.push_back("layer" + std::to_string(l) + ".weight");
    if (config.use_bias) names.push_back("layer" + std::to_string(l) + ".bias");
  }
  names.push_back("readout.weight");
  if (config.use_bias) names.push_back("readout.bias");
  return names;
}

/// Element count of one named parameter tensor.
inline std::size_t parameter_count(const NetworkConfig& config, const std::string& name) {
  if (name == "readout.weight") return config.last_width();
  if (name == "readout.bias") return 1;
  for (std::size_t l = 1; l <= config.depth(); ++l) {
    if (name == "layer" + std::to_string(l) + ".weight")
      return config.widths[l - 1] * config.widths[l];
    if (name == "layer" + std::to_string(l) + ".bias") return config.widths[l];
  }
  throw IndexOutOfRange("unknown parameter tensor '" + name + "'");
}

inline std::size_t total_parameter_count(const NetworkConfig& config) {
  std::size_t total = 0;
  for (const auto& name : parameter_names(config)) total += parameter_count(config, name);
  return total;
}

/// Draws all weights i.i.d. standard normal from the pinned generator; biases
/// start at zero unless normal_bias_init. Draw order is fixed (W_1..W_L
/// column-major, then w, then biases), so a seed fully determines the state.
template <class T = double>
MLPStateT<T> init_network(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  MLPStateT<T> state;
  const std::size_t depth = config.depth();
  state.weights.reserve(depth);
  for (std::size_t l = 1; l <= depth; ++l) {
    MatT<T> w(config.widths[l - 1], config.widths[l]);
    for (std::size_t idx = 0; idx < w.size(); ++idx)
      w.data()[idx] = static_cast<T>(rng.next_normal());
    state.weights.push_back(std::move(w));
  }
  state.readout_weight.resize(config.last_width());
  for (auto& v : state.readout_weight) v = static_cast<T>(rng.next_normal());
  if (config.use_bias) {
    state.biases.resize(depth);
    for (std::size_t l = 1; l <= depth; ++l) {
      state.biases[l - 1].assign(config.widths[l], T{0});
      if (config.normal_bias_init)
        for (auto& v : state.biases[l - 1]) v = static_cast<T>(rng.next_normal());
    }
    state.readout_bias = config.normal_bias_init ? static_cast<T>(rng.next_normal()) : T{0};
  }
  return state;
}

/// Forward pass over a batch (one datapoint per column), recording the trace
/// needed by the backward recursions. Output is pre-readout-activation.
template <class T>
ForwardTraceT<T> forward(const MLPStateT<T>& state, const NetworkConfig& config,
                         const MatT<T>& x) {
  config.validate();
  if (x.rows() != config.input_width()) {
    throw ShapeMismatch("forward: input has " + std::to_string(x.rows()) +
                        " rows, network expects " + std::to_string(config.input_width()));
  }
  const std::size_t depth = config.depth();
  const std::size_t n = x.cols();

  ForwardTraceT<T> trace;
  trace.acts.reserve(depth + 1);
  trace.preacts.reserve(depth);
  trace.acts.push_back(x);

  for (std::size_t l = 1; l <= depth; ++l) {
    MatT<T> z = multiply_at_b(state.weights[l - 1], trace.acts[l - 1]);
    if (config.use_bias) {
      const std::vector<T>& b = state.biases[l - 1];
      for (std::size_t col = 0; col < n; ++col) {
        T* zc = z.col(col);
        for (std::size_t i = 0; i < z.rows(); ++i) zc[i] += b[i];
      }
    }
    const T scale = config.layer_scale<T>(l);
    MatT<T> act(z.rows(), n);
    for (std::size_t idx = 0; idx < z.size(); ++idx)
      act.data()[idx] = scale * activation_and_derivative(config.activation, z.data()[idx]).first;
    trace.preacts.push_back(std::move(z));
    trace.acts.push_back(std::move(act));
  }

  const MatT<T>& last = trace.acts.back();
  trace.output.resize(n);
  for (std::size_t col = 0; col < n; ++col) {
    const T* c = last.col(col);
    T acc{0};
    for (std::size_t i = 0; i < last.rows(); ++i) acc += state.readout_weight[i] * c[i];
    trace.output[col] = acc + (config.use_bias ? state.readout_bias : T{0});
  }
  return trace;
}

}  // namespace ntk

#endif  // NTK_MLP_HPP
