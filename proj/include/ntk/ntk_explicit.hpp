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

#ifndef NTK_NTK_EXPLICIT_HPP
#define NTK_NTK_EXPLICIT_HPP

#include <string>
#include <utility>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"
#include "ntk/mlp.hpp"

namespace ntk {

/// Ordered name -> matrix map. Insertion order is the library-wide parameter
/// ordering, so exports and CLI listings enumerate deterministically.
template <class T>
struct NamedMatsT {
  std::vector<std::pair<std::string, MatT<T>>> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  void add(std::string name, MatT<T> m) { items.emplace_back(std::move(name), std::move(m)); }

  bool has(const std::string& name) const {
    for (const auto& [key, _] : items)
      if (key == name) return true;
    return false;
  }

  const MatT<T>& at(const std::string& name) const {
    for (const auto& [key, value] : items)
      if (key == name) return value;
    throw IndexOutOfRange("no entry named '" + name + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& [key, _] : items) out.push_back(key);
    return out;
  }
};

/// Per-parameter-tensor NTK components; each is n x n symmetric PSD and their
/// sum is the full kernel.
template <class T>
using NTKComponentsT = NamedMatsT<T>;
using NTKComponents = NTKComponentsT<double>;

/// Backward-chain matrices. s[l-1] holds S_l of shape (d_l x n): column alpha
/// is the gradient of f(x_alpha) with respect to Z_l(:, alpha).
template <class T>
struct SMatricesT {
  std::vector<MatT<T>> s;  // S_1 .. S_L
};

using SMatrices = SMatricesT<double>;

/// One backward sweep over the whole batch:
///   S_L = scale_L * sigma'(Z_L) (.) broadcast(w)
///   S_l = scale_l * sigma'(Z_l) (.) (W_{l+1} S_{l+1})   for l = L-1 .. 1
/// where sigma' is applied entrywise to the stored preactivations. The sweep
/// stores all L matrices so downstream Gram assembly can run per layer.
template <class T>
SMatricesT<T> compute_s_matrices(const ForwardTraceT<T>& trace, const MLPStateT<T>& state,
                                 const NetworkConfig& config) {
  const std::size_t depth = config.depth();
  if (depth == 0) {
    throw EmptyNetwork("compute_s_matrices: network has no hidden layers");
  }

  SMatricesT<T> result;
  result.s.resize(depth, MatT<T>(1, 1));

  const MatT<T>& z_last = trace.preacts[depth - 1];
  const std::size_t n = z_last.cols();
  MatT<T> s_next(z_last.rows(), n);
  const T scale_last = config.layer_scale<T>(depth);
  for (std::size_t col = 0; col < n; ++col) {
    const T* zc = z_last.col(col);
    T* sc = s_next.col(col);
    for (std::size_t i = 0; i < z_last.rows(); ++i) {
      const T d = activation_and_derivative(config.activation, zc[i]).second;
      sc[i] = scale_last * d * state.readout_weight[i];
    }
  }
  result.s[depth - 1] = std::move(s_next);

  for (std::size_t l = depth - 1; l >= 1; --l) {
    MatT<T> back = multiply_a_b(state.weights[l], result.s[l]);  // W_{l+1} S_{l+1}
    const MatT<T>& z = trace.preacts[l - 1];
    const T scale = config.layer_scale<T>(l);
    MatT<T> s(z.rows(), n);
    for (std::size_t idx = 0; idx < z.size(); ++idx) {
      const T d = activation_and_derivative(config.activation, z.data()[idx]).second;
      s.data()[idx] = scale * d * back.data()[idx];
    }
    result.s[l - 1] = std::move(s);
  }
  return result;
}

/// Explicit layerwise NTK from one forward trace:
///   layer{l}.weight = gram(S_l) (.) gram(X_{l-1})
///   layer{l}.bias   = gram(S_l)
///   readout.weight  = gram(X_L)
///   readout.bias    = all-ones        (the scalar bias has gradient 1)
/// Bias components appear only when requested; include_bias defaults to the
/// config flag and is switched off by the trainer when biases are frozen.
template <class T>
NTKComponentsT<T> explicit_ntk(const ForwardTraceT<T>& trace, const MLPStateT<T>& state,
                               const NetworkConfig& config, bool include_bias) {
  const std::size_t depth = config.depth();
  const std::size_t n = trace.acts.front().cols();

  NTKComponentsT<T> components;
  if (depth > 0) {
    const SMatricesT<T> s = compute_s_matrices(trace, state, config);
    for (std::size_t l = 1; l <= depth; ++l) {
      MatT<T> gram_s = gram(s.s[l - 1]);
      components.add("layer" + std::to_string(l) + ".weight",
                     hadamard(gram_s, gram(trace.acts[l - 1])));
      if (include_bias)
        components.add("layer" + std::to_string(l) + ".bias", std::move(gram_s));
    }
  }
  components.add("readout.weight", gram(trace.acts.back()));
  if (include_bias) components.add("readout.bias", MatT<T>::ones(n, n));
  return components;
}

template <class T>
NTKComponentsT<T> explicit_ntk(const ForwardTraceT<T>& trace, const MLPStateT<T>& state,
                               const NetworkConfig& config) {
  return explicit_ntk(trace, state, config, config.use_bias);
}

/// Entrywise sum of all components = the full NTK.
template <class T>
MatT<T> sum_components(const NTKComponentsT<T>& components) {
  if (components.empty()) throw Error("sum_components: no components");
  MatT<T> total = components.items.front().second;
  for (std::size_t i = 1; i < components.items.size(); ++i)
    add_inplace(total, components.items[i].second);
  return total;
}

}  // namespace ntk

#endif  // NTK_NTK_EXPLICIT_HPP
