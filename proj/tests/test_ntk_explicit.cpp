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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "ntk/autograd.hpp"
#include "ntk/mlp.hpp"
#include "ntk/ntk_explicit.hpp"
#include "testing_support.hpp"

using ntk::Activation;
using ntk::Mat;
using ntk::NetworkConfig;

namespace {

NetworkConfig make_config(std::vector<std::size_t> widths, Activation act, bool bias,
                          bool ntk_param) {
  NetworkConfig config;
  config.widths = std::move(widths);
  config.activation = act;
  config.use_bias = bias;
  config.ntk_parameterization = ntk_param;
  return config;
}

// Per-sample chain oracle for S_l: walks one datapoint through explicit
// diagonal-derivative matrices and weight products, right to left. Uses its
// own scalar forward pass; shares nothing with the batched sweep.
std::vector<double> chain_s_column(const ntk::MLPState& state, const NetworkConfig& config,
                                   const Mat& x, std::size_t sample, std::size_t layer) {
  const std::size_t depth = config.depth();
  // Scalar forward to collect preactivations for this sample.
  std::vector<std::vector<double>> zs(depth);
  std::vector<double> current(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) current[i] = x(i, sample);
  for (std::size_t l = 1; l <= depth; ++l) {
    const Mat& w = state.weights[l - 1];
    zs[l - 1].assign(config.widths[l], 0.0);
    for (std::size_t i = 0; i < config.widths[l]; ++i) {
      double z = config.use_bias ? state.biases[l - 1][i] : 0.0;
      for (std::size_t k = 0; k < current.size(); ++k) z += w(k, i) * current[k];
      zs[l - 1][i] = z;
    }
    std::vector<double> next(config.widths[l]);
    const double scale = config.layer_scale(l);
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = scale * ntk::activation_and_derivative(config.activation, zs[l - 1][i]).first;
    current = std::move(next);
  }

  // v = scale_L * D_L * w, then v = scale_k * D_k * (W_{k+1} v) down to the
  // requested layer.
  std::vector<double> v(config.widths[depth]);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = config.layer_scale(depth) *
           ntk::activation_and_derivative(config.activation, zs[depth - 1][i]).second *
           state.readout_weight[i];
  }
  for (std::size_t k = depth - 1; k >= layer; --k) {
    const Mat& w = state.weights[k];  // W_{k+1}: (d_k x d_{k+1})
    std::vector<double> next(config.widths[k], 0.0);
    for (std::size_t r = 0; r < next.size(); ++r)
      for (std::size_t c = 0; c < v.size(); ++c) next[r] += w(r, c) * v[c];
    for (std::size_t r = 0; r < next.size(); ++r)
      next[r] *= config.layer_scale(k) *
                 ntk::activation_and_derivative(config.activation, zs[k - 1][r]).second;
    v = std::move(next);
  }
  return v;
}

}  // namespace

TEST_CASE("S for a width-1 identity net is all ones") {
  const NetworkConfig config = make_config({1, 1}, Activation::kIdentity, false, true);
  auto state = ntk::init_network(config, 0);
  state.weights[0](0, 0) = 1.0;
  state.readout_weight = {1.0};
  const Mat x = Mat::ones(1, 3);
  const auto trace = ntk::forward(state, config, x);
  const auto s = ntk::compute_s_matrices(trace, state, config);
  REQUIRE(s.s.size() == 1);
  for (std::size_t j = 0; j < 3; ++j) CHECK(s.s[0](0, j) == 1.0);
}

TEST_CASE("S columns match the per-sample chain oracle") {
  ntk::Rng rng(101);
  const NetworkConfig config = make_config({2, 2, 2}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 17);
  const Mat x = ntk_test::random_matrix(2, 4, rng);
  const auto trace = ntk::forward(state, config, x);
  const auto s = ntk::compute_s_matrices(trace, state, config);

  for (std::size_t layer = 1; layer <= 2; ++layer) {
    for (std::size_t sample = 0; sample < 4; ++sample) {
      const auto expected = chain_s_column(state, config, x, sample, layer);
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(s.s[layer - 1](i, sample) == Catch::Approx(expected[i]).margin(1e-14));
      }
    }
  }
}

TEST_CASE("S vanishes when relu kills every preactivation") {
  const NetworkConfig config = make_config({3, 4, 4}, Activation::kRelu, false, true);
  auto state = ntk::init_network(config, 5);
  for (std::size_t i = 0; i < state.weights[0].size(); ++i)
    state.weights[0].data()[i] = -std::abs(state.weights[0].data()[i]);
  Mat x = Mat::ones(3, 5);
  const auto trace = ntk::forward(state, config, x);
  const auto s = ntk::compute_s_matrices(trace, state, config);
  for (const Mat& m : s.s) CHECK(ntk::max_abs(m) == 0.0);
}

TEST_CASE("compute_s_matrices rejects a network without hidden layers") {
  const NetworkConfig config = make_config({3}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 1);
  const auto trace = ntk::forward(state, config, Mat::ones(3, 2));
  CHECK_THROWS_AS(ntk::compute_s_matrices(trace, state, config), ntk::EmptyNetwork);
}

TEST_CASE("explicit NTK of the linear model on identity data") {
  const NetworkConfig config = make_config({2}, Activation::kTanh, true, true);
  auto state = ntk::init_network(config, 90);
  const auto trace = ntk::forward(state, config, Mat::identity(2));
  const auto components = ntk::explicit_ntk(trace, state, config);

  REQUIRE(components.size() == 2);
  CHECK(components.names()[0] == "readout.weight");
  CHECK(components.names()[1] == "readout.bias");
  CHECK(ntk::max_abs_diff(components.at("readout.weight"), Mat::identity(2)) == 0.0);
  CHECK(ntk::max_abs_diff(components.at("readout.bias"), Mat::ones(2, 2)) == 0.0);

  const Mat expected = Mat::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  CHECK(ntk::max_abs_diff(ntk::sum_components(components), expected) == 0.0);
}

TEST_CASE("explicit NTK matches the gradient oracle on the benchmark MLP") {
  ntk::Rng rng(2025);
  const NetworkConfig config = make_config({100, 100, 100, 100}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 1);
  const Mat x = ntk_test::random_matrix(100, 50, rng);
  const auto trace = ntk::forward(state, config, x);

  const Mat explicit_sum = ntk::sum_components(ntk::explicit_ntk(trace, state, config));
  const Mat oracle = ntk::oracle_full_ntk(ntk::per_sample_gradients(state, config, x));
  CHECK(ntk::rel_frobenius_diff(explicit_sum, oracle) < 1e-10);

  for (std::size_t i = 0; i < 50; ++i) CHECK(explicit_sum(i, i) > 0.0);
}

TEST_CASE("every component matches its oracle counterpart") {
  ntk::Rng rng(664);
  for (int trial = 0; trial < 15; ++trial) {
    const NetworkConfig config = ntk_test::random_config(rng);
    const auto state = ntk::init_network(config, rng.next_u64());
    const Mat x = ntk_test::random_matrix(config.input_width(), 1 + rng.next_below(8), rng);
    const auto trace = ntk::forward(state, config, x);

    const auto explicit_components = ntk::explicit_ntk(trace, state, config);
    const auto oracle_components =
        ntk::oracle_layerwise_ntk(ntk::per_sample_gradients(state, config, x));

    REQUIRE(explicit_components.names() == oracle_components.names());
    for (const auto& [name, mat] : explicit_components.items) {
      CHECK(ntk::rel_frobenius_diff(mat, oracle_components.at(name)) < 1e-10);
    }
  }
}

TEST_CASE("bias components equal gram(S) exactly") {
  // The ones-mask leaves S untouched, so layer bias components are plain
  // Gram matrices of the S sweep.
  ntk::Rng rng(31);
  const NetworkConfig config = make_config({4, 5, 6}, Activation::kTanh, true, true);
  const auto state = ntk::init_network(config, 8);
  const Mat x = ntk_test::random_matrix(4, 7, rng);
  const auto trace = ntk::forward(state, config, x);
  const auto s = ntk::compute_s_matrices(trace, state, config);
  const auto components = ntk::explicit_ntk(trace, state, config);

  for (std::size_t l = 1; l <= 2; ++l) {
    const Mat masked = ntk::hadamard(s.s[l - 1], Mat::ones(s.s[l - 1].rows(), 7));
    CHECK(ntk::max_abs_diff(masked, s.s[l - 1]) == 0.0);
    CHECK(ntk::max_abs_diff(components.at("layer" + std::to_string(l) + ".bias"),
                            ntk::gram(s.s[l - 1])) == 0.0);
  }
}

TEST_CASE("components are symmetric and PSD") {
  ntk::Rng rng(41);
  const NetworkConfig config = make_config({6, 8, 8}, Activation::kTanh, true, true);
  const auto state = ntk::init_network(config, 3);
  const Mat x = ntk_test::random_matrix(6, 9, rng);
  const auto components = ntk::explicit_ntk(ntk::forward(state, config, x), state, config);

  for (const auto& [name, k] : components.items) {
    CHECK(ntk::max_asymmetry(k) == 0.0);
    const auto eigs = ntk::sym_eigvals(k, 0.0);
    CHECK(eigs.back() >= -1e-9 * std::max(eigs.front(), 0.0));
  }
}

TEST_CASE("permuting datapoints conjugates the NTK") {
  ntk::Rng rng(59);
  const NetworkConfig config = make_config({5, 6, 4}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 12);
  const Mat x = ntk_test::random_matrix(5, 6, rng);

  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::swap(perm[0], perm[4]);
  std::swap(perm[2], perm[5]);
  Mat xp(5, 6);
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t i = 0; i < 5; ++i) xp(i, j) = x(i, perm[j]);

  const Mat k = ntk::sum_components(
      ntk::explicit_ntk(ntk::forward(state, config, x), state, config));
  const Mat kp = ntk::sum_components(
      ntk::explicit_ntk(ntk::forward(state, config, xp), state, config));
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t i = 0; i < 6; ++i) CHECK(kp(i, j) == k(perm[i], perm[j]));
}

TEST_CASE("oracle equivalence holds with the parameterization off") {
  ntk::Rng rng(67);
  const NetworkConfig config = make_config({4, 7, 5}, Activation::kTanh, true, false);
  const auto state = ntk::init_network(config, 23);
  const Mat x = ntk_test::random_matrix(4, 6, rng);
  const auto trace = ntk::forward(state, config, x);
  const Mat explicit_sum = ntk::sum_components(ntk::explicit_ntk(trace, state, config));
  const Mat oracle = ntk::oracle_full_ntk(ntk::per_sample_gradients(state, config, x));
  CHECK(ntk::rel_frobenius_diff(explicit_sum, oracle) < 1e-10);
}

TEST_CASE("sum_components basics") {
  ntk::NTKComponents single;
  single.add("readout.weight", Mat::identity(3));
  CHECK(ntk::max_abs_diff(ntk::sum_components(single), Mat::identity(3)) == 0.0);

  ntk::NTKComponents pair;
  pair.add("a", Mat::ones(2, 2));
  pair.add("b", Mat::ones(2, 2));
  const Mat two = ntk::sum_components(pair);
  CHECK(two(0, 0) == 2.0);
  CHECK(two(1, 0) == 2.0);

  ntk::NTKComponents empty;
  CHECK_THROWS_AS(ntk::sum_components(empty), ntk::Error);
}
