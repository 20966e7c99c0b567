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
#include <string>

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

}  // namespace

TEST_CASE("linear model gradients are the inputs themselves") {
  const NetworkConfig config = make_config({3}, Activation::kTanh, true, true);
  const auto state = ntk::init_network(config, 4);
  ntk::Rng rng(1);
  const Mat x = ntk_test::random_matrix(3, 5, rng);
  const auto grads = ntk::per_sample_gradients(state, config, x);

  REQUIRE(grads.names() == std::vector<std::string>{"readout.weight", "readout.bias"});
  CHECK(ntk::max_abs_diff(grads.at("readout.weight"), x) == 0.0);
  CHECK(ntk::max_abs_diff(grads.at("readout.bias"), Mat::ones(1, 5)) == 0.0);
}

TEST_CASE("backprop matches central finite differences") {
  ntk::Rng rng(404);
  for (int trial = 0; trial < 6; ++trial) {
    NetworkConfig config = ntk_test::random_config(rng, /*max_depth=*/3, /*max_width=*/8);
    const auto state = ntk::init_network(config, rng.next_u64());
    const Mat x = ntk_test::random_matrix(config.input_width(), 1 + rng.next_below(4), rng);
    const auto grads = ntk::per_sample_gradients(state, config, x);

    for (const auto& [name, block] : grads.items) {
      // Spot-check a few elements of each tensor.
      const std::size_t count = block.rows();
      for (const std::size_t index :
           {std::size_t{0}, count / 2, count - 1}) {
        auto probe = state;
        const double theta = ntk::parameter_element(probe, config, name, index);
        const double h = ntk::default_fd_step(theta);
        const auto fd = ntk::finite_diff_gradient(state, config, x, name, index, h);
        for (std::size_t sample = 0; sample < fd.size(); ++sample) {
          const double analytic = block(index, sample);
          const double tol = 1e-6 * std::max(1.0, std::abs(analytic));
          CHECK(std::abs(analytic - fd[sample]) <= tol);
        }
      }
    }
  }
}

TEST_CASE("first-layer weight gradients have the outer-product structure") {
  ntk::Rng rng(73);
  const NetworkConfig config = make_config({3, 4, 1}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 6);
  const Mat x = ntk_test::random_matrix(3, 5, rng);
  const auto trace = ntk::forward(state, config, x);
  const auto s = ntk::compute_s_matrices(trace, state, config);
  const auto grads = ntk::per_sample_gradients(state, config, x);
  const Mat& block = grads.at("layer1.weight");

  for (std::size_t sample = 0; sample < 5; ++sample) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        const double expected = x(k, sample) * s.s[0](i, sample);
        CHECK(block(k + i * 3, sample) == Catch::Approx(expected).margin(1e-14));
      }
    }
  }
}

TEST_CASE("oracle_full_ntk from hand-built blocks") {
  ntk::PerSampleGradients single;
  single.add("readout.weight", Mat::identity(2));
  CHECK(ntk::max_abs_diff(ntk::oracle_full_ntk(single), Mat::identity(2)) == 0.0);

  ntk::PerSampleGradients both;
  both.add("readout.weight", Mat::identity(2));
  both.add("readout.bias", Mat::ones(1, 2));
  const Mat expected = Mat::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  CHECK(ntk::max_abs_diff(ntk::oracle_full_ntk(both), expected) == 0.0);
}

TEST_CASE("blockwise sum equals the full oracle NTK") {
  ntk::Rng rng(88);
  const NetworkConfig config = make_config({5, 6, 7}, Activation::kTanh, true, true);
  const auto state = ntk::init_network(config, 14);
  const Mat x = ntk_test::random_matrix(5, 8, rng);
  const auto grads = ntk::per_sample_gradients(state, config, x);

  const Mat full = ntk::oracle_full_ntk(grads);
  const Mat resummed = ntk::sum_components(ntk::oracle_layerwise_ntk(grads));
  CHECK(ntk::rel_frobenius_diff(resummed, full) < 1e-14);
}

TEST_CASE("dual differentiation paths agree at fp64") {
  ntk::Rng rng(3001);
  const NetworkConfig config = make_config({10, 20, 20, 20, 20}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 2);
  const Mat x = ntk_test::random_matrix(10, 20, rng);
  const auto trace = ntk::forward(state, config, x);
  const Mat explicit_sum = ntk::sum_components(ntk::explicit_ntk(trace, state, config));
  const Mat oracle = ntk::oracle_full_ntk(ntk::per_sample_gradients(state, config, x));
  CHECK(ntk::rel_frobenius_diff(explicit_sum, oracle) < 1e-10);
}

TEST_CASE("a dead relu layer zeroes the same component in both paths") {
  const NetworkConfig config = make_config({3, 4, 4}, Activation::kRelu, false, true);
  auto state = ntk::init_network(config, 9);
  for (std::size_t i = 0; i < state.weights[0].size(); ++i)
    state.weights[0].data()[i] = -std::abs(state.weights[0].data()[i]);
  const Mat x = Mat::ones(3, 4);

  const auto grads = ntk::per_sample_gradients(state, config, x);
  const auto oracle_components = ntk::oracle_layerwise_ntk(grads);
  const auto explicit_components =
      ntk::explicit_ntk(ntk::forward(state, config, x), state, config);

  CHECK(ntk::max_abs(oracle_components.at("layer1.weight")) == 0.0);
  CHECK(ntk::max_abs(explicit_components.at("layer1.weight")) == 0.0);
  CHECK(ntk::max_abs(oracle_components.at("layer2.weight")) == 0.0);
}

TEST_CASE("stacked jacobian agrees with blockwise gradients") {
  ntk::Rng rng(19);
  const NetworkConfig config = make_config({4, 5, 3}, Activation::kSigmoid, true, true);
  const auto state = ntk::init_network(config, 77);
  const Mat x = ntk_test::random_matrix(4, 6, rng);

  const auto grads = ntk::per_sample_gradients(state, config, x);
  const Mat jac = ntk::full_jacobian(state, config, x);

  std::size_t offset = 0;
  for (const auto& [name, block] : grads.items) {
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t i = 0; i < block.rows(); ++i)
        CHECK(jac(offset + i, j) == block(i, j));
    offset += block.rows();
  }
  CHECK(offset == jac.rows());
  CHECK(offset == ntk::total_parameter_count(config));

  // The memory-lean entry points reproduce the blockwise results.
  const Mat direct = ntk::oracle_full_ntk(state, config, x);
  CHECK(ntk::rel_frobenius_diff(direct, ntk::oracle_full_ntk(grads)) < 1e-14);
  const auto streamed = ntk::oracle_layerwise_ntk(state, config, x);
  const auto blocked = ntk::oracle_layerwise_ntk(grads);
  REQUIRE(streamed.names() == blocked.names());
  for (const auto& [name, k] : streamed.items)
    CHECK(ntk::max_abs_diff(k, blocked.at(name)) == 0.0);
}

TEST_CASE("central differences are exact for multilinear paths") {
  // With identity activations f is linear in any single weight entry, so the
  // central difference has no truncation error.
  ntk::Rng rng(23);
  const NetworkConfig config = make_config({3, 3, 3}, Activation::kIdentity, false, true);
  const auto state = ntk::init_network(config, 31);
  const Mat x = ntk_test::random_matrix(3, 4, rng);
  const auto grads = ntk::per_sample_gradients(state, config, x);

  const auto fd = ntk::finite_diff_gradient(state, config, x, "layer1.weight", 2, 1e-6);
  for (std::size_t sample = 0; sample < fd.size(); ++sample) {
    CHECK(std::abs(fd[sample] - grads.at("layer1.weight")(2, sample)) <= 1e-10);
  }
}

TEST_CASE("finite_diff_gradient on the linear model") {
  const NetworkConfig config = make_config({2}, Activation::kTanh, false, true);
  auto state = ntk::init_network(config, 0);
  state.readout_weight = {0.3, -0.7};
  const Mat x = Mat::identity(2);
  const auto fd = ntk::finite_diff_gradient(state, config, x, "readout.weight", 0, 1e-6);
  CHECK(fd[0] == Catch::Approx(1.0).margin(1e-10));
  CHECK(fd[1] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("finite_diff_gradient validates its arguments") {
  const NetworkConfig config = make_config({2, 3}, Activation::kTanh, false, true);
  const auto state = ntk::init_network(config, 0);
  const Mat x = Mat::ones(2, 2);
  CHECK_THROWS_AS(ntk::finite_diff_gradient(state, config, x, "layer1.weight", 6, 1e-6),
                  ntk::IndexOutOfRange);
  CHECK_THROWS_AS(ntk::finite_diff_gradient(state, config, x, "nope", 0, 1e-6),
                  ntk::IndexOutOfRange);
  CHECK_THROWS_AS(ntk::finite_diff_gradient(state, config, x, "layer1.weight", 0, 0.0),
                  ntk::Error);
}

TEST_CASE("per-sample gradients are identical for any thread count") {
  ntk::Rng rng(111);
  const NetworkConfig config = make_config({6, 9, 5}, Activation::kTanh, true, true);
  const auto state = ntk::init_network(config, 55);
  const Mat x = ntk_test::random_matrix(6, 13, rng);

  const unsigned saved = ntk::thread_count();
  ntk::set_thread_count(1);
  const auto g1 = ntk::per_sample_gradients(state, config, x);
  ntk::set_thread_count(3);
  const auto g3 = ntk::per_sample_gradients(state, config, x);
  ntk::set_thread_count(saved);
  for (std::size_t t = 0; t < g1.size(); ++t)
    CHECK(ntk::max_abs_diff(g1.items[t].second, g3.items[t].second) == 0.0);
}
