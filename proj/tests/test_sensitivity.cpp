#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "fbpnn/experiments.hpp"
#include "fbpnn/sensitivity.hpp"
#include "test_support.hpp"

using namespace fbpnn;
using fbpnn::testing::close_rel;
using fbpnn::testing::error_with_perturbed_net_input;
using fbpnn::testing::uniform;

namespace {

Mlp single_neuron(ActivationKind act, double w, double b) {
  Mlp net;
  net.input_width = 1;
  LayerParams layer;
  layer.weights = Matrix(1, 1);
  layer.weights(0, 0) = w;
  layer.biases = {b};
  layer.activation = act;
  net.layers = {layer};
  return net;
}

/// Width-1 chain whose hidden layers are linear, so the layer-to-layer maps
/// are affine and the higher-order recurrences are exact.
Mlp affine_chain(std::mt19937_64& rng, int depth, ActivationKind output_act) {
  Mlp net;
  net.input_width = 1;
  int remaining = depth;
  while (remaining-- > 0) {
    LayerParams layer;
    layer.weights = Matrix(1, 1);
    layer.weights(0, 0) = uniform(rng, 0.3, 1.5);
    layer.biases = {uniform(rng, -0.5, 0.5)};
    layer.activation = remaining == 0 ? output_act : ActivationKind::Linear;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace

TEST_CASE("output seeds for a linear output layer") {
  // Perfect fit: rho1 = 0, rho2 = 2 (f' = 1), rho3 = 0.
  Mlp net = single_neuron(ActivationKind::Linear, 1.0, 0.0);
  ForwardTrace trace = forward(net, {1.0});
  auto seeds = output_sensitivities(trace, {1.0}, ActivationKind::Linear);
  CHECK(seeds.rho1[0] == 0.0);
  CHECK(seeds.rho2[0] == 2.0);
  CHECK(seeds.rho3[0] == 0.0);

  seeds = output_sensitivities(trace, {0.0}, ActivationKind::Linear);
  CHECK(seeds.rho1[0] == 2.0);
  CHECK(seeds.rho2[0] == 2.0);
  CHECK(seeds.rho3[0] == 0.0);
}

TEST_CASE("output seeds for a log-sigmoid output at g = 0") {
  Mlp net = single_neuron(ActivationKind::LogSigmoid, 1.0, 0.0);
  ForwardTrace trace = forward(net, {0.0});  // g = 0, beta = 0.5
  const auto seeds =
      output_sensitivities(trace, {1.0}, ActivationKind::LogSigmoid);
  // With s = 1/2: f' = 1/4, f'' = 0, f''' = s(1-s)(1-6s+6s^2) = -1/8.
  CHECK(seeds.rho1[0] == -0.25);
  CHECK(seeds.rho2[0] == 0.125);
  CHECK(close_rel(seeds.rho3[0], 0.125, 1e-15));

  // Cross-check rho3 against a third difference of (q - f(g))^2.
  const auto f_of_g = [](double g) {
    const double s = 1.0 / (1.0 + std::exp(-g));
    return (1.0 - s) * (1.0 - s);
  };
  const double fd3 = fbpnn::testing::central_diff(f_of_g, 0.0, 3, 1e-2);
  CHECK(close_rel(seeds.rho3[0], fd3, 1e-3, 1e-5));
}

TEST_CASE("zero downstream weights zero the propagated sensitivities") {
  std::mt19937_64 rng(31);
  Mlp net = fbpnn::testing::random_mlp(rng, 3, 3);
  while (net.layer_count() < 2) net = fbpnn::testing::random_mlp(rng, 3, 3);
  for (double& w : net.layers.back().weights.data()) w = 0.0;

  const Sample s = fbpnn::testing::random_sample(rng, net);
  const ForwardTrace trace = forward(net, s.input);
  const auto seeds =
      output_sensitivities(trace, s.target, net.layers.back().activation);
  const SensitivityStack stack = backprop_sensitivities(net, trace, seeds);
  const int m = net.layer_count() - 2;
  for (int i = 0; i < stack.width(m); ++i) {
    for (int n = 1; n <= 3; ++n) CHECK(stack.rho(n, m, i) == 0.0);
  }
}

TEST_CASE("unit-weight linear chain copies the seeds through every layer") {
  Mlp net;
  net.input_width = 1;
  for (int m = 0; m < 3; ++m) {
    LayerParams layer;
    layer.weights = Matrix(1, 1);
    layer.weights(0, 0) = 1.0;
    layer.biases = {0.0};
    layer.activation = ActivationKind::Linear;
    net.layers.push_back(std::move(layer));
  }
  const ForwardTrace trace = forward(net, {0.7});
  const auto seeds = output_sensitivities(trace, {0.2}, ActivationKind::Linear);
  const SensitivityStack stack = backprop_sensitivities(net, trace, seeds);
  for (int m = 0; m < 3; ++m) {
    CHECK(stack.rho(1, m, 0) == seeds.rho1[0]);
    CHECK(stack.rho(2, m, 0) == seeds.rho2[0]);
    CHECK(stack.rho(3, m, 0) == seeds.rho3[0]);
  }
}

TEST_CASE("first-order sensitivities match finite differences everywhere") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Mlp net = fbpnn::testing::random_mlp(rng);
    const Sample s = fbpnn::testing::random_sample(rng, net);
    const ForwardTrace trace = forward(net, s.input);
    const auto seeds =
        output_sensitivities(trace, s.target, net.layers.back().activation);
    const SensitivityStack stack = backprop_sensitivities(net, trace, seeds);

    for (int m = 0; m < net.layer_count(); ++m) {
      for (int i = 0; i < stack.width(m); ++i) {
        const auto f = [&](double delta) {
          return error_with_perturbed_net_input(net, s, m, i, delta);
        };
        const double fd = (f(1e-5) - f(-1e-5)) / 2e-5;
        CHECK(close_rel(stack.rho(1, m, i), fd, 1e-5, 1e-4));
      }
    }
  }
}

TEST_CASE("higher-order sensitivities are exact on affine chains") {
  std::mt19937_64 rng(33);
  for (ActivationKind out : {ActivationKind::Linear, ActivationKind::LogSigmoid,
                             ActivationKind::TanSigmoid}) {
    for (int trial = 0; trial < 6; ++trial) {
      const Mlp net = affine_chain(rng, 3, out);
      Sample s;
      s.input = {uniform(rng, -1.0, 1.0)};
      s.target = {uniform(rng, -0.5, 1.5)};
      const ForwardTrace trace = forward(net, s.input);
      const auto seeds = output_sensitivities(trace, s.target, out);
      const SensitivityStack stack = backprop_sensitivities(net, trace, seeds);

      for (int m = 0; m < net.layer_count(); ++m) {
        const auto f = [&](double delta) {
          return error_with_perturbed_net_input(net, s, m, 0, delta);
        };
        const double fd2 = (f(1e-3) - 2.0 * f(0.0) + f(-1e-3)) / 1e-6;
        CHECK(close_rel(stack.rho(2, m, 0), fd2, 1e-3, 1e-4));
        // 1e-3 keeps the third-difference truncation error inside the 1e-3
        // tolerance on the steepest chains.
        const double h = 1e-3;
        const double fd3 =
            (f(2 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2 * h)) / (2 * h * h * h);
        CHECK(close_rel(stack.rho(3, m, 0), fd3, 1e-3, 1e-3));
      }
    }
  }
}

TEST_CASE("sensitivities vanish at the reference optimum") {
  const Mlp net = build_approx_network(true);
  const ForwardTrace trace = forward(net, {0.0});
  const auto seeds =
      output_sensitivities(trace, {0.5}, ActivationKind::LogSigmoid);
  const SensitivityStack stack = backprop_sensitivities(net, trace, seeds);
  Sample s;
  s.input = {0.0};
  s.target = {0.5};
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(stack.rho(1, 0, i)) <= 1e-15);
    const auto f = [&](double delta) {
      return error_with_perturbed_net_input(net, s, 0, i, delta);
    };
    CHECK(std::abs((f(1e-5) - f(-1e-5)) / 2e-5) <= 1e-9);
  }
}

TEST_CASE("exact fit collapses first-order sensitivities at every layer") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const Mlp net = fbpnn::testing::random_mlp(rng);
    Sample s = fbpnn::testing::random_sample(rng, net);
    s.target = forward(net, s.input).final_output();
    const ForwardTrace trace = forward(net, s.input);
    const auto seeds =
        output_sensitivities(trace, s.target, net.layers.back().activation);
    const SensitivityStack stack = backprop_sensitivities(net, trace, seeds);
    for (int m = 0; m < net.layer_count(); ++m) {
      for (int i = 0; i < stack.width(m); ++i) {
        CHECK(stack.rho(1, m, i) == 0.0);
      }
    }
  }
}
