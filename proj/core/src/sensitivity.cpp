#include "fbpnn/sensitivity.hpp"

#include <stdexcept>

namespace fbpnn {

SensitivityStack::SensitivityStack(const std::vector<int>& layer_widths) {
  for (auto& per_order : values_) {
    per_order.resize(layer_widths.size());
    for (size_t m = 0; m < layer_widths.size(); ++m) {
      per_order[m].assign(static_cast<size_t>(layer_widths[m]), 0.0);
    }
  }
}

OutputSensitivities output_sensitivities(const ForwardTrace& trace,
                                         const std::vector<double>& target,
                                         ActivationKind output_activation) {
  const std::vector<double>& g = trace.net_inputs.back();
  const std::vector<double>& beta = trace.outputs.back();
  if (target.size() != beta.size()) {
    throw std::invalid_argument("target width mismatch");
  }

  OutputSensitivities seeds;
  seeds.rho1.resize(beta.size());
  seeds.rho2.resize(beta.size());
  seeds.rho3.resize(beta.size());
  for (size_t i = 0; i < beta.size(); ++i) {
    const double e = target[i] - beta[i];
    const double d1 = activation_eval(output_activation, g[i], 1);
    const double d2 = activation_eval(output_activation, g[i], 2);
    const double d3 = activation_eval(output_activation, g[i], 3);
    seeds.rho1[i] = -2.0 * e * d1;
    seeds.rho2[i] = -2.0 * (e * d2 - d1 * d1);
    seeds.rho3[i] = -2.0 * (e * d3 - 3.0 * d1 * d2);
  }
  return seeds;
}

SensitivityStack backprop_sensitivities(const Mlp& mlp,
                                        const ForwardTrace& trace,
                                        const OutputSensitivities& seeds) {
  const int last = mlp.layer_count() - 1;
  std::vector<int> widths;
  widths.reserve(mlp.layers.size());
  for (const LayerParams& layer : mlp.layers) widths.push_back(layer.out_width());

  SensitivityStack stack(widths);
  for (int i = 0; i < widths[static_cast<size_t>(last)]; ++i) {
    stack.rho(1, last, i) = seeds.rho1[static_cast<size_t>(i)];
    stack.rho(2, last, i) = seeds.rho2[static_cast<size_t>(i)];
    stack.rho(3, last, i) = seeds.rho3[static_cast<size_t>(i)];
  }

  for (int m = last - 1; m >= 0; --m) {
    const LayerParams& next = mlp.layers[static_cast<size_t>(m) + 1];
    const std::vector<double>& g = trace.net_inputs[static_cast<size_t>(m)];
    const ActivationKind act = mlp.layers[static_cast<size_t>(m)].activation;
    for (int j = 0; j < widths[static_cast<size_t>(m)]; ++j) {
      const double d1 = activation_eval(act, g[static_cast<size_t>(j)], 1);
      double acc[3] = {0.0, 0.0, 0.0};
      for (int i = 0; i < next.out_width(); ++i) {
        const double factor = next.weights(i, j) * d1;
        double factor_pow = factor;
        for (int n = 1; n <= 3; ++n) {
          acc[n - 1] += factor_pow * stack.rho(n, m + 1, i);
          factor_pow *= factor;
        }
      }
      for (int n = 1; n <= 3; ++n) stack.rho(n, m, j) = acc[n - 1];
    }
  }
  return stack;
}

}  // namespace fbpnn
