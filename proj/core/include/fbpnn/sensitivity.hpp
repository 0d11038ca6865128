#pragma once

#include <vector>

#include "fbpnn/network.hpp"

namespace fbpnn {

/// First/second/third derivatives of the squared error with respect to each
/// neuron's net input, per layer. Orders are 1-based (n = 1..3); layers are
/// 0-based like Mlp::layers.
class SensitivityStack {
 public:
  SensitivityStack() = default;
  explicit SensitivityStack(const std::vector<int>& layer_widths);

  double rho(int order, int layer, int neuron) const {
    return values_[static_cast<size_t>(order) - 1][static_cast<size_t>(layer)]
                  [static_cast<size_t>(neuron)];
  }
  double& rho(int order, int layer, int neuron) {
    return values_[static_cast<size_t>(order) - 1][static_cast<size_t>(layer)]
                  [static_cast<size_t>(neuron)];
  }

  int layer_count() const { return static_cast<int>(values_[0].size()); }
  int width(int layer) const {
    return static_cast<int>(values_[0][static_cast<size_t>(layer)].size());
  }

 private:
  // values_[order-1][layer][neuron]
  std::vector<std::vector<double>> values_[3];
};

/// Output-layer seeds: one entry per output neuron.
struct OutputSensitivities {
  std::vector<double> rho1;  // -2 (q_i - b_i) f'(g_i)
  std::vector<double> rho2;  // -2 [(q_i - b_i) f''(g_i) - f'(g_i)^2]
  std::vector<double> rho3;  // -2 [(q_i - b_i) f'''(g_i) - 3 f'(g_i) f''(g_i)]
};

OutputSensitivities output_sensitivities(const ForwardTrace& trace,
                                         const std::vector<double>& target,
                                         ActivationKind output_activation);

/// Propagates the seeds from the last layer down to the first:
///
///   rho_n[m][j] = sum_i ( w[m+1](i,j) * f_m'(g[m][j]) )^n * rho_n[m+1][i]
///
/// For n = 1 this is exact backpropagation. For n = 2, 3 the recurrence is a
/// diagonal approximation: it raises the single-path propagation factor to
/// the n-th power and sums over downstream neurons, ignoring mixed partials,
/// so it is exact only where the layer-to-layer maps are affine.
SensitivityStack backprop_sensitivities(const Mlp& mlp,
                                        const ForwardTrace& trace,
                                        const OutputSensitivities& seeds);

}  // namespace fbpnn
