#pragma once

#include <vector>

#include "fbpnn/activation.hpp"

namespace fbpnn {

/// Dense row-major matrix, just wide enough for this library's layer sizes.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

struct LayerParams {
  Matrix weights;               // out_width x in_width
  std::vector<double> biases;   // out_width
  ActivationKind activation{ActivationKind::Linear};

  int out_width() const { return weights.rows(); }
  int in_width() const { return weights.cols(); }
};

/// Multilayer perceptron: an ordered list of layers, each layer's input
/// being the previous layer's output.
struct Mlp {
  int input_width{0};
  std::vector<LayerParams> layers;

  int layer_count() const { return static_cast<int>(layers.size()); }
  int output_width() const { return layers.back().out_width(); }

  /// Checks the width chain and that every entry is finite.
  void validate() const;
};

/// Per-layer net inputs and outputs of one forward pass.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> net_inputs;  // g^m per layer
  std::vector<std::vector<double>> outputs;     // beta^m per layer

  const std::vector<double>& final_output() const { return outputs.back(); }
  /// Layer inputs: the original input for layer 0, else layer m-1's output.
  const std::vector<double>& layer_input(int layer) const {
    return layer == 0 ? input : outputs[static_cast<size_t>(layer) - 1];
  }
};

struct Sample {
  std::vector<double> input;
  std::vector<double> target;
};

struct Dataset {
  std::vector<Sample> samples;

  int size() const { return static_cast<int>(samples.size()); }
  /// Nonempty, consistent widths, all entries finite.
  void validate(int input_width, int target_width) const;
};

ForwardTrace forward(const Mlp& mlp, const std::vector<double>& input);

/// Sum of squared residuals of one output vector: sum_j (q_j - beta_j)^2.
double squared_error(const std::vector<double>& output,
                     const std::vector<double>& target);

/// Average of squared_error over the dataset.
double mean_squared_error(const Mlp& mlp, const Dataset& data);

}  // namespace fbpnn
