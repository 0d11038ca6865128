#include "fbpnn/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fbpnn {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols),
      data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("matrix dimensions must be positive");
  }
}

void Mlp::validate() const {
  if (input_width < 1) throw std::invalid_argument("input width must be >= 1");
  if (layers.empty()) throw std::invalid_argument("network needs at least one layer");
  int expected_in = input_width;
  for (size_t m = 0; m < layers.size(); ++m) {
    const LayerParams& layer = layers[m];
    if (layer.weights.cols() != expected_in) {
      throw std::invalid_argument("layer " + std::to_string(m + 1) +
                                  " input width mismatch");
    }
    if (static_cast<int>(layer.biases.size()) != layer.out_width()) {
      throw std::invalid_argument("layer " + std::to_string(m + 1) +
                                  " bias width mismatch");
    }
    for (double w : layer.weights.data()) {
      if (!std::isfinite(w)) throw std::invalid_argument("non-finite weight");
    }
    for (double b : layer.biases) {
      if (!std::isfinite(b)) throw std::invalid_argument("non-finite bias");
    }
    expected_in = layer.out_width();
  }
}

void Dataset::validate(int input_width, int target_width) const {
  if (samples.empty()) throw std::invalid_argument("dataset is empty");
  for (const Sample& s : samples) {
    if (static_cast<int>(s.input.size()) != input_width ||
        static_cast<int>(s.target.size()) != target_width) {
      throw std::invalid_argument("dataset sample width mismatch");
    }
    for (double x : s.input) {
      if (!std::isfinite(x)) throw std::invalid_argument("non-finite sample input");
    }
    for (double q : s.target) {
      if (!std::isfinite(q)) throw std::invalid_argument("non-finite sample target");
    }
  }
}

ForwardTrace forward(const Mlp& mlp, const std::vector<double>& input) {
  if (static_cast<int>(input.size()) != mlp.input_width) {
    throw std::invalid_argument("input width mismatch");
  }
  ForwardTrace trace;
  trace.input = input;
  trace.net_inputs.reserve(mlp.layers.size());
  trace.outputs.reserve(mlp.layers.size());

  const std::vector<double>* current = &trace.input;
  for (const LayerParams& layer : mlp.layers) {
    std::vector<double> g(static_cast<size_t>(layer.out_width()));
    for (int i = 0; i < layer.out_width(); ++i) {
      double acc = layer.biases[static_cast<size_t>(i)];
      for (int j = 0; j < layer.in_width(); ++j) {
        acc += layer.weights(i, j) * (*current)[static_cast<size_t>(j)];
      }
      g[static_cast<size_t>(i)] = acc;
    }
    std::vector<double> out(g.size());
    for (size_t i = 0; i < g.size(); ++i) {
      out[i] = activation_eval(layer.activation, g[i], 0);
    }
    trace.net_inputs.push_back(std::move(g));
    trace.outputs.push_back(std::move(out));
    current = &trace.outputs.back();
  }
  return trace;
}

double squared_error(const std::vector<double>& output,
                     const std::vector<double>& target) {
  if (output.size() != target.size()) {
    throw std::invalid_argument("output/target width mismatch");
  }
  double sum = 0.0;
  for (size_t j = 0; j < output.size(); ++j) {
    const double e = target[j] - output[j];
    sum += e * e;
  }
  return sum;
}

double mean_squared_error(const Mlp& mlp, const Dataset& data) {
  data.validate(mlp.input_width, mlp.output_width());
  double sum = 0.0;
  for (const Sample& s : data.samples) {
    sum += squared_error(forward(mlp, s.input).final_output(), s.target);
  }
  return sum / static_cast<double>(data.size());
}

}  // namespace fbpnn
