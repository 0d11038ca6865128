#include "fbpnn/activation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fbpnn {

namespace {

// Sign-branched logistic; stays finite for any g (experiment weights reach
// magnitudes well past 100).
double log_sigmoid(double g) {
  if (g >= 0.0) {
    return 1.0 / (1.0 + std::exp(-g));
  }
  const double e = std::exp(g);
  return e / (1.0 + e);
}

}  // namespace

double activation_eval(ActivationKind kind, double g, int order) {
  if (order < 0 || order > 3) {
    throw std::domain_error("activation derivative order must be in 0..3");
  }
  switch (kind) {
    case ActivationKind::LogSigmoid: {
      const double s = log_sigmoid(g);
      switch (order) {
        case 0: return s;
        case 1: return s * (1.0 - s);
        case 2: return s * (1.0 - s) * (1.0 - 2.0 * s);
        default: return s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
      }
    }
    case ActivationKind::TanSigmoid: {
      const double t = std::tanh(g);
      switch (order) {
        case 0: return t;
        case 1: return 1.0 - t * t;
        case 2: return -2.0 * t * (1.0 - t * t);
        default: return -2.0 * (1.0 - t * t) * (1.0 - 3.0 * t * t);
      }
    }
    case ActivationKind::Linear:
      switch (order) {
        case 0: return g;
        case 1: return 1.0;
        default: return 0.0;
      }
  }
  throw std::logic_error("unknown activation kind");
}

std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::LogSigmoid: return "log-sigmoid";
    case ActivationKind::TanSigmoid: return "tan-sigmoid";
    case ActivationKind::Linear: return "linear";
  }
  throw std::logic_error("unknown activation kind");
}

ActivationKind activation_from_name(std::string_view name) {
  if (name == "log-sigmoid" || name == "logsig") return ActivationKind::LogSigmoid;
  if (name == "tan-sigmoid" || name == "tansig") return ActivationKind::TanSigmoid;
  if (name == "linear" || name == "purelin") return ActivationKind::Linear;
  throw std::invalid_argument("unknown activation name: " + std::string(name));
}

}  // namespace fbpnn
