#pragma once

#include <string_view>

namespace fbpnn {

enum class ActivationKind {
  LogSigmoid,  // f(x) = 1/(1+e^-x)
  TanSigmoid,  // f(x) = 2/(1+e^-2x) - 1 = tanh(x)
  Linear,      // f(x) = x
};

/// Value (order 0) or analytic derivative (orders 1..3) of the activation
/// at net input g. Closed forms in terms of the output s = f(g):
///   log-sigmoid: f' = s(1-s), f'' = s(1-s)(1-2s), f''' = s(1-s)(1-6s+6s^2)
///   tan-sigmoid: f' = 1-t^2,  f'' = -2t(1-t^2),   f''' = -2(1-t^2)(1-3t^2)
///   linear:      f' = 1,      f'' = f''' = 0
double activation_eval(ActivationKind kind, double g, int order);

std::string_view activation_name(ActivationKind kind);
ActivationKind activation_from_name(std::string_view name);

}  // namespace fbpnn
