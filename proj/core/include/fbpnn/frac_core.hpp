#pragma once

#include <functional>

namespace fbpnn {

/// Real-valued differentiation order. Wrapped so call sites cannot confuse
/// the order with learning rates or exponents. Any finite value is legal;
/// the training policies keep it >= 0.
struct FractionalOrder {
  double value{1.0};

  FractionalOrder() = default;
  explicit FractionalOrder(double v);  // rejects NaN/Inf
};

/// Uniform discretization of [lower_bound, evaluation_point] used by the
/// numeric Grunwald-Letnikov operator.
struct GlGridSpec {
  double lower_bound{0.0};
  double evaluation_point{1.0};
  long long partitions{2};

  GlGridSpec(double a, double x, long long n);  // requires x > a, n >= 2
};

/// Gamma function. Lanczos approximation with reflection for x < 0.5 and an
/// exact factorial path at positive integer arguments. Relative error is
/// well below 1e-12 for |x| <= 30. Throws std::domain_error at the poles
/// (non-positive integers), naming the pole.
double gamma(double x);

/// 1/gamma(x), with the poles of gamma mapped to their limiting value 0.
/// This is the coefficient form needed by the truncated fractional series,
/// where 1/gamma(1-v) must vanish at positive integer v.
double reciprocal_gamma(double x);

/// Generalized binomial coefficient C(v, n) = v(v-1)...(v-n+1)/n!, computed
/// by the falling-factorial product so that integer v < n gives an exact 0
/// instead of running through gamma poles.
double frac_binomial(FractionalOrder v, long long n);

/// base^exponent via exp(exponent*ln(base)). The trainer feeds it
/// (parameter - lower_bound), which its update rule keeps strictly
/// positive; base <= 0 is a domain error.
double power_term(double base, double exponent);

/// Finite-N Grunwald-Letnikov derivative of order v of f over
/// [grid.lower_bound, grid.evaluation_point]:
///
///   h^(-v) * sum_{k=0}^{N-1} c_k f(x - k h),   h = (x - a)/N,
///
/// where c_0 = 1 and c_k = c_{k-1} (k-1-v)/k absorb the
/// Gamma(k-v)/(Gamma(-v) Gamma(k+1)) ratio without evaluating gamma near
/// its poles. Integer v >= 0 (where Gamma(-v) is singular) dispatches to
/// the order-v backward difference on the same grid, i.e. the classical
/// derivative the GL limit degenerates to; v = 0 returns f(x) exactly.
double gl_derivative_numeric(const std::function<double(double)>& f,
                             const GlGridSpec& grid, FractionalOrder v);

}  // namespace fbpnn
