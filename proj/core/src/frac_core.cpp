#include "fbpnn/frac_core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fbpnn {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Lanczos rational approximation, N=13, g=6.024680040776729583740234375
// (the standard double-precision coefficient set). Coefficients ascending.
constexpr double kLanczosG = 6.024680040776729583740234375;
constexpr double kLanczosNum[13] = {
    23531376880.410759688572007674451636754734,
    42919803642.649098768957899047001988850926,
    35711959237.355668049440185451547166705960,
    17921034426.037209699919755754458931112671,
    6039542586.3520280050642916443072979210699,
    1439720407.3117216736632230727949123939715,
    248874557.86205415651146038641322942321632,
    31426415.585400194380614231628318205362874,
    2876370.6289353724412254090516208496135991,
    186056.26539522349504029498971604569928220,
    8071.6720023658162106380029022722506138218,
    210.82427775157934587250973392071336271166,
    2.5066282746310002701649081771338373386264,
};
constexpr double kLanczosDen[13] = {
    0.0,         39916800.0, 120543840.0, 150917976.0, 105258076.0,
    45995730.0,  13339535.0, 2637558.0,   357423.0,    32670.0,
    1925.0,      66.0,       1.0,
};

double lanczos_sum(double z) {
  double num = 0.0;
  double den = 0.0;
  for (int i = 12; i >= 0; --i) {
    num = num * z + kLanczosNum[i];
    den = den * z + kLanczosDen[i];
  }
  return num / den;
}

// Gamma(x) for x >= 0.5 via the Lanczos form
// S(x) * zgh^(x-0.5) * exp(-zgh), zgh = x + g - 0.5.
double gamma_lanczos(double x) {
  const double zgh = x + kLanczosG - 0.5;
  if (x > 150.0) {
    // Split the power so intermediate terms stay finite near the
    // double-precision overflow threshold of the result.
    const double p = std::pow(zgh, 0.5 * (x - 0.5));
    return lanczos_sum(x) * p * (p / std::exp(zgh));
  }
  return lanczos_sum(x) * std::pow(zgh, x - 0.5) / std::exp(zgh);
}

bool is_integer(double x) { return x == std::floor(x); }

}  // namespace

FractionalOrder::FractionalOrder(double v) : value(v) {
  if (!std::isfinite(v)) {
    throw std::domain_error("fractional order must be finite");
  }
}

GlGridSpec::GlGridSpec(double a, double x, long long n)
    : lower_bound(a), evaluation_point(x), partitions(n) {
  if (!(x > a)) {
    throw std::domain_error("GL grid requires evaluation_point > lower_bound");
  }
  if (n < 2) {
    throw std::domain_error("GL grid requires at least 2 partitions");
  }
}

double gamma(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("gamma requires a finite argument");
  }
  if (x <= 0.0 && is_integer(x)) {
    throw std::domain_error("gamma pole at x = " + std::to_string(x));
  }
  if (x >= 1.0 && x <= 171.0 && is_integer(x)) {
    // Gamma(n) = (n-1)!, exact in double precision through 18!.
    const int n = static_cast<int>(x);
    double f = 1.0;
    for (int k = 2; k < n; ++k) f *= static_cast<double>(k);
    return f;
  }
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return kPi / (std::sin(kPi * x) * gamma_lanczos(1.0 - x));
  }
  return gamma_lanczos(x);
}

double reciprocal_gamma(double x) {
  if (x <= 0.0 && is_integer(x)) return 0.0;
  return 1.0 / gamma(x);
}

double frac_binomial(FractionalOrder v, long long n) {
  if (n < 0) {
    throw std::domain_error("binomial index n must be nonnegative");
  }
  double c = 1.0;
  for (long long i = 0; i < n; ++i) {
    c *= (v.value - static_cast<double>(i)) / static_cast<double>(i + 1);
  }
  return c;
}

double power_term(double base, double exponent) {
  if (!(base > 0.0)) {
    throw std::domain_error("parameter at or below its lower bound");
  }
  return std::exp(exponent * std::log(base));
}

double gl_derivative_numeric(const std::function<double(double)>& f,
                             const GlGridSpec& grid, FractionalOrder v) {
  const double a = grid.lower_bound;
  const double x = grid.evaluation_point;
  const long long n_parts = grid.partitions;
  const double h = (x - a) / static_cast<double>(n_parts);

  if (v.value >= 0.0 && is_integer(v.value)) {
    // Classical limit: order-p backward difference on the same grid
    // (the GL coefficients terminate after p+1 terms at integer order).
    const long long p = static_cast<long long>(v.value);
    double sum = 0.0;
    double coeff = 1.0;  // (-1)^k C(p, k)
    for (long long k = 0; k <= p; ++k) {
      sum += coeff * f(x - static_cast<double>(k) * h);
      coeff *= -static_cast<double>(p - k) / static_cast<double>(k + 1);
    }
    return sum / std::pow(h, static_cast<double>(p));
  }

  double sum = 0.0;
  double c = 1.0;  // Gamma(k-v) / (Gamma(-v) Gamma(k+1))
  for (long long k = 0; k < n_parts; ++k) {
    if (k > 0) {
      c *= (static_cast<double>(k) - 1.0 - v.value) / static_cast<double>(k);
    }
    sum += c * f(x - static_cast<double>(k) * h);
  }
  const double result = std::pow(h, -v.value) * sum;
  if (!std::isfinite(result)) {
    throw std::runtime_error("GL accumulation overflowed");
  }
  return result;
}

}  // namespace fbpnn
