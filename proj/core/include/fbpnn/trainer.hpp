#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fbpnn/frac_core.hpp"
#include "fbpnn/network.hpp"
#include "fbpnn/sensitivity.hpp"

namespace fbpnn {

enum class TrainMode { Classic, Fsdm };
enum class BatchMode { FullBatch, PerSample };
enum class StepOutcome { Converged, Saddle, Continue };
enum class RunStatus { ReachedMaxIterations, Converged, NumericError };

/// How the fractional order is chosen each iteration.
struct OrderPolicy {
  enum class Kind { Fixed, AdaptiveKernel };

  Kind kind{Kind::Fixed};
  double fixed_value{1.0};
  double epsilon_phi{1e-12};  // floor for |rho^M| in the kernel base

  static OrderPolicy fixed(double v);
  static OrderPolicy adaptive_kernel(double epsilon_phi = 1e-12);
};

enum class ParamKind { Weight, Bias };

/// Addresses one scalar parameter. Layers, rows and cols are 0-based here;
/// the printable name ("w1_1_1", "b2_1") is 1-based.
struct ParamRef {
  ParamKind kind{ParamKind::Weight};
  int layer{0};
  int row{0};
  int col{0};  // ignored for biases

  friend bool operator==(const ParamRef&, const ParamRef&) = default;
};

std::string param_name(const ParamRef& ref);
ParamRef parse_param_name(std::string_view name, const Mlp& mlp);

double get_param(const Mlp& mlp, const ParamRef& ref);
void set_param(Mlp& mlp, const ParamRef& ref, double value);

/// Per-parameter trainable flags, mirroring an Mlp's shapes.
class ParamMask {
 public:
  ParamMask() = default;
  static ParamMask all(const Mlp& mlp, bool trainable = true);
  /// Everything frozen except the named parameters.
  static ParamMask only(const Mlp& mlp, const std::vector<ParamRef>& params);

  bool get(const ParamRef& ref) const;
  void set(const ParamRef& ref, bool trainable);

 private:
  std::vector<std::vector<char>> weights_;  // row-major per layer
  std::vector<std::vector<char>> biases_;
  std::vector<int> cols_;
};

struct TrainerConfig {
  TrainMode mode{TrainMode::Classic};
  double learning_rate{0.1};
  long max_iterations{1000};
  /// Lower bounds of the parameter domains entering the fractional power
  /// terms. Unset means (min initial parameter) - 200, which keeps
  /// (param - bound) positive across the excursions seen in practice.
  std::optional<double> w_inf;
  std::optional<double> b_inf;
  int n_max{3};  // series truncation: 1 or 3
  OrderPolicy order_policy{};
  std::optional<ParamMask> trainable_mask;  // unset = all trainable
  std::vector<ParamRef> tracked_params;     // logged each iteration
  double stop_tolerance{1e-12};
  double saddle_epsilon{1e-12};
  double perturbation_scale{1e-3};
  std::uint64_t rng_seed{0};
  BatchMode batch{BatchMode::FullBatch};
};

struct TrainTraceRow {
  long iteration{0};
  double f_hat{0.0};
  double order_v{1.0};
  std::vector<double> tracked;
  bool saddle_perturbed{false};
};

struct TrainTrace {
  std::vector<std::string> tracked_names;
  std::vector<TrainTraceRow> rows;
};

struct TrainResult {
  Mlp mlp;
  TrainTrace trace;
  RunStatus status{RunStatus::ReachedMaxIterations};
  std::string message;  // diagnostic for NumericError
};

/// Order-regime diagnostics. v_t1/v_t2 bound the climbing regime in (0,1)
/// for weights/biases, v_t3/v_t4 the one in (1,2); the latter are absent
/// when the defining ratio puts them outside (1,2). sigma_l_sq/sigma_u_sq
/// are the weight- and bias-side magnitude sums the thresholds are built
/// from.
struct OrderBounds {
  std::optional<double> v_t1;
  std::optional<double> v_t2;
  std::optional<double> v_t3;
  std::optional<double> v_t4;
  double sigma_l_sq{0.0};
  double sigma_u_sq{0.0};
};

/// Per-parameter gradients (or batch-averaged update terms) with the same
/// shapes as the network.
struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static GradientSet zeros(const Mlp& mlp);
};

/// Batch-averaged quantities one training step needs. term(n) holds, for
/// every parameter, the sample average of rho_n * beta_upstream^n (weights)
/// or rho_n (biases); n = 1 is exactly the classic gradient.
struct BatchTerms {
  double f_hat{0.0};      // mean over samples of squared_error
  double e_avg{0.0};      // mean residual (q - beta), over outputs and samples
  double rho_m_avg{0.0};  // mean first-order output sensitivity
  std::array<GradientSet, 3> terms;

  const GradientSet& term(int order) const { return terms[static_cast<size_t>(order) - 1]; }
  GradientSet& term(int order) { return terms[static_cast<size_t>(order) - 1]; }
};

BatchTerms accumulate_batch(const Mlp& mlp, const Dataset& batch);

/// Classic first-order gradients of one sample's squared error:
/// dF/dw[m](i,j) = rho_1[m][i] * beta[m-1][j], dF/db[m](i) = rho_1[m][i].
GradientSet classic_gradient(const ForwardTrace& trace,
                             const SensitivityStack& stack);

/// Truncated fractional partial of the squared error with respect to one
/// parameter:
///
///   (p - lb)^(-v)/Gamma(1-v) * F
///     + sum_{n=1}^{n_max} C(v,n) (p - lb)^(n-v)/Gamma(n-v+1)
///                         * rho_n * beta_upstream^n
///
/// beta_upstream is the upstream output for a weight and 1 for a bias. At
/// integer v the 1/Gamma poles take their limiting value 0, so v = 1
/// reproduces the classic gradient exactly and v = 0 returns F itself.
double fractional_partial(double param_value, double lower_bound, double f_hat,
                          const std::array<double, 3>& rho,
                          double beta_upstream, FractionalOrder v, int n_max);

/// One full-batch classic step: x <- x - mu * grad(x) for trainable x.
Mlp step_classic(const Mlp& mlp, const Dataset& batch,
                 const TrainerConfig& config);

/// One full-batch fractional step at order v_current; parameters that would
/// cross their lower bound are clamped just above it.
Mlp step_fsdm(const Mlp& mlp, const Dataset& batch, const TrainerConfig& config,
              FractionalOrder v_current);

/// Error-driven order schedule:
///   Phi = max(|rho_m_avg|, epsilon_phi)^(2 + e_avg)
///   v   = 2 |(1 - Phi^-e_avg) / (1 + Phi^-e_avg)| + |e_avg|
double adaptive_order(double e_avg, double rho_m_avg, double epsilon_phi);

/// Threshold formulas from the weight/bias magnitude sums; exposed for
/// direct testing. s_w and s_b are sums over parameters of
/// sum_{n=1..3} |(p - lb)^n * term_n| / Gamma(n).
OrderBounds order_bounds_from_sums(double f_hat, double s_w, double s_b);

/// Assembles the sums from the current state and batch terms. Requires
/// f_hat > 0.
OrderBounds order_bounds(const Mlp& mlp, const BatchTerms& batch, double w_inf,
                         double b_inf);

/// Converged: every |partial| <= saddle_epsilon and f_hat <= stop_tolerance.
/// Saddle: partials vanish but f_hat does not (iteration must keep going).
StepOutcome convergence_check(std::span<const double> partials, double f_hat,
                              double stop_tolerance, double saddle_epsilon);

/// Runs the configured loop, returning the final network and the
/// per-iteration trace. Each trace row snapshots the state at the start of
/// the iteration (full-dataset error, the order the batch-level kernel
/// reports, tracked parameters). FullBatch applies one averaged step per
/// iteration; PerSample sweeps the dataset in order once per iteration,
/// updating after every sample with that sample's own error and order.
TrainResult train(Mlp mlp, const Dataset& data, const TrainerConfig& config);

}  // namespace fbpnn
