#include "fbpnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace fbpnn {

namespace {

// Clamped parameters land this fraction of the initial margin above the
// lower bound, keeping (param - bound)^(-v) finite.
constexpr double kClampMarginScale = 1e-6;

double powi(double x, int n) {
  double r = x;
  for (int i = 1; i < n; ++i) r *= x;
  return r;
}

struct TrainNumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Fn>
void for_each_param(const Mlp& mlp, Fn&& fn) {
  for (int m = 0; m < mlp.layer_count(); ++m) {
    const LayerParams& layer = mlp.layers[static_cast<size_t>(m)];
    for (int i = 0; i < layer.out_width(); ++i) {
      for (int j = 0; j < layer.in_width(); ++j) {
        fn(ParamRef{ParamKind::Weight, m, i, j});
      }
    }
    for (int i = 0; i < layer.out_width(); ++i) {
      fn(ParamRef{ParamKind::Bias, m, i, 0});
    }
  }
}

double min_initial_param(const Mlp& mlp) {
  double lo = std::numeric_limits<double>::infinity();
  for (const LayerParams& layer : mlp.layers) {
    for (double w : layer.weights.data()) lo = std::min(lo, w);
    for (double b : layer.biases) lo = std::min(lo, b);
  }
  return lo;
}

// Resolved per-run state shared by the step functions and the loop.
struct StepContext {
  double w_lb{0.0};
  double b_lb{0.0};
  ParamMask mask;
  GradientSet clamp_floors;  // per-parameter clamp targets

  double bound(ParamKind kind) const {
    return kind == ParamKind::Weight ? w_lb : b_lb;
  }
  double floor_of(const ParamRef& ref) const {
    return ref.kind == ParamKind::Weight
               ? clamp_floors.weights[static_cast<size_t>(ref.layer)](ref.row, ref.col)
               : clamp_floors.biases[static_cast<size_t>(ref.layer)][static_cast<size_t>(ref.row)];
  }
};

StepContext make_context(const Mlp& initial, const TrainerConfig& config) {
  StepContext ctx;
  const double auto_lb = min_initial_param(initial) - 200.0;
  ctx.w_lb = config.w_inf.value_or(auto_lb);
  ctx.b_lb = config.b_inf.value_or(auto_lb);
  ctx.mask = config.trainable_mask ? *config.trainable_mask
                                   : ParamMask::all(initial);
  ctx.clamp_floors = GradientSet::zeros(initial);
  for_each_param(initial, [&](const ParamRef& ref) {
    const double lb = ctx.bound(ref.kind);
    const double value = get_param(initial, ref);
    const double floor = lb + kClampMarginScale * (value - lb);
    if (ref.kind == ParamKind::Weight) {
      ctx.clamp_floors.weights[static_cast<size_t>(ref.layer)](ref.row, ref.col) = floor;
    } else {
      ctx.clamp_floors.biases[static_cast<size_t>(ref.layer)][static_cast<size_t>(ref.row)] = floor;
    }
  });
  return ctx;
}

void require_above_bounds(const Mlp& mlp, const StepContext& ctx) {
  for_each_param(mlp, [&](const ParamRef& ref) {
    if (!ctx.mask.get(ref)) return;
    if (!(get_param(mlp, ref) > ctx.bound(ref.kind))) {
      throw std::domain_error("parameter " + param_name(ref) +
                              " is at or below its lower bound");
    }
  });
}

double term_of(const GradientSet& set, const ParamRef& ref) {
  return ref.kind == ParamKind::Weight
             ? set.weights[static_cast<size_t>(ref.layer)](ref.row, ref.col)
             : set.biases[static_cast<size_t>(ref.layer)][static_cast<size_t>(ref.row)];
}

double fractional_partial_from_terms(double param_value, double lower_bound,
                                     double f_hat,
                                     const std::array<double, 3>& terms,
                                     double v, int n_max) {
  if (!(param_value > lower_bound)) {
    throw std::domain_error("parameter at or below its lower bound");
  }
  const double base = param_value - lower_bound;
  double result = 0.0;
  const double c0 = reciprocal_gamma(1.0 - v);
  if (c0 != 0.0) {
    result += c0 * power_term(base, -v) * f_hat;
  }
  for (int n = 1; n <= n_max; ++n) {
    const double cn = frac_binomial(FractionalOrder(v), n);
    if (cn == 0.0) continue;
    const double rg = reciprocal_gamma(static_cast<double>(n) - v + 1.0);
    if (rg == 0.0) continue;
    result += cn * power_term(base, static_cast<double>(n) - v) * rg *
              terms[static_cast<size_t>(n) - 1];
  }
  return result;
}

// Step directions for every trainable parameter, in canonical order.
// Classic mode takes the first-order batch term verbatim; Fsdm assembles
// the truncated series so that v = 1 degenerates to the classic value
// bit for bit.
std::vector<double> step_directions(const Mlp& mlp, const BatchTerms& batch,
                                    const TrainerConfig& config,
                                    const StepContext& ctx, double v,
                                    std::vector<ParamRef>& refs) {
  std::vector<double> partials;
  for_each_param(mlp, [&](const ParamRef& ref) {
    if (!ctx.mask.get(ref)) return;
    double p = 0.0;
    if (config.mode == TrainMode::Classic) {
      p = term_of(batch.term(1), ref);
    } else {
      const std::array<double, 3> terms{term_of(batch.term(1), ref),
                                        term_of(batch.term(2), ref),
                                        term_of(batch.term(3), ref)};
      p = fractional_partial_from_terms(get_param(mlp, ref),
                                        ctx.bound(ref.kind), batch.f_hat,
                                        terms, v, config.n_max);
    }
    if (!std::isfinite(p)) {
      throw TrainNumericError("non-finite partial for " + param_name(ref));
    }
    refs.push_back(ref);
    partials.push_back(p);
  });
  return partials;
}

void apply_updates(Mlp& mlp, const TrainerConfig& config, const StepContext& ctx,
                   const std::vector<ParamRef>& refs,
                   const std::vector<double>& partials) {
  for (size_t idx = 0; idx < refs.size(); ++idx) {
    const ParamRef& ref = refs[idx];
    double next = get_param(mlp, ref) - config.learning_rate * partials[idx];
    if (config.mode == TrainMode::Fsdm && next <= ctx.bound(ref.kind)) {
      next = ctx.floor_of(ref);
    }
    if (!std::isfinite(next)) {
      throw TrainNumericError("non-finite update for " + param_name(ref));
    }
    set_param(mlp, ref, next);
  }
}

// Deterministic uniform draw in [0, 1); avoids the
// implementation-defined std::uniform_real_distribution.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void perturb_trainable(Mlp& mlp, const StepContext& ctx, double scale,
                       std::mt19937_64& rng) {
  for_each_param(mlp, [&](const ParamRef& ref) {
    if (!ctx.mask.get(ref)) return;
    const double delta = scale * (2.0 * next_uniform(rng) - 1.0);
    set_param(mlp, ref, get_param(mlp, ref) + delta);
  });
}

void validate_config(const TrainerConfig& config) {
  if (config.n_max != 1 && config.n_max != 3) {
    throw std::invalid_argument("n_max must be 1 or 3");
  }
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and >= 0");
  }
  if (config.max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be positive");
  }
  if (!(config.stop_tolerance >= 0.0) || !(config.saddle_epsilon >= 0.0) ||
      !(config.perturbation_scale >= 0.0)) {
    throw std::invalid_argument("tolerances must be nonnegative");
  }
  if (config.order_policy.kind == OrderPolicy::Kind::AdaptiveKernel &&
      !(config.order_policy.epsilon_phi > 0.0)) {
    throw std::invalid_argument("epsilon_phi must be positive");
  }
}

}  // namespace

OrderPolicy OrderPolicy::fixed(double v) {
  OrderPolicy p;
  p.kind = Kind::Fixed;
  p.fixed_value = FractionalOrder(v).value;
  return p;
}

OrderPolicy OrderPolicy::adaptive_kernel(double epsilon_phi) {
  OrderPolicy p;
  p.kind = Kind::AdaptiveKernel;
  p.epsilon_phi = epsilon_phi;
  return p;
}

std::string param_name(const ParamRef& ref) {
  const std::string layer = std::to_string(ref.layer + 1);
  const std::string row = std::to_string(ref.row + 1);
  if (ref.kind == ParamKind::Bias) return "b" + layer + "_" + row;
  return "w" + layer + "_" + row + "_" + std::to_string(ref.col + 1);
}

ParamRef parse_param_name(std::string_view name, const Mlp& mlp) {
  const auto fail = [&] {
    throw std::invalid_argument("bad parameter name: " + std::string(name));
  };
  if (name.size() < 4 || (name[0] != 'w' && name[0] != 'b')) fail();

  std::vector<int> parts;
  size_t pos = 1;
  while (pos <= name.size()) {
    const size_t next = name.find('_', pos);
    const std::string_view piece =
        name.substr(pos, next == std::string_view::npos ? next : next - pos);
    if (piece.empty()) fail();
    int value = 0;
    for (char c : piece) {
      if (c < '0' || c > '9') fail();
      value = value * 10 + (c - '0');
    }
    parts.push_back(value);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }

  ParamRef ref;
  ref.kind = name[0] == 'w' ? ParamKind::Weight : ParamKind::Bias;
  const size_t expected = ref.kind == ParamKind::Weight ? 3 : 2;
  if (parts.size() != expected) fail();
  ref.layer = parts[0] - 1;
  ref.row = parts[1] - 1;
  ref.col = ref.kind == ParamKind::Weight ? parts[2] - 1 : 0;

  if (ref.layer < 0 || ref.layer >= mlp.layer_count()) fail();
  const LayerParams& layer = mlp.layers[static_cast<size_t>(ref.layer)];
  if (ref.row < 0 || ref.row >= layer.out_width()) fail();
  if (ref.kind == ParamKind::Weight && (ref.col < 0 || ref.col >= layer.in_width())) fail();
  return ref;
}

double get_param(const Mlp& mlp, const ParamRef& ref) {
  const LayerParams& layer = mlp.layers[static_cast<size_t>(ref.layer)];
  return ref.kind == ParamKind::Weight
             ? layer.weights(ref.row, ref.col)
             : layer.biases[static_cast<size_t>(ref.row)];
}

void set_param(Mlp& mlp, const ParamRef& ref, double value) {
  LayerParams& layer = mlp.layers[static_cast<size_t>(ref.layer)];
  if (ref.kind == ParamKind::Weight) {
    layer.weights(ref.row, ref.col) = value;
  } else {
    layer.biases[static_cast<size_t>(ref.row)] = value;
  }
}

ParamMask ParamMask::all(const Mlp& mlp, bool trainable) {
  ParamMask mask;
  for (const LayerParams& layer : mlp.layers) {
    mask.weights_.emplace_back(layer.weights.data().size(),
                               static_cast<char>(trainable));
    mask.biases_.emplace_back(layer.biases.size(), static_cast<char>(trainable));
    mask.cols_.push_back(layer.in_width());
  }
  return mask;
}

ParamMask ParamMask::only(const Mlp& mlp, const std::vector<ParamRef>& params) {
  ParamMask mask = all(mlp, false);
  for (const ParamRef& ref : params) mask.set(ref, true);
  return mask;
}

bool ParamMask::get(const ParamRef& ref) const {
  if (ref.kind == ParamKind::Weight) {
    return weights_[static_cast<size_t>(ref.layer)]
                   [static_cast<size_t>(ref.row) *
                        static_cast<size_t>(cols_[static_cast<size_t>(ref.layer)]) +
                    static_cast<size_t>(ref.col)] != 0;
  }
  return biases_[static_cast<size_t>(ref.layer)][static_cast<size_t>(ref.row)] != 0;
}

void ParamMask::set(const ParamRef& ref, bool trainable) {
  if (ref.kind == ParamKind::Weight) {
    weights_[static_cast<size_t>(ref.layer)]
            [static_cast<size_t>(ref.row) *
                 static_cast<size_t>(cols_[static_cast<size_t>(ref.layer)]) +
             static_cast<size_t>(ref.col)] = static_cast<char>(trainable);
  } else {
    biases_[static_cast<size_t>(ref.layer)][static_cast<size_t>(ref.row)] =
        static_cast<char>(trainable);
  }
}

GradientSet GradientSet::zeros(const Mlp& mlp) {
  GradientSet set;
  for (const LayerParams& layer : mlp.layers) {
    set.weights.emplace_back(layer.out_width(), layer.in_width(), 0.0);
    set.biases.emplace_back(layer.biases.size(), 0.0);
  }
  return set;
}

BatchTerms accumulate_batch(const Mlp& mlp, const Dataset& batch) {
  BatchTerms acc;
  for (int n = 1; n <= 3; ++n) acc.term(n) = GradientSet::zeros(mlp);

  const ActivationKind out_act = mlp.layers.back().activation;
  const double out_width = static_cast<double>(mlp.output_width());

  for (const Sample& sample : batch.samples) {
    const ForwardTrace trace = forward(mlp, sample.input);
    const OutputSensitivities seeds =
        output_sensitivities(trace, sample.target, out_act);
    const SensitivityStack stack = backprop_sensitivities(mlp, trace, seeds);

    acc.f_hat += squared_error(trace.final_output(), sample.target);
    const std::vector<double>& beta_out = trace.final_output();
    for (size_t i = 0; i < beta_out.size(); ++i) {
      acc.e_avg += (sample.target[i] - beta_out[i]) / out_width;
      acc.rho_m_avg += seeds.rho1[i] / out_width;
    }

    for (int m = 0; m < mlp.layer_count(); ++m) {
      const LayerParams& layer = mlp.layers[static_cast<size_t>(m)];
      const std::vector<double>& upstream = trace.layer_input(m);
      for (int i = 0; i < layer.out_width(); ++i) {
        for (int n = 1; n <= 3; ++n) {
          const double rho = stack.rho(n, m, i);
          acc.term(n).biases[static_cast<size_t>(m)][static_cast<size_t>(i)] += rho;
          Matrix& wterm = acc.term(n).weights[static_cast<size_t>(m)];
          for (int j = 0; j < layer.in_width(); ++j) {
            wterm(i, j) += rho * powi(upstream[static_cast<size_t>(j)], n);
          }
        }
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  acc.f_hat *= inv;
  acc.e_avg *= inv;
  acc.rho_m_avg *= inv;
  for (int n = 1; n <= 3; ++n) {
    for (Matrix& w : acc.term(n).weights) {
      for (double& x : w.data()) x *= inv;
    }
    for (std::vector<double>& b : acc.term(n).biases) {
      for (double& x : b) x *= inv;
    }
  }
  return acc;
}

GradientSet classic_gradient(const ForwardTrace& trace,
                             const SensitivityStack& stack) {
  GradientSet grad;
  for (int m = 0; m < stack.layer_count(); ++m) {
    const std::vector<double>& upstream = trace.layer_input(m);
    const int out_w = stack.width(m);
    Matrix w(out_w, static_cast<int>(upstream.size()), 0.0);
    std::vector<double> b(static_cast<size_t>(out_w));
    for (int i = 0; i < out_w; ++i) {
      const double rho1 = stack.rho(1, m, i);
      for (size_t j = 0; j < upstream.size(); ++j) {
        w(i, static_cast<int>(j)) = rho1 * upstream[j];
      }
      b[static_cast<size_t>(i)] = rho1;
    }
    grad.weights.push_back(std::move(w));
    grad.biases.push_back(std::move(b));
  }
  return grad;
}

double fractional_partial(double param_value, double lower_bound, double f_hat,
                          const std::array<double, 3>& rho,
                          double beta_upstream, FractionalOrder v, int n_max) {
  if (n_max != 1 && n_max != 3) {
    throw std::invalid_argument("n_max must be 1 or 3");
  }
  std::array<double, 3> terms{};
  for (int n = 1; n <= 3; ++n) {
    terms[static_cast<size_t>(n) - 1] =
        rho[static_cast<size_t>(n) - 1] * powi(beta_upstream, n);
  }
  return fractional_partial_from_terms(param_value, lower_bound, f_hat, terms,
                                       v.value, n_max);
}

Mlp step_classic(const Mlp& mlp, const Dataset& batch,
                 const TrainerConfig& config) {
  if (config.mode != TrainMode::Classic) {
    throw std::invalid_argument("step_classic requires Classic mode");
  }
  validate_config(config);
  const StepContext ctx = make_context(mlp, config);
  const BatchTerms terms = accumulate_batch(mlp, batch);
  std::vector<ParamRef> refs;
  const std::vector<double> partials =
      step_directions(mlp, terms, config, ctx, 1.0, refs);
  Mlp next = mlp;
  apply_updates(next, config, ctx, refs, partials);
  return next;
}

Mlp step_fsdm(const Mlp& mlp, const Dataset& batch, const TrainerConfig& config,
              FractionalOrder v_current) {
  if (config.mode != TrainMode::Fsdm) {
    throw std::invalid_argument("step_fsdm requires Fsdm mode");
  }
  validate_config(config);
  const StepContext ctx = make_context(mlp, config);
  require_above_bounds(mlp, ctx);
  const BatchTerms terms = accumulate_batch(mlp, batch);
  std::vector<ParamRef> refs;
  const std::vector<double> partials =
      step_directions(mlp, terms, config, ctx, v_current.value, refs);
  Mlp next = mlp;
  apply_updates(next, config, ctx, refs, partials);
  return next;
}

double adaptive_order(double e_avg, double rho_m_avg, double epsilon_phi) {
  if (!(epsilon_phi > 0.0)) {
    throw std::domain_error("epsilon_phi must be positive");
  }
  if (!std::isfinite(e_avg) || !std::isfinite(rho_m_avg)) {
    throw std::domain_error("adaptive order inputs must be finite");
  }
  const double phi_base = std::max(std::abs(rho_m_avg), epsilon_phi);
  // (1 - Phi^-e)/(1 + Phi^-e) = tanh(e ln(Phi) / 2); the tanh form cannot
  // overflow when Phi^-e would.
  const double ln_phi = (2.0 + e_avg) * std::log(phi_base);
  const double ratio = std::tanh(0.5 * e_avg * ln_phi);
  return 2.0 * std::abs(ratio) + std::abs(e_avg);
}

OrderBounds order_bounds_from_sums(double f_hat, double s_w, double s_b) {
  if (!(f_hat > 0.0)) {
    throw std::domain_error("order bounds require f_hat > 0");
  }
  OrderBounds bounds;
  bounds.sigma_l_sq = s_w;
  bounds.sigma_u_sq = s_b;
  const double xw = s_w / f_hat;
  const double xb = s_b / f_hat;
  bounds.v_t1 = 1.0 / (xw + 1.0);
  bounds.v_t2 = 1.0 / (xb + 1.0);
  // -1/(x - 1) falls inside the open interval (1,2) only for x in (0, 1/2).
  if (xw > 0.0 && xw < 0.5) bounds.v_t3 = -1.0 / (xw - 1.0);
  if (xb > 0.0 && xb < 0.5) bounds.v_t4 = -1.0 / (xb - 1.0);
  return bounds;
}

OrderBounds order_bounds(const Mlp& mlp, const BatchTerms& batch, double w_inf,
                         double b_inf) {
  // Gamma(n) for n = 1..3, the v-free weighting obtained by bounding the
  // series coefficients at their n = 1 maximum.
  static constexpr double kGammaN[3] = {1.0, 1.0, 2.0};
  double s_w = 0.0;
  double s_b = 0.0;
  for (int m = 0; m < mlp.layer_count(); ++m) {
    const LayerParams& layer = mlp.layers[static_cast<size_t>(m)];
    for (int i = 0; i < layer.out_width(); ++i) {
      for (int n = 1; n <= 3; ++n) {
        const double b = layer.biases[static_cast<size_t>(i)] - b_inf;
        s_b += std::abs(powi(b, n) *
                        batch.term(n).biases[static_cast<size_t>(m)]
                                            [static_cast<size_t>(i)]) /
               kGammaN[n - 1];
        for (int j = 0; j < layer.in_width(); ++j) {
          const double w = layer.weights(i, j) - w_inf;
          s_w += std::abs(powi(w, n) *
                          batch.term(n).weights[static_cast<size_t>(m)](i, j)) /
                 kGammaN[n - 1];
        }
      }
    }
  }
  return order_bounds_from_sums(batch.f_hat, s_w, s_b);
}

StepOutcome convergence_check(std::span<const double> partials, double f_hat,
                              double stop_tolerance, double saddle_epsilon) {
  double max_abs = 0.0;
  for (double p : partials) max_abs = std::max(max_abs, std::abs(p));
  if (max_abs <= saddle_epsilon) {
    return f_hat <= stop_tolerance ? StepOutcome::Converged : StepOutcome::Saddle;
  }
  return StepOutcome::Continue;
}

TrainResult train(Mlp mlp, const Dataset& data, const TrainerConfig& config) {
  validate_config(config);
  mlp.validate();
  data.validate(mlp.input_width, mlp.output_width());

  const StepContext ctx = make_context(mlp, config);
  if (config.mode == TrainMode::Fsdm) require_above_bounds(mlp, ctx);

  TrainResult result;
  result.trace.tracked_names.reserve(config.tracked_params.size());
  for (const ParamRef& ref : config.tracked_params) {
    result.trace.tracked_names.push_back(param_name(ref));
  }

  std::mt19937_64 rng(config.rng_seed);

  const auto order_of = [&](const BatchTerms& terms) {
    if (config.mode == TrainMode::Classic) return 1.0;
    return config.order_policy.kind == OrderPolicy::Kind::Fixed
               ? config.order_policy.fixed_value
               : adaptive_order(terms.e_avg, terms.rho_m_avg,
                                config.order_policy.epsilon_phi);
  };

  try {
    for (long k = 0; k < config.max_iterations; ++k) {
      // Full-dataset view of the current state: drives the trace row and
      // the convergence/saddle decision in both batch modes.
      const BatchTerms terms = accumulate_batch(mlp, data);
      const double v = order_of(terms);

      std::vector<ParamRef> refs;
      const std::vector<double> partials =
          step_directions(mlp, terms, config, ctx, v, refs);
      const StepOutcome outcome = convergence_check(
          partials, terms.f_hat, config.stop_tolerance, config.saddle_epsilon);

      TrainTraceRow row;
      row.iteration = k;
      row.f_hat = terms.f_hat;
      row.order_v = v;
      row.saddle_perturbed = outcome == StepOutcome::Saddle;
      for (const ParamRef& ref : config.tracked_params) {
        row.tracked.push_back(get_param(mlp, ref));
      }
      result.trace.rows.push_back(std::move(row));

      if (outcome == StepOutcome::Converged) {
        result.status = RunStatus::Converged;
        break;
      }
      if (outcome == StepOutcome::Saddle) {
        perturb_trainable(mlp, ctx, config.perturbation_scale, rng);
        continue;
      }

      if (config.batch == BatchMode::FullBatch) {
        apply_updates(mlp, config, ctx, refs, partials);
      } else {
        // One iteration sweeps the dataset in order, updating after every
        // sample with that sample's own error and order.
        Dataset one;
        one.samples.resize(1);
        for (const Sample& sample : data.samples) {
          one.samples[0] = sample;
          const BatchTerms sample_terms = accumulate_batch(mlp, one);
          const double sample_v = order_of(sample_terms);
          std::vector<ParamRef> sample_refs;
          const std::vector<double> sample_partials = step_directions(
              mlp, sample_terms, config, ctx, sample_v, sample_refs);
          apply_updates(mlp, config, ctx, sample_refs, sample_partials);
        }
      }
    }
  } catch (const TrainNumericError& err) {
    result.status = RunStatus::NumericError;
    result.message = err.what();
  }

  result.mlp = std::move(mlp);
  return result;
}

}  // namespace fbpnn
