#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fbpnn/trainer.hpp"

namespace fbpnn {

enum class ExperimentModes { Classic, Fsdm, Both };

/// Declarative description of one built-in training run: a network with all
/// untracked parameters fixed, a dataset, and the pair of weights the run
/// actually moves.
struct ExperimentSpec {
  std::string id;
  Mlp network;  // tracked pair already holding its initial condition
  Dataset dataset;
  ParamRef param_a;
  ParamRef param_b;
  double mu{1.0};
  long iterations{1000};
  ExperimentModes modes{ExperimentModes::Both};
};

const std::vector<std::string>& builtin_experiment_ids();
ExperimentSpec builtin_experiment(std::string_view id);

/// 1-2-1 log-sigmoid network used by the function-approximation runs.
/// optimal=true installs the reference constants everywhere; optimal=false
/// leaves the tracked pair (w1_1_1, w2_1_1) zeroed for the caller to set.
Mlp build_approx_network(bool optimal);

/// 41 samples at p = -2.0, -1.9, ..., 2.0 whose targets are the optimal
/// reference network's own outputs (so the optimum has exactly zero error).
Dataset build_approx_dataset();

/// 1-15-1 tan-sigmoid/linear network with the fixed filter-fit constants;
/// the tracked slots w1_1_1 and w1_11_1 are left zeroed.
Mlp build_ex5_network();

/// The 20-point nonlinear filter transfer measurements.
Dataset filter_dataset();

/// Hidden-layer width estimate ceil(C * sqrt(S / (R ln S))), floored at 1.
/// C measures the target's spectral smoothness, S the sample count (>= 2),
/// R the input width.
long sizing_estimate(double c, long samples, int inputs);

struct RunOverrides {
  std::optional<double> mu;
  std::optional<long> iterations;
  std::optional<ExperimentModes> modes;
  std::optional<double> w_inf;
  std::optional<double> b_inf;
  std::optional<int> n_max;
  std::optional<double> fixed_order;  // replaces the adaptive kernel
  std::optional<std::uint64_t> seed;
};

struct RunSummary {
  std::string experiment_id;
  std::string mode;  // "classic" | "fsdm"
  double final_f_hat{0.0};
  std::vector<std::string> tracked_names;
  std::vector<double> final_tracked;
  long iterations_executed{0};
  bool converged{false};
  std::string status;
  double wall_seconds{0.0};
};

struct ExperimentRun {
  RunSummary summary;
  TrainResult result;
  std::filesystem::path trace_file;
  std::filesystem::path summary_file;
};

/// Executes the requested modes and writes one trace CSV plus one summary
/// JSON per run into out_dir.
std::vector<ExperimentRun> run_experiment(const ExperimentSpec& spec,
                                          const RunOverrides& overrides,
                                          const std::filesystem::path& out_dir);

/// The trainer configuration run_experiment uses for one mode; exposed so
/// tests and the config-driven path share the exact defaults.
TrainerConfig experiment_config(const ExperimentSpec& spec, TrainMode mode,
                                const RunOverrides& overrides);

}  // namespace fbpnn
