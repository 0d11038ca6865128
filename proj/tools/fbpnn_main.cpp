// fbpnn: fractional-order backpropagation experiments from the command line.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fbpnn/experiments.hpp"
#include "fbpnn/run_config.hpp"
#include "fbpnn/surface.hpp"
#include "fbpnn/trace_io.hpp"

namespace {

struct RangeSpec {
  double lo{0.0};
  double hi{1.0};
  int steps{2};
};

RangeSpec parse_range(const std::string& text) {
  RangeSpec range;
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw CLI::ValidationError("range", "expected lo:hi:steps, got '" + text + "'");
  }
  try {
    range.lo = std::stod(text.substr(0, first));
    range.hi = std::stod(text.substr(first + 1, second - first - 1));
    range.steps = std::stoi(text.substr(second + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("range", "expected lo:hi:steps, got '" + text + "'");
  }
  return range;
}

void print_summary(const fbpnn::RunSummary& summary) {
  std::printf("%s/%s: final error %.6e after %ld iterations (%s, %.2fs)\n",
              summary.experiment_id.c_str(), summary.mode.c_str(),
              summary.final_f_hat, summary.iterations_executed,
              summary.status.c_str(), summary.wall_seconds);
  for (size_t i = 0; i < summary.tracked_names.size(); ++i) {
    std::printf("  %s = %.10g\n", summary.tracked_names[i].c_str(),
                summary.final_tracked[i]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-order backpropagation networks: built-in "
               "experiments, error surfaces, sizing estimates, and "
               "config-driven training runs"};
  app.require_subcommand(1);

  // run ------------------------------------------------------------------
  std::string run_id;
  fbpnn::RunOverrides overrides;
  std::string run_mode;
  std::string run_out = "runs";
  double mu = 0.0;
  long iters = 0;
  double w_inf = 0.0, b_inf = 0.0, fixed_order = 0.0;
  int n_max = 0;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "Execute a built-in experiment");
  run->add_option("experiment", run_id, "Experiment id (ex1..ex5d)")->required();
  auto* mu_opt = run->add_option("--mu", mu, "Learning rate override");
  auto* iters_opt = run->add_option("--iters", iters, "Iteration override");
  run->add_option("--mode", run_mode, "classic, fsdm, or both")
      ->check(CLI::IsMember({"classic", "fsdm", "both"}));
  auto* winf_opt = run->add_option("--w-inf", w_inf, "Weight-domain lower bound");
  auto* binf_opt = run->add_option("--b-inf", b_inf, "Bias-domain lower bound");
  auto* nmax_opt = run->add_option("--n-max", n_max, "Series truncation (1 or 3)")
                       ->check(CLI::IsMember({1, 3}));
  auto* order_opt = run->add_option("--fixed-order", fixed_order,
                                    "Fixed fractional order instead of the "
                                    "adaptive kernel");
  auto* seed_opt = run->add_option("--seed", seed, "Perturbation RNG seed");
  run->add_option("--out", run_out, "Output directory")->capture_default_str();

  // surface --------------------------------------------------------------
  std::string surface_id, param_a, param_b, range_a, range_b;
  std::string surface_out = "surface.csv";
  CLI::App* surface =
      app.add_subcommand("surface", "Sample a 2-D error surface");
  surface->add_option("--experiment", surface_id, "Experiment whose network "
                                                  "and dataset to sample")
      ->required();
  surface->add_option("--param-a", param_a, "First parameter name")->required();
  surface->add_option("--range-a", range_a, "lo:hi:steps")->required();
  surface->add_option("--param-b", param_b, "Second parameter name")->required();
  surface->add_option("--range-b", range_b, "lo:hi:steps")->required();
  surface->add_option("--out", surface_out, "Output CSV file")
      ->capture_default_str();

  // sizing ---------------------------------------------------------------
  double sizing_c = 0.0;
  long sizing_samples = 0;
  int sizing_inputs = 0;
  CLI::App* sizing =
      app.add_subcommand("sizing", "Hidden-layer width estimate");
  sizing->add_option("--c", sizing_c, "Smoothness constant")->required();
  sizing->add_option("--samples", sizing_samples, "Sample count")->required();
  sizing->add_option("--inputs", sizing_inputs, "Input width")->required();

  // train ----------------------------------------------------------------
  std::string config_path;
  std::string train_out = "runs";
  CLI::App* train_cmd =
      app.add_subcommand("train", "Run a JSON-configured training job");
  train_cmd->add_option("--config", config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_out, "Output directory")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (*mu_opt) overrides.mu = mu;
      if (*iters_opt) overrides.iterations = iters;
      if (*winf_opt) overrides.w_inf = w_inf;
      if (*binf_opt) overrides.b_inf = b_inf;
      if (*nmax_opt) overrides.n_max = n_max;
      if (*order_opt) overrides.fixed_order = fixed_order;
      if (*seed_opt) overrides.seed = seed;
      if (run_mode == "classic") overrides.modes = fbpnn::ExperimentModes::Classic;
      if (run_mode == "fsdm") overrides.modes = fbpnn::ExperimentModes::Fsdm;

      const fbpnn::ExperimentSpec spec = fbpnn::builtin_experiment(run_id);
      const auto runs = fbpnn::run_experiment(spec, overrides, run_out);
      for (const auto& entry : runs) {
        print_summary(entry.summary);
        std::printf("  trace:   %s\n  summary: %s\n",
                    entry.trace_file.string().c_str(),
                    entry.summary_file.string().c_str());
      }
    } else if (*surface) {
      const fbpnn::ExperimentSpec spec = fbpnn::builtin_experiment(surface_id);
      const RangeSpec ra = parse_range(range_a);
      const RangeSpec rb = parse_range(range_b);
      fbpnn::SurfaceGridSpec grid;
      grid.a = {fbpnn::parse_param_name(param_a, spec.network), param_a, ra.lo,
                ra.hi, ra.steps};
      grid.b = {fbpnn::parse_param_name(param_b, spec.network), param_b, rb.lo,
                rb.hi, rb.steps};
      const fbpnn::SurfaceGrid result =
          fbpnn::sample_error_surface(spec.network, spec.dataset, grid);
      fbpnn::write_surface_csv(surface_out, result);
      std::printf("%d x %d surface written to %s\n", grid.a.steps, grid.b.steps,
                  surface_out.c_str());
    } else if (*sizing) {
      std::printf("%ld\n",
                  fbpnn::sizing_estimate(sizing_c, sizing_samples, sizing_inputs));
    } else if (*train_cmd) {
      const fbpnn::TrainJob job = fbpnn::load_train_job(config_path);
      std::filesystem::create_directories(train_out);

      const auto start = std::chrono::steady_clock::now();
      const fbpnn::TrainResult result =
          fbpnn::train(job.network, job.dataset, job.config);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();

      fbpnn::RunSummary summary;
      summary.experiment_id = job.name;
      summary.mode =
          job.config.mode == fbpnn::TrainMode::Classic ? "classic" : "fsdm";
      summary.final_f_hat = fbpnn::mean_squared_error(result.mlp, job.dataset);
      summary.tracked_names = result.trace.tracked_names;
      for (const fbpnn::ParamRef& ref : job.config.tracked_params) {
        summary.final_tracked.push_back(fbpnn::get_param(result.mlp, ref));
      }
      summary.iterations_executed = static_cast<long>(result.trace.rows.size());
      summary.converged = result.status == fbpnn::RunStatus::Converged;
      summary.status = result.status == fbpnn::RunStatus::Converged
                           ? "converged"
                           : result.status == fbpnn::RunStatus::NumericError
                                 ? "numeric-error"
                                 : "reached-max-iterations";
      summary.wall_seconds = seconds;

      const auto trace_path =
          std::filesystem::path(train_out) / (job.name + "_trace.csv");
      const auto summary_path =
          std::filesystem::path(train_out) / (job.name + "_summary.json");
      fbpnn::write_trace_csv(trace_path, result.trace);
      fbpnn::write_summary_json(summary_path, summary);
      print_summary(summary);
      if (!result.message.empty()) {
        std::printf("  aborted: %s\n", result.message.c_str());
      }
      std::printf("  trace:   %s\n  summary: %s\n", trace_path.string().c_str(),
                  summary_path.string().c_str());
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
