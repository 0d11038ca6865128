#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "fbpnn/experiments.hpp"
#include "fbpnn/run_config.hpp"
#include "fbpnn/surface.hpp"
#include "fbpnn/trace_io.hpp"
#include "test_support.hpp"

using namespace fbpnn;
using fbpnn::testing::close_rel;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("fbpnn_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("reference 1-2-1 network carries the quoted constants") {
  const Mlp net = build_approx_network(true);
  CHECK(net.input_width == 1);
  REQUIRE(net.layer_count() == 2);
  CHECK(net.layers[0].out_width() == 2);
  CHECK(net.layers[1].out_width() == 1);
  CHECK(net.layers[0].activation == ActivationKind::LogSigmoid);
  CHECK(net.layers[1].activation == ActivationKind::LogSigmoid);
  CHECK(net.layers[0].weights(0, 0) == 10.0);
  CHECK(net.layers[0].weights(1, 0) == 10.0);
  CHECK(net.layers[0].biases[0] == -5.0);
  CHECK(net.layers[0].biases[1] == 5.0);
  CHECK(net.layers[1].weights(0, 0) == 1.0);
  CHECK(net.layers[1].weights(0, 1) == 1.0);
  CHECK(net.layers[1].biases[0] == -1.0);

  const Mlp tracked_open = build_approx_network(false);
  CHECK(tracked_open.layers[0].weights(0, 0) == 0.0);
  CHECK(tracked_open.layers[1].weights(0, 0) == 0.0);
  CHECK(tracked_open.layers[0].weights(1, 0) == 10.0);
}

TEST_CASE("sampled response dataset") {
  const Dataset data = build_approx_dataset();
  REQUIRE(data.size() == 41);
  CHECK(data.samples.front().input[0] == -2.0);
  CHECK(data.samples.back().input[0] == 2.0);
  CHECK(close_rel(data.samples[20].target[0], 0.5, 1e-15));
  const Mlp net = build_approx_network(true);
  CHECK(data.samples[20].target[0] == forward(net, {0.0}).final_output()[0]);
}

TEST_CASE("filter-fit network carries the quoted constants") {
  const Mlp net = build_ex5_network();
  CHECK(net.input_width == 1);
  REQUIRE(net.layer_count() == 2);
  CHECK(net.layers[0].out_width() == 15);
  CHECK(net.layers[0].activation == ActivationKind::TanSigmoid);
  CHECK(net.layers[1].activation == ActivationKind::Linear);
  CHECK(net.layers[0].weights(1, 0) == 20.8597);
  CHECK(net.layers[0].weights(0, 0) == 0.0);   // tracked slot
  CHECK(net.layers[0].weights(10, 0) == 0.0);  // tracked slot
  CHECK(net.layers[0].biases[0] == -21.0070);
  CHECK(net.layers[0].biases[14] == 20.9846);
  CHECK(net.layers[1].weights(0, 0) == -0.7629);
  CHECK(net.layers[1].weights(0, 14) == 0.3230);
  CHECK(net.layers[1].biases[0] == -0.4954);
}

TEST_CASE("filter measurement table") {
  const Dataset data = filter_dataset();
  REQUIRE(data.size() == 20);
  CHECK(data.samples[0].input[0] == -1.0);
  CHECK(data.samples[0].target[0] == -0.832);
  CHECK(data.samples[10].input[0] == 0.0);
  CHECK(data.samples[10].target[0] == 0.248);
  CHECK(data.samples[19].target[0] == 1.984);
}

TEST_CASE("built-in experiment table") {
  const auto& ids = builtin_experiment_ids();
  CHECK(ids.size() == 8);

  const ExperimentSpec ex1 = builtin_experiment("ex1");
  CHECK(ex1.mu == 5.50);
  CHECK(ex1.iterations == 2000);
  CHECK(get_param(ex1.network, ex1.param_a) == -4.0);
  CHECK(get_param(ex1.network, ex1.param_b) == -4.0);
  CHECK(param_name(ex1.param_a) == "w1_1_1");
  CHECK(param_name(ex1.param_b) == "w2_1_1");

  const ExperimentSpec ex2 = builtin_experiment("ex2");
  CHECK(ex2.iterations == 9000);
  CHECK(get_param(ex2.network, ex2.param_a) == 5.0);
  CHECK(get_param(ex2.network, ex2.param_b) == 30.0);

  const ExperimentSpec ex3 = builtin_experiment("ex3");
  CHECK(ex3.iterations == 6000);
  CHECK(get_param(ex3.network, ex3.param_a) == -8.0);
  CHECK(get_param(ex3.network, ex3.param_b) == 9.0);

  const ExperimentSpec ex4 = builtin_experiment("ex4");
  CHECK(get_param(ex4.network, ex4.param_a) == 0.7003);
  CHECK(get_param(ex4.network, ex4.param_b) == 35.2626);

  const ExperimentSpec ex5a = builtin_experiment("ex5a");
  CHECK(ex5a.mu == 3.50);
  CHECK(ex5a.iterations == 3000);
  CHECK(get_param(ex5a.network, ex5a.param_a) == 108.0);
  CHECK(get_param(ex5a.network, ex5a.param_b) == 116.0);
  CHECK(param_name(ex5a.param_b) == "w1_11_1");

  CHECK(get_param(builtin_experiment("ex5b").network,
                  builtin_experiment("ex5b").param_a) == -110.0);
  CHECK(get_param(builtin_experiment("ex5c").network,
                  builtin_experiment("ex5c").param_b) == 100.0);
  const ExperimentSpec ex5d = builtin_experiment("ex5d");
  CHECK(get_param(ex5d.network, ex5d.param_a) == -9.00);
  CHECK(get_param(ex5d.network, ex5d.param_b) == 8.2676);

  CHECK_THROWS_AS(builtin_experiment("ex9"), std::invalid_argument);
}

TEST_CASE("hidden layer sizing estimate") {
  CHECK(sizing_estimate(0.0, 100, 1) == 1);
  CHECK(sizing_estimate(2.0, 100, 1) == 10);
  CHECK(sizing_estimate(1.0, 7, 1) == 2);
  CHECK_THROWS_AS(sizing_estimate(1.0, 1, 1), std::domain_error);
  CHECK_THROWS_AS(sizing_estimate(-1.0, 10, 1), std::domain_error);
  CHECK_THROWS_AS(sizing_estimate(1.0, 10, 0), std::domain_error);
}

TEST_CASE("error surface hits exact zero at the generating optimum") {
  const Mlp net = build_approx_network(true);
  const Dataset data = build_approx_dataset();
  SurfaceGridSpec grid;
  grid.a = {parse_param_name("w1_1_1", net), "w1_1_1", 0.0, 20.0, 41};
  grid.b = {parse_param_name("w2_1_1", net), "w2_1_1", 0.0, 2.0, 5};
  const SurfaceGrid surface = sample_error_surface(net, data, grid);
  CHECK(surface.a.value_at(20) == 10.0);
  CHECK(surface.b.value_at(2) == 1.0);
  CHECK(surface.value_at(20, 2) == 0.0);
  CHECK(surface.values.size() == 41u * 5u);
  for (double v : surface.values) CHECK(v >= 0.0);
}

TEST_CASE("surface sampling is pure") {
  const Mlp net = build_approx_network(true);
  Dataset data = build_approx_dataset();
  data.samples.resize(7);
  SurfaceGridSpec grid;
  grid.a = {parse_param_name("w1_1_1", net), "w1_1_1", -2.0, 12.0, 8};
  grid.b = {parse_param_name("w2_1_1", net), "w2_1_1", -1.0, 2.0, 4};
  const SurfaceGrid once = sample_error_surface(net, data, grid);
  const SurfaceGrid twice = sample_error_surface(net, data, grid);
  CHECK(once.values == twice.values);

  const auto dir = fresh_dir("surface");
  write_surface_csv(dir / "a.csv", once);
  write_surface_csv(dir / "b.csv", twice);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("surface grid validation") {
  const Mlp net = build_approx_network(true);
  SurfaceGridSpec grid;
  grid.a = {parse_param_name("w1_1_1", net), "w1_1_1", 0.0, 1.0, 1};
  grid.b = {parse_param_name("w2_1_1", net), "w2_1_1", 0.0, 1.0, 3};
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
  grid.a.steps = 3;
  grid.a.hi = 0.0;
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
}

TEST_CASE("filter surface has a relative optimum near the reference point") {
  const ExperimentSpec spec = builtin_experiment("ex5a");
  SurfaceGridSpec grid;
  // 13x13 grid with (19.3065, -20.4575) exactly at the center cell.
  grid.a = {spec.param_a, "w1_1_1", 19.3065 - 6 * 2.5, 19.3065 + 6 * 2.5, 13};
  grid.b = {spec.param_b, "w1_11_1", -20.4575 - 6 * 2.5, -20.4575 + 6 * 2.5, 13};
  const SurfaceGrid surface =
      sample_error_surface(spec.network, spec.dataset, grid);
  const double center = surface.value_at(6, 6);
  for (int ia = 4; ia <= 8; ++ia) {
    for (int ib = 4; ib <= 8; ++ib) {
      if (ia == 6 && ib == 6) continue;
      CHECK(center <= surface.value_at(ia, ib));
    }
  }
}

TEST_CASE("trace CSV round-trips exactly") {
  TrainTrace trace;
  trace.tracked_names = {"w1_1_1", "w2_1_1"};
  trace.rows.push_back({0, 0.03125, 1.25, {-4.0, -4.0}, false});
  trace.rows.push_back({1, 1.0 / 3.0, 0.7071067811865476, {0.1, -3.9}, true});
  trace.rows.push_back({2, 1e-17, 0.0, {9.999999999999998, 1.0}, false});

  const auto dir = fresh_dir("trace");
  const auto path = dir / "trace.csv";
  write_trace_csv(path, trace);
  const TrainTrace back = read_trace_csv(path);

  CHECK(back.tracked_names == trace.tracked_names);
  REQUIRE(back.rows.size() == trace.rows.size());
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    CHECK(back.rows[i].iteration == trace.rows[i].iteration);
    CHECK(back.rows[i].f_hat == trace.rows[i].f_hat);
    CHECK(back.rows[i].order_v == trace.rows[i].order_v);
    CHECK(back.rows[i].tracked == trace.rows[i].tracked);
    CHECK(back.rows[i].saddle_perturbed == trace.rows[i].saddle_perturbed);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment runs write comparable traces and summaries") {
  ExperimentSpec spec = builtin_experiment("ex1");
  spec.iterations = 40;  // keep the unit test fast
  RunOverrides overrides;
  const auto dir = fresh_dir("runs");
  const auto runs = run_experiment(spec, overrides, dir);
  REQUIRE(runs.size() == 2);

  CHECK(runs[0].summary.mode == "classic");
  CHECK(runs[1].summary.mode == "fsdm");
  const TrainTrace classic = read_trace_csv(runs[0].trace_file);
  const TrainTrace fsdm = read_trace_csv(runs[1].trace_file);
  CHECK(classic.tracked_names == fsdm.tracked_names);
  REQUIRE_FALSE(classic.rows.empty());
  REQUIRE_FALSE(fsdm.rows.empty());
  CHECK(classic.rows[0].f_hat == fsdm.rows[0].f_hat);

  // The error trace need not decrease, but it must stay finite and
  // nonnegative.
  for (const TrainTrace* trace : {&classic, &fsdm}) {
    for (const TrainTraceRow& row : trace->rows) {
      CHECK(row.f_hat >= 0.0);
      CHECK(std::isfinite(row.f_hat));
      CHECK(std::isfinite(row.order_v));
    }
  }

  // Round-trip equals the in-memory trace.
  REQUIRE(classic.rows.size() == runs[0].result.trace.rows.size());
  for (size_t i = 0; i < classic.rows.size(); ++i) {
    CHECK(classic.rows[i].f_hat == runs[0].result.trace.rows[i].f_hat);
    CHECK(classic.rows[i].tracked == runs[0].result.trace.rows[i].tracked);
  }

  const nlohmann::json summary =
      nlohmann::json::parse(slurp(runs[1].summary_file));
  CHECK(summary["experiment"] == "ex1");
  CHECK(summary["mode"] == "fsdm");
  CHECK(summary["iterations_executed"].get<long>() ==
        static_cast<long>(fsdm.rows.size()));
  CHECK(summary.contains("final_f_hat"));
  CHECK(summary.contains("wall_seconds"));
  CHECK(summary["tracked"].contains("w1_1_1"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("training jobs load from JSON configs") {
  const auto dir = fresh_dir("config");
  const auto path = dir / "job.json";
  {
    std::ofstream out(path);
    out << R"({
      "name": "smoke",
      "mode": "fsdm",
      "learning_rate": 0.25,
      "max_iterations": 12,
      "n_max": 1,
      "w_inf": -40.0,
      "order_policy": {"kind": "fixed", "value": 0.9},
      "batch": "per-sample",
      "rng_seed": 5,
      "network": {
        "input_width": 1,
        "layers": [
          {"activation": "log-sigmoid", "weights": [[10.0],[10.0]], "biases": [-5.0, 5.0]},
          {"activation": "log-sigmoid", "weights": [[1.0, 1.0]], "biases": [-1.0]}
        ]
      },
      "dataset": {"generator": "approx"},
      "trainable": ["w1_1_1", "w2_1_1"],
      "tracked": ["w1_1_1"]
    })";
  }
  const TrainJob job = load_train_job(path);
  CHECK(job.name == "smoke");
  CHECK(job.config.mode == TrainMode::Fsdm);
  CHECK(job.config.learning_rate == 0.25);
  CHECK(job.config.max_iterations == 12);
  CHECK(job.config.n_max == 1);
  CHECK(job.config.w_inf.value() == -40.0);
  CHECK_FALSE(job.config.b_inf.has_value());
  CHECK(job.config.order_policy.kind == OrderPolicy::Kind::Fixed);
  CHECK(job.config.order_policy.fixed_value == 0.9);
  CHECK(job.config.batch == BatchMode::PerSample);
  CHECK(job.config.rng_seed == 5);
  CHECK(job.dataset.size() == 41);
  CHECK(job.network.layers[0].weights(0, 0) == 10.0);
  REQUIRE(job.config.tracked_params.size() == 1);
  CHECK(param_name(job.config.tracked_params[0]) == "w1_1_1");

  const TrainResult result = train(job.network, job.dataset, job.config);
  CHECK(result.trace.rows.size() <= 12);
  std::filesystem::remove_all(dir);
}

TEST_CASE("seeded random network init is deterministic") {
  const auto dir = fresh_dir("config_rand");
  const auto write_config = [&](const std::string& name, int seed) {
    const auto path = dir / name;
    std::ofstream out(path);
    out << R"({"mode": "classic", "learning_rate": 0.1, "max_iterations": 2,
      "network": {"input_width": 2, "init": {"seed": )"
        << seed << R"(, "scale": 0.5},
        "layers": [{"width": 3, "activation": "tan-sigmoid"},
                   {"width": 1, "activation": "linear"}]},
      "dataset": {"samples": [{"input": [0.1, 0.2], "target": [0.3]}]}})";
    return path;
  };
  const TrainJob a = load_train_job(write_config("a.json", 9));
  const TrainJob b = load_train_job(write_config("b.json", 9));
  const TrainJob c = load_train_job(write_config("c.json", 10));
  CHECK(a.network.layers[0].weights.data() == b.network.layers[0].weights.data());
  CHECK(a.network.layers[0].weights.data() != c.network.layers[0].weights.data());
  std::filesystem::remove_all(dir);
}

TEST_CASE("real formatting survives a parse round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -0.0}) {
    CHECK(std::stod(format_real(v)) == v);
  }
}
