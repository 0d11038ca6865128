#include "fbpnn/run_config.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "fbpnn/experiments.hpp"

namespace fbpnn {

namespace {

using nlohmann::json;

double uniform_signed(std::mt19937_64& rng, double scale) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return scale * (2.0 * u - 1.0);
}

Mlp parse_network(const json& spec) {
  Mlp mlp;
  mlp.input_width = spec.at("input_width").get<int>();

  const bool random_init = spec.contains("init");
  std::mt19937_64 rng;
  double init_scale = 0.5;
  if (random_init) {
    rng.seed(spec["init"].value("seed", 0ULL));
    init_scale = spec["init"].value("scale", 0.5);
  }

  int in_width = mlp.input_width;
  for (const json& layer_spec : spec.at("layers")) {
    LayerParams layer;
    layer.activation =
        activation_from_name(layer_spec.at("activation").get<std::string>());
    if (layer_spec.contains("weights")) {
      const json& rows = layer_spec["weights"];
      const int out_width = static_cast<int>(rows.size());
      layer.weights = Matrix(out_width, in_width);
      for (int i = 0; i < out_width; ++i) {
        if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != in_width) {
          throw std::invalid_argument("weight row width mismatch in config");
        }
        for (int j = 0; j < in_width; ++j) {
          layer.weights(i, j) =
              rows[static_cast<size_t>(i)][static_cast<size_t>(j)].get<double>();
        }
      }
      layer.biases = layer_spec.at("biases").get<std::vector<double>>();
    } else {
      const int out_width = layer_spec.at("width").get<int>();
      if (!random_init) {
        throw std::invalid_argument(
            "layer without explicit weights needs a network init block");
      }
      layer.weights = Matrix(out_width, in_width);
      for (double& w : layer.weights.data()) w = uniform_signed(rng, init_scale);
      layer.biases.resize(static_cast<size_t>(out_width));
      for (double& b : layer.biases) b = uniform_signed(rng, init_scale);
    }
    in_width = layer.out_width();
    mlp.layers.push_back(std::move(layer));
  }
  mlp.validate();
  return mlp;
}

Dataset parse_dataset(const json& spec) {
  if (spec.contains("generator")) {
    const std::string name = spec["generator"].get<std::string>();
    if (name == "approx") return build_approx_dataset();
    if (name == "filter") return filter_dataset();
    throw std::invalid_argument("unknown dataset generator: " + name);
  }
  Dataset data;
  for (const json& sample_spec : spec.at("samples")) {
    Sample s;
    s.input = sample_spec.at("input").get<std::vector<double>>();
    s.target = sample_spec.at("target").get<std::vector<double>>();
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace

TrainJob load_train_job(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    throw std::runtime_error("cannot open config " + config_path.string());
  }
  json spec;
  try {
    in >> spec;
  } catch (const json::parse_error& err) {
    throw std::runtime_error("bad JSON in " + config_path.string() + ": " +
                             err.what());
  }

  TrainJob job;
  job.name = spec.value("name", config_path.stem().string());
  job.network = parse_network(spec.at("network"));
  job.dataset = parse_dataset(spec.at("dataset"));

  TrainerConfig& config = job.config;
  const std::string mode = spec.value("mode", "classic");
  if (mode == "classic") {
    config.mode = TrainMode::Classic;
  } else if (mode == "fsdm") {
    config.mode = TrainMode::Fsdm;
  } else {
    throw std::invalid_argument("mode must be 'classic' or 'fsdm'");
  }
  config.learning_rate = spec.at("learning_rate").get<double>();
  config.max_iterations = spec.at("max_iterations").get<long>();
  if (spec.contains("w_inf")) config.w_inf = spec["w_inf"].get<double>();
  if (spec.contains("b_inf")) config.b_inf = spec["b_inf"].get<double>();
  config.n_max = spec.value("n_max", 3);
  if (spec.contains("order_policy")) {
    const json& policy = spec["order_policy"];
    const std::string kind = policy.at("kind").get<std::string>();
    if (kind == "fixed") {
      config.order_policy = OrderPolicy::fixed(policy.at("value").get<double>());
    } else if (kind == "adaptive") {
      config.order_policy =
          OrderPolicy::adaptive_kernel(policy.value("epsilon_phi", 1e-12));
    } else {
      throw std::invalid_argument("order_policy.kind must be fixed or adaptive");
    }
  } else {
    config.order_policy = OrderPolicy::adaptive_kernel();
  }
  config.stop_tolerance = spec.value("stop_tolerance", 1e-12);
  config.saddle_epsilon = spec.value("saddle_epsilon", 1e-12);
  config.perturbation_scale = spec.value("perturbation_scale", 1e-3);
  config.rng_seed = spec.value("rng_seed", 0ULL);
  const std::string batch = spec.value("batch", "full");
  if (batch == "full") {
    config.batch = BatchMode::FullBatch;
  } else if (batch == "per-sample") {
    config.batch = BatchMode::PerSample;
  } else {
    throw std::invalid_argument("batch must be 'full' or 'per-sample'");
  }

  if (spec.contains("trainable")) {
    std::vector<ParamRef> trainable;
    for (const json& name : spec["trainable"]) {
      trainable.push_back(
          parse_param_name(name.get<std::string>(), job.network));
    }
    config.trainable_mask = ParamMask::only(job.network, trainable);
  }
  if (spec.contains("tracked")) {
    for (const json& name : spec["tracked"]) {
      config.tracked_params.push_back(
          parse_param_name(name.get<std::string>(), job.network));
    }
  }
  return job;
}

}  // namespace fbpnn
