#pragma once

#include <filesystem>
#include <string>

#include "fbpnn/trainer.hpp"

namespace fbpnn {

/// A fully specified training run loaded from a JSON config file: network
/// architecture (explicit or seeded-random weights), dataset (inline pairs
/// or a named generator), and the trainer settings.
struct TrainJob {
  std::string name;
  Mlp network;
  Dataset dataset;
  TrainerConfig config;
};

TrainJob load_train_job(const std::filesystem::path& config_path);

}  // namespace fbpnn
