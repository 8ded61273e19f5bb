#pragma once

#include "inornet/dims.hpp"
#include "inornet/pointcloud.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace inornet {

struct Ablations {
  bool cgr = true;  // geometric reasoning (offsets + consistency loss)
  bool cga = true;  // critic-guided attention
  bool wfc = true;  // weight fairness compensation
  bool sfc = true;  // score fairness compensation at inference
};

struct TrainConfig {
  double lambda1 = 0.01;
  double lambda2 = 0.1;
  double gamma = 0.7;
  double tau = 64.0;
  std::size_t L = 64;
  std::size_t m = 32;
  std::size_t U = 1024;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::size_t epochs = 30;
  std::size_t exemplar_budget = 1000;
  std::uint64_t seed = 0;
  Ablations ablations;
  nlohmann::json schedule = nlohmann::json::object({{"states", 1}});
  std::filesystem::path dataset;

  // Optional "model" object: layer widths ("preset": "full" | "desk" plus
  // overrides), "centered_norm" for the embedding normalisation, and
  // "augment": {"rotate_z", "jitter_sigma", "jitter_clip"}.
  ModelDims model = ModelDims::full();
  std::string model_preset = "full";
  nlohmann::json model_overrides = nlohmann::json::object();
  bool centered_norm = false;
  AugmentOptions augment;

  // Runtime only, never serialised: worker threads for per-sample work.
  std::size_t threads = 1;

  /// Widths with L and m folded in.
  ModelDims dims() const;
  void validate() const;
  nlohmann::json to_json() const;
  /// Hex digest of the serialised config.
  std::string hash() const;

  /// Relative dataset paths are resolved against `base_dir`.
  static TrainConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

TrainConfig load_config(const std::filesystem::path& path);

}  // namespace inornet
