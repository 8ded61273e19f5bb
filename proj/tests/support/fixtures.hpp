#pragma once

#include "inornet/trainer.hpp"

namespace fixture {

// In-memory synthetic dataset (recipes only) relabelled for an even schedule.
inline inornet::IncrementalData synthetic(const std::vector<std::string>& shapes, std::size_t train,
                                          std::size_t test, std::size_t points, std::size_t states,
                                          std::uint64_t seed = 0, double deform = 0.0, double noise = 0.0) {
  std::vector<inornet::SyntheticClassSpec> spec;
  for (const auto& s : shapes) spec.push_back({s, train, test});
  inornet::SyntheticOptions opts;
  opts.points = points;
  opts.seed = seed;
  opts.deform = deform;
  opts.noise_sigma = noise;
  opts.write_files = false;
  const auto manifest = inornet::generate_synthetic_dataset(spec, opts, {});
  return inornet::IncrementalData::load(manifest, inornet::IncrementalSchedule::even(shapes.size(), states), points);
}

// Narrow network for fast tests; `overrides` are merged into the JSON config.
inline inornet::TrainConfig config(const nlohmann::json& overrides = nlohmann::json::object()) {
  nlohmann::json j = {{"L", 4},
                      {"m", 4},
                      {"U", 32},
                      {"batch_size", 4},
                      {"epochs", 1},
                      {"exemplar_budget", 8},
                      {"model",
                       {{"preset", "desk"},
                        {"tnet_hidden", 8},
                        {"encoder", {8, 8, 16}},
                        {"structure_width", 16},
                        {"embed_width", 8},
                        {"critic_conv", 4},
                        {"critic_state_hidden", 8},
                        {"critic_branch", 4},
                        {"classifier_hidden", {8, 8}}}}};
  j.merge_patch(overrides);
  return inornet::TrainConfig::from_json(j);
}

inline std::vector<const inornet::LabeledCloud*> pointers(const std::vector<inornet::LabeledCloud>& v) {
  std::vector<const inornet::LabeledCloud*> out;
  for (const auto& x : v) out.push_back(&x);
  return out;
}

}  // namespace fixture
