#include "inornet/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace inornet {
namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {"lambda1", "lambda2", "gamma",      "tau",  "L",          "m",
                                     "U",       "batch_size", "lr",      "weight_decay", "epochs",
                                     "exemplar_budget", "seed", "ablations", "schedule", "dataset", "model"};

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

ModelDims preset(const std::string& name) {
  if (name == "full") return ModelDims::full();
  if (name == "desk") return ModelDims::desk();
  throw ParseError("config: unknown model preset '" + name + "'");
}

}  // namespace

ModelDims TrainConfig::dims() const {
  ModelDims d = model;
  d.structures = static_cast<Index>(L);
  d.neighbors = static_cast<Index>(m);
  return d;
}

void TrainConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0) throw ValidationError("config: lambda1 and lambda2 must be >= 0");
  if (!(gamma >= 0 && gamma < 1)) throw ValidationError("config: gamma must lie in [0, 1)");
  if (!(tau > 0)) throw ValidationError("config: tau must be positive");
  if (L == 0 || m == 0 || U == 0) throw ValidationError("config: L, m and U must be positive");
  if (L > U) throw ValidationError("config: L exceeds the point count U");
  if (m > U) throw ValidationError("config: m exceeds the point count U");
  if (batch_size == 0) throw ValidationError("config: batch_size must be positive");
  if (!(lr > 0) || weight_decay < 0) throw ValidationError("config: bad optimizer settings");
  dims().validate();
}

json TrainConfig::to_json() const {
  json model_j = model_overrides;
  model_j["preset"] = model_preset;
  model_j["centered_norm"] = centered_norm;
  model_j["augment"] = {{"rotate_z", augment.rotate_z},
                        {"jitter_sigma", augment.jitter_sigma},
                        {"jitter_clip", augment.jitter_clip}};
  return {{"lambda1", lambda1},
          {"lambda2", lambda2},
          {"gamma", gamma},
          {"tau", tau},
          {"L", L},
          {"m", m},
          {"U", U},
          {"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"epochs", epochs},
          {"exemplar_budget", exemplar_budget},
          {"seed", seed},
          {"ablations", {{"cgr", ablations.cgr}, {"cga", ablations.cga}, {"wfc", ablations.wfc}, {"sfc", ablations.sfc}}},
          {"schedule", schedule},
          {"dataset", dataset.generic_string()},
          {"model", model_j}};
}

std::string TrainConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

TrainConfig TrainConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw ParseError("config: unknown key '" + key + "'");
  }
  TrainConfig c;
  read(j, "lambda1", c.lambda1);
  read(j, "lambda2", c.lambda2);
  read(j, "gamma", c.gamma);
  read(j, "tau", c.tau);
  read(j, "L", c.L);
  read(j, "m", c.m);
  read(j, "U", c.U);
  read(j, "batch_size", c.batch_size);
  read(j, "lr", c.lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "epochs", c.epochs);
  read(j, "exemplar_budget", c.exemplar_budget);
  read(j, "seed", c.seed);
  if (j.contains("ablations")) {
    const auto& a = j.at("ablations");
    for (const auto& [key, _] : a.items()) {
      if (key != "cgr" && key != "cga" && key != "wfc" && key != "sfc") {
        throw ParseError("config: unknown ablation flag '" + key + "'");
      }
    }
    read(a, "cgr", c.ablations.cgr);
    read(a, "cga", c.ablations.cga);
    read(a, "wfc", c.ablations.wfc);
    read(a, "sfc", c.ablations.sfc);
  }
  if (j.contains("schedule")) c.schedule = j.at("schedule");
  if (j.contains("dataset")) {
    std::filesystem::path p = j.at("dataset").get<std::string>();
    c.dataset = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (j.contains("model")) {
    json m = j.at("model");
    if (!m.is_object()) throw ParseError("config: 'model' must be an object");
    if (m.contains("preset")) {
      c.model_preset = m.at("preset").get<std::string>();
      m.erase("preset");
    }
    if (m.contains("centered_norm")) {
      c.centered_norm = m.at("centered_norm").get<bool>();
      m.erase("centered_norm");
    }
    if (m.contains("augment")) {
      const auto& a = m.at("augment");
      read(a, "rotate_z", c.augment.rotate_z);
      read(a, "jitter_sigma", c.augment.jitter_sigma);
      read(a, "jitter_clip", c.augment.jitter_clip);
      m.erase("augment");
    }
    c.model_overrides = m;
    c.model = ModelDims::from_json(m, preset(c.model_preset));
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config: " + std::string(e.what()));
  }
  return TrainConfig::from_json(j, path.parent_path());
}

}  // namespace inornet
