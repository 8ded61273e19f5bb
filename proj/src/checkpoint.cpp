#include "inornet/checkpoint.hpp"

#include <fstream>

namespace inornet {

using nlohmann::json;

json checkpoint_to_json(const IncrementalTrainer& trainer, const IncrementalData& data) {
  json params = json::array();
  for (const auto& p : trainer.model().params()) {
    std::vector<double> values(p.value.data(), p.value.data() + p.value.size());
    params.push_back({{"name", p.name}, {"group", to_string(p.group)}, {"rows", p.value.rows()},
                      {"cols", p.value.cols()}, {"data", values}});
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", trainer.config().to_json()},
          {"config_hash", trainer.config().hash()},
          {"state", trainer.completed_states()},
          {"class_names", data.class_names},
          {"class_order", data.class_order},
          {"states", trainer.states()},
          {"params", params},
          {"prototypes", trainer.bank().to_json()},
          {"score_stats", trainer.stats().to_json()},
          {"exemplars", trainer.exemplars().to_json()}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) throw FormatError("not an inornet checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
  }
  TrainConfig cfg = TrainConfig::from_json(j.at("config"));
  if (cfg.hash() != j.at("config_hash").get<std::string>()) throw FormatError("checkpoint config hash mismatch");

  Checkpoint ck;
  ck.class_names = j.at("class_names").get<std::vector<std::string>>();
  ck.class_order = j.at("class_order").get<std::vector<int>>();
  auto states = j.at("states").get<std::vector<std::vector<int>>>();
  ck.trainer = std::make_unique<IncrementalTrainer>(cfg, states);
  IncrementalTrainer& tr = *ck.trainer;
  const int done = j.at("state").get<int>();
  if (done < 0 || done > static_cast<int>(states.size())) throw FormatError("checkpoint state index out of range");

  auto& params = tr.model().params();
  const auto& stored = j.at("params");
  if (stored.size() != params.size()) throw ValidationError("checkpoint parameter count does not match the network");
  for (const auto& e : stored) {
    const auto name = e.at("name").get<std::string>();
    if (!params.contains(name)) throw ValidationError("checkpoint has unknown parameter " + name);
    Parameter& p = params.at(name);
    if (to_string(p.group) != e.at("group").get<std::string>()) throw ValidationError("group mismatch for " + name);
    const auto rows = e.at("rows").get<Index>(), cols = e.at("cols").get<Index>();
    const auto data = e.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) throw FormatError("truncated parameter " + name);
    if (rows != p.value.rows() || (cols != p.value.cols() && name != InorNet::kLastLayer)) {
      throw ValidationError("shape mismatch for " + name);
    }
    p.value = Eigen::Map<const Mat>(data.data(), rows, cols);
  }
  tr.bank() = PrototypeBank::from_json(j.at("prototypes"));
  tr.stats() = ScoreStats::from_json(j.at("score_stats"));
  tr.exemplars() = ExemplarStore::from_json(j.at("exemplars"));
  tr.set_completed_states(done);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const IncrementalTrainer& trainer, const IncrementalData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(trainer, data).dump();
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("corrupt checkpoint: " + std::string(e.what()));
  }
  return checkpoint_from_json(j);
}

}  // namespace inornet
