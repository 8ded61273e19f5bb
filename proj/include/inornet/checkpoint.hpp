#pragma once

#include "inornet/trainer.hpp"

#include <filesystem>
#include <memory>

namespace inornet {

inline constexpr const char* kCheckpointFormat = "inornet-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// A restored training snapshot.
struct Checkpoint {
  std::unique_ptr<IncrementalTrainer> trainer;
  std::vector<std::string> class_names;  // by classifier column
  std::vector<int> class_order;          // column -> manifest class index
};

/// Serialises parameters of all three groups, prototypes, score statistics,
/// exemplar ids, the config (with its hash) and the completed state index.
nlohmann::json checkpoint_to_json(const IncrementalTrainer& trainer, const IncrementalData& data);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const IncrementalTrainer& trainer, const IncrementalData& data);
/// Throws FormatError on a bad header, version or config hash and
/// ValidationError when stored parameters do not fit the configured network.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace inornet
