#pragma once

#include "inornet/pointcloud.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace inornet {

enum class Split { Train, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Procedural shape recipe; regenerates the same cloud bit-for-bit.
struct ShapeRecipe {
  std::string shape;
  std::uint64_t seed = 0;
  std::size_t points = 1024;
  double noise_sigma = 0.0;
  double deform = 0.0;  // max relative per-axis stretch

  nlohmann::json to_json() const;
  static ShapeRecipe from_json(const nlohmann::json& j);
};

struct ManifestSample {
  std::string id;
  int class_index = 0;
  Split split = Split::Train;
  std::optional<std::filesystem::path> file;  // resolved against the manifest directory
  std::optional<ShapeRecipe> recipe;
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<ManifestSample> samples;
  std::filesystem::path base_dir;

  std::size_t class_count() const { return classes.size(); }
  nlohmann::json to_json() const;
};

/// Parses and validates. Throws ParseError on malformed JSON / schema, and
/// ValidationError on missing files, duplicate ids, or sparse class indices.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);
void validate_manifest(const DatasetManifest& manifest);

/// Loads a sample's cloud (file or recipe), resampled to `points` and
/// normalized. The result carries the sample's label and id.
PointCloud load_sample(const DatasetManifest& manifest, const ManifestSample& sample, std::size_t points);

/// Ordered partition of class indices into incremental states.
struct IncrementalSchedule {
  std::vector<std::vector<int>> state_classes;

  std::size_t states() const { return state_classes.size(); }
  /// Classes introduced before state `s` (1-based).
  std::size_t old_class_count(std::size_t s) const;
  std::vector<int> classes_seen_through(std::size_t s) const;

  /// Equal contiguous split of 0..classes-1 into `states` groups.
  static IncrementalSchedule even(std::size_t classes, std::size_t states);
  static IncrementalSchedule from_json(const nlohmann::json& j, std::size_t classes);
  nlohmann::json to_json() const;
};

/// Throws ValidationError unless the groups are disjoint and cover 0..classes-1.
void validate_schedule(const IncrementalSchedule& schedule, std::size_t classes);

const std::vector<std::string>& synthetic_shape_kinds();

/// One surface sample of a named shape (z is up), before normalization.
PointCloud generate_shape(const ShapeRecipe& recipe);

struct SyntheticClassSpec {
  std::string shape;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

struct SyntheticOptions {
  std::size_t points = 1024;
  double noise_sigma = 0.0;
  double deform = 0.0;
  std::uint64_t seed = 0;
  bool write_files = true;  // false: manifest references recipes only
};

/// Writes `<out_dir>/manifest.json` plus one PCLD file per sample and returns
/// the manifest. Classes follow the order of `spec`. With recipes only, an
/// empty `out_dir` keeps everything in memory.
DatasetManifest generate_synthetic_dataset(const std::vector<SyntheticClassSpec>& spec,
                                           const SyntheticOptions& opts,
                                           const std::filesystem::path& out_dir);

}  // namespace inornet
