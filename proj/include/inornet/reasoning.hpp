#pragma once

// Category-guided geometric reasoning: point encoder, adaptive local
// structures (offset voting + kNN regrouping), structure features, category
// prototypes and the semantic-consistency loss.

#include "inornet/dims.hpp"
#include "inornet/parameters.hpp"
#include "inornet/pointcloud.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>

namespace inornet {

/// Registers encoder, offset, structure and embedding layer parameters
/// (all in the encoder/classifier group).
void add_reasoning_params(ParameterSet& params, const ModelDims& dims, Rng& rng);

/// Two alignment blocks interleaved with shared per-point layers: U x 3 -> U x d_p.
Var encode_points(Binding& bind, const PointCloud& pc, const ModelDims& dims);
Var encode_points(Binding& bind, Var points, const ModelDims& dims);

/// Converts a cloud to a U x 3 matrix.
Mat cloud_matrix(const PointCloud& pc);

struct LocalStructureSet {
  std::vector<Vec3> centroids;               // p̂_l, possibly off the point set
  std::vector<std::uint32_t> neighbor_indices;  // L * m, row-major per structure
  Index neighbors = 0;                       // m
  Var centroid_features;                     // L x d_p

  std::size_t size() const { return centroids.size(); }
  std::span<const std::uint32_t> neighbors_of(std::size_t l) const {
    return {neighbor_indices.data() + l * static_cast<std::size_t>(neighbors), static_cast<std::size_t>(neighbors)};
  }
};

/// FPS centroids with their kNN neighborhoods; centroid features are the
/// centroid points' own rows of `point_features`.
LocalStructureSet build_structures(const PointCloud& pc, Var point_features, std::size_t count,
                                   std::size_t neighbors, std::size_t start_index = 0);

/// Δp̂_l = mean_i Γ_o(f̂_l - f_li) ⊙ (p̂_l - p_li); L x 3.
Var predict_offsets(Binding& bind, const PointCloud& pc, const LocalStructureSet& structures, Var point_features);

/// Moves centroids by `offsets`, re-queries neighbors over the whole cloud and
/// sets each centroid feature to the mean of its new neighbors' features.
LocalStructureSet update_structures(const PointCloud& pc, const LocalStructureSet& structures, const Mat& offsets,
                                    Var point_features);

/// f_l^s = max_i Γ_s(f_li), stacked into f_m (L x d_s).
Var structure_features(Binding& bind, const LocalStructureSet& structures, Var point_features);

/// EMA-maintained per-class global prototypes.
class PrototypeBank {
 public:
  struct Entry {
    RowVec prototype;
    int initial_state = 0;
  };

  explicit PrototypeBank(double gamma = 0.7);

  double gamma() const { return gamma_; }
  bool initialized(int cls) const { return entries_.count(cls) != 0; }
  const Entry& at(int cls) const;
  const std::map<int, Entry>& entries() const { return entries_; }

  /// f_g^k <- γ f_g^k + (1-γ) f̂_g^k for classes present in `estimates`;
  /// first-seen classes are seeded with the estimate and tagged with `state`.
  void ema_update(const std::map<int, RowVec>& estimates, int state);

  nlohmann::json to_json() const;
  static PrototypeBank from_json(const nlohmann::json& j);

 private:
  double gamma_;
  std::map<int, Entry> entries_;
};

/// Mean global feature per class present in the batch (rows of `global_features`).
std::map<int, RowVec> batch_prototypes(const Mat& global_features, std::span<const int> labels);

/// N(x) = (x - mean(x)) / ||x||; `centered_norm` divides by ||x - mean(x)|| instead.
RowVec normalize_embed(const RowVec& x, bool centered_norm = false);

struct ConsistencyOptions {
  double tau = 64.0;
  bool centered_norm = false;
};

/// Semantic consistency of one sample: sum over structures of
/// log(1 + Σ_{i≠k} exp(τ s_i − τ s_k)) against every initialized prototype.
/// Prototypes enter as constants. Throws std::invalid_argument if the true
/// class has no prototype yet.
Var consistency_loss(Binding& bind, Var structure_feats, const PrototypeBank& bank, int label,
                     const ConsistencyOptions& opts);

}  // namespace inornet
