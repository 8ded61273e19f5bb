#pragma once

#include "inornet/attention.hpp"
#include "inornet/dims.hpp"
#include "inornet/reasoning.hpp"

namespace inornet {

struct ForwardOptions {
  bool reasoning = true;  // offset voting (off: plain FPS + kNN structures)
  bool attention = true;  // geometric attention (off: f_p = f_m)
  std::size_t fps_start = 0;
};

struct ForwardPass {
  Var point_features;           // U x d_p
  LocalStructureSet initial;    // FPS + kNN
  Var offsets;                  // L x 3, unset when reasoning is off
  LocalStructureSet structures; // after the offset update
  AttentionBundle bundle;       // A_m unset when attention is off
  Var logits;                   // 1 x K
};

/// The full recognition network. Classifier columns follow class
/// introduction order and grow by `grow()` at each incremental state.
class InorNet {
 public:
  InorNet(ModelDims dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  Index classes() const { return params_.at(kLastLayer).value.cols(); }

  /// Appends `count` classifier columns with the default fan-in init.
  void grow(Index count, Rng& rng);

  Mat& last_layer() { return params_.at(kLastLayer).value; }
  const Mat& last_layer() const { return params_.at(kLastLayer).value; }

  ForwardPass forward(Binding& bind, const PointCloud& pc, const ForwardOptions& opts) const;
  Var classify(Binding& bind, Var global_feature) const;
  /// Tape-free classifier evaluation (logits).
  RowVec classify_value(const RowVec& global_feature) const;

  static constexpr const char* kLastLayer = "classifier.out.w";

 private:
  ModelDims dims_;
  ParameterSet params_;
};

}  // namespace inornet
