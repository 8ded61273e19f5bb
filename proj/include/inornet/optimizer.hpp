#pragma once

#include "inornet/parameters.hpp"

#include <vector>

namespace inornet {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // L2 term added to the gradient
};

/// Adam over one parameter group. Moments are created lazily, so parameters
/// that grow (classifier columns) restart from zero moments on resize.
class Adam {
 public:
  Adam(ParamGroup group, AdamOptions opts) : group_(group), opts_(opts) {}

  /// Applies one step to every parameter of the group that has a gradient
  /// entry (non-empty matrix) in `grads`.
  void step(ParameterSet& params, const std::vector<Mat>& grads);
  void reset();
  long steps() const { return t_; }

 private:
  ParamGroup group_;
  AdamOptions opts_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace inornet
