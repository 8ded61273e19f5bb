#pragma once

#include "inornet/common.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace inornet {

/// Layer widths of the whole network.
struct ModelDims {
  Index tnet_hidden = 64;                           // alignment-block internal width
  std::vector<Index> encoder = {64, 128, 512};      // last entry is d_p
  Index structure_width = 1024;                     // d_s
  Index embed_width = 256;                          // d_c
  Index attention_ratio = 4;                        // r
  Index critic_conv = 256;
  Index critic_state_hidden = 256;
  Index critic_branch = 64;
  std::vector<Index> classifier_hidden = {512, 256};  // last entry is d_w
  Index structures = 64;                            // L
  Index neighbors = 32;                             // m

  Index point_width() const { return encoder.back(); }
  Index classifier_input_width() const { return classifier_hidden.back(); }

  /// Full-size network widths.
  static ModelDims full();
  /// Narrow widths that train in seconds on one CPU core.
  static ModelDims desk();

  nlohmann::json to_json() const;
  static ModelDims from_json(const nlohmann::json& j, const ModelDims& defaults);
  void validate() const;
};

}  // namespace inornet
