#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vulnloc/encoder.hpp"
#include "vulnloc/mil_head.hpp"

namespace vulnloc {

// All trainable tensors: encoder stack plus the MIL head.
struct ModelParams {
  EncoderParams encoder;
  HeadParams head;

  static ModelParams init(const EncoderConfig& config, bool learnable_fusion, Rng& rng);

  std::vector<Tensor> all() const;
  std::vector<std::pair<std::string, Tensor>> named() const;
  ModelParams clone() const;  // deep copy of values, fresh grad buffers
};

// Checkpoint round-trip. Metadata carries the encoder config and fusion
// settings so a saved model is loadable without the original run config.
void save_model(const ModelParams& model, const EncoderConfig& config, const std::string& path);
std::pair<ModelParams, EncoderConfig> load_model(const std::string& path);

}  // namespace vulnloc
