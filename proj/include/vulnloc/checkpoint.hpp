#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vulnloc/tensor.hpp"

namespace vulnloc {

// Versioned binary container of named tensors plus one free-form metadata
// string (JSON by convention). Layout, little-endian throughout:
//   8-byte magic "VLCKPT01"
//   u64 metadata length, metadata bytes
//   u64 tensor count
//   per tensor: u64 name length, name bytes, u64 ndim, u64 dims..., f64 data...
struct Checkpoint {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vulnloc
