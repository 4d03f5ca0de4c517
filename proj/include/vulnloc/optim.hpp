#pragma once

#include <cstdint>
#include <vector>

#include "vulnloc/tensor.hpp"

namespace vulnloc {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay. First/second moments and the step
// counter persist across step() calls; every registered tensor must carry a
// gradient buffer when step() runs.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig config);

  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_count_; }
  const AdamWConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamWConfig config_;
  std::int64_t step_count_ = 0;
};

}  // namespace vulnloc
