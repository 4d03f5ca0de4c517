#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vulnloc/rng.hpp"
#include "vulnloc/tensor.hpp"
#include "vulnloc/tokenizer.hpp"

namespace vulnloc {

// Two linear statement classifiers (one per pooling channel) and the convex
// fusion of their vulnerable-class probabilities. Fusion weights are fixed
// at 0.5/0.5 unless learnable fusion is enabled, in which case a softmaxed
// logit pair keeps them non-negative with unit sum.
struct HeadParams {
  Tensor w_max, b_max;    // [hidden x 2], [1 x 2]
  Tensor w_mean, b_mean;  // [hidden x 2], [1 x 2]
  double fusion_max = 0.5;
  double fusion_mean = 0.5;
  bool learnable_fusion = false;
  Tensor fusion_logits;  // [1 x 2], present iff learnable_fusion

  static HeadParams init(int hidden, bool learnable, Rng& rng);
  std::pair<double, double> fusion_weights() const;  // current (w_max, w_mean)
  void set_fixed_fusion(double wmax, double wmean);

  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> all() const;
};

// Fused and per-channel vulnerable-class probabilities for every statement
// that kept at least one token. `fused` stays attached to the graph so the
// MIL loss can differentiate through it; rows mirror it as plain numbers.
struct StatementScores {
  struct Row {
    int statement = 0;  // statement index within the function
    int line = 0;       // line in the comment-stripped source
    double p_max = 0.0;
    double p_mean = 0.0;
    double p = 0.0;
  };
  std::vector<Row> rows;
  Tensor fused;  // [m_eff x 1]

  int m_eff() const { return static_cast<int>(rows.size()); }
  int row_for_statement(int statement) const;
};

Tensor max_pool_statement(const Tensor& hidden, const TokenizedFunction& tokens, int statement);
Tensor mean_pool_statement(const Tensor& hidden, const TokenizedFunction& tokens, int statement);

StatementScores classify_statements(const Tensor& hidden, const TokenizedFunction& tokens,
                                    const HeadParams& head);

}  // namespace vulnloc
