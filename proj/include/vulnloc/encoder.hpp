#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vulnloc/rng.hpp"
#include "vulnloc/tensor.hpp"
#include "vulnloc/tokenizer.hpp"

namespace vulnloc {

struct EncoderConfig {
  int layers = 2;
  int heads = 2;
  int hidden = 64;
  int ffn_dim = 256;
  int max_len = 512;
  int vocab_size = 4096;
  double dropout_rate = 0.1;

  void validate() const;
  int head_dim() const { return hidden / heads; }
};

// Post-norm transformer block parameters: per-head Q/K/V projections, the
// output projection, the two-layer feed-forward net, and both layer norms.
struct EncoderLayerParams {
  std::vector<Tensor> wq, wk, wv;  // per head: [hidden x head_dim]
  Tensor wo;                       // [hidden x hidden]
  Tensor ffn_w1, ffn_b1;           // [hidden x ffn_dim], [1 x ffn_dim]
  Tensor ffn_w2, ffn_b2;           // [ffn_dim x hidden], [1 x hidden]
  Tensor ln1_gamma, ln1_beta;      // [1 x hidden]
  Tensor ln2_gamma, ln2_beta;
};

struct EncoderParams {
  Tensor token_embedding;     // [vocab_size x hidden]
  Tensor position_embedding;  // [max_len x hidden]
  std::vector<EncoderLayerParams> layers;

  static EncoderParams init(const EncoderConfig& config, Rng& rng);
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> all() const;
};

enum class RunMode { train, eval };

// token embedding + positional embedding, row per token
Tensor embed(const TokenizedFunction& tokens, const EncoderParams& params,
             const EncoderConfig& config);

// softmax(Q K^T / sqrt(d_k)) V
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, int d_k);

Tensor multi_head_attention(const Tensor& x, const EncoderLayerParams& layer, int heads);

// Full stack: embeddings through `layers` post-norm blocks. Dropout is live
// only in train mode (rng required then). Raises std::domain_error naming
// the layer if any activation goes non-finite.
Tensor encode(const TokenizedFunction& tokens, const EncoderParams& params,
              const EncoderConfig& config, RunMode mode, Rng* dropout_rng = nullptr);

}  // namespace vulnloc
