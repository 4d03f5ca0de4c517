#include "vulnloc/encoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vulnloc {

namespace {
constexpr double kInitStd = 0.02;
}

void EncoderConfig::validate() const {
  if (layers < 0) throw std::invalid_argument("encoder config: layers must be >= 0");
  if (heads < 1 || hidden < 1 || hidden % heads != 0) {
    throw std::invalid_argument("encoder config: hidden must be divisible by heads");
  }
  if (ffn_dim < 1) throw std::invalid_argument("encoder config: ffn_dim must be >= 1");
  if (max_len < 1) throw std::invalid_argument("encoder config: max_len must be >= 1");
  if (vocab_size < 1) throw std::invalid_argument("encoder config: vocab_size must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("encoder config: dropout_rate must be in [0, 1)");
  }
}

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
  config.validate();
  const int d = config.hidden;
  const int dh = config.head_dim();

  EncoderParams params;
  params.token_embedding = Tensor::randn({config.vocab_size, d}, rng, kInitStd, true);
  params.position_embedding = Tensor::randn({config.max_len, d}, rng, kInitStd, true);
  params.layers.reserve(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    EncoderLayerParams layer;
    for (int h = 0; h < config.heads; ++h) {
      layer.wq.push_back(Tensor::randn({d, dh}, rng, kInitStd, true));
      layer.wk.push_back(Tensor::randn({d, dh}, rng, kInitStd, true));
      layer.wv.push_back(Tensor::randn({d, dh}, rng, kInitStd, true));
    }
    layer.wo = Tensor::randn({d, d}, rng, kInitStd, true);
    layer.ffn_w1 = Tensor::randn({d, config.ffn_dim}, rng, kInitStd, true);
    layer.ffn_b1 = Tensor::zeros({1, config.ffn_dim}, true);
    layer.ffn_w2 = Tensor::randn({config.ffn_dim, d}, rng, kInitStd, true);
    layer.ffn_b2 = Tensor::zeros({1, d}, true);
    layer.ln1_gamma = Tensor::full({1, d}, 1.0, true);
    layer.ln1_beta = Tensor::zeros({1, d}, true);
    layer.ln2_gamma = Tensor::full({1, d}, 1.0, true);
    layer.ln2_beta = Tensor::zeros({1, d}, true);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<std::pair<std::string, Tensor>> EncoderParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("encoder.token_embedding", token_embedding);
  out.emplace_back("encoder.position_embedding", position_embedding);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const std::string prefix = "encoder.layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layer.wq.size(); ++h) {
      const std::string head = "head" + std::to_string(h) + ".";
      out.emplace_back(prefix + head + "wq", layer.wq[h]);
      out.emplace_back(prefix + head + "wk", layer.wk[h]);
      out.emplace_back(prefix + head + "wv", layer.wv[h]);
    }
    out.emplace_back(prefix + "wo", layer.wo);
    out.emplace_back(prefix + "ffn_w1", layer.ffn_w1);
    out.emplace_back(prefix + "ffn_b1", layer.ffn_b1);
    out.emplace_back(prefix + "ffn_w2", layer.ffn_w2);
    out.emplace_back(prefix + "ffn_b2", layer.ffn_b2);
    out.emplace_back(prefix + "ln1_gamma", layer.ln1_gamma);
    out.emplace_back(prefix + "ln1_beta", layer.ln1_beta);
    out.emplace_back(prefix + "ln2_gamma", layer.ln2_gamma);
    out.emplace_back(prefix + "ln2_beta", layer.ln2_beta);
  }
  return out;
}

std::vector<Tensor> EncoderParams::all() const {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named()) out.push_back(tensor);
  return out;
}

Tensor embed(const TokenizedFunction& tokens, const EncoderParams& params,
             const EncoderConfig& config) {
  const int n = static_cast<int>(tokens.token_ids.size());
  if (n > config.max_len) {
    throw std::invalid_argument("embed: sequence longer than max_len");
  }
  std::vector<int> positions(static_cast<std::size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  return add(embedding_lookup(params.token_embedding, tokens.token_ids),
             gather_rows(params.position_embedding, positions));
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, int d_k) {
  if (d_k < 1) throw std::invalid_argument("scaled_dot_attention: d_k must be positive");
  Tensor logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_k)));
  return matmul(softmax(logits, /*axis=*/1), v);
}

Tensor multi_head_attention(const Tensor& x, const EncoderLayerParams& layer, int heads) {
  if (heads < 1 || layer.wq.size() != static_cast<std::size_t>(heads)) {
    throw std::invalid_argument("multi_head_attention: head count mismatch");
  }
  const int dh = layer.wq.front().cols();
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    head_outputs.push_back(scaled_dot_attention(matmul(x, layer.wq[hi]), matmul(x, layer.wk[hi]),
                                                matmul(x, layer.wv[hi]), dh));
  }
  return matmul(concat_cols(head_outputs), layer.wo);
}

Tensor encode(const TokenizedFunction& tokens, const EncoderParams& params,
              const EncoderConfig& config, RunMode mode, Rng* dropout_rng) {
  config.validate();
  const bool training = mode == RunMode::train;
  const double rate = training ? config.dropout_rate : 0.0;
  if (rate > 0.0 && dropout_rng == nullptr) {
    throw std::invalid_argument("encode: train mode with dropout needs an rng");
  }

  auto maybe_dropout = [&](Tensor t) {
    return rate > 0.0 ? dropout(t, rate, *dropout_rng) : t;
  };

  Tensor x = embed(tokens, params, config);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Tensor attended = maybe_dropout(multi_head_attention(x, layer, config.heads));
    x = layer_norm(add(x, attended), layer.ln1_gamma, layer.ln1_beta);
    Tensor ffn = matmul(relu(add_rowvec(matmul(x, layer.ffn_w1), layer.ffn_b1)), layer.ffn_w2);
    ffn = maybe_dropout(add_rowvec(ffn, layer.ffn_b2));
    x = layer_norm(add(x, ffn), layer.ln2_gamma, layer.ln2_beta);
    ensure_finite(x, "encoder layer " + std::to_string(l));
  }
  return x;
}

}  // namespace vulnloc
