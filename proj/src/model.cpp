#include "vulnloc/model.hpp"

#include <stdexcept>

#include "vulnloc/checkpoint.hpp"

#include <json.hpp>

namespace vulnloc {

using nlohmann::json;

ModelParams ModelParams::init(const EncoderConfig& config, bool learnable_fusion, Rng& rng) {
  ModelParams model;
  model.encoder = EncoderParams::init(config, rng);
  model.head = HeadParams::init(config.hidden, learnable_fusion, rng);
  return model;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  auto out = encoder.named();
  for (auto& entry : head.named()) out.push_back(std::move(entry));
  return out;
}

std::vector<Tensor> ModelParams::all() const {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named()) out.push_back(tensor);
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  auto deep = [](Tensor& t) {
    Tensor fresh = t.detached_copy();
    fresh.set_requires_grad(true);
    t = fresh;
  };
  deep(copy.encoder.token_embedding);
  deep(copy.encoder.position_embedding);
  for (auto& layer : copy.encoder.layers) {
    for (auto& t : layer.wq) deep(t);
    for (auto& t : layer.wk) deep(t);
    for (auto& t : layer.wv) deep(t);
    deep(layer.wo);
    deep(layer.ffn_w1);
    deep(layer.ffn_b1);
    deep(layer.ffn_w2);
    deep(layer.ffn_b2);
    deep(layer.ln1_gamma);
    deep(layer.ln1_beta);
    deep(layer.ln2_gamma);
    deep(layer.ln2_beta);
  }
  deep(copy.head.w_max);
  deep(copy.head.b_max);
  deep(copy.head.w_mean);
  deep(copy.head.b_mean);
  if (copy.head.learnable_fusion) deep(copy.head.fusion_logits);
  return copy;
}

void save_model(const ModelParams& model, const EncoderConfig& config, const std::string& path) {
  json meta;
  meta["format"] = 1;
  meta["encoder"] = {{"layers", config.layers},     {"heads", config.heads},
                     {"hidden", config.hidden},     {"ffn_dim", config.ffn_dim},
                     {"max_len", config.max_len},   {"vocab_size", config.vocab_size},
                     {"dropout_rate", config.dropout_rate}};
  meta["head"] = {{"learnable_fusion", model.head.learnable_fusion},
                  {"fusion_max", model.head.fusion_max},
                  {"fusion_mean", model.head.fusion_mean}};

  Checkpoint ckpt;
  ckpt.metadata = meta.dump();
  for (const auto& [name, tensor] : model.named()) {
    ckpt.tensors.emplace_back(name, tensor);
  }
  save_checkpoint(ckpt, path);
}

std::pair<ModelParams, EncoderConfig> load_model(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint '" + path + "': bad metadata: " + e.what());
  }
  if (meta.value("format", 0) != 1) {
    throw std::runtime_error("checkpoint '" + path + "': unsupported format version");
  }

  EncoderConfig config;
  const auto& enc = meta.at("encoder");
  config.layers = enc.at("layers").get<int>();
  config.heads = enc.at("heads").get<int>();
  config.hidden = enc.at("hidden").get<int>();
  config.ffn_dim = enc.at("ffn_dim").get<int>();
  config.max_len = enc.at("max_len").get<int>();
  config.vocab_size = enc.at("vocab_size").get<int>();
  config.dropout_rate = enc.at("dropout_rate").get<double>();
  config.validate();

  const auto& head_meta = meta.at("head");
  Rng unused(0);
  ModelParams model = ModelParams::init(config, head_meta.at("learnable_fusion").get<bool>(), unused);
  model.head.fusion_max = head_meta.at("fusion_max").get<double>();
  model.head.fusion_mean = head_meta.at("fusion_mean").get<double>();

  for (auto& [name, tensor] : model.named()) {
    const Tensor& stored = ckpt.find(name);
    if (stored.shape() != tensor.shape()) {
      throw std::runtime_error("checkpoint '" + path + "': shape mismatch for '" + name + "'");
    }
    tensor.data() = stored.data();
  }
  return {std::move(model), config};
}

}  // namespace vulnloc
