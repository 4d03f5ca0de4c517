#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "vulnloc/checkpoint.hpp"
#include "vulnloc/model.hpp"

using namespace vulnloc;

TEST_CASE("checkpoint container round-trips names, shapes, and bits") {
  Checkpoint ckpt;
  ckpt.metadata = "{\"note\":\"test\"}";
  ckpt.tensors.emplace_back("a", Tensor::from_data({2, 3}, {1, 2, 3, 4.5, -6, 7e-3}));
  ckpt.tensors.emplace_back("b", Tensor::from_data({1, 1}, {0.1 + 0.2}));

  const std::string path = "ckpt_roundtrip.bin";
  save_checkpoint(ckpt, path);
  const Checkpoint loaded = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(loaded.metadata == ckpt.metadata);
  REQUIRE(loaded.tensors.size() == 2);
  CHECK(loaded.tensors[0].first == "a");
  CHECK(loaded.find("a").shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(loaded.find("a")[i] == ckpt.tensors[0].second[i]);
  }
  CHECK(loaded.find("b")[0] == ckpt.tensors[1].second[0]);
  CHECK_THROWS_AS(loaded.find("missing"), std::runtime_error);
}

TEST_CASE("bad magic is rejected") {
  const std::string path = "ckpt_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACKPT-------";
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("model save/load preserves every parameter and the config") {
  EncoderConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.hidden = 8;
  cfg.ffn_dim = 16;
  cfg.max_len = 32;
  cfg.vocab_size = 300;
  cfg.dropout_rate = 0.05;

  Rng rng(15);
  const ModelParams model = ModelParams::init(cfg, false, rng);
  const std::string path = "model_roundtrip.bin";
  save_model(model, cfg, path);
  const auto [loaded, loaded_cfg] = load_model(path);
  std::remove(path.c_str());

  CHECK(loaded_cfg.layers == cfg.layers);
  CHECK(loaded_cfg.heads == cfg.heads);
  CHECK(loaded_cfg.hidden == cfg.hidden);
  CHECK(loaded_cfg.max_len == cfg.max_len);
  CHECK(loaded_cfg.vocab_size == cfg.vocab_size);
  CHECK(loaded_cfg.dropout_rate == cfg.dropout_rate);

  const auto original = model.named();
  const auto restored = loaded.named();
  REQUIRE(original.size() == restored.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i].first == restored[i].first);
    CHECK(original[i].second.data() == restored[i].second.data());
  }
}

TEST_CASE("clone detaches values from the source model") {
  EncoderConfig cfg;
  cfg.layers = 1;
  cfg.heads = 1;
  cfg.hidden = 4;
  cfg.ffn_dim = 8;
  cfg.max_len = 8;
  cfg.vocab_size = 20;

  Rng rng(21);
  ModelParams model = ModelParams::init(cfg, false, rng);
  ModelParams copy = model.clone();
  model.encoder.token_embedding.at(0, 0) += 42.0;
  CHECK(copy.encoder.token_embedding.at(0, 0) != model.encoder.token_embedding.at(0, 0));
}
