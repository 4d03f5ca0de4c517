#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "vulnloc/encoder.hpp"

using namespace vulnloc;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.layers = 1;
  cfg.heads = 1;
  cfg.hidden = 4;
  cfg.ffn_dim = 8;
  cfg.max_len = 8;
  cfg.vocab_size = 10;
  cfg.dropout_rate = 0.0;
  return cfg;
}

TokenizedFunction tokens_of(std::vector<int> ids) {
  TokenizedFunction tf;
  tf.token_ids = std::move(ids);
  tf.statement_of_token.assign(tf.token_ids.size(), 0);
  tf.statement_count = 1;
  tf.statement_lines = {0};
  return tf;
}

}  // namespace

TEST_CASE("embed with zero tables is zero") {
  EncoderConfig cfg = tiny_config();
  EncoderParams params;
  params.token_embedding = Tensor::zeros({cfg.vocab_size, cfg.hidden});
  params.position_embedding = Tensor::zeros({cfg.max_len, cfg.hidden});
  Tensor out = embed(tokens_of({1, 2, 3}), params, cfg);
  for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("embed places a one-hot token row only at matching positions") {
  EncoderConfig cfg = tiny_config();
  EncoderParams params;
  params.token_embedding = Tensor::zeros({cfg.vocab_size, cfg.hidden});
  params.token_embedding.at(3, 0) = 1.0;
  params.position_embedding = Tensor::zeros({cfg.max_len, cfg.hidden});
  Tensor out = embed(tokens_of({3, 1, 3}), params, cfg);
  CHECK(out.at(0, 0) == 1.0);
  CHECK(out.at(1, 0) == 0.0);
  CHECK(out.at(2, 0) == 1.0);
}

TEST_CASE("embed gradient flows into both tables") {
  EncoderConfig cfg = tiny_config();
  Rng rng(3);
  EncoderParams params;
  params.token_embedding = Tensor::randn({cfg.vocab_size, cfg.hidden}, rng, 0.5, true);
  params.position_embedding = Tensor::randn({cfg.max_len, cfg.hidden}, rng, 0.5, true);
  const auto tf = tokens_of({0, 4, 4});
  auto result = testutil::grad_check({params.token_embedding, params.position_embedding},
                                     [&] { return sum_all(embed(tf, params, cfg)); });
  CHECK(result.max_rel_error < 1e-6);
}

TEST_CASE("embed rejects ids outside the vocabulary") {
  EncoderConfig cfg = tiny_config();
  EncoderParams params;
  params.token_embedding = Tensor::zeros({cfg.vocab_size, cfg.hidden});
  params.position_embedding = Tensor::zeros({cfg.max_len, cfg.hidden});
  CHECK_THROWS_AS(embed(tokens_of({cfg.vocab_size}), params, cfg), std::out_of_range);
}

TEST_CASE("single-token attention returns the value row") {
  Tensor q = Tensor::from_data({1, 2}, {0.3, -0.8});
  Tensor k = Tensor::from_data({1, 2}, {1.0, 2.0});
  Tensor v = Tensor::from_data({1, 2}, {5.0, -7.0});
  Tensor out = scaled_dot_attention(q, k, v, 2);
  CHECK(out.at(0, 0) == doctest::Approx(5.0));
  CHECK(out.at(0, 1) == doctest::Approx(-7.0));
}

TEST_CASE("two identical keys split attention evenly for any query") {
  Rng rng(17);
  Tensor k = Tensor::from_data({2, 2}, {0.4, -1.0, 0.4, -1.0});
  Tensor v = Tensor::from_data({2, 2}, {2.0, 0.0, 0.0, 2.0});
  for (int trial = 0; trial < 3; ++trial) {
    Tensor q = Tensor::randn({1, 2}, rng, 2.0);
    Tensor out = scaled_dot_attention(q, k, v, 2);
    CHECK(out.at(0, 0) == doctest::Approx(1.0));
    CHECK(out.at(0, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("attention matches a direct formula evaluation on a random 4-token case") {
  Rng rng(23);
  const int n = 4, d = 3;
  Tensor q = Tensor::randn({n, d}, rng, 1.0);
  Tensor k = Tensor::randn({n, d}, rng, 1.0);
  Tensor v = Tensor::randn({n, d}, rng, 1.0);
  Tensor out = scaled_dot_attention(q, k, v, d);

  // direct evaluation, scalar by scalar
  for (int i = 0; i < n; ++i) {
    double weights[4];
    double mx = -1e300;
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += q.at(i, c) * k.at(j, c);
      weights[j] = dot / std::sqrt(static_cast<double>(d));
      mx = std::max(mx, weights[j]);
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      weights[j] = std::exp(weights[j] - mx);
      denom += weights[j];
    }
    for (int c = 0; c < d; ++c) {
      double expect = 0.0;
      for (int j = 0; j < n; ++j) expect += weights[j] / denom * v.at(j, c);
      CHECK(std::abs(out.at(i, c) - expect) < 1e-10);
    }
  }
}

TEST_CASE("one head reduces to attention followed by the output projection") {
  EncoderConfig cfg = tiny_config();
  Rng rng(29);
  EncoderParams params = EncoderParams::init(cfg, rng);
  const auto& layer = params.layers[0];
  Tensor x = Tensor::randn({3, cfg.hidden}, rng, 1.0);

  Tensor via_mha = multi_head_attention(x, layer, 1);
  Tensor direct = matmul(
      scaled_dot_attention(matmul(x, layer.wq[0]), matmul(x, layer.wk[0]), matmul(x, layer.wv[0]),
                           cfg.head_dim()),
      layer.wo);
  for (std::size_t i = 0; i < via_mha.numel(); ++i) {
    CHECK(via_mha[i] == doctest::Approx(direct[i]).epsilon(1e-12));
  }
}

TEST_CASE("permuting heads with matching output-projection blocks changes nothing") {
  EncoderConfig cfg = tiny_config();
  cfg.heads = 2;
  cfg.hidden = 4;  // head_dim 2
  Rng rng(31);
  EncoderParams params = EncoderParams::init(cfg, rng);
  EncoderLayerParams layer = params.layers[0];
  Tensor x = Tensor::randn({3, cfg.hidden}, rng, 1.0);
  Tensor base = multi_head_attention(x, layer, cfg.heads);

  // swap the two heads and the corresponding row blocks of W^O
  EncoderLayerParams swapped = layer;
  std::swap(swapped.wq[0], swapped.wq[1]);
  std::swap(swapped.wk[0], swapped.wk[1]);
  std::swap(swapped.wv[0], swapped.wv[1]);
  const int dh = cfg.head_dim();
  swapped.wo = Tensor::zeros({cfg.hidden, cfg.hidden});
  for (int r = 0; r < cfg.hidden; ++r) {
    const int src = r < dh ? r + dh : r - dh;
    for (int c = 0; c < cfg.hidden; ++c) swapped.wo.at(r, c) = layer.wo.at(src, c);
  }

  Tensor permuted = multi_head_attention(x, swapped, cfg.heads);
  for (std::size_t i = 0; i < base.numel(); ++i) {
    CHECK(permuted[i] == doctest::Approx(base[i]).epsilon(1e-12));
  }
}

TEST_CASE("multi-head attention gradient matches finite differences") {
  EncoderConfig cfg = tiny_config();
  cfg.heads = 2;
  Rng rng(37);
  EncoderParams params = EncoderParams::init(cfg, rng);
  auto& layer = params.layers[0];
  Tensor x = Tensor::randn({3, cfg.hidden}, rng, 1.0, true);

  std::vector<Tensor> checked = {x, layer.wq[0], layer.wk[1], layer.wv[0], layer.wo};
  auto result = testutil::grad_check(
      checked, [&] { return mean_all(multi_head_attention(x, layer, cfg.heads)); });
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("zero layers return exactly the embeddings") {
  EncoderConfig cfg = tiny_config();
  cfg.layers = 0;
  Rng rng(41);
  EncoderParams params = EncoderParams::init(cfg, rng);
  const auto tf = tokens_of({1, 2});
  Tensor embedded = embed(tf, params, cfg);
  Tensor encoded = encode(tf, params, cfg, RunMode::eval);
  for (std::size_t i = 0; i < embedded.numel(); ++i) CHECK(encoded[i] == embedded[i]);
}

TEST_CASE("eval mode is deterministic and train mode reproducible under a seed") {
  EncoderConfig cfg = tiny_config();
  cfg.dropout_rate = 0.2;
  Rng rng(43);
  EncoderParams params = EncoderParams::init(cfg, rng);
  const auto tf = tokens_of({1, 2, 3});

  Tensor eval_a = encode(tf, params, cfg, RunMode::eval);
  Tensor eval_b = encode(tf, params, cfg, RunMode::eval);
  for (std::size_t i = 0; i < eval_a.numel(); ++i) CHECK(eval_a[i] == eval_b[i]);

  Rng drop_a(7), drop_b(7);
  Tensor train_a = encode(tf, params, cfg, RunMode::train, &drop_a);
  Tensor train_b = encode(tf, params, cfg, RunMode::train, &drop_b);
  for (std::size_t i = 0; i < train_a.numel(); ++i) CHECK(train_a[i] == train_b[i]);

  CHECK_THROWS_AS(encode(tf, params, cfg, RunMode::train, nullptr), std::invalid_argument);
}

TEST_CASE("encode output shape is n x d") {
  EncoderConfig cfg = tiny_config();
  Rng rng(47);
  EncoderParams params = EncoderParams::init(cfg, rng);
  for (int n = 1; n <= 4; ++n) {
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) ids.push_back(i % cfg.vocab_size);
    Tensor out = encode(tokens_of(ids), params, cfg, RunMode::eval);
    CHECK(out.rows() == n);
    CHECK(out.cols() == cfg.hidden);
  }
}

TEST_CASE("nonzero positional embeddings make token order matter") {
  EncoderConfig cfg = tiny_config();
  Rng rng(53);
  EncoderParams params = EncoderParams::init(cfg, rng);
  Tensor fwd = encode(tokens_of({1, 2}), params, cfg, RunMode::eval);
  Tensor rev = encode(tokens_of({2, 1}), params, cfg, RunMode::eval);
  double diff = 0.0;
  // compare token 1's vector where it sits at position 0 vs position 1
  for (int c = 0; c < cfg.hidden; ++c) diff += std::abs(fwd.at(0, c) - rev.at(1, c));
  CHECK(diff > 1e-9);
}

TEST_CASE("full tiny encoder gradient matches finite differences") {
  EncoderConfig cfg = tiny_config();  // L=1, h=1, d=4
  Rng rng(59);
  EncoderParams params = EncoderParams::init(cfg, rng);
  const auto tf = tokens_of({1, 2, 3});

  std::vector<Tensor> all_params = params.all();
  auto result = testutil::grad_check(
      all_params, [&] { return mean_all(encode(tf, params, cfg, RunMode::eval)); });
  INFO("worst: ", result.worst);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("encode reports the failing layer on non-finite activations") {
  EncoderConfig cfg = tiny_config();
  Rng rng(61);
  EncoderParams params = EncoderParams::init(cfg, rng);
  params.layers[0].ffn_w2.at(0, 0) = std::numeric_limits<double>::infinity();
  try {
    encode(tokens_of({1, 2}), params, cfg, RunMode::eval);
    FAIL("expected a numeric error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}
