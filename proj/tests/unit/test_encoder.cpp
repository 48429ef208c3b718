#include "doctest.h"
#include "oid/encoder.hpp"
#include "oid/error.hpp"
#include "oid/vocabulary.hpp"
#include "test_support.hpp"

using namespace oid;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.char_dim = 3;
  c.char_filters = 4;
  c.char_filter_width = 3;
  c.word_dim = 4;
  c.lstm_hidden = 5;
  c.lstm_layers = 2;
  c.dropout_rate = 0.3;
  return c;
}

Encoder tiny_encoder(EncoderConfig c, const std::vector<Utterance>& utts, std::uint64_t seed = 1) {
  std::vector<const Utterance*> ptrs;
  for (const auto& u : utts) ptrs.push_back(&u);
  auto table = testing::random_table({"book", "a", "table", "seat", "x"}, c.word_dim, 9);
  return Encoder(c, build_vocabulary(ptrs), table, seed);
}

HighwayParams random_highway(int d, Rng& rng) {
  HighwayParams p;
  p.transform_weight = nn::make_parameter("tw", d, d);
  p.transform_bias = nn::make_parameter("tb", d, 1);
  p.gate_weight = nn::make_parameter("gw", d, d);
  p.gate_bias = nn::make_parameter("gb", d, 1);
  for (auto* m : {&p.transform_weight, &p.transform_bias, &p.gate_weight, &p.gate_bias})
    for (nn::Index i = 0; i < m->value.size(); ++i) m->value.data()[i] = rng.normal();
  return p;
}

}  // namespace

TEST_CASE("char_encode shape and determinism") {
  auto u = tokenize("book a table");
  auto enc = tiny_encoder(tiny_config(), {u});
  auto v = enc.char_encode("a");
  CHECK(v.size() == 4);
  CHECK(v.allFinite());
  CHECK(enc.char_encode("table") == enc.char_encode("table"));
  enc.conv_kernel().value.setZero();
  enc.conv_bias().value.setZero();
  CHECK(enc.char_encode("table").isZero());
  CHECK(enc.char_encode("unseen!").isZero());
}

TEST_CASE("highway carry and transform limits") {
  Rng rng(2);
  Eigen::VectorXd c(2), w(3);
  c << 0.3, -1.2;
  w << 2.0, 0.5, -0.7;
  auto p = random_highway(5, rng);
  Eigen::VectorXd x(5);
  x << c, w;
  p.gate_bias.value.setConstant(-1e6);
  CHECK(highway_merge(c, w, p) == x);
  p.gate_bias.value.setConstant(1e6);
  Eigen::VectorXd t = (p.transform_weight.value * x + p.transform_bias.value).array().tanh();
  CHECK(highway_merge(c, w, p).isApprox(t, 1e-12));
}

TEST_CASE("highway output lies between its branches") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_highway(6, rng);
    Eigen::VectorXd c(2), w(4);
    for (int i = 0; i < 2; ++i) c[i] = 2 * rng.normal();
    for (int i = 0; i < 4; ++i) w[i] = 2 * rng.normal();
    Eigen::VectorXd x(6);
    x << c, w;
    Eigen::VectorXd t = (p.transform_weight.value * x + p.transform_bias.value).array().tanh();
    auto out = highway_merge(c, w, p);
    for (int i = 0; i < 6; ++i) {
      CHECK(out[i] >= std::min(t[i], x[i]) - 1e-12);
      CHECK(out[i] <= std::max(t[i], x[i]) + 1e-12);
    }
  }
  auto p = random_highway(6, rng);
  CHECK_THROWS_AS(highway_merge(Eigen::VectorXd(2), Eigen::VectorXd(3), p), ArgumentError);
}

TEST_CASE("encode_sequence shapes") {
  auto u = tokenize("book");
  auto enc = tiny_encoder(tiny_config(), {u});
  auto h = enc.encode_sequence(u);
  CHECK(h.rows() == 10);
  CHECK(h.cols() == 1);
  auto longer = tokenize("book a table x x x");
  CHECK(enc.encode_sequence(longer).cols() == 6);
  CHECK(enc.encode_sequence(tokenize("")).cols() == 0);
  CHECK(enc.encode_sequence(longer) == enc.encode_sequence(longer));
}

TEST_CASE("truncation caps the sequence") {
  auto c = tiny_config();
  c.max_tokens = 3;
  auto u = tokenize("book a table x x");
  auto enc = tiny_encoder(c, {u});
  const auto before = Encoder::truncation_count();
  CHECK(enc.encode_sequence(u).cols() == 3);
  CHECK(Encoder::truncation_count() == before + 2);
}

TEST_CASE("reversal swaps directions with tied weights") {
  auto c = tiny_config();
  c.lstm_layers = 1;
  auto enc = tiny_encoder(c, {tokenize("x")});
  auto& layer = enc.layers()[0];
  layer.backward.w_input.value = layer.forward.w_input.value;
  layer.backward.w_hidden.value = layer.forward.w_hidden.value;
  layer.backward.bias.value = layer.forward.bias.value;
  Rng rng(6);
  nn::Matrix x(c.merged_dim(), 4);
  for (nn::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  nn::Matrix xr = x.rowwise().reverse();
  nn::Graph g;
  const nn::Matrix h = enc.contextualize(g, g.constant(x), Mode::Eval, nullptr).value();
  const nn::Matrix hr = enc.contextualize(g, g.constant(xr), Mode::Eval, nullptr).value();
  const int H = c.lstm_hidden;
  for (int t = 0; t < 4; ++t) {
    CHECK(hr.col(t).head(H).isApprox(h.col(3 - t).tail(H), 1e-12));
    CHECK(hr.col(t).tail(H).isApprox(h.col(3 - t).head(H), 1e-12));
  }
}

TEST_CASE("normalize_embeddings") {
  Eigen::MatrixXd m(2, 3);
  m << 3, 1, 0, 4, 0, 0;
  auto n = normalize_embeddings(m);
  CHECK(n(0, 0) == doctest::Approx(0.6));
  CHECK(n(1, 0) == doctest::Approx(0.8));
  CHECK(n.col(1) == m.col(1));
  CHECK(n.col(2).isZero());
  EmbeddingTable t(2, UnkPolicy::Zero);
  Eigen::VectorXd v(2);
  v << 3, 4;
  t.insert("a", v);
  CHECK(normalize_embeddings(t).lookup("a")[1] == doctest::Approx(0.8));
}

TEST_CASE("encoder gradients match finite differences") {
  for (bool normalize : {false, true}) {
    auto c = tiny_config();
    c.normalize_embeddings = normalize;
    c.finetune_word_vectors = true;
    auto u = tokenize("book a table");
    auto enc = tiny_encoder(c, {u}, 3);
    Rng wr(8);
    nn::Matrix weights(c.output_dim(), 3);
    for (nn::Index i = 0; i < weights.size(); ++i) weights.data()[i] = wr.normal();
    auto loss = [&](nn::Graph& g) {
      Rng rng(21);
      auto h = enc.contextualize(g, enc.embed(g, u, Mode::Train, &rng), Mode::Train, &rng);
      return nn::sum(nn::cwise_mul(h, g.constant(weights)));
    };
    nn::Graph g;
    auto l = loss(g);
    g.backward(l);
    nn::Gradients grads;
    g.collect(grads);
    auto r = testing::check_gradients(enc.parameters(), grads, [&] {
      nn::Graph g2;
      return loss(g2).scalar();
    });
    INFO(r.worst);
    CHECK(r.checked > 100);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("encoder config json rejects unknown keys") {
  auto j = to_json(tiny_config());
  CHECK(encoder_config_from_json(j).lstm_hidden == 5);
  j["bogus"] = 1;
  CHECK_THROWS_AS(encoder_config_from_json(j), ArgumentError);
}
