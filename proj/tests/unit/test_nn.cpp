#include <sstream>

#include "doctest.h"
#include "oid/error.hpp"
#include "oid/nn/bundle.hpp"
#include "oid/nn/graph.hpp"
#include "oid/nn/optimizer.hpp"
#include "test_support.hpp"

using namespace oid;
using namespace oid::nn;

namespace {

Parameter random_param(const std::string& name, Index r, Index c, Rng& rng) {
  auto p = make_parameter(name, r, c);
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.normal() * 0.7;
  return p;
}

}  // namespace

TEST_CASE("composite op gradients match finite differences") {
  Rng rng(3);
  auto w = random_param("w", 4, 3, rng);
  auto b = random_param("b", 4, 1, rng);
  auto x = random_param("x", 3, 5, rng);
  auto table = random_param("table", 3, 6, rng);
  auto lw = random_param("lw", 8, 3, rng);
  auto lh = random_param("lh", 8, 2, rng);
  auto lb = random_param("lb", 8, 1, rng);
  ParameterRefs params{&w, &b, &x, &table, &lw, &lh, &lb};
  auto build = [&](Graph& g) {
    auto h = affine(g.param(w), g.param(x), g.param(b));
    auto t = tanh(h);
    auto s = sigmoid(slice_rows(h, 1, 2));
    auto r = relu(add_bias(h, g.param(b)));
    auto sm = softmax_rows(matmul(transpose(t), t));
    auto nc = normalize_cols(add(r, scale(t, 0.5)));
    auto gathered = gather_cols(g.param(table), {0, 3, 3, 5, 1});
    auto conv = conv_windows(g.param(table), {{0, 2}, {4, 5, 1}}, 3, 1);
    auto seg = segment_max_cols(conv, {2, 3});
    auto l = lstm(gathered, g.param(lw), g.param(lh), g.param(lb), true);
    auto lf = lstm(gathered, g.param(lw), g.param(lh), g.param(lb), false);
    auto cat = concat_rows({l, lf, s});
    auto m = max_cols(cat);
    auto terms = std::vector<Var>{sum(cwise_mul(sm, sm)), sum(nc), sum(one_minus(s)),
                                  sum(seg), sum(m), sum(slice_cols(cat, 1, 3))};
    Var total = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    auto logit = scale(sum(t), 0.1);
    total = add(total, bce_with_logits(logit, 1.0));
    total = add(total, hinge(scale(logit, 0.3), -1.0));
    return sub(total, scale(sum(r), 0.25));
  };
  Graph g;
  auto loss = build(g);
  g.backward(loss);
  Gradients grads;
  g.collect(grads);
  auto r = testing::check_gradients(params, grads, [&] {
    Graph g2;
    return build(g2).scalar();
  });
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("input leaves keep gradients") {
  Graph g;
  auto x = g.input(Matrix::Constant(2, 2, 1.5));
  auto loss = sum(cwise_mul(x, x));
  g.backward(loss);
  CHECK(g.grad(x).isApprox(Matrix::Constant(2, 2, 3.0)));
}

TEST_CASE("dropout is identity at rate zero and scales kept units") {
  Rng rng(1);
  Graph g;
  auto x = g.constant(Matrix::Ones(50, 40));
  CHECK(dropout(x, 0.0, rng).value().isApprox(Matrix::Ones(50, 40)));
  const Matrix d = dropout(x, 0.5, rng).value();
  for (Index i = 0; i < d.size(); ++i) CHECK((d.data()[i] == 0.0 || d.data()[i] == 2.0));
}

TEST_CASE("adam minimises a quadratic") {
  auto p = make_parameter("p", 2, 1);
  p.value << 3.0, -2.0;
  Adam adam({&p});
  for (int step = 0; step < 2000; ++step) {
    Graph g;
    auto loss = sum(cwise_mul(g.param(p), g.param(p)));
    g.backward(loss);
    Gradients grads;
    g.collect(grads);
    apply_update(adam, grads, 0.05, 5.0, 0.0);
  }
  CHECK(p.value.norm() < 1e-3);
}

TEST_CASE("gradient clipping bounds the step") {
  auto p = make_parameter("p", 1, 1);
  Adam adam({&p});
  Gradients grads;
  grads.add(&p, Matrix::Constant(1, 1, 100.0));
  const double norm = apply_update(adam, grads, 0.1, 1.0, 0.0);
  CHECK(norm == doctest::Approx(100.0));
  CHECK(decayed_learning_rate(0.001, 0.05, 2) == doctest::Approx(0.001 / 1.1));
}

TEST_CASE("bundle round trip") {
  Rng rng(5);
  auto a = random_param("a", 3, 2, rng);
  auto b = random_param("b", 1, 4, rng);
  ModelBundle bundle;
  bundle.kind = "test";
  bundle.config = {{"x", 1}};
  bundle.put({&a, &b});
  std::stringstream s;
  write_bundle(bundle, s);
  auto back = read_bundle(s);
  CHECK(back.kind == "test");
  CHECK(back.config["x"] == 1);
  auto a2 = make_parameter("a", 3, 2);
  auto b2 = make_parameter("b", 1, 4);
  back.get({&a2, &b2});
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);
  auto wrong = make_parameter("a", 2, 2);
  CHECK_THROWS_AS(back.get({&wrong}), ModelError);
  std::stringstream junk("not a bundle");
  CHECK_THROWS_AS(read_bundle(junk), ModelError);
}
