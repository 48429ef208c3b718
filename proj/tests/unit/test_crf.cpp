#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oid/crf.hpp"
#include "oid/error.hpp"
#include "test_support.hpp"

using namespace oid;
using testing::brute_force_argmax;
using testing::enumerate_sequences;
using testing::random_scores;

namespace {

constexpr int A = static_cast<int>(TagLabel::Action);
constexpr int O = static_cast<int>(TagLabel::Object);
constexpr int N = static_cast<int>(TagLabel::None);

ConstraintSet random_constraints(Rng& rng, int n) {
  ConstraintSet c;
  c.pair_existence = true;
  const int k = static_cast<int>(rng.below(3));
  for (int i = 0; i < k; ++i)
    c.indicator_windows.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
                                   1 + static_cast<int>(rng.below(4))});
  return c;
}

// Emissions that strongly prefer a single ACTION with no OBJECT anywhere.
CrfScores lone_action(Rng& rng, int n) {
  auto s = random_scores(rng, n, 3, 0.1);
  for (int i = 0; i < n; ++i) {
    s.emissions(N, i) += 2.0;
    s.emissions(O, i) -= 1.0;
  }
  s.emissions(A, 0) += 5.0;
  return s;
}

}  // namespace

TEST_CASE("uniform two-label likelihood") {
  CrfScores s;
  s.emissions = nn::Matrix::Zero(2, 1);
  s.transitions = nn::Matrix::Zero(2, 2);
  s.start = nn::Vector::Zero(2);
  s.stop = nn::Vector::Zero(2);
  CHECK(log_likelihood(s, {0}) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(log_likelihood(s, {0, 1}), ArgumentError);
}

TEST_CASE("probabilities sum to one") {
  Rng rng(1);
  for (int n = 1; n <= 5; ++n) {
    auto s = random_scores(rng, n, 3);
    double total = 0.0;
    enumerate_sequences(n, 3, [&](const LabelSeq& y) { total += std::exp(log_likelihood(s, y)); });
    CHECK(std::abs(total - 1.0) < 1e-8);
  }
}

TEST_CASE("emission shift leaves likelihood unchanged") {
  Rng rng(2);
  auto s = random_scores(rng, 4, 3);
  auto shifted = s;
  shifted.emissions.array() += 3.7;
  LabelSeq y{0, 2, 1, 1};
  CHECK(log_likelihood(s, y) == doctest::Approx(log_likelihood(shifted, y)).epsilon(1e-12));
}

TEST_CASE("dominant NONE emissions decode to all NONE") {
  Rng rng(3);
  auto s = random_scores(rng, 6, 3);
  s.emissions.row(N).array() += 100.0;
  CHECK(viterbi(s) == LabelSeq(6, N));
}

TEST_CASE("viterbi equals brute force") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    auto s = random_scores(rng, n, 3);
    REQUIRE(viterbi(s) == brute_force_argmax(s));
  }
}

TEST_CASE("viterbi through crf params") {
  Rng rng(5);
  auto params = make_crf_params(4, 3, rng);
  nn::Matrix z(4, 5);
  for (nn::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  auto s = crf_scores(z, params);
  CHECK(viterbi(z, params) == viterbi(s));
  CHECK(log_likelihood(z, {0, 1, 2, 2, 1}, params) == doctest::Approx(log_likelihood(s, {0, 1, 2, 2, 1})));
}

TEST_CASE("empty constraints give viterbi") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    auto s = random_scores(rng, n, 3);
    const auto v = viterbi(s);
    CHECK(ilp_decode_constrained(s, {}).labels == v);
    CHECK(beam_decode_constrained(s, {}, 729).labels == v);
  }
}

TEST_CASE("lone action instance satisfies pair existence") {
  Rng rng(7);
  ConstraintSet c;
  c.pair_existence = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    auto s = lone_action(rng, n);
    const auto free = viterbi(s);
    REQUIRE(!satisfies(free, c, TagScheme::Raw));
    const auto beam = beam_decode_constrained(s, c);
    const auto exact = ilp_decode_constrained(s, c);
    CHECK(satisfies(beam.labels, c, TagScheme::Raw));
    CHECK(exact.labels == brute_force_argmax(s, &c));
    CHECK(sequence_score(s, beam.labels) <= sequence_score(s, exact.labels) + 1e-12);
  }
}

TEST_CASE("ILP equals brute force under random constraints") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    auto s = random_scores(rng, n, 3);
    auto c = random_constraints(rng, n);
    auto expected = brute_force_argmax(s, &c);
    const auto exact = ilp_decode_constrained(s, c);
    if (expected.empty()) {
      ConstraintSet pair_only;
      pair_only.pair_existence = true;
      expected = brute_force_argmax(s, &pair_only);
      CHECK(exact.windows_dropped);
    }
    REQUIRE(exact.labels == expected);
    const auto beam = beam_decode_constrained(s, c);
    CHECK(beam.windows_dropped == exact.windows_dropped);
    ConstraintSet effective = c;
    if (exact.windows_dropped) effective.indicator_windows.clear();
    CHECK(satisfies(beam.labels, effective, TagScheme::Raw));
    CHECK(sequence_score(s, beam.labels) <= sequence_score(s, exact.labels) + 1e-12);
  }
}

TEST_CASE("wide beam is exact on small instances") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    auto s = random_scores(rng, n, 3);
    auto c = random_constraints(rng, n);
    CHECK(beam_decode_constrained(s, c, 256).labels == ilp_decode_constrained(s, c).labels);
  }
}

TEST_CASE("width one beam is greedy without constraints") {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    auto s = random_scores(rng, n, 3);
    LabelSeq greedy;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_v = -1e300;
      for (int y = 0; y < 3; ++y) {
        double v = s.emissions(y, i) + (i == 0 ? s.start[y] : s.transitions(greedy.back(), y));
        if (i == n - 1) v += s.stop[y];
        if (v > best_v) {
          best_v = v;
          best = y;
        }
      }
      greedy.push_back(best);
    }
    CHECK(beam_decode_constrained(s, {}, 1).labels == greedy);
  }
}

TEST_CASE("beam width one still honours constraints or falls back") {
  Rng rng(11);
  ConstraintSet c;
  c.pair_existence = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    auto s = lone_action(rng, n);
    auto r = beam_decode_constrained(s, c, 1);
    CHECK(satisfies(r.labels, c, TagScheme::Raw));
    if (r.fallback) CHECK(r.labels == LabelSeq(static_cast<std::size_t>(n), N));
  }
}

TEST_CASE("lattice sizes") {
  Rng rng(12);
  auto g = build_lattice(random_scores(rng, 4, 3));
  CHECK(g.node_count() == 14);
  CHECK(g.edge_count() == 33);
  auto g1 = build_lattice(random_scores(rng, 1, 3));
  CHECK(g1.node_count() == 5);
  CHECK(g1.edge_count() == 6);
  auto params = make_crf_params(2, 3, rng);
  auto g2 = build_lattice(6, 3, nn::Matrix::Zero(2, 6), params);
  CHECK(g2.node_count() == 6 * 3 + 2);
  CHECK(g2.edge_count() == 5 * 9 + 6);
}

TEST_CASE("longest lattice path is viterbi") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    auto s = random_scores(rng, n, 3);
    CHECK(longest_path(build_lattice(s)) == viterbi(s));
  }
  CrfScores zero;
  zero.emissions = nn::Matrix::Zero(3, 4);
  zero.transitions = nn::Matrix::Zero(3, 3);
  zero.start = nn::Vector::Zero(3);
  zero.stop = nn::Vector::Zero(3);
  CHECK(longest_path(build_lattice(zero)) == LabelSeq(4, 0));
  CHECK(viterbi(zero) == LabelSeq(4, 0));
}

TEST_CASE("lp export lists the program") {
  Rng rng(14);
  auto s = random_scores(rng, 3, 3);
  ConstraintSet c;
  c.pair_existence = true;
  c.indicator_windows = {{1, 2}};
  std::ostringstream out;
  write_lp(out, build_lattice(s), c);
  const auto lp = out.str();
  CHECK(lp.find("Maximize") != std::string::npos);
  CHECK(lp.find("Subject To") != std::string::npos);
  CHECK(lp.find("Binary") != std::string::npos);
  CHECK(lp.find("End") != std::string::npos);
}

TEST_CASE("indicator windows") {
  auto u = tokenize("I want to book a table and I would like to eat");
  auto w = find_indicator_windows(u, {"want to", "would like to"}, 5);
  REQUIRE(w.size() == 2);
  CHECK(w[0].position == 3);
  CHECK(w[1].position == 11);
  CHECK(find_indicator_windows(tokenize("I WANT TO"), {"want to"}).empty());
  CHECK(find_indicator_windows(tokenize("Want to go"), {"want to"}).size() == 1);
}

TEST_CASE("BIO scheme keeps constraints") {
  Rng rng(15);
  ConstraintSet c;
  c.pair_existence = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    auto s = random_scores(rng, n, 6);
    auto exact = ilp_decode_constrained(s, c, TagScheme::Bio);
    CHECK(exact.labels == brute_force_argmax(s, &c, TagScheme::Bio));
    CHECK(satisfies(beam_decode_constrained(s, c, 8, TagScheme::Bio).labels, c, TagScheme::Bio));
  }
}

TEST_CASE("crf nll gradients match finite differences") {
  Rng rng(16);
  auto params = make_crf_params(3, 3, rng);
  nn::Matrix z(3, 4);
  for (nn::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  const LabelSeq y{2, 0, 1, 2};
  auto loss = [&](nn::Graph& g) { return crf_nll(g, g.constant(z), params, y); };
  nn::Graph g;
  auto l = loss(g);
  CHECK(l.scalar() == doctest::Approx(-log_likelihood(z, y, params)).epsilon(1e-12));
  g.backward(l);
  nn::Gradients grads;
  g.collect(grads);
  auto r = testing::check_gradients(params.refs(), grads, [&] {
    nn::Graph g2;
    return loss(g2).scalar();
  });
  INFO(r.worst);
  CHECK(r.max_rel_error <= 1e-4);
}
