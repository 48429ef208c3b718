#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "oid/assembly.hpp"
#include "oid/error.hpp"
#include "test_support.hpp"

using namespace oid;

namespace {

constexpr auto A = TagLabel::Action;
constexpr auto O = TagLabel::Object;
constexpr auto N = TagLabel::None;

std::vector<std::string> phrases(const std::vector<Intent>& intents) {
  std::vector<std::string> out;
  for (const auto& i : intents) out.push_back(i.phrase());
  return out;
}

// Random non-overlapping action and object spans over n tokens.
SpanSets random_layout(Rng& rng, const Utterance& u) {
  SpanSets s;
  std::size_t i = 0;
  while (i < u.size()) {
    const auto len = 1 + rng.below(2);
    const auto kind = rng.below(3);
    const std::size_t end = std::min(u.size(), i + len);
    if (kind == 0) s.actions.push_back(make_span(u, i, end, TagLabel::Action));
    if (kind == 1) s.objects.push_back(make_span(u, i, end, TagLabel::Object));
    i = end + rng.below(2);
  }
  return s;
}

}  // namespace

TEST_CASE("extract spans") {
  auto u = tokenize("please book the table");
  auto s = extract_spans({N, A, N, O}, u);
  REQUIRE(s.actions.size() == 1);
  REQUIRE(s.objects.size() == 1);
  CHECK(s.actions[0].surface == "book");
  CHECK(s.objects[0].surface == "table");
  auto two = extract_spans({A, A, N}, tokenize("set up it"));
  REQUIRE(two.actions.size() == 1);
  CHECK(two.actions[0].length() == 2);
  auto none = extract_spans({N, N}, tokenize("a b"));
  CHECK(none.actions.empty());
  CHECK(none.objects.empty());
  CHECK_THROWS_AS(extract_spans({N}, tokenize("a b")), ArgumentError);
}

TEST_CASE("extract then retag is the identity") {
  Rng rng(1);
  auto u = tokenize("a b c d e f g h i j");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TagLabel> tags;
    for (std::size_t i = 0; i < u.size(); ++i) tags.push_back(static_cast<TagLabel>(rng.below(3)));
    CHECK(spans_to_tags(extract_spans(tags, u), u.size()) == tags);
  }
}

TEST_CASE("bio labels split adjacent spans") {
  auto u = tokenize("sick notes absences");
  const std::vector<int> labels{label_id(TagScheme::Bio, O, true), label_id(TagScheme::Bio, O, false),
                                label_id(TagScheme::Bio, O, true)};
  auto s = extract_spans(labels, TagScheme::Bio, u);
  REQUIRE(s.objects.size() == 2);
  CHECK(s.objects[0].surface == "sick notes");
  CHECK(s.objects[1].surface == "absences");
}

TEST_CASE("pair by distance on the seat and meal example") {
  auto u = tokenize("I would like to reserve a seat and request a special meal on my flight");
  std::vector<TagLabel> tags(u.size(), N);
  tags[4] = A;
  tags[6] = O;
  tags[8] = A;
  tags[10] = O;
  tags[11] = O;
  auto s = extract_spans(tags, u);
  auto intents = pair_by_distance(s.actions, s.objects);
  CHECK(phrases(intents) == std::vector<std::string>{"reserve seat", "request special meal"});
  for (const auto& i : intents) CHECK(i.source == IntentSource::WordDistance);
  CHECK(intents[0].score == doctest::Approx(0.5));
}

TEST_CASE("one action with two objects") {
  auto u = tokenize("how can I manage sick notes and absences");
  std::vector<TagLabel> tags{N, N, N, A, O, O, N, O};
  auto s = extract_spans(tags, u);
  auto intents = pair_by_distance(s.actions, s.objects);
  CHECK(phrases(intents) == std::vector<std::string>{"manage sick notes", "manage absences"});
  CHECK(pair_by_distance({}, s.objects).empty());
  CHECK(pair_by_distance(s.actions, {}).empty());
}

TEST_CASE("pair by distance ignores input order and never emits one-sided or overlapping intents") {
  Rng rng(2);
  auto u = tokenize("a b c d e f g h i j k l m n");
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_layout(rng, u);
    auto base = pair_by_distance(s.actions, s.objects);
    std::reverse(s.actions.begin(), s.actions.end());
    rng.shuffle(s.objects);
    auto shuffled = pair_by_distance(s.actions, s.objects);
    REQUIRE(base.size() == shuffled.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(base[k].action == shuffled[k].action);
      CHECK(base[k].object == shuffled[k].object);
      CHECK(!base[k].action.surface.empty());
      CHECK(!base[k].object.surface.empty());
      CHECK((base[k].action.end <= base[k].object.start || base[k].object.end <= base[k].action.start));
    }
    if (!s.actions.empty() && !s.objects.empty()) {
      for (const auto& a : s.actions)
        CHECK(std::any_of(base.begin(), base.end(), [&](const Intent& i) { return i.action == a; }));
      for (const auto& o : s.objects)
        CHECK(std::any_of(base.begin(), base.end(), [&](const Intent& i) { return i.object == o; }));
    } else {
      CHECK(base.empty());
    }
  }
}

TEST_CASE("match features") {
  EmbeddingTable t(3, UnkPolicy::Zero);
  t.insert("seat", Eigen::Vector3d(0.1, 0.2, 0.3));
  auto u = tokenize("reserve seat now");
  auto a = make_span(u, 0, 1, TagLabel::Action);
  auto o = make_span(u, 1, 2, TagLabel::Object);
  auto f = match_features(a, o, u, t);
  REQUIRE(f.size() == 4);
  CHECK(f.head(3).isApprox(Eigen::Vector3d(0.1, 0.2, 0.3)));
  CHECK(f[3] == 0.0);
  auto far = make_span(u, 2, 3, TagLabel::Object);
  CHECK(match_features(a, far, u, t)[3] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("hinge loss values") {
  CHECK(hinge_loss(1, 2.0) == 0.0);
  CHECK(hinge_loss(1, 0.0) == 1.0);
  CHECK(hinge_loss(-1, -3.0) == 0.0);
  CHECK(hinge_loss(-1, 0.5) == 1.5);
}

TEST_CASE("distance-only scorer reduces to nearest-object pairing") {
  Rng rng(3);
  auto u = tokenize("a b c d e f g h i j k l m n");
  const double n = static_cast<double>(u.size());
  MatcherConfig mc;
  mc.hidden1 = 2;
  mc.hidden2 = 2;
  const int d = 4;
  MatcherModel m(d + 1, mc, 1);
  auto params = m.parameters();
  for (auto* p : params) p->value.setZero();
  params[0]->value(0, d) = -1.0;  // relu(1 - gap/n)
  params[1]->value(0, 0) = 1.0;
  params[2]->value(0, 0) = 1.0;
  params[4]->value(0, 0) = 1.0;
  EmbeddingTable t(d, UnkPolicy::HashedRandom);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_layout(rng, u);
    auto got = pair_by_mlp(s.actions, s.objects, u, t, m);
    std::vector<Intent> expected;
    for (const auto& a : s.actions) {
      const Span* best = nullptr;
      for (const auto& o : s.objects)
        if (!best || span_gap(a, o) < span_gap(a, *best)) best = &o;
      if (best) expected.push_back({a, *best, 1.0 - static_cast<double>(span_gap(a, *best)) / n,
                                    IntentSource::Mlp});
    }
    REQUIRE(got.size() == expected.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].action == expected[k].action);
      CHECK(got[k].object == expected[k].object);
      CHECK(got[k].score == doctest::Approx(expected[k].score));
      CHECK(got[k].source == IntentSource::Mlp);
    }
  }
}

TEST_CASE("pair by scores thresholds at zero and shares objects") {
  auto u = tokenize("book and reserve the table");
  auto a1 = make_span(u, 0, 1, TagLabel::Action);
  auto a2 = make_span(u, 2, 3, TagLabel::Action);
  auto o = make_span(u, 4, 5, TagLabel::Object);
  CHECK(pair_by_scores({a1, a2}, {o}, [](const Span&, const Span&) { return -0.1; }).empty());
  CHECK(pair_by_scores({a1, a2}, {o}, [](const Span&, const Span&) { return 0.0; }).empty());
  auto both = pair_by_scores({a1, a2}, {o}, [](const Span&, const Span&) { return 0.7; });
  REQUIRE(both.size() == 2);
  CHECK(both[0].object == o);
  CHECK(both[1].object == o);
}

TEST_CASE("matcher training separates gold pairs") {
  SyntheticConfig sc;
  sc.count = 300;
  sc.positive_ratio = 1.0;
  auto corpus = generate_synthetic_corpus(sc).tagged;
  auto table = synthetic_embeddings(default_synthetic_domains(), 16, 11);
  auto pairs = matcher_pairs(corpus);
  std::size_t pos = 0;
  for (const auto& p : pairs) pos += p.label > 0;
  REQUIRE(pos > 0);
  REQUIRE(pos < pairs.size());
  MatcherConfig mc;
  mc.train.epochs = 15;
  std::vector<EpochRecord> history;
  auto m = train_matcher(pairs, table, mc, &history);
  CHECK(history.back().loss < history.front().loss);
  std::size_t correct = 0;
  for (const auto& p : pairs)
    correct += (m.score(match_features(p.action, p.object, p.utterance, table)) > 0) == (p.label > 0);
  const double majority = static_cast<double>(std::max(pos, pairs.size() - pos)) / static_cast<double>(pairs.size());
  CHECK(static_cast<double>(correct) / static_cast<double>(pairs.size()) > majority);

  std::stringstream s;
  nn::write_bundle(m.to_bundle(), s);
  auto back = MatcherModel::from_bundle(nn::read_bundle(s));
  const auto f = match_features(pairs[0].action, pairs[0].object, pairs[0].utterance, table);
  CHECK(back.score(f) == m.score(f));

  std::vector<MatchPair> negatives;
  for (const auto& p : pairs)
    if (p.label < 0) negatives.push_back(p);
  CHECK_THROWS_AS(train_matcher(negatives, table, mc), TrainingError);
}
