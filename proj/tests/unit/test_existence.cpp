#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oid/error.hpp"
#include "oid/existence.hpp"
#include "oid/vocabulary.hpp"
#include "test_support.hpp"

using namespace oid;

namespace {

ExistenceConfig small_config(int dim) {
  ExistenceConfig c;
  c.encoder.char_dim = 4;
  c.encoder.char_filters = 6;
  c.encoder.word_dim = dim;
  c.encoder.lstm_hidden = 8;
  c.encoder.lstm_layers = 2;
  c.encoder.dropout_rate = 0.1;
  return c;
}

struct Setup {
  std::shared_ptr<const EmbeddingTable> table;
  std::vector<ExistenceExample> data;
};

Setup tiny_setup(std::size_t count) {
  Setup s;
  s.table = std::make_shared<const EmbeddingTable>(
      synthetic_embeddings(default_synthetic_domains(), 16, 11));
  SyntheticConfig sc;
  sc.count = count;
  sc.seed = 3;
  s.data = generate_synthetic_corpus(sc).existence;
  return s;
}

double mean_bce(const ExistenceModel& m, const std::vector<ExistenceExample>& data) {
  double total = 0.0;
  for (const auto& e : data) {
    const double p = m.probability(e.utterance);
    total -= e.has_intent ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(data.size());
}

ExistenceModel fresh(const Setup& s, const ExistenceConfig& c, std::uint64_t seed = 5) {
  std::vector<const Utterance*> utts;
  for (const auto& e : s.data) utts.push_back(&e.utterance);
  return ExistenceModel(c, build_vocabulary(utts), s.table, seed);
}

}  // namespace

TEST_CASE("zero output weights give one half") {
  auto s = tiny_setup(10);
  auto m = fresh(s, small_config(16));
  m.output_weight().value.setZero();
  m.output_bias().value.setZero();
  for (const auto& e : s.data) CHECK(m.probability(e.utterance) == 0.5);
  CHECK(m.probability(tokenize("")) == 0.0);
  CHECK(predict_existence(m, tokenize("")) == 0.0);
}

TEST_CASE("initial loss is near chance") {
  auto s = tiny_setup(40);
  auto m = fresh(s, small_config(16));
  const double l = mean_bce(m, s.data);
  CHECK(l > 0.8 * std::log(2.0));
  CHECK(l < 1.2 * std::log(2.0));
}

TEST_CASE("overfits a tiny separable set with decreasing loss") {
  auto s = tiny_setup(20);
  auto c = small_config(16);
  TrainConfig t;
  t.learning_rate = 0.01;
  t.epochs = 25;
  t.batch_size = 4;
  t.lr_decay = 0.0;
  std::vector<EpochRecord> history;
  auto m = train_existence(s.data, s.table, c, t, &history);
  REQUIRE(history.size() == 25);
  for (int e = 1; e < 5; ++e) CHECK(history[static_cast<std::size_t>(e)].loss < history[static_cast<std::size_t>(e - 1)].loss);
  std::size_t correct = 0;
  for (const auto& e : s.data) correct += m.predict(e.utterance) == e.has_intent;
  CHECK(correct == s.data.size());

  auto again = train_existence(s.data, s.table, c, t);
  for (const auto& e : s.data) CHECK(again.probability(e.utterance) == m.probability(e.utterance));
}

TEST_CASE("tiny clip norm nearly freezes training") {
  auto s = tiny_setup(20);
  auto c = small_config(16);
  auto m = fresh(s, c, 9);
  const double before = mean_bce(m, s.data);
  TrainConfig t;
  t.grad_clip_norm = 1e-9;
  t.epochs = 3;
  t.learning_rate = 0.01;
  train_existence(m, s.data, t);
  CHECK(std::abs(mean_bce(m, s.data) - before) <= 0.05 * before);
}

TEST_CASE("single-class corpus is rejected") {
  auto s = tiny_setup(20);
  std::vector<ExistenceExample> pos;
  for (const auto& e : s.data)
    if (e.has_intent) pos.push_back(e);
  CHECK_THROWS_AS(train_existence(pos, s.table, small_config(16), TrainConfig{}), TrainingError);
}

TEST_CASE("probabilities in range and threshold monotone") {
  auto s = tiny_setup(30);
  auto m = fresh(s, small_config(16));
  std::size_t previous = s.data.size() + 1;
  for (double th : {0.0, 0.3, 0.5, 0.7, 1.0}) {
    m.set_threshold(th);
    std::size_t positives = 0;
    for (const auto& e : s.data) {
      const double p = m.probability(e.utterance);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      positives += m.predict(e.utterance);
    }
    CHECK(positives <= previous);
    previous = positives;
  }
}

TEST_CASE("existence bundle round trip") {
  auto s = tiny_setup(10);
  auto m = fresh(s, small_config(16));
  std::stringstream buf;
  nn::write_bundle(m.to_bundle(), buf);
  auto bundle = nn::read_bundle(buf);
  auto back = ExistenceModel::from_bundle(bundle, s.table);
  for (const auto& e : s.data) CHECK(back.probability(e.utterance) == m.probability(e.utterance));
  bundle.kind = "tagger";
  CHECK_THROWS_AS(ExistenceModel::from_bundle(bundle, s.table), ModelError);
}

TEST_CASE("hand features") {
  PosLexicon pos;
  pos.verbs = {"want", "reserve", "is"};
  pos.nouns = {"seat", "dns"};
  auto f = extract_hand_features(tokenize("I want to reserve a seat"), pos, default_indicator_lexicon());
  CHECK(f.first_person_near_infinitive);
  CHECK(f.has_indicator);
  CHECK(f.has_personal_pronoun);
  CHECK(f.ends_in_noun);
  CHECK(f.verb_count == 2);
  auto q = extract_hand_features(tokenize("What is DNS?"), pos, default_indicator_lexicon());
  CHECK(q.wh_count == 1);
  CHECK(q.question_marks == 1);
  CHECK(!q.has_indicator);
  auto e = extract_hand_features(tokenize(""), pos, default_indicator_lexicon());
  CHECK(e.to_vector().isZero());
  CHECK(e.to_vector().size() == HandFeatureVector::kSize);
  auto m = extract_hand_features(tokenize("Could you reserve it"), pos, {});
  CHECK(m.begins_with_modal);
  CHECK(!m.begins_with_verb);
}

TEST_CASE("hand feature baseline learns the indicator") {
  PosLexicon pos;
  SyntheticConfig sc;
  sc.count = 200;
  auto corpus = generate_synthetic_corpus(sc).existence;
  std::vector<HandFeatureVector> feats;
  std::vector<bool> labels;
  for (const auto& e : corpus) {
    feats.push_back(extract_hand_features(e.utterance, pos, default_indicator_lexicon()));
    labels.push_back(e.has_intent);
  }
  auto b = train_hand_feature_baseline(feats, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < feats.size(); ++i)
    correct += (b.probability(feats[i]) >= b.threshold) == labels[i];
  CHECK(static_cast<double>(correct) / static_cast<double>(feats.size()) > 0.7);
}
