#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "oid/config.hpp"
#include "oid/crf.hpp"
#include "oid/experiments.hpp"
#include "oid/nn/graph.hpp"
#include "oid/rng.hpp"
#include "oid/synthetic.hpp"
#include "oid/tokenizer.hpp"

namespace oid::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Central differences of `loss` against `analytic` for every element of
/// every parameter. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(const nn::ParameterRefs& params, const nn::Gradients& analytic,
                                 const std::function<double()>& loss, double h = 1e-5,
                                 double floor = 1e-6) {
  GradCheck r;
  for (auto* p : params) {
    if (!p->trainable) continue;
    const nn::Matrix* g = analytic.find(p);
    for (nn::Index k = 0; k < p->value.size(); ++k) {
      double& x = p->value.data()[k];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = g ? g->data()[k] : 0.0;
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++r.checked;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = p->name + "[" + std::to_string(k) + "] analytic " + std::to_string(a) +
                  " numeric " + std::to_string(numeric);
      }
    }
  }
  return r;
}

/// Smallest gradient magnitude at which central differences of a loss of
/// size `loss_value` resolve relative error `tolerance`: below it, rounding
/// in the two loss evaluations alone exceeds the tolerance.
inline double resolution_floor(double loss_value, double h, double tolerance) {
  return std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss_value)) / (h * tolerance);
}

inline CrfScores random_scores(Rng& rng, int n, int m, double scale = 1.0) {
  CrfScores s;
  s.emissions = nn::Matrix(m, n);
  s.transitions = nn::Matrix(m, m);
  s.start = nn::Vector(m);
  s.stop = nn::Vector(m);
  for (nn::Index i = 0; i < s.emissions.size(); ++i) s.emissions.data()[i] = scale * rng.normal();
  for (nn::Index i = 0; i < s.transitions.size(); ++i) s.transitions.data()[i] = scale * rng.normal();
  for (int i = 0; i < m; ++i) {
    s.start[i] = scale * rng.normal();
    s.stop[i] = scale * rng.normal();
  }
  return s;
}

/// Calls `fn` for every label sequence of length n over m labels.
inline void enumerate_sequences(int n, int m, const std::function<void(const LabelSeq&)>& fn) {
  LabelSeq y(static_cast<std::size_t>(n), 0);
  while (true) {
    fn(y);
    int i = n - 1;
    while (i >= 0 && ++y[static_cast<std::size_t>(i)] == m) y[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) return;
  }
}

/// Highest-scoring sequence satisfying `c` (first in enumeration order on
/// ties), or empty when none does.
inline LabelSeq brute_force_argmax(const CrfScores& s, const ConstraintSet* c = nullptr,
                                   TagScheme scheme = TagScheme::Raw) {
  LabelSeq best;
  double best_score = -std::numeric_limits<double>::infinity();
  enumerate_sequences(s.length(), s.num_labels(), [&](const LabelSeq& y) {
    if (c && !satisfies(y, *c, scheme)) return;
    const double v = sequence_score(s, y);
    if (v > best_score) {
      best_score = v;
      best = y;
    }
  });
  return best;
}

/// Random embedding table over `words`.
inline std::shared_ptr<const EmbeddingTable> random_table(const std::vector<std::string>& words,
                                                          int dim, std::uint64_t seed,
                                                          UnkPolicy policy = UnkPolicy::HashedRandom) {
  EmbeddingTable t(dim, policy);
  Rng rng(seed);
  for (const auto& w : words) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    t.insert(w, v);
  }
  return std::make_shared<const EmbeddingTable>(std::move(t));
}

inline TaggedUtterance tagged(const std::string& text, const std::vector<TagLabel>& tags) {
  TaggedUtterance t;
  t.utterance = tokenize(text);
  t.tags = tags;
  return t;
}

/// Run config at desk scale, shared by the end-to-end tests.
inline RunConfig compact_config(int dim = 32) {
  RunConfig c;
  c.apply_seed(13);
  c.embeddings.dimension = dim;
  for (auto* e : {&c.existence.encoder, &c.tagger.encoder}) {
    e->char_dim = 8;
    e->char_filters = 12;
    e->word_dim = dim;
    e->lstm_hidden = 24;
    e->dropout_rate = 0.2;
  }
  c.existence.encoder.lstm_layers = 1;
  c.tagger.attention_heads = 2;
  c.existence_train.learning_rate = 0.005;
  c.existence_train.epochs = 4;
  c.pretrain_train.learning_rate = 0.005;
  c.pretrain_train.epochs = 2;
  c.tagger_train.learning_rate = 0.01;
  c.tagger_train.epochs = 8;
  return c;
}

struct TrainedSynthetic {
  RunConfig config;
  std::shared_ptr<const EmbeddingTable> table;
  SyntheticCorpus train;
  SyntheticCorpus test;
  TrainedModels models;
};

/// One compact pipeline trained on synthetic data, built once per process.
inline const TrainedSynthetic& trained_synthetic() {
  static const TrainedSynthetic fixture = [] {
    TrainedSynthetic f;
    f.config = compact_config();
    f.table = load_embedding_source(f.config.embeddings);
    SyntheticConfig sc;
    sc.count = 1000;
    sc.seed = 7;
    f.train = generate_synthetic_corpus(sc);
    sc.count = 200;
    sc.seed = 8;
    sc.id_prefix = "test";
    f.test = generate_synthetic_corpus(sc);
    f.models = train_pipeline(f.config, f.train.tagged, f.table);
    return f;
  }();
  return fixture;
}

}  // namespace oid::testing
