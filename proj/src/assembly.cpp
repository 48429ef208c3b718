#include "oid/assembly.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "oid/error.hpp"
#include "oid/json_config.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

bool span_less(const Span& a, const Span& b) {
  return std::tie(a.start, a.end) < std::tie(b.start, b.end);
}

Intent make_intent(const Span& a, const Span& o, double score, IntentSource src) {
  Intent in;
  in.action = a;
  in.object = o;
  in.score = score;
  in.source = src;
  return in;
}

void sort_intents(std::vector<Intent>& out) {
  std::sort(out.begin(), out.end(), [](const Intent& x, const Intent& y) {
    return std::tie(x.action.start, x.action.end, x.object.start, x.object.end) <
           std::tie(y.action.start, y.action.end, y.object.start, y.object.end);
  });
}

void push_run(SpanSets& out, const Utterance& u, TagLabel label, std::size_t s, std::size_t e) {
  if (label == TagLabel::Action) out.actions.push_back(make_span(u, s, e, label));
  else if (label == TagLabel::Object) out.objects.push_back(make_span(u, s, e, label));
}

}  // namespace

SpanSets extract_spans(const std::vector<TagLabel>& tags, const Utterance& u) {
  std::vector<int> ids;
  for (auto t : tags) ids.push_back(static_cast<int>(t));
  return extract_spans(ids, TagScheme::Raw, u);
}

SpanSets extract_spans(const std::vector<int>& labels, TagScheme scheme, const Utterance& u) {
  if (labels.size() != u.size())
    throw ArgumentError("extract_spans: " + std::to_string(labels.size()) + " tags for " +
                        std::to_string(u.size()) + " tokens");
  SpanSets out;
  std::size_t start = 0;
  for (std::size_t t = 1; t <= labels.size(); ++t) {
    const TagLabel prev = base_label(scheme, labels[t - 1]);
    const bool boundary = t == labels.size() || base_label(scheme, labels[t]) != prev ||
                          (scheme == TagScheme::Bio && is_begin(scheme, labels[t]));
    if (!boundary) continue;
    push_run(out, u, prev, start, t);
    start = t;
  }
  return out;
}

std::vector<TagLabel> spans_to_tags(const SpanSets& spans, std::size_t n) {
  std::vector<TagLabel> tags(n, TagLabel::None);
  for (const auto* set : {&spans.actions, &spans.objects})
    for (const auto& s : *set)
      for (std::size_t i = s.start; i < s.end && i < n; ++i) tags[i] = s.label;
  return tags;
}

std::size_t span_gap(const Span& a, const Span& b) {
  if (a.end <= b.start) return b.start - a.end;
  if (b.end <= a.start) return a.start - b.end;
  return 0;
}

std::vector<Intent> pair_by_distance(std::vector<Span> actions, std::vector<Span> objects) {
  if (actions.empty() || objects.empty()) return {};
  std::sort(actions.begin(), actions.end(), span_less);
  std::sort(objects.begin(), objects.end(), span_less);
  struct Cand {
    std::size_t gap, a, o;
  };
  std::vector<Cand> cands;
  for (std::size_t a = 0; a < actions.size(); ++a)
    for (std::size_t o = 0; o < objects.size(); ++o)
      cands.push_back({span_gap(actions[a], objects[o]), a, o});
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& x, const Cand& y) { return x.gap < y.gap; });
  std::vector<bool> a_used(actions.size()), o_used(objects.size());
  std::vector<Intent> out;
  auto emit = [&](std::size_t a, std::size_t o) {
    const auto gap = span_gap(actions[a], objects[o]);
    out.push_back(make_intent(actions[a], objects[o], 1.0 / (1.0 + static_cast<double>(gap)),
                              IntentSource::WordDistance));
  };
  for (const auto& c : cands) {
    if (a_used[c.a] || o_used[c.o]) continue;
    a_used[c.a] = o_used[c.o] = true;
    emit(c.a, c.o);
  }
  // cands is stably sorted, so the first hit is the nearest and earliest.
  for (std::size_t a = 0; a < actions.size(); ++a) {
    if (a_used[a]) continue;
    for (const auto& c : cands)
      if (c.a == a) {
        emit(a, c.o);
        break;
      }
  }
  for (std::size_t o = 0; o < objects.size(); ++o) {
    if (o_used[o]) continue;
    for (const auto& c : cands)
      if (c.o == o) {
        emit(c.a, o);
        break;
      }
  }
  sort_intents(out);
  return out;
}

Eigen::VectorXd match_features(const Span& action, const Span& object, const Utterance& u,
                               const EmbeddingTable& table) {
  const int d = table.dimension();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(d + 1);
  for (const auto* s : {&action, &object}) {
    if (s->end > u.size() || s->start >= s->end)
      throw ArgumentError("span [" + std::to_string(s->start) + ", " + std::to_string(s->end) +
                          ") is not valid for a " + std::to_string(u.size()) + "-token utterance");
    for (std::size_t i = s->start; i < s->end; ++i) f.head(d) += table.lookup(lowercase(u.tokens[i]));
  }
  f(d) = static_cast<double>(span_gap(action, object)) / static_cast<double>(u.size());
  return f;
}

nlohmann::json to_json(const MatcherConfig& c) {
  return {{"hidden1", c.hidden1}, {"hidden2", c.hidden2}, {"train", to_json(c.train)}};
}

MatcherConfig matcher_config_from_json(const nlohmann::json& j) {
  MatcherConfig c;
  ConfigReader r(j, "matcher");
  r.get("hidden1", c.hidden1);
  r.get("hidden2", c.hidden2);
  if (const auto* t = r.child("train")) c.train = train_config_from_json(*t, c.train);
  r.finish();
  if (c.hidden1 < 1 || c.hidden2 < 1) throw ArgumentError("matcher hidden sizes must be positive");
  return c;
}

MatcherModel::MatcherModel(int input_dim, const MatcherConfig& config, std::uint64_t seed)
    : w1_(nn::make_parameter("matcher.w1", config.hidden1, input_dim)),
      b1_(nn::make_parameter("matcher.b1", config.hidden1, 1)),
      w2_(nn::make_parameter("matcher.w2", config.hidden2, config.hidden1)),
      b2_(nn::make_parameter("matcher.b2", config.hidden2, 1)),
      w3_(nn::make_parameter("matcher.w3", 1, config.hidden2)),
      b3_(nn::make_parameter("matcher.b3", 1, 1)) {
  Rng rng(seed);
  for (auto* p : {&w1_, &w2_, &w3_}) nn::init_glorot(*p, rng);
}

nn::Var MatcherModel::score(nn::Graph& g, const Eigen::VectorXd& features) const {
  if (features.size() != input_dim())
    throw ArgumentError("matcher expects " + std::to_string(input_dim()) + " features, got " +
                        std::to_string(features.size()));
  auto x = g.constant(features);
  auto h1 = nn::relu(nn::affine(g.param(w1_), x, g.param(b1_)));
  auto h2 = nn::relu(nn::affine(g.param(w2_), h1, g.param(b2_)));
  return nn::affine(g.param(w3_), h2, g.param(b3_));
}

double MatcherModel::score(const Eigen::VectorXd& features) const {
  nn::Graph g;
  return score(g, features).scalar();
}

nn::ModelBundle MatcherModel::to_bundle(const nlohmann::json& embeddings) const {
  nn::ModelBundle b;
  b.kind = "matcher";
  b.config = {{"input_dim", input_dim()},
              {"hidden1", w1_.value.rows()},
              {"hidden2", w2_.value.rows()},
              {"embeddings", embeddings}};
  b.put(const_cast<MatcherModel*>(this)->parameters());
  return b;
}

MatcherModel MatcherModel::from_bundle(const nn::ModelBundle& bundle) {
  if (bundle.kind != "matcher") throw ModelError("expected a matcher bundle, got '" + bundle.kind + "'");
  try {
    MatcherConfig c;
    c.hidden1 = bundle.config.at("hidden1").get<int>();
    c.hidden2 = bundle.config.at("hidden2").get<int>();
    MatcherModel m(bundle.config.at("input_dim").get<int>(), c, 0);
    bundle.get(m.parameters());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("corrupt matcher bundle: ") + e.what());
  }
}

double hinge_loss(double label, double score) { return std::max(0.0, 1.0 - label * score); }

std::vector<MatchPair> matcher_pairs(const std::vector<TaggedUtterance>& corpus) {
  std::vector<MatchPair> pairs;
  for (const auto& t : corpus) {
    if (!t.gold_intents || t.gold_intents->empty()) continue;
    std::vector<Span> actions, objects;
    for (const auto& in : *t.gold_intents) {
      if (std::find(actions.begin(), actions.end(), in.action) == actions.end())
        actions.push_back(in.action);
      if (std::find(objects.begin(), objects.end(), in.object) == objects.end())
        objects.push_back(in.object);
    }
    for (const auto& a : actions) {
      for (const auto& o : objects) {
        const bool gold = std::any_of(t.gold_intents->begin(), t.gold_intents->end(),
                                      [&](const Intent& in) { return in.action == a && in.object == o; });
        pairs.push_back({a, o, t.utterance, gold ? 1 : -1});
      }
    }
  }
  return pairs;
}

MatcherModel train_matcher(const std::vector<MatchPair>& pairs, const EmbeddingTable& table,
                           const MatcherConfig& config, std::vector<EpochRecord>* history) {
  if (std::none_of(pairs.begin(), pairs.end(), [](const MatchPair& p) { return p.label > 0; }))
    throw TrainingError("matcher training needs at least one positive pair");
  std::vector<Eigen::VectorXd> features;
  for (const auto& p : pairs) features.push_back(match_features(p.action, p.object, p.utterance, table));
  MatcherModel model(table.dimension() + 1, config, config.train.seed);
  nn::Adam adam(model.parameters());
  auto h = run_training(adam, pairs.size(), config.train,
                        [&](std::size_t i, Rng&, nn::Gradients& grads) {
                          nn::Graph g;
                          auto loss = nn::hinge(model.score(g, features[i]), pairs[i].label);
                          g.backward(loss);
                          g.collect(grads);
                          return loss.scalar();
                        });
  if (history) *history = std::move(h);
  return model;
}

std::vector<Intent> pair_by_scores(
    const std::vector<Span>& actions_in, const std::vector<Span>& objects_in,
    const std::function<double(const Span&, const Span&)>& scorer) {
  if (actions_in.empty() || objects_in.empty()) return {};
  auto actions = actions_in;
  auto objects = objects_in;
  std::sort(actions.begin(), actions.end(), span_less);
  std::sort(objects.begin(), objects.end(), span_less);
  std::vector<Intent> out;
  for (const auto& a : actions) {
    const Span* best = nullptr;
    double best_score = 0.0;
    std::size_t best_gap = 0;
    for (const auto& o : objects) {
      const double s = scorer(a, o);
      if (!(s > 0.0)) continue;
      const auto gap = span_gap(a, o);
      if (!best || s > best_score || (s == best_score && gap < best_gap)) {
        best = &o;
        best_score = s;
        best_gap = gap;
      }
    }
    if (best) out.push_back(make_intent(a, *best, best_score, IntentSource::Mlp));
  }
  sort_intents(out);
  return out;
}

std::vector<Intent> pair_by_mlp(const std::vector<Span>& actions, const std::vector<Span>& objects,
                                const Utterance& u, const EmbeddingTable& table,
                                const MatcherModel& matcher) {
  return pair_by_scores(actions, objects, [&](const Span& a, const Span& o) {
    return matcher.score(match_features(a, o, u, table));
  });
}

}  // namespace oid
