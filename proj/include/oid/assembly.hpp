#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "oid/embeddings.hpp"
#include "oid/nn/bundle.hpp"
#include "oid/training.hpp"
#include "oid/types.hpp"

namespace oid {

struct SpanSets {
  std::vector<Span> actions;
  std::vector<Span> objects;
};

/// Maximal runs of ACTION and OBJECT tags.
SpanSets extract_spans(const std::vector<TagLabel>& tags, const Utterance& u);
/// Scheme label ids; in Bio mode a begin label always opens a new span.
SpanSets extract_spans(const std::vector<int>& labels, TagScheme scheme, const Utterance& u);
/// Re-tags the spans (everything else NONE).
std::vector<TagLabel> spans_to_tags(const SpanSets& spans, std::size_t n);

/// Tokens strictly between the two spans; 0 when adjacent or overlapping.
std::size_t span_gap(const Span& a, const Span& b);

/// Greedy globally nearest pairing. Pairs are taken in ascending gap order
/// (ties by action start, then object start) with each span used once; then
/// every still unmatched action takes its nearest object and every unmatched
/// object its nearest action. Score is 1 / (1 + gap). Output is sorted by
/// action start, then object start.
std::vector<Intent> pair_by_distance(std::vector<Span> actions, std::vector<Span> objects);

/// Sum of word vectors over the action and object tokens, then gap / n.
Eigen::VectorXd match_features(const Span& action, const Span& object, const Utterance& u,
                               const EmbeddingTable& table);

struct MatcherConfig {
  int hidden1 = 64;
  int hidden2 = 32;
  TrainConfig train = [] {
    TrainConfig t;
    t.epochs = 30;
    t.learning_rate = 0.005;
    t.lr_decay = 0.0;
    return t;
  }();
};

nlohmann::json to_json(const MatcherConfig& c);
MatcherConfig matcher_config_from_json(const nlohmann::json& j);

/// ReLU -> ReLU -> linear scorer over match features.
class MatcherModel {
 public:
  MatcherModel() = default;
  MatcherModel(int input_dim, const MatcherConfig& config, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(w1_.value.cols()); }
  nn::ParameterRefs parameters() { return {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_}; }
  nn::Var score(nn::Graph& graph, const Eigen::VectorXd& features) const;
  double score(const Eigen::VectorXd& features) const;

  nn::ModelBundle to_bundle(const nlohmann::json& embeddings = {}) const;
  static MatcherModel from_bundle(const nn::ModelBundle& bundle);

 private:
  nn::Parameter w1_, b1_, w2_, b2_, w3_, b3_;
};

/// max(0, 1 - y * score).
double hinge_loss(double label, double score);

struct MatchPair {
  Span action;
  Span object;
  Utterance utterance;
  int label = 1;  // +1 gold, -1 otherwise
};

/// Gold intents are positives; every other action x object combination of
/// the gold spans in the same utterance is a negative.
std::vector<MatchPair> matcher_pairs(const std::vector<TaggedUtterance>& corpus);

/// Minimises the mean hinge loss. Throws TrainingError without positives.
MatcherModel train_matcher(const std::vector<MatchPair>& pairs, const EmbeddingTable& table,
                           const MatcherConfig& config, std::vector<EpochRecord>* history = nullptr);

/// Per action, the highest scoring object with a positive score. Ties go to
/// the smaller gap, then the earlier object.
std::vector<Intent> pair_by_mlp(const std::vector<Span>& actions, const std::vector<Span>& objects,
                                const Utterance& u, const EmbeddingTable& table,
                                const MatcherModel& matcher);
/// Same, with an arbitrary pair scorer.
std::vector<Intent> pair_by_scores(
    const std::vector<Span>& actions, const std::vector<Span>& objects,
    const std::function<double(const Span&, const Span&)>& scorer);

}  // namespace oid
