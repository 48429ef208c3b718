#pragma once

#include <memory>
#include <string>
#include <vector>

#include "oid/corpus.hpp"
#include "oid/encoder.hpp"
#include "oid/nn/bundle.hpp"
#include "oid/training.hpp"

namespace oid {

struct ExistenceConfig {
  EncoderConfig encoder;  // two BiLSTM layers by default
  double threshold = 0.5;
};

nlohmann::json to_json(const ExistenceConfig& c);
ExistenceConfig existence_config_from_json(const nlohmann::json& j);

/// Stage I classifier: encoder states, max-pooled over time, into one
/// sigmoid unit.
class ExistenceModel {
 public:
  ExistenceModel(ExistenceConfig config, Vocabulary vocab,
                 std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed);

  const ExistenceConfig& config() const { return config_; }
  void set_threshold(double t) { config_.threshold = t; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  nn::Parameter& output_weight() { return output_weight_; }
  nn::Parameter& output_bias() { return output_bias_; }
  nn::ParameterRefs parameters();

  /// Pre-sigmoid score on `graph`; the utterance must be non-empty.
  nn::Var logit(nn::Graph& graph, const Utterance& u, Mode mode, Rng* rng) const;
  /// P(intent present); 0.0 for an empty utterance.
  double probability(const Utterance& u) const;
  bool predict(const Utterance& u) const { return probability(u) >= config_.threshold; }

  /// `embeddings` describes where the word vectors came from; it is stored
  /// verbatim so a loader can find them again.
  nn::ModelBundle to_bundle(const nlohmann::json& embeddings = {}) const;
  static ExistenceModel from_bundle(const nn::ModelBundle& bundle,
                                    std::shared_ptr<const EmbeddingTable> table);

 private:
  ExistenceConfig config_;
  Encoder encoder_;
  nn::Parameter output_weight_;
  nn::Parameter output_bias_;
};

double predict_existence(const ExistenceModel& model, const Utterance& u);

/// Trains a fresh model on `corpus`. The vocabulary is built from the corpus.
/// Throws TrainingError when the corpus lacks either class.
ExistenceModel train_existence(const std::vector<ExistenceExample>& corpus,
                               std::shared_ptr<const EmbeddingTable> table,
                               const ExistenceConfig& model_config, const TrainConfig& config,
                               std::vector<EpochRecord>* history = nullptr);
/// Continues training an existing model in place.
std::vector<EpochRecord> train_existence(ExistenceModel& model,
                                         const std::vector<ExistenceExample>& corpus,
                                         const TrainConfig& config);

/// Part-of-speech stand-in for the hand-feature baseline.
struct PosLexicon {
  Lexicon verbs;
  Lexicon nouns;
  Lexicon adjectives;
  Lexicon modals = {"can", "could", "may", "might", "must", "shall", "should", "will", "would"};
  Lexicon personal_pronouns = {"i",   "me",   "my",  "we",   "us",   "our", "you", "your",
                               "he",  "him",  "his", "she",  "her",  "it",  "they", "them"};
  Lexicon first_person = {"i", "me", "my", "we", "us", "our"};
};

struct HandFeatureVector {
  int noun_count = 0;
  int verb_count = 0;
  bool ends_in_noun = false;
  bool ends_in_adjective = false;
  bool begins_with_verb = false;
  bool begins_with_modal = false;
  int wh_count = 0;
  int question_marks = 0;
  bool has_personal_pronoun = false;
  bool first_person_near_infinitive = false;
  bool has_indicator = false;

  static constexpr int kSize = 11;
  Eigen::VectorXd to_vector() const;
};

HandFeatureVector extract_hand_features(const Utterance& u, const PosLexicon& pos,
                                        const std::vector<std::string>& indicator_lexicon);

/// Logistic regression over standardised hand features.
struct HandFeatureBaseline {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  Eigen::VectorXd weights;
  double bias = 0.0;
  double threshold = 0.5;

  double probability(const HandFeatureVector& f) const;
};

HandFeatureBaseline train_hand_feature_baseline(const std::vector<HandFeatureVector>& features,
                                                const std::vector<bool>& labels, int iterations = 500,
                                                double learning_rate = 0.5, double l2 = 1e-4);

}  // namespace oid
