#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oid/attention.hpp"
#include "oid/crf.hpp"
#include "oid/encoder.hpp"
#include "oid/nn/bundle.hpp"
#include "oid/training.hpp"

namespace oid {

/// Phrases that announce an upcoming action.
const std::vector<std::string>& default_indicator_lexicon();

struct AdversarialConfig {
  bool enabled = true;
  double epsilon = 1.0;
  double alpha = 0.5;
  /// Also perturb during proxy-tag pre-training.
  bool in_pretraining = false;

  void validate() const;
};

nlohmann::json to_json(const AdversarialConfig& c);
AdversarialConfig adversarial_config_from_json(const nlohmann::json& j);

enum class Decoder { Viterbi, Beam, Ilp };
std::string_view to_string(Decoder d);
std::optional<Decoder> parse_decoder(std::string_view text);

struct TaggerConfig {
  EncoderConfig encoder = [] {
    EncoderConfig e;
    e.lstm_layers = 1;
    e.normalize_embeddings = true;
    return e;
  }();
  int attention_heads = 4;
  /// 0 picks ceil(encoder output / heads).
  int attention_head_dim = 0;
  bool attention_residual = false;
  TagScheme scheme = TagScheme::Raw;
  bool pair_existence = true;
  bool indicator_windows = true;
  int window_length = 5;
  std::vector<std::string> indicator_lexicon = default_indicator_lexicon();
  Decoder decoder = Decoder::Beam;
  int beam_width = 8;

  void validate() const;
};

nlohmann::json to_json(const TaggerConfig& c);
TaggerConfig tagger_config_from_json(const nlohmann::json& j);

/// Stage II: encoder (one BiLSTM layer) -> multi-head attention -> CRF.
class TaggerModel {
 public:
  TaggerModel(TaggerConfig config, Vocabulary vocab, std::shared_ptr<const EmbeddingTable> table,
              std::uint64_t seed);

  const TaggerConfig& config() const { return config_; }
  TaggerConfig& mutable_config() { return config_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const AttentionParams& attention() const { return attention_; }
  AttentionParams& attention() { return attention_; }
  const CrfParams& crf() const { return crf_; }
  CrfParams& crf() { return crf_; }
  int num_labels() const { return oid::num_labels(config_.scheme); }
  nn::ParameterRefs parameters();

  /// Emission scores (m x n) from merged embeddings.
  nn::Var emissions(nn::Graph& graph, nn::Var embedded, Mode mode, Rng* rng,
                    std::vector<nn::Matrix>* attention_weights = nullptr) const;
  /// CRF negative log-likelihood of `labels` given merged embeddings.
  nn::Var nll(nn::Graph& graph, nn::Var embedded, const LabelSeq& labels, Mode mode,
              Rng* rng) const;

  /// Eval-mode CRF scores of an utterance (after truncation).
  CrfScores scores(const Utterance& u, std::vector<nn::Matrix>* attention_weights = nullptr) const;
  AttentionOutput attention_output(const Utterance& u) const;
  ConstraintSet constraints_for(const Utterance& u) const;
  /// Scheme label ids for a gold-tagged utterance, truncated like the input.
  LabelSeq training_labels(const TaggedUtterance& t) const;

  nn::ModelBundle to_bundle(const nlohmann::json& embeddings = {}) const;
  static TaggerModel from_bundle(const nn::ModelBundle& bundle,
                                 std::shared_ptr<const EmbeddingTable> table);

 private:
  TaggerConfig config_;
  Encoder encoder_;
  AttentionParams attention_;
  CrfParams crf_;
};

/// Builds an untrained tagger whose vocabulary covers every corpus given.
TaggerModel make_tagger(const TaggerConfig& config,
                        const std::vector<const std::vector<TaggedUtterance>*>& corpora,
                        std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed);

/// eta = epsilon * g / ||g|| over the whole matrix; zero when g is zero.
nn::Matrix adversarial_perturbation(const nn::Matrix& g, double epsilon);

struct LossBreakdown {
  double clean = 0.0;
  double adversarial = 0.0;
  double combined = 0.0;
};

/// Mixed clean/adversarial loss of one example. Both passes draw dropout
/// from identically seeded generators. The perturbation is a constant of the
/// second pass; `fixed_eta` overrides it. Gradients of the combined loss are
/// added to `grads` when given.
LossBreakdown example_loss(const TaggerModel& model, const TaggedUtterance& example,
                           const AdversarialConfig& adv, Mode mode, std::uint64_t seed,
                           nn::Gradients* grads = nullptr, const nn::Matrix* fixed_eta = nullptr);

/// Mean of `example_loss` over a batch (eval mode, no dropout).
double combined_loss(const std::vector<TaggedUtterance>& batch, const TaggerModel& model,
                     const AdversarialConfig& adv);

/// Trains on proxy tags. Throws ArgumentError on an empty corpus. The
/// checkpoint is written after the last epoch when a path is given.
std::vector<EpochRecord> pretrain(TaggerModel& model, const std::vector<TaggedUtterance>& proxy,
                                  const TrainConfig& config, const AdversarialConfig& adv = {},
                                  const std::optional<std::filesystem::path>& checkpoint = {});

/// Trains on intent-labelled data with a fresh optimizer. When `dev` is
/// given, each epoch record carries the dev ACTION tag F1.
std::vector<EpochRecord> fine_tune(TaggerModel& model, const std::vector<TaggedUtterance>& labeled,
                                   const TrainConfig& config, const AdversarialConfig& adv = {},
                                   const std::vector<TaggedUtterance>* dev = nullptr);

struct TagResult {
  TaggedUtterance tagged;
  LabelSeq labels;
  bool fallback = false;
  bool windows_dropped = false;
};

TagResult tag_detailed(const TaggerModel& model, const Utterance& u, Decoder decoder);
TaggedUtterance tag(const TaggerModel& model, const Utterance& u, Decoder decoder);
/// Uses the model's configured decoder.
TaggedUtterance tag(const TaggerModel& model, const Utterance& u);

}  // namespace oid
