#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oid/embeddings.hpp"
#include "oid/nn/graph.hpp"
#include "oid/types.hpp"
#include "oid/vocabulary.hpp"

namespace oid {

enum class Mode { Train, Eval };

struct EncoderConfig {
  int char_dim = 25;
  int char_filters = 50;
  int char_filter_width = 3;
  /// Must equal the embedding table dimension.
  int word_dim = 300;
  int lstm_hidden = 400;
  int lstm_layers = 2;
  double dropout_rate = 0.5;
  /// Unit-normalise word and character embeddings before the highway layer.
  bool normalize_embeddings = false;
  /// Learn additive per-word corrections on top of the frozen vectors.
  bool finetune_word_vectors = false;
  int max_tokens = 256;

  int merged_dim() const { return char_filters + word_dim; }
  int output_dim() const { return 2 * lstm_hidden; }
  void validate() const;
};

nlohmann::json to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

struct HighwayParams {
  nn::Parameter transform_weight;  // W_H
  nn::Parameter transform_bias;    // b_H
  nn::Parameter gate_weight;       // W_R
  nn::Parameter gate_bias;         // b_R
};

/// r = sigmoid(W_R x + b_R); out = r * tanh(W_H x + b_H) + (1 - r) * x, with
/// x = concat(char_vec, word_vec). Throws ArgumentError on shape mismatch.
Eigen::VectorXd highway_merge(const Eigen::VectorXd& char_vec, const Eigen::VectorXd& word_vec,
                              const HighwayParams& params);

struct LstmDirection {
  nn::Parameter w_input;
  nn::Parameter w_hidden;
  nn::Parameter bias;
};

struct BiLstmLayer {
  LstmDirection forward;
  LstmDirection backward;
};

/// Per-token contextual states, (2 * lstm_hidden) x n.
using HiddenSequence = Eigen::MatrixXd;

/// Character CNN + word vectors -> highway merge -> stacked BiLSTM.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncoderConfig config, Vocabulary vocab, std::shared_ptr<const EmbeddingTable> table,
          std::uint64_t seed, std::string prefix = "encoder.");

  const EncoderConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const std::shared_ptr<const EmbeddingTable>& table() const { return table_; }
  void set_table(std::shared_ptr<const EmbeddingTable> table);

  nn::ParameterRefs parameters();
  HighwayParams& highway() { return highway_; }
  const HighwayParams& highway() const { return highway_; }
  std::vector<BiLstmLayer>& layers() { return layers_; }
  nn::Parameter& conv_kernel() { return conv_kernel_; }
  nn::Parameter& conv_bias() { return conv_bias_; }

  /// Tokens kept after truncation to max_tokens.
  std::size_t effective_length(const Utterance& u) const;

  /// Merged embeddings e (merged_dim x n) on `graph`. Dropout on the char-CNN
  /// output is drawn from `rng` in Train mode.
  nn::Var embed(nn::Graph& graph, const Utterance& u, Mode mode, Rng* rng) const;
  /// Stacked BiLSTM over merged embeddings; dropout between layers in Train.
  nn::Var contextualize(nn::Graph& graph, nn::Var embedded, Mode mode, Rng* rng) const;

  /// Max-pooled char-CNN features of one token (eval mode).
  Eigen::VectorXd char_encode(std::string_view token) const;
  /// Eval or train-mode forward pass without keeping the graph. Empty
  /// utterances give a 2H x 0 matrix.
  HiddenSequence encode_sequence(const Utterance& u, Mode mode = Mode::Eval,
                                 Rng* rng = nullptr) const;

  /// Total number of tokens dropped by truncation, process-wide.
  static std::size_t truncation_count();

 private:
  nn::Var char_features(nn::Graph& graph, const std::vector<std::string>& tokens) const;

  EncoderConfig config_;
  Vocabulary vocab_;
  std::shared_ptr<const EmbeddingTable> table_;
  std::string prefix_;
  nn::Parameter char_embeddings_;
  nn::Parameter conv_kernel_;
  nn::Parameter conv_bias_;
  nn::Parameter word_delta_;
  HighwayParams highway_;
  std::vector<BiLstmLayer> layers_;
};

/// Unit-L2 scaling of every column, zero columns stay zero.
Eigen::MatrixXd normalize_embeddings(const Eigen::MatrixXd& vectors);
/// Whole-table version; returns a normalised copy.
EmbeddingTable normalize_embeddings(const EmbeddingTable& table);

nlohmann::json to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

}  // namespace oid
