#include "oid/encoder.hpp"

#include <atomic>

#include "oid/error.hpp"
#include "oid/json_config.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

std::atomic<std::size_t> g_truncated{0};

nn::Parameter glorot(std::string name, nn::Index rows, nn::Index cols, Rng& rng) {
  auto p = nn::make_parameter(std::move(name), rows, cols);
  nn::init_glorot(p, rng);
  return p;
}

LstmDirection make_direction(const std::string& name, int in, int hidden, Rng& rng) {
  LstmDirection d{glorot(name + ".w_input", 4 * hidden, in, rng),
                  glorot(name + ".w_hidden", 4 * hidden, hidden, rng),
                  nn::make_parameter(name + ".bias", 4 * hidden, 1)};
  d.bias.value.middleRows(hidden, hidden).setOnes();  // forget gate
  return d;
}

}  // namespace

void EncoderConfig::validate() const {
  if (char_dim <= 0 || char_filters <= 0 || char_filter_width <= 0 || word_dim <= 0 ||
      lstm_hidden <= 0)
    throw ArgumentError("encoder dimensions must be positive");
  if (lstm_layers < 1 || lstm_layers > 2) throw ArgumentError("lstm_layers must be 1 or 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ArgumentError("dropout_rate must lie in [0, 1)");
  if (max_tokens < 1) throw ArgumentError("max_tokens must be positive");
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"char_dim", c.char_dim},
          {"char_filters", c.char_filters},
          {"char_filter_width", c.char_filter_width},
          {"word_dim", c.word_dim},
          {"lstm_hidden", c.lstm_hidden},
          {"lstm_layers", c.lstm_layers},
          {"dropout_rate", c.dropout_rate},
          {"normalize_embeddings", c.normalize_embeddings},
          {"finetune_word_vectors", c.finetune_word_vectors},
          {"max_tokens", c.max_tokens}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  ConfigReader r(j, "encoder");
  r.get("char_dim", c.char_dim);
  r.get("char_filters", c.char_filters);
  r.get("char_filter_width", c.char_filter_width);
  r.get("word_dim", c.word_dim);
  r.get("lstm_hidden", c.lstm_hidden);
  r.get("lstm_layers", c.lstm_layers);
  r.get("dropout_rate", c.dropout_rate);
  r.get("normalize_embeddings", c.normalize_embeddings);
  r.get("finetune_word_vectors", c.finetune_word_vectors);
  r.get("max_tokens", c.max_tokens);
  r.finish();
  c.validate();
  return c;
}

Eigen::VectorXd highway_merge(const Eigen::VectorXd& char_vec, const Eigen::VectorXd& word_vec,
                              const HighwayParams& p) {
  const auto d = char_vec.size() + word_vec.size();
  if (p.transform_weight.value.rows() != d || p.transform_weight.value.cols() != d ||
      p.gate_weight.value.rows() != d || p.gate_weight.value.cols() != d ||
      p.transform_bias.value.rows() != d || p.gate_bias.value.rows() != d)
    throw ArgumentError("highway_merge: parameters do not match input dimension " +
                        std::to_string(d));
  nn::Graph g;
  Eigen::VectorXd x(d);
  x << char_vec, word_vec;
  auto xv = g.constant(x);
  auto r = nn::sigmoid(nn::affine(g.param(p.gate_weight), xv, g.param(p.gate_bias)));
  auto t = nn::tanh(nn::affine(g.param(p.transform_weight), xv, g.param(p.transform_bias)));
  auto e = nn::add(nn::cwise_mul(r, t), nn::cwise_mul(nn::one_minus(r), xv));
  return e.value().col(0);
}

Encoder::Encoder(EncoderConfig config, Vocabulary vocab,
                 std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed,
                 std::string prefix)
    : config_(config), vocab_(std::move(vocab)), prefix_(std::move(prefix)) {
  config_.validate();
  set_table(std::move(table));
  Rng rng(seed);
  const int d = config_.merged_dim();
  char_embeddings_ = nn::make_parameter(prefix_ + "char_embeddings", config_.char_dim,
                                        vocab_.chars.size());
  nn::init_uniform(char_embeddings_, rng, std::sqrt(3.0 / config_.char_dim));
  conv_kernel_ = glorot(prefix_ + "conv.kernel", config_.char_filters,
                        config_.char_dim * config_.char_filter_width, rng);
  conv_bias_ = nn::make_parameter(prefix_ + "conv.bias", config_.char_filters, 1);
  highway_.transform_weight = glorot(prefix_ + "highway.transform_weight", d, d, rng);
  highway_.transform_bias = nn::make_parameter(prefix_ + "highway.transform_bias", d, 1);
  highway_.gate_weight = glorot(prefix_ + "highway.gate_weight", d, d, rng);
  highway_.gate_bias = nn::make_parameter(prefix_ + "highway.gate_bias", d, 1);
  highway_.gate_bias.value.setConstant(-1.0);
  if (config_.finetune_word_vectors)
    word_delta_ = nn::make_parameter(prefix_ + "word_delta", config_.word_dim, vocab_.words.size());
  int in = d;
  for (int l = 0; l < config_.lstm_layers; ++l) {
    const std::string name = prefix_ + "lstm" + std::to_string(l);
    layers_.push_back({make_direction(name + ".fwd", in, config_.lstm_hidden, rng),
                       make_direction(name + ".bwd", in, config_.lstm_hidden, rng)});
    in = config_.output_dim();
  }
}

void Encoder::set_table(std::shared_ptr<const EmbeddingTable> table) {
  if (!table) throw ArgumentError("encoder needs an embedding table");
  if (table->dimension() != config_.word_dim)
    throw ArgumentError("embedding dimension " + std::to_string(table->dimension()) +
                        " does not match encoder word_dim " + std::to_string(config_.word_dim));
  table_ = std::move(table);
}

nn::ParameterRefs Encoder::parameters() {
  nn::ParameterRefs out{&char_embeddings_, &conv_kernel_, &conv_bias_,
                        &highway_.transform_weight, &highway_.transform_bias,
                        &highway_.gate_weight, &highway_.gate_bias};
  if (config_.finetune_word_vectors) out.push_back(&word_delta_);
  for (auto& layer : layers_) {
    for (auto* dir : {&layer.forward, &layer.backward}) {
      out.push_back(&dir->w_input);
      out.push_back(&dir->w_hidden);
      out.push_back(&dir->bias);
    }
  }
  return out;
}

std::size_t Encoder::effective_length(const Utterance& u) const {
  return std::min(u.size(), static_cast<std::size_t>(config_.max_tokens));
}

nn::Var Encoder::char_features(nn::Graph& graph, const std::vector<std::string>& tokens) const {
  std::vector<std::vector<int>> seqs;
  std::vector<nn::Index> lengths;
  for (const auto& t : tokens) {
    auto ids = vocab_.char_ids(t);
    if (ids.empty()) ids.push_back(SymbolTable::kUnk);
    lengths.push_back(static_cast<nn::Index>(ids.size()));
    seqs.push_back(std::move(ids));
  }
  auto table = graph.param(char_embeddings_);
  if (config_.normalize_embeddings) table = nn::normalize_cols(table);
  auto windows = nn::conv_windows(table, seqs, config_.char_filter_width, SymbolTable::kPad);
  auto conv = nn::affine(graph.param(conv_kernel_), windows, graph.param(conv_bias_));
  return nn::segment_max_cols(conv, lengths);
}

nn::Var Encoder::embed(nn::Graph& graph, const Utterance& u, Mode mode, Rng* rng) const {
  const std::size_t n = effective_length(u);
  if (n == 0) throw ArgumentError("cannot embed an empty utterance");
  if (u.size() > n) g_truncated += u.size() - n;
  std::vector<std::string> tokens(u.tokens.begin(), u.tokens.begin() + static_cast<std::ptrdiff_t>(n));

  auto chars = char_features(graph, tokens);
  if (mode == Mode::Train && rng) chars = nn::dropout(chars, config_.dropout_rate, *rng);

  nn::Matrix words(config_.word_dim, static_cast<nn::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v = table_->lookup(lowercase(tokens[i]));
    if (config_.normalize_embeddings) v = normalized(v);
    words.col(static_cast<nn::Index>(i)) = v;
  }
  auto word_var = graph.constant(std::move(words));
  if (config_.finetune_word_vectors) {
    std::vector<int> ids;
    for (const auto& t : tokens) ids.push_back(vocab_.words.id(lowercase(t)));
    word_var = nn::add(word_var, nn::gather_cols(graph.param(word_delta_), ids));
  }
  auto merged_in = nn::concat_rows({chars, word_var});
  auto r = nn::sigmoid(nn::affine(graph.param(highway_.gate_weight), merged_in,
                                  graph.param(highway_.gate_bias)));
  auto t = nn::tanh(nn::affine(graph.param(highway_.transform_weight), merged_in,
                               graph.param(highway_.transform_bias)));
  return nn::add(nn::cwise_mul(r, t), nn::cwise_mul(nn::one_minus(r), merged_in));
}

nn::Var Encoder::contextualize(nn::Graph& graph, nn::Var x, Mode mode, Rng* rng) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    auto fwd = nn::lstm(x, graph.param(layer.forward.w_input), graph.param(layer.forward.w_hidden),
                        graph.param(layer.forward.bias), false);
    auto bwd = nn::lstm(x, graph.param(layer.backward.w_input),
                        graph.param(layer.backward.w_hidden), graph.param(layer.backward.bias),
                        true);
    x = nn::concat_rows({fwd, bwd});
    if (l + 1 < layers_.size() && mode == Mode::Train && rng)
      x = nn::dropout(x, config_.dropout_rate, *rng);
  }
  return x;
}

Eigen::VectorXd Encoder::char_encode(std::string_view token) const {
  if (token.empty()) throw ArgumentError("char_encode: empty token");
  nn::Graph g;
  return char_features(g, {std::string(token)}).value().col(0);
}

HiddenSequence Encoder::encode_sequence(const Utterance& u, Mode mode, Rng* rng) const {
  if (effective_length(u) == 0) return HiddenSequence(config_.output_dim(), 0);
  nn::Graph g;
  return contextualize(g, embed(g, u, mode, rng), mode, rng).value();
}

std::size_t Encoder::truncation_count() { return g_truncated.load(); }

Eigen::MatrixXd normalize_embeddings(const Eigen::MatrixXd& vectors) {
  Eigen::MatrixXd out = vectors;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (norm > 0.0) out.col(c) /= norm;
  }
  return out;
}

EmbeddingTable normalize_embeddings(const EmbeddingTable& table) {
  EmbeddingTable copy = table;
  copy.normalize();
  return copy;
}

nlohmann::json to_json(const Vocabulary& vocab) {
  // Reserved ids 0/1 are implied.
  auto tail = [](const SymbolTable& t) {
    return std::vector<std::string>(t.symbols().begin() + 2, t.symbols().end());
  };
  return {{"words", tail(vocab.words)}, {"chars", tail(vocab.chars)}};
}

Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  Vocabulary v;
  for (const auto& w : j.at("words")) v.words.add(w.get<std::string>());
  for (const auto& c : j.at("chars")) v.chars.add(c.get<std::string>());
  return v;
}

}  // namespace oid
