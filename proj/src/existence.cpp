#include "oid/existence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "oid/error.hpp"
#include "oid/json_config.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

bool is_punct_token(const std::string& t) {
  return std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::ispunct(c); });
}

const Lexicon& wh_words() {
  static const Lexicon words = {"what", "when", "where", "which", "who",
                                "whom", "whose", "why",  "how"};
  return words;
}

}  // namespace

nlohmann::json to_json(const ExistenceConfig& c) {
  return {{"encoder", to_json(c.encoder)}, {"threshold", c.threshold}};
}

ExistenceConfig existence_config_from_json(const nlohmann::json& j) {
  ExistenceConfig c;
  ConfigReader r(j, "existence");
  if (const auto* enc = r.child("encoder")) c.encoder = encoder_config_from_json(*enc);
  r.get("threshold", c.threshold);
  r.finish();
  if (c.threshold < 0.0 || c.threshold > 1.0) throw ArgumentError("threshold must lie in [0, 1]");
  return c;
}

ExistenceModel::ExistenceModel(ExistenceConfig config, Vocabulary vocab,
                               std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed)
    : config_(config),
      encoder_(config.encoder, std::move(vocab), std::move(table), seed, "encoder."),
      output_weight_(nn::make_parameter("output.weight", 1, config.encoder.output_dim())),
      output_bias_(nn::make_parameter("output.bias", 1, 1)) {
  Rng rng(Rng::mix(seed, 0x07));
  nn::init_glorot(output_weight_, rng);
}

nn::ParameterRefs ExistenceModel::parameters() {
  auto out = encoder_.parameters();
  out.push_back(&output_weight_);
  out.push_back(&output_bias_);
  return out;
}

nn::Var ExistenceModel::logit(nn::Graph& graph, const Utterance& u, Mode mode, Rng* rng) const {
  auto h = encoder_.contextualize(graph, encoder_.embed(graph, u, mode, rng), mode, rng);
  auto pooled = nn::max_cols(h);
  if (mode == Mode::Train && rng) pooled = nn::dropout(pooled, config_.encoder.dropout_rate, *rng);
  return nn::affine(graph.param(output_weight_), pooled, graph.param(output_bias_));
}

double ExistenceModel::probability(const Utterance& u) const {
  if (u.empty()) return 0.0;
  nn::Graph g;
  return sigmoid(logit(g, u, Mode::Eval, nullptr).scalar());
}

nn::ModelBundle ExistenceModel::to_bundle(const nlohmann::json& embeddings) const {
  nn::ModelBundle b;
  b.kind = "existence";
  b.config = {{"model", to_json(config_)},
              {"vocabulary", to_json(encoder_.vocabulary())},
              {"embeddings", embeddings}};
  b.put(const_cast<ExistenceModel*>(this)->parameters());
  return b;
}

ExistenceModel ExistenceModel::from_bundle(const nn::ModelBundle& bundle,
                                           std::shared_ptr<const EmbeddingTable> table) {
  if (bundle.kind != "existence")
    throw ModelError("expected an existence bundle, got '" + bundle.kind + "'");
  try {
    ExistenceModel m(existence_config_from_json(bundle.config.at("model")),
                     vocabulary_from_json(bundle.config.at("vocabulary")), std::move(table), 0);
    bundle.get(m.parameters());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("corrupt existence bundle: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ModelError(std::string("incompatible existence bundle: ") + e.what());
  }
}

double predict_existence(const ExistenceModel& model, const Utterance& u) {
  return model.probability(u);
}

std::vector<EpochRecord> train_existence(ExistenceModel& model,
                                         const std::vector<ExistenceExample>& corpus,
                                         const TrainConfig& config) {
  const auto positives = std::count_if(corpus.begin(), corpus.end(),
                                       [](const ExistenceExample& e) { return e.has_intent; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(corpus.size()))
    throw TrainingError("existence corpus must contain both positive and negative examples");
  std::vector<const ExistenceExample*> usable;
  for (const auto& e : corpus)
    if (!e.utterance.empty()) usable.push_back(&e);
  nn::Adam adam(model.parameters());
  return run_training(adam, usable.size(), config,
                      [&](std::size_t i, Rng& rng, nn::Gradients& grads) {
                        nn::Graph g;
                        const auto& ex = *usable[i];
                        auto loss = nn::bce_with_logits(
                            model.logit(g, ex.utterance, Mode::Train, &rng),
                            ex.has_intent ? 1.0 : 0.0);
                        g.backward(loss);
                        g.collect(grads);
                        return loss.scalar();
                      });
}

ExistenceModel train_existence(const std::vector<ExistenceExample>& corpus,
                               std::shared_ptr<const EmbeddingTable> table,
                               const ExistenceConfig& model_config, const TrainConfig& config,
                               std::vector<EpochRecord>* history) {
  std::vector<const Utterance*> utts;
  for (const auto& e : corpus) utts.push_back(&e.utterance);
  ExistenceModel model(model_config, build_vocabulary(utts), std::move(table), config.seed);
  auto h = train_existence(model, corpus, config);
  if (history) *history = std::move(h);
  return model;
}

Eigen::VectorXd HandFeatureVector::to_vector() const {
  Eigen::VectorXd v(kSize);
  v << noun_count, verb_count, ends_in_noun, ends_in_adjective, begins_with_verb,
      begins_with_modal, wh_count, question_marks, has_personal_pronoun,
      first_person_near_infinitive, has_indicator;
  return v;
}

HandFeatureVector extract_hand_features(const Utterance& u, const PosLexicon& pos,
                                        const std::vector<std::string>& indicator_lexicon) {
  HandFeatureVector f;
  std::vector<std::string> words;
  for (const auto& t : u.tokens) words.push_back(lowercase(t));
  if (words.empty()) return f;
  for (const auto& w : words) {
    f.noun_count += pos.nouns.count(w) > 0;
    f.verb_count += pos.verbs.count(w) > 0;
    f.wh_count += wh_words().count(w) > 0;
    f.question_marks += w == "?";
    f.has_personal_pronoun = f.has_personal_pronoun || pos.personal_pronouns.count(w) > 0;
  }
  auto last = std::find_if(words.rbegin(), words.rend(),
                           [](const std::string& w) { return !is_punct_token(w); });
  if (last != words.rend()) {
    f.ends_in_noun = pos.nouns.count(*last) > 0;
    f.ends_in_adjective = pos.adjectives.count(*last) > 0;
  }
  f.begins_with_verb = pos.verbs.count(words.front()) > 0;
  f.begins_with_modal = pos.modals.count(words.front()) > 0;
  const auto n = static_cast<int>(words.size());
  for (int k = 0; k + 1 < n && !f.first_person_near_infinitive; ++k) {
    if (words[static_cast<std::size_t>(k)] != "to" ||
        !pos.verbs.count(words[static_cast<std::size_t>(k) + 1]))
      continue;
    for (int j = std::max(0, k - 3); j <= std::min(n - 1, k + 3); ++j)
      if (pos.first_person.count(words[static_cast<std::size_t>(j)])) f.first_person_near_infinitive = true;
  }
  for (const auto& phrase : indicator_lexicon) {
    const auto p = tokenize(lowercase(phrase)).tokens;
    if (p.empty() || p.size() > words.size()) continue;
    for (std::size_t i = 0; i + p.size() <= words.size() && !f.has_indicator; ++i)
      f.has_indicator = std::equal(p.begin(), p.end(), words.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return f;
}

double HandFeatureBaseline::probability(const HandFeatureVector& f) const {
  const Eigen::VectorXd x = (f.to_vector() - mean).cwiseQuotient(scale);
  return sigmoid(weights.dot(x) + bias);
}

HandFeatureBaseline train_hand_feature_baseline(const std::vector<HandFeatureVector>& features,
                                                const std::vector<bool>& labels, int iterations,
                                                double learning_rate, double l2) {
  if (features.empty() || features.size() != labels.size())
    throw ArgumentError("hand-feature baseline needs one label per feature vector");
  const auto n = static_cast<Eigen::Index>(features.size());
  Eigen::MatrixXd x(HandFeatureVector::kSize, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = features[static_cast<std::size_t>(i)].to_vector();
    y(i) = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  HandFeatureBaseline b;
  b.mean = x.rowwise().mean();
  x.colwise() -= b.mean;
  b.scale = (x.array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index k = 0; k < b.scale.size(); ++k)
    if (b.scale(k) == 0.0) b.scale(k) = 1.0;
  x.array().colwise() /= b.scale.array();
  b.weights = Eigen::VectorXd::Zero(HandFeatureVector::kSize);
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd p = (x.transpose() * b.weights).array() + b.bias;
    for (Eigen::Index i = 0; i < n; ++i) p(i) = sigmoid(p(i)) - y(i);
    b.weights -= learning_rate * (x * p / static_cast<double>(n) + l2 * b.weights);
    b.bias -= learning_rate * p.mean();
  }
  return b;
}

}  // namespace oid
