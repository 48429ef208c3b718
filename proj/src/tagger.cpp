#include "oid/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "oid/error.hpp"
#include "oid/json_config.hpp"
#include "oid/log.hpp"
#include "oid/metrics.hpp"

namespace oid {
namespace {

std::string_view scheme_name(TagScheme s) { return s == TagScheme::Bio ? "bio" : "raw"; }

TagScheme parse_scheme(const std::string& s) {
  if (s == "raw") return TagScheme::Raw;
  if (s == "bio") return TagScheme::Bio;
  throw ArgumentError("unknown tag scheme '" + s + "' (expected raw or bio)");
}

std::vector<Span> gold_spans(const TaggedUtterance& t) {
  std::vector<Span> spans;
  if (!t.gold_intents) return spans;
  for (const auto& in : *t.gold_intents) {
    for (const auto* s : {&in.action, &in.object})
      if (std::find(spans.begin(), spans.end(), *s) == spans.end()) spans.push_back(*s);
  }
  return spans;
}

std::vector<EpochRecord> train_tagger(TaggerModel& model, const std::vector<TaggedUtterance>& data,
                                      const TrainConfig& config, const AdversarialConfig& adv,
                                      const std::vector<TaggedUtterance>* dev, const char* phase) {
  std::vector<const TaggedUtterance*> usable;
  for (const auto& t : data) {
    validate(t);
    if (!t.utterance.empty()) usable.push_back(&t);
  }
  nn::Adam adam(model.parameters());
  auto after = [&](EpochRecord& rec) {
    if (dev && !dev->empty()) {
      std::vector<std::vector<TagLabel>> pred, gold;
      for (const auto& t : *dev) {
        pred.push_back(tag(model, t.utterance).tags);
        gold.push_back(t.tags);
      }
      rec.dev_score = tag_prf(pred, gold, TagLabel::Action).f1;
    }
    log_info(std::string(phase) + " epoch " + std::to_string(rec.epoch + 1) + " loss " +
             std::to_string(rec.loss) +
             (std::isnan(rec.dev_score) ? "" : " dev ACTION F1 " + std::to_string(rec.dev_score)));
  };
  return run_training(
      adam, usable.size(), config,
      [&](std::size_t i, Rng& rng, nn::Gradients& grads) {
        return example_loss(model, *usable[i], adv, Mode::Train, rng.next(), &grads).combined;
      },
      after);
}

}  // namespace

const std::vector<std::string>& default_indicator_lexicon() {
  static const std::vector<std::string> lexicon = {
      "plan to",   "want to",   "would like to",      "how can i", "possible to",
      "want to be able to",     "i want to",          "how do i",  "need to",
      "trying to"};
  return lexicon;
}

void AdversarialConfig::validate() const {
  if (enabled && !(epsilon > 0.0)) throw ArgumentError("adversarial epsilon must be positive");
  if (alpha < 0.0 || alpha > 1.0) throw ArgumentError("adversarial alpha must lie in [0, 1]");
}

nlohmann::json to_json(const AdversarialConfig& c) {
  return {{"enabled", c.enabled}, {"epsilon", c.epsilon}, {"alpha", c.alpha},
          {"in_pretraining", c.in_pretraining}};
}

AdversarialConfig adversarial_config_from_json(const nlohmann::json& j) {
  AdversarialConfig c;
  ConfigReader r(j, "adversarial");
  r.get("enabled", c.enabled);
  r.get("epsilon", c.epsilon);
  r.get("alpha", c.alpha);
  r.get("in_pretraining", c.in_pretraining);
  r.finish();
  c.validate();
  return c;
}

std::string_view to_string(Decoder d) {
  switch (d) {
    case Decoder::Viterbi: return "viterbi";
    case Decoder::Beam: return "beam";
    case Decoder::Ilp: return "ilp";
  }
  return "?";
}

std::optional<Decoder> parse_decoder(std::string_view text) {
  if (text == "viterbi") return Decoder::Viterbi;
  if (text == "beam") return Decoder::Beam;
  if (text == "ilp") return Decoder::Ilp;
  return std::nullopt;
}

void TaggerConfig::validate() const {
  encoder.validate();
  if (attention_heads < 1) throw ArgumentError("attention_heads must be positive");
  if (attention_head_dim < 0) throw ArgumentError("attention_head_dim must be non-negative");
  if (window_length < 1) throw ArgumentError("window_length must be positive");
  if (beam_width < 1) throw ArgumentError("beam_width must be positive");
}

nlohmann::json to_json(const TaggerConfig& c) {
  return {{"encoder", to_json(c.encoder)},
          {"attention_heads", c.attention_heads},
          {"attention_head_dim", c.attention_head_dim},
          {"attention_residual", c.attention_residual},
          {"scheme", scheme_name(c.scheme)},
          {"pair_existence", c.pair_existence},
          {"indicator_windows", c.indicator_windows},
          {"window_length", c.window_length},
          {"indicator_lexicon", c.indicator_lexicon},
          {"decoder", to_string(c.decoder)},
          {"beam_width", c.beam_width}};
}

TaggerConfig tagger_config_from_json(const nlohmann::json& j) {
  TaggerConfig c;
  ConfigReader r(j, "tagger");
  if (const auto* enc = r.child("encoder")) {
    // Stage II defaults differ from the plain encoder defaults.
    nlohmann::json merged = to_json(c.encoder);
    if (!enc->is_object()) throw ArgumentError("tagger.encoder: expected a JSON object");
    merged.update(*enc);
    c.encoder = encoder_config_from_json(merged);
  }
  r.get("attention_heads", c.attention_heads);
  r.get("attention_head_dim", c.attention_head_dim);
  r.get("attention_residual", c.attention_residual);
  std::string scheme(scheme_name(c.scheme));
  r.get("scheme", scheme);
  c.scheme = parse_scheme(scheme);
  r.get("pair_existence", c.pair_existence);
  r.get("indicator_windows", c.indicator_windows);
  r.get("window_length", c.window_length);
  r.get("indicator_lexicon", c.indicator_lexicon);
  std::string decoder(to_string(c.decoder));
  r.get("decoder", decoder);
  auto d = parse_decoder(decoder);
  if (!d) throw ArgumentError("unknown decoder '" + decoder + "' (expected viterbi, beam or ilp)");
  c.decoder = *d;
  r.get("beam_width", c.beam_width);
  r.finish();
  c.validate();
  return c;
}

TaggerModel::TaggerModel(TaggerConfig config, Vocabulary vocab,
                         std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed)
    : config_(std::move(config)),
      encoder_(config_.encoder, std::move(vocab), std::move(table), seed, "encoder.") {
  config_.validate();
  Rng rng(Rng::mix(seed, 0xa77e));
  attention_ = make_attention_params(config_.encoder.output_dim(), config_.attention_heads, rng,
                                     config_.attention_head_dim, config_.attention_residual);
  crf_ = make_crf_params(attention_.output_dim(), num_labels(), rng);
}

nn::ParameterRefs TaggerModel::parameters() {
  auto out = encoder_.parameters();
  for (auto* p : attention_.refs()) out.push_back(p);
  for (auto* p : crf_.refs()) out.push_back(p);
  return out;
}

nn::Var TaggerModel::emissions(nn::Graph& graph, nn::Var embedded, Mode mode, Rng* rng,
                               std::vector<nn::Matrix>* attention_weights) const {
  auto h = encoder_.contextualize(graph, embedded, mode, rng);
  auto z = attend(graph, h, attention_, attention_weights);
  return nn::affine(graph.param(crf_.weight), z, graph.param(crf_.bias));
}

nn::Var TaggerModel::nll(nn::Graph& graph, nn::Var embedded, const LabelSeq& labels, Mode mode,
                         Rng* rng) const {
  auto e = emissions(graph, embedded, mode, rng);
  return crf_nll(e, graph.param(crf_.transitions), graph.param(crf_.start), graph.param(crf_.stop),
                 labels);
}

CrfScores TaggerModel::scores(const Utterance& u, std::vector<nn::Matrix>* attention_weights) const {
  nn::Graph g;
  auto e = emissions(g, encoder_.embed(g, u, Mode::Eval, nullptr), Mode::Eval, nullptr,
                     attention_weights);
  return CrfScores{e.value(), crf_.transitions.value, crf_.start.value.col(0),
                   crf_.stop.value.col(0)};
}

AttentionOutput TaggerModel::attention_output(const Utterance& u) const {
  if (u.empty()) throw ArgumentError("attention needs at least one token");
  nn::Graph g;
  auto h = encoder_.contextualize(g, encoder_.embed(g, u, Mode::Eval, nullptr), Mode::Eval, nullptr);
  AttentionOutput out;
  out.z = attend(g, h, attention_, &out.weights).value();
  return out;
}

ConstraintSet TaggerModel::constraints_for(const Utterance& u) const {
  ConstraintSet c;
  c.pair_existence = config_.pair_existence;
  if (config_.indicator_windows)
    c.indicator_windows = find_indicator_windows(u, config_.indicator_lexicon, config_.window_length);
  return c;
}

LabelSeq TaggerModel::training_labels(const TaggedUtterance& t) const {
  const auto spans = gold_spans(t);
  auto ids = encode_labels(config_.scheme, t.tags, spans.empty() ? nullptr : &spans);
  ids.resize(encoder_.effective_length(t.utterance));
  return ids;
}

nn::ModelBundle TaggerModel::to_bundle(const nlohmann::json& embeddings) const {
  nn::ModelBundle b;
  b.kind = "tagger";
  b.config = {{"model", to_json(config_)},
              {"vocabulary", to_json(encoder_.vocabulary())},
              {"embeddings", embeddings}};
  b.put(const_cast<TaggerModel*>(this)->parameters());
  return b;
}

TaggerModel TaggerModel::from_bundle(const nn::ModelBundle& bundle,
                                     std::shared_ptr<const EmbeddingTable> table) {
  if (bundle.kind != "tagger") throw ModelError("expected a tagger bundle, got '" + bundle.kind + "'");
  try {
    TaggerModel m(tagger_config_from_json(bundle.config.at("model")),
                  vocabulary_from_json(bundle.config.at("vocabulary")), std::move(table), 0);
    bundle.get(m.parameters());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("corrupt tagger bundle: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ModelError(std::string("incompatible tagger bundle: ") + e.what());
  }
}

TaggerModel make_tagger(const TaggerConfig& config,
                        const std::vector<const std::vector<TaggedUtterance>*>& corpora,
                        std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed) {
  std::vector<const Utterance*> utts;
  for (const auto* c : corpora)
    for (const auto& t : *c) utts.push_back(&t.utterance);
  return TaggerModel(config, build_vocabulary(utts), std::move(table), seed);
}

nn::Matrix adversarial_perturbation(const nn::Matrix& g, double epsilon) {
  const double norm = g.norm();
  if (norm == 0.0 || !std::isfinite(norm)) return nn::Matrix::Zero(g.rows(), g.cols());
  return (epsilon / norm) * g;
}

LossBreakdown example_loss(const TaggerModel& model, const TaggedUtterance& example,
                           const AdversarialConfig& adv, Mode mode, std::uint64_t seed,
                           nn::Gradients* grads, const nn::Matrix* fixed_eta) {
  adv.validate();
  const auto labels = model.training_labels(example);
  LossBreakdown out;
  Rng rng(seed);
  nn::Graph clean;
  auto e = model.encoder().embed(clean, example.utterance, mode, &rng);
  auto loss = model.nll(clean, e, labels, mode, &rng);
  out.clean = loss.scalar();
  const bool mix = adv.enabled && adv.alpha < 1.0;
  if (!mix) {
    out.adversarial = out.combined = out.clean;
    if (grads) {
      clean.backward(loss);
      clean.collect(*grads);
    }
    return out;
  }
  nn::Matrix eta;
  if (fixed_eta) {
    eta = *fixed_eta;
    if (grads) {
      clean.backward(loss);
      clean.collect(*grads, adv.alpha);
    }
  } else {
    clean.backward(loss);
    if (grads) clean.collect(*grads, adv.alpha);
    eta = adversarial_perturbation(clean.grad(e), adv.epsilon);
  }

  rng.reseed(seed);
  nn::Graph perturbed;
  auto e_adv = nn::add(model.encoder().embed(perturbed, example.utterance, mode, &rng),
                       perturbed.constant(eta));
  auto adv_loss = model.nll(perturbed, e_adv, labels, mode, &rng);
  out.adversarial = adv_loss.scalar();
  if (grads) {
    perturbed.backward(adv_loss);
    perturbed.collect(*grads, 1.0 - adv.alpha);
  }
  out.combined = adv.alpha * out.clean + (1.0 - adv.alpha) * out.adversarial;
  return out;
}

double combined_loss(const std::vector<TaggedUtterance>& batch, const TaggerModel& model,
                     const AdversarialConfig& adv) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& t : batch) {
    if (t.utterance.empty()) continue;
    total += example_loss(model, t, adv, Mode::Eval, 0).combined;
    ++n;
  }
  if (n == 0) throw ArgumentError("combined_loss needs a non-empty batch");
  return total / static_cast<double>(n);
}

std::vector<EpochRecord> pretrain(TaggerModel& model, const std::vector<TaggedUtterance>& proxy,
                                  const TrainConfig& config, const AdversarialConfig& adv,
                                  const std::optional<std::filesystem::path>& checkpoint) {
  if (proxy.empty()) throw ArgumentError("pre-training corpus is empty");
  AdversarialConfig a = adv;
  a.enabled = adv.enabled && adv.in_pretraining;
  auto history = train_tagger(model, proxy, config, a, nullptr, "pretrain");
  if (checkpoint) nn::save_bundle(model.to_bundle(), *checkpoint);
  return history;
}

std::vector<EpochRecord> fine_tune(TaggerModel& model, const std::vector<TaggedUtterance>& labeled,
                                   const TrainConfig& config, const AdversarialConfig& adv,
                                   const std::vector<TaggedUtterance>* dev) {
  return train_tagger(model, labeled, config, adv, dev, "fine-tune");
}

TagResult tag_detailed(const TaggerModel& model, const Utterance& u, Decoder decoder) {
  TagResult r;
  r.tagged.utterance = u;
  if (u.empty()) return r;
  const auto s = model.scores(u);
  const auto scheme = model.config().scheme;
  switch (decoder) {
    case Decoder::Viterbi:
      r.labels = viterbi(s);
      break;
    case Decoder::Beam: {
      auto d = beam_decode_constrained(s, model.constraints_for(u), model.config().beam_width, scheme);
      r.labels = std::move(d.labels);
      r.fallback = d.fallback;
      r.windows_dropped = d.windows_dropped;
      break;
    }
    case Decoder::Ilp: {
      auto d = ilp_decode_constrained(s, model.constraints_for(u), scheme);
      r.labels = std::move(d.labels);
      r.windows_dropped = d.windows_dropped;
      break;
    }
  }
  r.tagged.tags = decode_labels(scheme, r.labels);
  r.tagged.tags.resize(u.size(), TagLabel::None);
  return r;
}

TaggedUtterance tag(const TaggerModel& model, const Utterance& u, Decoder decoder) {
  return tag_detailed(model, u, decoder).tagged;
}

TaggedUtterance tag(const TaggerModel& model, const Utterance& u) {
  return tag(model, u, model.config().decoder);
}

}  // namespace oid
