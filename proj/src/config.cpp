#include "oid/config.hpp"

#include <cstdlib>
#include <fstream>

#include "oid/error.hpp"
#include "oid/json_config.hpp"
#include "oid/synthetic.hpp"

namespace oid {
namespace {

std::string policy_name(UnkPolicy p) { return p == UnkPolicy::Zero ? "zero" : "hashed"; }

UnkPolicy parse_policy(const std::string& s) {
  if (s == "zero") return UnkPolicy::Zero;
  if (s == "hashed") return UnkPolicy::HashedRandom;
  throw ArgumentError("unknown unk_policy '" + s + "' (expected zero or hashed)");
}

std::string pairing_name(Pairing p) { return p == Pairing::Mlp ? "mlp" : "w-dist"; }

std::string match_name(IntentMatch m) { return m == IntentMatch::ExactSpan ? "exact_span" : "surface"; }

}  // namespace

nlohmann::json to_json(const EmbeddingSource& e) {
  return {{"path", e.path}, {"unk_policy", policy_name(e.unk_policy)}, {"dimension", e.dimension},
          {"seed", e.seed}};
}

EmbeddingSource embedding_source_from_json(const nlohmann::json& j) {
  EmbeddingSource e;
  ConfigReader r(j, "embeddings");
  r.get("path", e.path);
  std::string policy = policy_name(e.unk_policy);
  r.get("unk_policy", policy);
  e.unk_policy = parse_policy(policy);
  r.get("dimension", e.dimension);
  r.get("seed", e.seed);
  r.finish();
  if (e.dimension < 1) throw ArgumentError("embeddings.dimension must be positive");
  return e;
}

std::shared_ptr<const EmbeddingTable> load_embedding_source(const EmbeddingSource& e) {
  if (e.path.empty()) {
    auto table = synthetic_embeddings(default_synthetic_domains(), e.dimension, e.seed);
    table.set_unk_policy(e.unk_policy);
    return std::make_shared<const EmbeddingTable>(std::move(table));
  }
  return std::make_shared<const EmbeddingTable>(load_embeddings(e.path, e.unk_policy));
}

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  existence_train.seed = Rng::mix(s, 1);
  pretrain_train.seed = Rng::mix(s, 2);
  tagger_train.seed = Rng::mix(s, 3);
  matcher.train.seed = Rng::mix(s, 4);
}

void RunConfig::validate() const {
  existence_train.validate();
  pretrain_train.validate();
  tagger_train.validate();
  matcher.train.validate();
  tagger.validate();
  existence.encoder.validate();
  adversarial.validate();
  if (existence.encoder.word_dim != tagger.encoder.word_dim)
    throw ArgumentError("existence and tagger encoders must share word_dim");
  if (experiments.domain_test_fraction <= 0.0 || experiments.domain_test_fraction >= 1.0)
    throw ArgumentError("experiments.domain_test_fraction must lie in (0, 1)");
  if (!std::is_sorted(experiments.sweep_sizes.begin(), experiments.sweep_sizes.end()))
    throw ArgumentError("experiments.sweep_sizes must be ascending");
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"embeddings", to_json(c.embeddings)},
          {"existence", to_json(c.existence)},
          {"existence_train", to_json(c.existence_train)},
          {"tagger", to_json(c.tagger)},
          {"pretrain_train", to_json(c.pretrain_train)},
          {"tagger_train", to_json(c.tagger_train)},
          {"adversarial", to_json(c.adversarial)},
          {"proxy_pretraining", c.proxy_pretraining},
          {"pairing", pairing_name(c.pairing)},
          {"matcher", to_json(c.matcher)},
          {"experiments",
           {{"match_mode", match_name(c.experiments.match_mode)},
            {"sweep_sizes", c.experiments.sweep_sizes},
            {"domain_test_fraction", c.experiments.domain_test_fraction}}},
          {"synth",
           {{"train_count", c.synth.train_count},
            {"test_count", c.synth.test_count},
            {"positive_ratio", c.synth.positive_ratio},
            {"seed", c.synth.seed}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.apply_seed(c.seed);
  ConfigReader r(j, "config");
  std::uint64_t seed = c.seed;
  r.get("seed", seed);
  c.apply_seed(seed);
  if (const auto* e = r.child("embeddings")) c.embeddings = embedding_source_from_json(*e);
  if (const auto* e = r.child("existence")) c.existence = existence_config_from_json(*e);
  if (const auto* t = r.child("existence_train"))
    c.existence_train = train_config_from_json(*t, c.existence_train);
  if (const auto* t = r.child("tagger")) c.tagger = tagger_config_from_json(*t);
  if (const auto* t = r.child("pretrain_train"))
    c.pretrain_train = train_config_from_json(*t, c.pretrain_train);
  if (const auto* t = r.child("tagger_train"))
    c.tagger_train = train_config_from_json(*t, c.tagger_train);
  if (const auto* a = r.child("adversarial")) c.adversarial = adversarial_config_from_json(*a);
  r.get("proxy_pretraining", c.proxy_pretraining);
  std::string pairing = pairing_name(c.pairing);
  r.get("pairing", pairing);
  if (pairing == "w-dist") c.pairing = Pairing::WordDistance;
  else if (pairing == "mlp") c.pairing = Pairing::Mlp;
  else throw ArgumentError("unknown pairing '" + pairing + "' (expected w-dist or mlp)");
  if (const auto* m = r.child("matcher")) {
    const auto seed_before = c.matcher.train.seed;
    c.matcher = matcher_config_from_json(*m);
    if (!m->contains("train") || !m->at("train").contains("seed")) c.matcher.train.seed = seed_before;
  }
  if (const auto* x = r.child("experiments")) {
    ConfigReader xr(*x, "experiments");
    std::string mode = match_name(c.experiments.match_mode);
    xr.get("match_mode", mode);
    if (mode == "surface") c.experiments.match_mode = IntentMatch::Surface;
    else if (mode == "exact_span") c.experiments.match_mode = IntentMatch::ExactSpan;
    else throw ArgumentError("unknown match_mode '" + mode + "' (expected surface or exact_span)");
    xr.get("sweep_sizes", c.experiments.sweep_sizes);
    xr.get("domain_test_fraction", c.experiments.domain_test_fraction);
    xr.finish();
  }
  if (const auto* s = r.child("synth")) {
    ConfigReader sr(*s, "synth");
    sr.get("train_count", c.synth.train_count);
    sr.get("test_count", c.synth.test_count);
    sr.get("positive_ratio", c.synth.positive_ratio);
    sr.get("seed", c.synth.seed);
    sr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
  return run_config_from_json(j);
}

RunConfig resolve_run_config(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load_run_config(*explicit_path);
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_run_config(env);
  RunConfig c;
  c.apply_seed(c.seed);
  return c;
}

}  // namespace oid
