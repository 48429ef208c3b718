#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oid/assembly.hpp"
#include "oid/embeddings.hpp"
#include "oid/existence.hpp"
#include "oid/metrics.hpp"
#include "oid/tagger.hpp"
#include "oid/training.hpp"

namespace oid {

struct EmbeddingSource {
  /// Word-vector text file. Empty means synthetic vectors built from the
  /// default synthetic domains.
  std::string path;
  UnkPolicy unk_policy = UnkPolicy::HashedRandom;
  /// Only used for synthetic vectors.
  int dimension = 300;
  std::uint64_t seed = 11;
};

nlohmann::json to_json(const EmbeddingSource& e);
EmbeddingSource embedding_source_from_json(const nlohmann::json& j);
std::shared_ptr<const EmbeddingTable> load_embedding_source(const EmbeddingSource& e);

enum class Pairing { WordDistance, Mlp };

struct ExperimentSettings {
  IntentMatch match_mode = IntentMatch::Surface;
  std::vector<std::size_t> sweep_sizes = {100, 500, 1000, 2000};
  /// Share of the held-out domain reserved for testing in domain-eval.
  double domain_test_fraction = 0.5;
};

struct SynthSettings {
  std::size_t train_count = 2000;
  std::size_t test_count = 500;
  double positive_ratio = 0.5;
  std::uint64_t seed = 7;
};

/// Every tunable of a run in one document. Unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 13;
  EmbeddingSource embeddings;
  ExistenceConfig existence;
  TrainConfig existence_train;
  TaggerConfig tagger;
  TrainConfig pretrain_train;
  TrainConfig tagger_train;
  AdversarialConfig adversarial;
  bool proxy_pretraining = false;
  Pairing pairing = Pairing::WordDistance;
  MatcherConfig matcher;
  ExperimentSettings experiments;
  SynthSettings synth;

  /// Sets `seed` and derives the per-component training seeds from it.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Name of the environment variable that supplies a config path.
inline constexpr const char* kConfigEnvVar = "OID_CONFIG";
/// `explicit_path` wins, then $OID_CONFIG, then the built-in defaults.
RunConfig resolve_run_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace oid
