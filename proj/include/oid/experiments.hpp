#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "oid/config.hpp"
#include "oid/corpus.hpp"
#include "oid/metrics.hpp"
#include "oid/pipeline.hpp"

namespace oid {

struct EvalReport {
  std::size_t utterances = 0;
  PrfResult existence;
  PrfResult action_tags;
  PrfResult object_tags;
  PrfResult intents;
  SimilarityResult similarity;
};

nlohmann::json to_json(const PrfResult& r);
nlohmann::json to_json(const EvalReport& r);

/// Scores a pipeline on gold-tagged utterances. Gold existence is "has at
/// least one gold intent".
EvalReport evaluate(const Pipeline& pipeline, const std::vector<TaggedUtterance>& test,
                    IntentMatch mode = IntentMatch::Surface);

struct DomainReport {
  std::string domain;
  EvalReport report;
};

/// One row per non-empty test domain (sorted), then an "all" row.
std::vector<DomainReport> evaluate_by_domain(const Pipeline& pipeline,
                                             const std::vector<TaggedUtterance>& test,
                                             IntentMatch mode = IntentMatch::Surface);
/// domain,utterances,precision,recall,f1,similarity (intent-level scores).
void write_evaluation_csv(std::ostream& out, const std::vector<DomainReport>& rows);

/// Utterances carrying at least one gold intent (or, lacking intents, an
/// ACTION tag).
std::vector<TaggedUtterance> positives(const std::vector<TaggedUtterance>& corpus);

/// Proxy tags from the lexicon tagger, for pre-training.
std::vector<TaggedUtterance> proxy_corpus(const std::vector<Utterance>& utterances,
                                          const Lexicon& verbs, const Lexicon& nouns);

struct TrainedModels {
  std::shared_ptr<const ExistenceModel> existence;
  std::shared_ptr<const TaggerModel> tagger;
  std::shared_ptr<const MatcherModel> matcher;

  Pipeline pipeline(const RunConfig& config, std::shared_ptr<const EmbeddingTable> table) const;
};

/// Stage II (and the matcher when MLP pairing is configured) on the positive
/// part of `labeled`; pre-trains on `proxy` first when given and enabled.
TrainedModels train_stage_two(const RunConfig& config, const std::vector<TaggedUtterance>& labeled,
                              std::shared_ptr<const EmbeddingTable> table,
                              const std::vector<TaggedUtterance>* proxy = nullptr);
/// Both stages. Stage I uses every utterance of `labeled`.
TrainedModels train_pipeline(const RunConfig& config, const std::vector<TaggedUtterance>& labeled,
                             std::shared_ptr<const EmbeddingTable> table,
                             const std::vector<TaggedUtterance>* proxy = nullptr);

struct SweepRow {
  std::size_t size = 0;
  PrfResult intents;
  SimilarityResult similarity;
  PrfResult action_tags;
};

/// Fresh Stage II model per size, trained on the first `size` positives of
/// one fixed shuffle of `train`; every row is scored on the positives of
/// `test`. Throws ArgumentError when a size exceeds the positives available
/// or sizes are not ascending.
std::vector<SweepRow> training_size_sweep(const RunConfig& config,
                                          const std::vector<TaggedUtterance>& train,
                                          const std::vector<TaggedUtterance>& test,
                                          const std::vector<std::size_t>& sizes,
                                          std::shared_ptr<const EmbeddingTable> table);

struct DomainResult {
  std::string domain;
  /// Trained without any data from `domain`.
  EvalReport held_out;
  /// Trained with the domain's training split added.
  EvalReport plus;
  std::size_t test_size = 0;
};

/// Splits the domain's positives into test and train parts
/// (experiments.domain_test_fraction goes to test) and trains Stage II twice.
DomainResult leave_one_domain_out(const RunConfig& config,
                                  const std::vector<TaggedUtterance>& corpus,
                                  const std::string& domain,
                                  std::shared_ptr<const EmbeddingTable> table);

/// Per-domain rows: domain,intent_f1,intent_f1_plus,similarity,similarity_plus.
void write_domain_csv(std::ostream& out, const std::vector<DomainResult>& rows);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace oid
