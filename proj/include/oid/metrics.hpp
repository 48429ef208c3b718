#pragma once

#include <cstddef>
#include <vector>

#include "oid/embeddings.hpp"
#include "oid/types.hpp"

namespace oid {

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// P = tp/predicted and R = tp/gold, each 0 when its denominator is 0.
PrfResult make_prf(std::size_t true_positives, std::size_t predicted, std::size_t gold);

/// Token-level scores for `label` over aligned sequences.
PrfResult tag_prf(const std::vector<TagLabel>& pred, const std::vector<TagLabel>& gold,
                  TagLabel label);
PrfResult tag_prf(const std::vector<std::vector<TagLabel>>& pred,
                  const std::vector<std::vector<TagLabel>>& gold, TagLabel label);

enum class IntentMatch { ExactSpan, Surface };

/// One utterance. Predictions are matched to golds greedily in descending
/// score order, each gold used at most once.
PrfResult intent_prf(const std::vector<Intent>& pred, const std::vector<Intent>& gold,
                     IntentMatch mode = IntentMatch::Surface);
/// Corpus level: counts pooled over aligned per-utterance lists.
PrfResult intent_prf(const std::vector<std::vector<Intent>>& pred,
                     const std::vector<std::vector<Intent>>& gold,
                     IntentMatch mode = IntentMatch::Surface);

struct SimilarityResult {
  double mean_cosine = 0.0;
  /// Words without a stored vector.
  std::size_t skipped_words = 0;
  /// Intent phrases with no embeddable word at all.
  std::size_t skipped_intents = 0;
  std::size_t gold_count = 0;
};

/// Averages stored vectors of the phrase words; OOV words are skipped and
/// counted. Returns false when nothing was embeddable.
bool phrase_vector(const std::string& phrase, const EmbeddingTable& table, Eigen::VectorXd& out,
                   std::size_t* skipped = nullptr);

/// Mean over gold intents of the cosine to the prediction assigned by
/// greedy best-cosine matching (each prediction used once, unmatched gold
/// counts 0). With no gold at all the score is 1 if there are also no
/// predictions, else 0.
SimilarityResult semantic_similarity(const std::vector<Intent>& pred,
                                     const std::vector<Intent>& gold, const EmbeddingTable& table);
/// Corpus level: matching stays within each utterance, the mean runs over
/// every gold intent of the corpus.
SimilarityResult semantic_similarity(const std::vector<std::vector<Intent>>& pred,
                                     const std::vector<std::vector<Intent>>& gold,
                                     const EmbeddingTable& table);

}  // namespace oid
