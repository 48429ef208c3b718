#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oid/assembly.hpp"
#include "oid/config.hpp"
#include "oid/existence.hpp"
#include "oid/tagger.hpp"

namespace oid {

struct Prediction {
  std::string id;
  double p_intent = 1.0;
  bool has_intent = true;
  TaggedUtterance tagged;
  std::vector<Intent> intents;
  bool decoder_fallback = false;
};

/// Turns tags into intents with the chosen pairing method.
std::vector<Intent> assemble_intents(const TaggedUtterance& tagged, Pairing pairing,
                                     const MatcherModel* matcher, const EmbeddingTable& table);

/// Stage I gate, Stage II tagging and intent assembly.
class Pipeline {
 public:
  /// Without an existence model every utterance goes to Stage II with
  /// p_intent = 1.
  Pipeline(std::shared_ptr<const EmbeddingTable> table, std::shared_ptr<const ExistenceModel> existence,
           std::shared_ptr<const TaggerModel> tagger, std::shared_ptr<const MatcherModel> matcher,
           Pairing pairing, Decoder decoder);

  Prediction predict(const Utterance& u) const;
  /// Order-preserving parallel map over utterances.
  std::vector<Prediction> predict_all(const std::vector<Utterance>& utterances,
                                      unsigned threads = 0) const;

  const TaggerModel& tagger() const { return *tagger_; }
  const ExistenceModel* existence() const { return existence_.get(); }
  const EmbeddingTable& table() const { return *table_; }
  Pairing pairing() const { return pairing_; }
  Decoder decoder() const { return decoder_; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::shared_ptr<const ExistenceModel> existence_;
  std::shared_ptr<const TaggerModel> tagger_;
  std::shared_ptr<const MatcherModel> matcher_;
  Pairing pairing_;
  Decoder decoder_;
};

nlohmann::json to_json(const Intent& in);
/// {"id","p_intent","label","tags","intents":[...]}
nlohmann::json to_json(const Prediction& p);
void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions);

/// Case-folded "action object" phrases of a predictions JSONL stream.
/// Throws FormatError with the line number on malformed records.
std::vector<std::string> read_prediction_phrases(std::istream& in);

struct FrequencyRow {
  std::string intent;
  std::size_t count = 0;
  double relative = 0.0;
};

/// Counts phrases, most frequent first (ties alphabetical).
std::vector<FrequencyRow> aggregate_intents(const std::vector<std::string>& phrases);
void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows);
void write_frequency_bars(std::ostream& out, const std::vector<FrequencyRow>& rows, int width = 40);

}  // namespace oid
