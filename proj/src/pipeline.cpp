#include "oid/pipeline.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "oid/error.hpp"
#include "oid/tokenizer.hpp"
#include "oid/training.hpp"

namespace oid {

std::vector<Intent> assemble_intents(const TaggedUtterance& tagged, Pairing pairing,
                                     const MatcherModel* matcher, const EmbeddingTable& table) {
  if (tagged.utterance.empty()) return {};
  auto spans = extract_spans(tagged.tags, tagged.utterance);
  if (pairing == Pairing::Mlp) {
    if (!matcher) throw ModelError("MLP pairing needs a trained matcher");
    return pair_by_mlp(spans.actions, spans.objects, tagged.utterance, table, *matcher);
  }
  return pair_by_distance(std::move(spans.actions), std::move(spans.objects));
}

Pipeline::Pipeline(std::shared_ptr<const EmbeddingTable> table,
                   std::shared_ptr<const ExistenceModel> existence,
                   std::shared_ptr<const TaggerModel> tagger,
                   std::shared_ptr<const MatcherModel> matcher, Pairing pairing, Decoder decoder)
    : table_(std::move(table)),
      existence_(std::move(existence)),
      tagger_(std::move(tagger)),
      matcher_(std::move(matcher)),
      pairing_(pairing),
      decoder_(decoder) {
  if (!table_ || !tagger_) throw ModelError("pipeline needs embeddings and a tagger");
  if (pairing_ == Pairing::Mlp && !matcher_) throw ModelError("MLP pairing needs a trained matcher");
}

Prediction Pipeline::predict(const Utterance& u) const {
  Prediction p;
  p.id = u.id;
  p.tagged.utterance = u;
  p.tagged.tags.assign(u.size(), TagLabel::None);
  if (u.empty()) {
    p.p_intent = 0.0;
    p.has_intent = false;
    return p;
  }
  if (existence_) {
    p.p_intent = existence_->probability(u);
    p.has_intent = p.p_intent >= existence_->config().threshold;
  }
  if (!p.has_intent) return p;
  auto r = tag_detailed(*tagger_, u, decoder_);
  p.decoder_fallback = r.fallback;
  p.tagged = std::move(r.tagged);
  p.intents = assemble_intents(p.tagged, pairing_, matcher_.get(), *table_);
  return p;
}

std::vector<Prediction> Pipeline::predict_all(const std::vector<Utterance>& utterances,
                                              unsigned threads) const {
  std::vector<Prediction> out(utterances.size());
  parallel_for(utterances.size(), [&](std::size_t i) { out[i] = predict(utterances[i]); }, threads);
  return out;
}

nlohmann::json to_json(const Intent& in) {
  return {{"action", in.action.surface},
          {"object", in.object.surface},
          {"action_span", {in.action.start, in.action.end}},
          {"object_span", {in.object.start, in.object.end}},
          {"score", in.score},
          {"source", to_string(in.source)}};
}

nlohmann::json to_json(const Prediction& p) {
  nlohmann::json intents = nlohmann::json::array();
  for (const auto& in : p.intents) intents.push_back(to_json(in));
  std::vector<std::string> tags;
  for (auto t : p.tagged.tags) tags.emplace_back(to_string(t));
  return {{"id", p.id},
          {"p_intent", p.p_intent},
          {"label", p.has_intent},
          {"tags", tags},
          {"intents", intents}};
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
  for (const auto& p : predictions) out << to_json(p).dump() << '\n';
}

std::vector<std::string> read_prediction_phrases(std::istream& in) {
  std::vector<std::string> phrases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw FormatError("prediction record must be a JSON object", line_no);
      if (!j.contains("intents")) continue;
      for (const auto& in : j.at("intents"))
        phrases.push_back(lowercase(in.at("action").get<std::string>() + " " +
                                    in.at("object").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed prediction record: ") + e.what(), line_no);
    }
  }
  return phrases;
}

std::vector<FrequencyRow> aggregate_intents(const std::vector<std::string>& phrases) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : phrases) ++counts[lowercase(p)];
  std::vector<FrequencyRow> rows;
  for (const auto& [intent, count] : counts)
    rows.push_back({intent, count, static_cast<double>(count) / static_cast<double>(phrases.size())});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FrequencyRow& a, const FrequencyRow& b) { return a.count > b.count; });
  return rows;
}

void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows) {
  out << "intent,count,relative_frequency\n";
  for (const auto& r : rows) {
    const bool quote = r.intent.find_first_of(",\"") != std::string::npos;
    std::string field = r.intent;
    if (quote) {
      std::string q = "\"";
      for (char c : field) {
        if (c == '"') q += '"';
        q += c;
      }
      field = q + "\"";
    }
    out << field << ',' << r.count << ',' << r.relative << '\n';
  }
}

void write_frequency_bars(std::ostream& out, const std::vector<FrequencyRow>& rows, int width) {
  if (rows.empty()) return;
  std::size_t label_width = 0;
  for (const auto& r : rows) label_width = std::max(label_width, r.intent.size());
  const double top = rows.front().relative;
  for (const auto& r : rows) {
    const int len = top > 0 ? static_cast<int>(r.relative / top * width + 0.5) : 0;
    out << r.intent << std::string(label_width - r.intent.size() + 1, ' ') << '|'
        << std::string(static_cast<std::size_t>(std::max(len, 1)), '#') << ' ' << r.count << '\n';
  }
}

}  // namespace oid
