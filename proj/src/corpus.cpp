#include "oid/corpus.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "oid/error.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

using nlohmann::json;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

Utterance utterance_from_tokens(const std::vector<std::string>& tokens, std::string id) {
  Utterance u;
  u.id = std::move(id);
  for (const auto& t : tokens) {
    if (!u.text.empty()) u.text += ' ';
    const std::size_t start = u.text.size();
    u.text += t;
    u.tokens.push_back(t);
    u.char_offsets.push_back({start, u.text.size()});
  }
  return u;
}

using TagMapper = std::optional<TagLabel> (*)(std::string_view);

std::optional<TagLabel> proxy_tag(std::string_view tag) {
  std::string upper(tag);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "VERB") return TagLabel::Action;
  if (upper == "OBJ") return TagLabel::Object;
  if (upper == "ACTION" || upper == "OBJECT" || upper == "NONE") return parse_tag_label(upper);
  return std::nullopt;
}

std::vector<TaggedUtterance> read_column(std::istream& in, const std::string& source,
                                         TagMapper map_tag) {
  std::vector<TaggedUtterance> corpus;
  std::vector<std::string> tokens;
  std::vector<TagLabel> tags;
  std::string id, domain;
  auto flush = [&]() {
    if (tokens.empty()) {
      id.clear();
      domain.clear();
      return;
    }
    TaggedUtterance t;
    t.utterance = utterance_from_tokens(
        tokens, id.empty() ? "u" + std::to_string(corpus.size() + 1) : id);
    t.tags = tags;
    t.domain = domain;
    corpus.push_back(std::move(t));
    tokens.clear();
    tags.clear();
    id.clear();
    domain.clear();
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        const auto key = trim(line.substr(1, eq - 1));
        const auto value = trim(line.substr(eq + 1));
        if (key == "id") id = value;
        else if (key == "domain") domain = value;
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError("expected token<TAB>tag in " + source, line_no);
    const auto token = line.substr(0, tab);
    const auto tag_text = trim(line.substr(tab + 1));
    const auto tag = map_tag(tag_text);
    if (!tag) throw FormatError("unknown tag '" + tag_text + "' in " + source, line_no);
    tokens.push_back(token);
    tags.push_back(*tag);
  }
  flush();
  return corpus;
}

Span span_from_json(const json& j, const Utterance& u, TagLabel label, std::size_t record,
                    std::size_t line_no) {
  if (!j.is_array() || j.size() != 2)
    throw FormatError("record " + std::to_string(record) + ": span must be [start, end]",
                      line_no);
  const auto s = j[0].get<long long>();
  const auto e = j[1].get<long long>();
  if (s < 0 || e <= s || static_cast<std::size_t>(e) > u.size())
    throw FormatError("record " + std::to_string(record) + ": span out of range", line_no);
  return make_span(u, static_cast<std::size_t>(s), static_cast<std::size_t>(e), label);
}

std::vector<TaggedUtterance> read_jsonl(std::istream& in, const std::string& source) {
  std::vector<TaggedUtterance> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    const std::size_t record = corpus.size() + 1;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("record " + std::to_string(record) + " in " + source +
                            ": invalid JSON: " + e.what(),
                        line_no);
    }
    try {
      TaggedUtterance t;
      const std::string id =
          j.contains("id") ? j["id"].get<std::string>() : "u" + std::to_string(record);
      t.utterance = tokenize(j.at("text").get<std::string>(), id);
      if (j.contains("domain")) t.domain = j["domain"].get<std::string>();
      const auto& tags = j.at("tags");
      if (tags.size() != t.utterance.size())
        throw FormatError("record " + std::to_string(record) + " in " + source + ": " +
                              std::to_string(t.utterance.size()) + " tokens but " +
                              std::to_string(tags.size()) + " tags",
                          line_no);
      for (const auto& tag_json : tags) {
        const auto text = tag_json.get<std::string>();
        const auto tag = parse_tag_label(text);
        if (!tag)
          throw FormatError("record " + std::to_string(record) + " in " + source +
                                ": unknown tag '" + text + "'",
                            line_no);
        t.tags.push_back(*tag);
      }
      if (j.contains("intents")) {
        std::vector<Intent> intents;
        for (const auto& ij : j["intents"]) {
          Intent intent;
          intent.action = span_from_json(ij.at("action"), t.utterance, TagLabel::Action,
                                         record, line_no);
          intent.object = span_from_json(ij.at("object"), t.utterance, TagLabel::Object,
                                         record, line_no);
          intent.source = IntentSource::Gold;
          intents.push_back(std::move(intent));
        }
        t.gold_intents = std::move(intents);
      }
      corpus.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw FormatError("record " + std::to_string(record) + " in " + source + ": " + e.what(),
                        line_no);
    }
  }
  return corpus;
}

}  // namespace

std::vector<TaggedUtterance> read_tagged_corpus(std::istream& in, CorpusFormat format,
                                                const std::string& source) {
  if (format == CorpusFormat::Column) return read_column(in, source, &parse_tag_label);
  return read_jsonl(in, source);
}

std::vector<TaggedUtterance> read_tagged_corpus(const std::filesystem::path& path,
                                                CorpusFormat format) {
  auto in = open_in(path);
  return read_tagged_corpus(in, format, path.string());
}

void write_tagged_corpus(const std::vector<TaggedUtterance>& corpus, std::ostream& out,
                         CorpusFormat format) {
  for (const auto& t : corpus) {
    if (format == CorpusFormat::Column) {
      out << "# id = " << t.utterance.id << '\n';
      if (!t.domain.empty()) out << "# domain = " << t.domain << '\n';
      for (std::size_t i = 0; i < t.tags.size(); ++i)
        out << t.utterance.tokens[i] << '\t' << to_string(t.tags[i]) << '\n';
      out << '\n';
      continue;
    }
    json j;
    j["id"] = t.utterance.id;
    j["text"] = t.utterance.text;
    auto tags = json::array();
    for (auto tag : t.tags) tags.push_back(std::string(to_string(tag)));
    j["tags"] = tags;
    if (!t.domain.empty()) j["domain"] = t.domain;
    if (t.gold_intents) {
      auto intents = json::array();
      for (const auto& i : *t.gold_intents)
        intents.push_back({{"action", {i.action.start, i.action.end}},
                           {"object", {i.object.start, i.object.end}}});
      j["intents"] = intents;
    }
    out << j.dump() << '\n';
  }
}

void write_tagged_corpus(const std::vector<TaggedUtterance>& corpus,
                         const std::filesystem::path& path, CorpusFormat format) {
  auto out = open_out(path);
  write_tagged_corpus(corpus, out, format);
}

std::vector<TaggedUtterance> read_proxy_tag_corpus(std::istream& in, const std::string& source) {
  return read_column(in, source, &proxy_tag);
}

std::vector<TaggedUtterance> read_proxy_tag_corpus(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_proxy_tag_corpus(in, path.string());
}

std::vector<ExistenceExample> read_existence_corpus(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<ExistenceExample> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      ExistenceExample ex;
      const std::string id =
          j.contains("id") ? j["id"].get<std::string>() : "u" + std::to_string(line_no);
      ex.utterance = tokenize(j.at("text").get<std::string>(), id);
      ex.has_intent = j.at("has_intent").get<bool>();
      if (j.contains("domain")) ex.domain = j["domain"].get<std::string>();
      corpus.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw FormatError("bad existence record in " + path.string() + ": " + e.what(), line_no);
    }
  }
  return corpus;
}

void write_existence_corpus(const std::vector<ExistenceExample>& corpus,
                            const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& ex : corpus) {
    json j{{"id", ex.utterance.id}, {"text", ex.utterance.text}, {"has_intent", ex.has_intent}};
    if (!ex.domain.empty()) j["domain"] = ex.domain;
    out << j.dump() << '\n';
  }
}

std::vector<Utterance> read_utterances(std::istream& in) {
  std::vector<Utterance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '{') {
      try {
        const auto j = json::parse(t);
        const std::string id =
            j.contains("id") ? j["id"].get<std::string>() : std::to_string(line_no);
        out.push_back(tokenize(j.at("text").get<std::string>(), id));
      } catch (const json::exception& e) {
        throw FormatError(std::string("bad input record: ") + e.what(), line_no);
      }
    } else {
      out.push_back(tokenize(t, std::to_string(line_no)));
    }
  }
  return out;
}

TaggedUtterance rule_based_proxy_tagger(const Utterance& utterance, const Lexicon& verbs,
                                        const Lexicon& nouns) {
  TaggedUtterance t;
  t.utterance = utterance;
  t.tags.reserve(utterance.size());
  for (const auto& token : utterance.tokens) {
    const auto key = lowercase(token);
    if (verbs.count(key)) t.tags.push_back(TagLabel::Action);
    else if (nouns.count(key)) t.tags.push_back(TagLabel::Object);
    else t.tags.push_back(TagLabel::None);
  }
  return t;
}

std::vector<ExistenceExample> to_existence(const std::vector<TaggedUtterance>& corpus) {
  std::vector<ExistenceExample> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) {
    bool positive = false;
    if (t.gold_intents) {
      positive = !t.gold_intents->empty();
    } else {
      for (auto tag : t.tags) positive = positive || tag == TagLabel::Action;
    }
    out.push_back({t.utterance, positive, t.domain});
  }
  return out;
}

}  // namespace oid
