#include "oid/types.hpp"

#include <algorithm>
#include <cctype>

#include "oid/error.hpp"

namespace oid {

std::string_view to_string(TagLabel label) {
  switch (label) {
    case TagLabel::Action: return "ACTION";
    case TagLabel::Object: return "OBJECT";
    case TagLabel::None: return "NONE";
  }
  return "NONE";
}

std::optional<TagLabel> parse_tag_label(std::string_view text) {
  std::string upper(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "ACTION") return TagLabel::Action;
  if (upper == "OBJECT") return TagLabel::Object;
  if (upper == "NONE") return TagLabel::None;
  return std::nullopt;
}

std::string_view to_string(IntentSource source) {
  switch (source) {
    case IntentSource::WordDistance: return "w-dist";
    case IntentSource::Mlp: return "mlp";
    case IntentSource::Gold: return "gold";
  }
  return "gold";
}

void validate(const Utterance& u) {
  if (u.tokens.size() != u.char_offsets.size())
    throw ArgumentError("utterance '" + u.id + "': token/offset count mismatch");
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    const auto& off = u.char_offsets[i];
    if (u.tokens[i].empty())
      throw ArgumentError("utterance '" + u.id + "': empty token");
    if (!(off.start < off.end && off.end <= u.text.size()))
      throw ArgumentError("utterance '" + u.id + "': offset out of range");
    if (u.text.compare(off.start, off.end - off.start, u.tokens[i]) != 0)
      throw ArgumentError("utterance '" + u.id + "': offset does not match token '" +
                          u.tokens[i] + "'");
  }
}

Span make_span(const Utterance& u, std::size_t start, std::size_t end, TagLabel label) {
  if (!(start < end && end <= u.size()))
    throw ArgumentError("span [" + std::to_string(start) + "," + std::to_string(end) +
                        ") outside utterance of length " + std::to_string(u.size()));
  Span span{start, end, label, {}};
  for (std::size_t i = start; i < end; ++i) {
    if (i > start) span.surface += ' ';
    span.surface += u.tokens[i];
  }
  return span;
}

void validate(const TaggedUtterance& t) {
  validate(t.utterance);
  if (t.tags.size() != t.utterance.size())
    throw ArgumentError("utterance '" + t.utterance.id + "': " +
                        std::to_string(t.utterance.size()) + " tokens but " +
                        std::to_string(t.tags.size()) + " tags");
  if (!t.gold_intents) return;
  for (const auto& intent : *t.gold_intents) {
    for (const Span* s : {&intent.action, &intent.object}) {
      if (!(s->start < s->end && s->end <= t.utterance.size()))
        throw ArgumentError("utterance '" + t.utterance.id + "': intent span out of range");
    }
  }
}

int num_labels(TagScheme scheme) { return scheme == TagScheme::Raw ? 3 : 6; }

TagLabel base_label(TagScheme scheme, int id) {
  if (id < 0 || id >= num_labels(scheme)) throw ArgumentError("label id out of range");
  return static_cast<TagLabel>(scheme == TagScheme::Raw ? id : id / 2);
}

bool is_begin(TagScheme scheme, int id) {
  return scheme == TagScheme::Raw ? false : id % 2 == 0;
}

int label_id(TagScheme scheme, TagLabel base, bool begin) {
  const int b = static_cast<int>(base);
  return scheme == TagScheme::Raw ? b : 2 * b + (begin ? 0 : 1);
}

std::string label_name(TagScheme scheme, int id) {
  const std::string base(to_string(base_label(scheme, id)));
  if (scheme == TagScheme::Raw) return base;
  return (is_begin(scheme, id) ? "B-" : "I-") + base;
}

std::vector<int> encode_labels(TagScheme scheme, const std::vector<TagLabel>& tags,
                               const std::vector<Span>* spans) {
  std::vector<int> ids(tags.size());
  if (scheme == TagScheme::Raw) {
    std::transform(tags.begin(), tags.end(), ids.begin(),
                   [](TagLabel t) { return static_cast<int>(t); });
    return ids;
  }
  std::vector<bool> begins(tags.size(), false);
  for (std::size_t i = 0; i < tags.size(); ++i)
    begins[i] = i == 0 || tags[i] != tags[i - 1];
  if (spans) {
    for (const auto& s : *spans)
      if (s.start < tags.size()) begins[s.start] = true;
  }
  for (std::size_t i = 0; i < tags.size(); ++i) ids[i] = label_id(scheme, tags[i], begins[i]);
  return ids;
}

std::vector<TagLabel> decode_labels(TagScheme scheme, const std::vector<int>& ids) {
  std::vector<TagLabel> tags(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) tags[i] = base_label(scheme, ids[i]);
  return tags;
}

}  // namespace oid
