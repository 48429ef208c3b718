#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oid {

/// Per-token label. The enumerator order is also the decoding tie-break order.
enum class TagLabel : int { Action = 0, Object = 1, None = 2 };

inline constexpr int kNumBaseLabels = 3;

std::string_view to_string(TagLabel label);
/// Case-insensitive ACTION/OBJECT/NONE.
std::optional<TagLabel> parse_tag_label(std::string_view text);

struct CharOffset {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const CharOffset&) const = default;
};

struct Utterance {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<CharOffset> char_offsets;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

/// Checks the offset/token invariants; throws ArgumentError on violation.
void validate(const Utterance& utterance);

/// Half-open token range carrying one label.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  TagLabel label = TagLabel::None;
  std::string surface;

  std::size_t length() const { return end - start; }
  bool operator==(const Span&) const = default;
};

enum class IntentSource { WordDistance, Mlp, Gold };

std::string_view to_string(IntentSource source);

struct Intent {
  Span action;
  Span object;
  double score = 1.0;
  IntentSource source = IntentSource::Gold;

  /// "action object", the rendering used for aggregation and similarity.
  std::string phrase() const { return action.surface + " " + object.surface; }
};

/// Builds a span over `[start, end)` of `utterance`, joining the surface
/// tokens with single spaces.
Span make_span(const Utterance& utterance, std::size_t start, std::size_t end,
               TagLabel label);

struct TaggedUtterance {
  Utterance utterance;
  std::vector<TagLabel> tags;
  std::optional<std::vector<Intent>> gold_intents;
  /// Optional grouping used by the leave-one-domain-out harness.
  std::string domain;
};

void validate(const TaggedUtterance& tagged);

struct ExistenceExample {
  Utterance utterance;
  bool has_intent = false;
  std::string domain;
};

/// Label inventory used by the CRF. Raw is the three-label scheme; Bio splits
/// every base label into a begin and inside variant so adjacent spans of the
/// same label stay separable.
enum class TagScheme { Raw, Bio };

int num_labels(TagScheme scheme);
TagLabel base_label(TagScheme scheme, int label_id);
bool is_begin(TagScheme scheme, int label_id);
int label_id(TagScheme scheme, TagLabel base, bool begin);
std::string label_name(TagScheme scheme, int label_id);

/// Converts base tags to scheme label ids. In Bio mode, boundaries come from
/// `spans` when given (gold intent spans), otherwise from maximal runs.
std::vector<int> encode_labels(TagScheme scheme, const std::vector<TagLabel>& tags,
                               const std::vector<Span>* spans = nullptr);
std::vector<TagLabel> decode_labels(TagScheme scheme, const std::vector<int>& ids);

}  // namespace oid
