#include "oid/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "oid/error.hpp"
#include "oid/rng.hpp"
#include "oid/tokenizer.hpp"

namespace oid {
namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Slot kind and intent index parsed from "{A:2}" style tokens.
struct Slot {
  char kind = 0;
  int index = 0;
};

std::optional<Slot> parse_slot(const std::string& token) {
  if (token.size() < 3 || token.front() != '{' || token.back() != '}') return std::nullopt;
  Slot slot;
  slot.kind = token[1];
  if (token.size() > 3) {
    if (token[2] != ':') return std::nullopt;
    slot.index = std::stoi(token.substr(3, token.size() - 4));
  }
  return slot;
}

bool is_attached_punct(const std::string& token) {
  return token == "." || token == "?" || token == "," || token == "!";
}

const std::vector<std::string>& template_verbs() {
  static const std::vector<std::string> verbs{
      "want", "like", "need", "have", "plan", "trying", "keeps", "failing", "restart",
      "handle", "supported", "added", "happens", "is", "was", "are", "be", "am", "do"};
  return verbs;
}

const std::vector<std::string>& template_nouns() {
  static const std::vector<std::string> nouns{"way", "release", "version", "users", "week",
                                              "administrator", "support"};
  return nouns;
}

const std::vector<std::string>& clock_times() {
  static const std::vector<std::string> times{"10:30", "9:15", "11:45", "8:00", "4:30", "2:20"};
  return times;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

// Samples `k` distinct indices below `n` (k <= n).
std::vector<std::size_t> distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(std::min(n, k));
  return idx;
}

}  // namespace

std::vector<SyntheticDomain> default_synthetic_domains() {
  return {
      {"travel",
       {{"reserve", "reserved"}, {"book", "booked"}, {"cancel", "cancelled"},
        {"request", "requested"}, {"change", "changed"}, {"upgrade", "upgraded"},
        {"confirm", "confirmed"}},
       {"seat", "flight", "ticket", "table", "hotel room", "special meal", "window seat",
        "rental car", "boarding pass"},
       {"trip", "airline", "agent", "weekend", "passport", "flight"}},
      {"software",
       {{"install", "installed"}, {"configure", "configured"}, {"update", "updated"},
        {"uninstall", "uninstalled"}, {"deploy", "deployed"}, {"debug", "debugged"},
        {"compile", "compiled"}},
       {"package", "server", "database", "plugin", "web app", "build script", "docker image",
        "config file"},
       {"laptop", "terminal", "team", "kernel", "proxy"}},
      {"data",
       {{"export", "exported"}, {"import", "imported"}, {"plot", "plotted"},
        {"merge", "merged"}, {"filter", "filtered"}, {"find", "found"}, {"sort", "sorted"}},
       {"csv file", "dataset", "chart", "column", "twitter ids", "spreadsheet",
        "query results", "time series"},
       {"notebook", "analyst", "report", "pipeline", "cluster"}},
      {"office",
       {{"make", "made"}, {"schedule", "scheduled"}, {"manage", "managed"},
        {"synchronize", "synchronized"}, {"send", "sent"}, {"print", "printed"},
        {"share", "shared"}},
       {"appointment", "meeting", "calendar", "sick notes", "absences", "invoice", "document",
        "shared folder"},
       {"haircut", "manager", "office", "printer", "colleague"}},
  };
}

std::vector<std::string> default_positive_templates() {
  return {
      "please {A:1} the {O:1} .",
      "i want to {A:1} the {O:1} .",
      "i would like to {A:1} a {O:1} and {A:2} a {O:2} on my {N} .",
      "how can i {A:1} my {O:1} ?",
      "please {A:1} a {T} sharp {O:1} for a {N} .",
      "i need to {A:1} the {O:1} , {A:2} the {O:2} and {A:3} the {O:3} .",
      "i have a {N} and i want to {A:1} the {O:1} .",
      "is it possible to {A:1} the {O:1} ? my {N} was {P} last week .",
      "we plan to {A:1} {O:1} and {O:1} this week .",
      "i am trying to {A:1} the {O:1} but the {N} keeps failing .",
      "how do i {A:1} the {O:1} after i {P} the {N} ?",
      "can you {A:1} the {O:1} for me ? i also want to {A:2} the {O:2} .",
      "my {N} is slow . how can i {A:1} the {O:1} and {A:2} the {O:2} ?",
      "i want to be able to {A:1} the {O:1} from my {N} .",
  };
}

std::vector<std::string> default_negative_templates() {
  return {
      "the {X} was {P} by the {N} yesterday .",
      "you should {V} the {X} first and then restart the {N} .",
      "the {N} is a common way to handle the {X} .",
      "most users {V} the {X} with the {N} .",
      "the {N} and the {X} are both supported in the latest release .",
      "this happens because the {X} was {P} twice .",
      "{N} support for the {X} was added in version 2.1 .",
      "to {V} the {X} , the {N} must be {P} at {T} .",
      "an administrator usually {P} the {X} for the {N} .",
  };
}

TaggedUtterance expand_template(const std::string& pattern,
                                const std::vector<std::string>& actions,
                                const std::vector<std::vector<std::string>>& objects,
                                const std::vector<std::string>& pasts,
                                const std::vector<std::string>& fillers,
                                const std::vector<std::string>& times) {
  std::vector<std::string> tokens;
  std::vector<TagLabel> tags;
  std::map<int, std::pair<std::size_t, std::size_t>> action_spans;
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> object_spans;
  std::map<int, std::size_t> object_use;
  std::size_t past_use = 0, filler_use = 0, time_use = 0;
  auto take = [](const std::vector<std::string>& pool, std::size_t& use, const char* what) {
    if (pool.empty()) throw ArgumentError(std::string("template needs a ") + what);
    return pool[use++ % pool.size()];
  };
  auto push_words = [&](const std::string& text, TagLabel tag) {
    const std::size_t start = tokens.size();
    for (auto& w : split_words(text)) {
      tokens.push_back(w);
      tags.push_back(tag);
    }
    return std::make_pair(start, tokens.size());
  };
  for (const auto& raw : split_words(pattern)) {
    const auto slot = parse_slot(raw);
    if (!slot) {
      push_words(raw, TagLabel::None);
      continue;
    }
    const auto k = static_cast<std::size_t>(slot->index);
    switch (slot->kind) {
      case 'A':
        if (k < 1 || k > actions.size()) throw ArgumentError("missing action for " + raw);
        action_spans[slot->index] = push_words(actions[k - 1], TagLabel::Action);
        break;
      case 'O': {
        if (k < 1 || k > objects.size()) throw ArgumentError("missing object for " + raw);
        const auto& pool = objects[k - 1];
        auto& use = object_use[slot->index];
        if (use >= pool.size()) throw ArgumentError("not enough objects for " + raw);
        object_spans.emplace_back(slot->index, push_words(pool[use++], TagLabel::Object));
        break;
      }
      case 'P': push_words(take(pasts, past_use, "past verb"), TagLabel::None); break;
      case 'N':
      case 'X':
      case 'V': push_words(take(fillers, filler_use, "filler"), TagLabel::None); break;
      case 'T': push_words(take(times, time_use, "time"), TagLabel::None); break;
      default: throw ArgumentError("unknown slot " + raw);
    }
  }
  // Render: punctuation attaches to the preceding word, first letter upper.
  std::string text;
  for (const auto& t : tokens) {
    if (!text.empty() && !is_attached_punct(t)) text += ' ';
    text += t;
  }
  if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  TaggedUtterance out;
  out.utterance = tokenize(text);
  if (out.utterance.tokens.size() != tokens.size())
    throw ArgumentError("template '" + pattern + "' does not tokenize cleanly");
  out.tags = tags;
  std::vector<Intent> intents;
  for (const auto& [k, ospan] : object_spans) {
    auto it = action_spans.find(k);
    if (it == action_spans.end()) continue;
    Intent intent;
    intent.action = make_span(out.utterance, it->second.first, it->second.second, TagLabel::Action);
    intent.object = make_span(out.utterance, ospan.first, ospan.second, TagLabel::Object);
    intent.source = IntentSource::Gold;
    intents.push_back(std::move(intent));
  }
  std::sort(intents.begin(), intents.end(), [](const Intent& a, const Intent& b) {
    return std::tie(a.action.start, a.object.start) < std::tie(b.action.start, b.object.start);
  });
  out.gold_intents = std::move(intents);
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config) {
  if (config.count < 1) throw ArgumentError("synthetic corpus size must be at least 1");
  if (config.positive_ratio < 0.0 || config.positive_ratio > 1.0)
    throw ArgumentError("positive_ratio must lie in [0, 1]");
  if (config.domains.empty()) throw ArgumentError("no synthetic domains");
  const auto n_pos =
      static_cast<std::size_t>(std::llround(static_cast<double>(config.count) * config.positive_ratio));
  if (n_pos > 0 && config.positive_templates.empty())
    throw ArgumentError("no positive templates");
  if (n_pos < config.count && config.negative_templates.empty())
    throw ArgumentError("no negative templates");

  Rng rng(config.seed);
  std::vector<bool> positive(config.count, false);
  std::fill(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(n_pos), true);
  rng.shuffle(positive);

  SyntheticCorpus corpus;
  char idbuf[64];
  for (std::size_t i = 0; i < config.count; ++i) {
    const auto& domain = pick(rng, config.domains);
    std::vector<std::string> pasts, fillers, times;
    for (int k = 0; k < 4; ++k) pasts.push_back(pick(rng, domain.actions).second);
    for (int k = 0; k < 4; ++k) times.push_back(pick(rng, clock_times()));
    TaggedUtterance t;
    if (positive[i]) {
      const auto& pattern = pick(rng, config.positive_templates);
      int max_k = 0;
      std::map<int, int> objects_per_intent;
      for (const auto& raw : split_words(pattern)) {
        if (auto s = parse_slot(raw)) {
          if (s->kind == 'A') max_k = std::max(max_k, s->index);
          if (s->kind == 'O') ++objects_per_intent[s->index];
        }
      }
      std::size_t total_objects = 0;
      for (auto& [k, c] : objects_per_intent) total_objects += static_cast<std::size_t>(c);
      const auto ai = distinct(rng, domain.actions.size(), static_cast<std::size_t>(max_k));
      const auto oi = distinct(rng, domain.objects.size(), total_objects);
      std::vector<std::string> actions;
      for (auto a : ai) actions.push_back(domain.actions[a].first);
      std::vector<std::vector<std::string>> objects(static_cast<std::size_t>(max_k));
      std::size_t next = 0;
      for (int k = 1; k <= max_k; ++k)
        for (int c = 0; c < objects_per_intent[k]; ++c)
          objects[static_cast<std::size_t>(k - 1)].push_back(domain.objects[oi[next++]]);
      // Fillers must not collide with the intent objects.
      std::set<std::string> used(actions.begin(), actions.end());
      for (auto& group : objects) used.insert(group.begin(), group.end());
      for (int k = 0; k < 4; ++k) {
        const auto& f = pick(rng, domain.fillers);
        fillers.push_back(used.count(f) ? domain.fillers.front() : f);
      }
      t = expand_template(pattern, actions, objects, pasts, fillers, times);
    } else {
      const auto& pattern = pick(rng, config.negative_templates);
      // Negatives draw {N}/{X}/{V} from one pool in template order; build it
      // slot by slot so each kind gets a suitable word.
      for (const auto& raw : split_words(pattern)) {
        const auto s = parse_slot(raw);
        if (!s) continue;
        if (s->kind == 'N') fillers.push_back(pick(rng, domain.fillers));
        if (s->kind == 'X') fillers.push_back(pick(rng, domain.objects));
        if (s->kind == 'V') fillers.push_back(pick(rng, domain.actions).first);
      }
      t = expand_template(pattern, {}, {}, pasts, fillers, times);
    }
    std::snprintf(idbuf, sizeof idbuf, "%s-%05zu", config.id_prefix.c_str(), i + 1);
    t.utterance.id = idbuf;
    t.domain = domain.name;
    corpus.existence.push_back({t.utterance, positive[i], domain.name});
    corpus.tagged.push_back(std::move(t));
  }
  return corpus;
}

std::pair<Lexicon, Lexicon> synthetic_lexicons(const std::vector<SyntheticDomain>& domains) {
  Lexicon verbs(template_verbs().begin(), template_verbs().end());
  Lexicon nouns(template_nouns().begin(), template_nouns().end());
  for (const auto& d : domains) {
    for (const auto& [base, past] : d.actions) {
      verbs.insert(base);
      verbs.insert(past);
    }
    for (const auto& o : d.objects)
      for (auto& w : split_words(o)) nouns.insert(w);
    for (const auto& f : d.fillers) nouns.insert(f);
  }
  return {verbs, nouns};
}

EmbeddingTable synthetic_embeddings(const std::vector<SyntheticDomain>& domains, int dimension,
                                    std::uint64_t seed) {
  if (dimension <= 0) throw ArgumentError("embedding dimension must be positive");
  Rng rng(seed);
  auto random_unit = [&]() {
    Eigen::VectorXd v(dimension);
    for (int i = 0; i < dimension; ++i) v[i] = rng.normal();
    return normalized(v);
  };
  const Eigen::VectorXd action_dir = random_unit();
  const Eigen::VectorXd past_dir = random_unit();
  const Eigen::VectorXd object_dir = random_unit();
  const Eigen::VectorXd filler_dir = random_unit();
  EmbeddingTable table(dimension, UnkPolicy::HashedRandom);
  auto add = [&](const std::string& word, const Eigen::VectorXd& category,
                 const Eigen::VectorXd& domain_dir) {
    if (table.contains(word)) return;
    table.insert(word, normalized(category + 0.5 * domain_dir + 0.6 * random_unit()));
  };
  for (const auto& d : domains) {
    const Eigen::VectorXd domain_dir = random_unit();
    for (const auto& [base, past] : d.actions) {
      add(base, action_dir, domain_dir);
      add(past, past_dir, domain_dir);
    }
    for (const auto& o : d.objects)
      for (auto& w : split_words(o)) add(w, object_dir, domain_dir);
    for (const auto& f : d.fillers) add(f, filler_dir, domain_dir);
  }
  std::set<std::string> literals;
  for (const auto& list : {default_positive_templates(), default_negative_templates()})
    for (const auto& pattern : list)
      for (const auto& w : split_words(pattern))
        if (!parse_slot(w)) literals.insert(w);
  for (const auto& w : literals)
    if (!table.contains(w)) table.insert(w, random_unit());
  for (const auto& t : clock_times()) table.insert(t, random_unit());
  return table;
}

}  // namespace oid
