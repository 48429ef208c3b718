#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "oid/corpus.hpp"
#include "oid/embeddings.hpp"
#include "oid/types.hpp"

namespace oid {

struct SyntheticDomain {
  std::string name;
  /// (base form, past form)
  std::vector<std::pair<std::string, std::string>> actions;
  /// Intent objects; may be multi-word ("special meal").
  std::vector<std::string> objects;
  /// Nouns that never take part in an intent.
  std::vector<std::string> fillers;
};

/// Four-domain inventory (travel, software, data, office).
std::vector<SyntheticDomain> default_synthetic_domains();

/// Template grammar: whitespace-separated tokens where
///   {A:k}  action of intent k      -> ACTION
///   {O:k}  object of intent k      -> OBJECT (one intent per (A:k, O:k) pair)
///   {P}    past form of an action  -> NONE
///   {N}    filler noun             -> NONE
///   {T}    clock time like 10:30   -> NONE
/// and every other token is literal text tagged NONE.
std::vector<std::string> default_positive_templates();
std::vector<std::string> default_negative_templates();

struct SyntheticConfig {
  std::size_t count = 100;
  double positive_ratio = 0.5;
  std::uint64_t seed = 7;
  std::vector<SyntheticDomain> domains = default_synthetic_domains();
  std::vector<std::string> positive_templates = default_positive_templates();
  std::vector<std::string> negative_templates = default_negative_templates();
  /// Prefix for generated ids ("syn-0001", ...).
  std::string id_prefix = "syn";
};

/// Both views are index-aligned: existence[i] describes tagged[i]. Negatives
/// carry all-NONE tags and an empty gold-intent list.
struct SyntheticCorpus {
  std::vector<TaggedUtterance> tagged;
  std::vector<ExistenceExample> existence;
};

/// Deterministic for a given config. Exactly round(count * positive_ratio)
/// utterances are positive; positions are shuffled.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config);

/// Expands one template against concrete slot fillers; exposed for tests.
/// `actions[k-1]` / `objects[k-1]` fill {A:k} / {O:k}.
TaggedUtterance expand_template(const std::string& pattern,
                                const std::vector<std::string>& actions,
                                const std::vector<std::vector<std::string>>& objects,
                                const std::vector<std::string>& pasts = {},
                                const std::vector<std::string>& fillers = {},
                                const std::vector<std::string>& times = {});

/// Verb and noun lexicons covering the domains plus the common verbs used in
/// the templates, for the rule-based proxy tagger.
std::pair<Lexicon, Lexicon> synthetic_lexicons(const std::vector<SyntheticDomain>& domains);

/// Word vectors with category structure (action verbs, past forms, objects,
/// fillers each share a direction, plus a per-domain direction and noise),
/// standing in for pretrained vectors in desk-scale experiments.
EmbeddingTable synthetic_embeddings(const std::vector<SyntheticDomain>& domains, int dimension,
                                    std::uint64_t seed);

}  // namespace oid
