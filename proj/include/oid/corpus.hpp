#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "oid/types.hpp"

namespace oid {

enum class CorpusFormat { Column, Jsonl };

/// Column: one "token<TAB>tag" per line, blank line between utterances, and
/// optional "# id = ..." / "# domain = ..." header lines. Jsonl: one
/// {"id","text","tags",["intents"],["domain"]} record per line, where intent
/// spans are end-exclusive token ranges. Tags map case-insensitively.
std::vector<TaggedUtterance> read_tagged_corpus(const std::filesystem::path& path,
                                                CorpusFormat format);
std::vector<TaggedUtterance> read_tagged_corpus(std::istream& in, CorpusFormat format,
                                                const std::string& source = "<stream>");

void write_tagged_corpus(const std::vector<TaggedUtterance>& corpus,
                         const std::filesystem::path& path, CorpusFormat format);
void write_tagged_corpus(const std::vector<TaggedUtterance>& corpus, std::ostream& out,
                         CorpusFormat format);

/// Column format with parser-style tags: VERB -> ACTION, OBJ -> OBJECT.
/// ACTION/OBJECT/NONE are accepted as well; anything else is a FormatError.
std::vector<TaggedUtterance> read_proxy_tag_corpus(const std::filesystem::path& path);
std::vector<TaggedUtterance> read_proxy_tag_corpus(std::istream& in,
                                                   const std::string& source = "<stream>");

/// Jsonl {"id","text","has_intent",["domain"]}.
std::vector<ExistenceExample> read_existence_corpus(const std::filesystem::path& path);
void write_existence_corpus(const std::vector<ExistenceExample>& corpus,
                            const std::filesystem::path& path);

/// Plain text (one utterance per line) or Jsonl with at least "text".
/// Ids default to the 1-based line number.
std::vector<Utterance> read_utterances(std::istream& in);

using Lexicon = std::unordered_set<std::string>;

/// Lexicon lookup on lowercased tokens. A token in both lexicons is tagged
/// ACTION.
TaggedUtterance rule_based_proxy_tagger(const Utterance& utterance, const Lexicon& verbs,
                                        const Lexicon& nouns);

/// Existence view of a tagged corpus: positive iff gold intents are present
/// (or, lacking those, any ACTION tag).
std::vector<ExistenceExample> to_existence(const std::vector<TaggedUtterance>& corpus);

}  // namespace oid
