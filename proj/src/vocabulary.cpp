#include "oid/vocabulary.hpp"

#include <map>

#include "oid/error.hpp"
#include "oid/tokenizer.hpp"

namespace oid {

SymbolTable::SymbolTable() {
  add("<unk>");
  add("<pad>");
}

int SymbolTable::add(std::string_view symbol) {
  auto it = ids_.find(std::string(symbol));
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(symbols_.size());
  symbols_.emplace_back(symbol);
  ids_.emplace(symbols_.back(), id);
  return id;
}

int SymbolTable::id(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  return it == ids_.end() ? kUnk : it->second;
}

bool SymbolTable::contains(std::string_view symbol) const {
  return ids_.count(std::string(symbol)) > 0;
}

const std::string& SymbolTable::symbol(int id) const {
  if (id < 0 || id >= size()) throw ArgumentError("symbol id out of range");
  return symbols_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::word_ids(const Utterance& u) const {
  std::vector<int> ids;
  ids.reserve(u.size());
  for (const auto& t : u.tokens) ids.push_back(words.id(lowercase(t)));
  return ids;
}

std::vector<int> Vocabulary::char_ids(std::string_view token) const {
  std::vector<int> ids;
  for (const auto& c : utf8_chars(token)) ids.push_back(chars.id(c));
  return ids;
}

Vocabulary build_vocabulary(const std::vector<const Utterance*>& utterances, int min_count) {
  std::map<std::string, int> counts;
  Vocabulary vocab;
  for (const auto* u : utterances) {
    for (const auto& t : u->tokens) {
      ++counts[lowercase(t)];
      for (const auto& c : utf8_chars(t)) vocab.chars.add(c);
    }
  }
  for (const auto& [w, c] : counts)
    if (c >= min_count) vocab.words.add(w);
  return vocab;
}

}  // namespace oid
