#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oid/types.hpp"

namespace oid {

/// Symbol <-> id bijection with contiguous ids. Id 0 is UNK and id 1 is PAD.
class SymbolTable {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kPad = 1;

  SymbolTable();

  int add(std::string_view symbol);
  int id(std::string_view symbol) const;  // kUnk when absent
  bool contains(std::string_view symbol) const;
  const std::string& symbol(int id) const;
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

struct Vocabulary {
  SymbolTable words;  // lowercased
  SymbolTable chars;  // UTF-8 code points, case preserved

  std::vector<int> word_ids(const Utterance& u) const;
  std::vector<int> char_ids(std::string_view token) const;
};

/// Collects lowercased words and characters from `utterances`. Words seen
/// fewer than `min_count` times map to UNK.
Vocabulary build_vocabulary(const std::vector<const Utterance*>& utterances, int min_count = 1);

}  // namespace oid
