#include "oid/tokenizer.hpp"

#include <cctype>

namespace oid {
namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }
bool is_word(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

// Punctuation at `i` that stays attached to its neighbours.
bool is_internal(std::string_view text, std::size_t i) {
  if (i == 0 || i + 1 >= text.size()) return false;
  const auto prev = static_cast<unsigned char>(text[i - 1]);
  const auto next = static_cast<unsigned char>(text[i + 1]);
  const auto c = static_cast<unsigned char>(text[i]);
  if (is_digit(prev) && is_digit(next)) return true;
  return (c == '\'' || c == '-') && is_word(prev) && is_word(next);
}

}  // namespace

Utterance tokenize(std::string_view text, std::string id) {
  Utterance u;
  u.id = std::move(id);
  u.text = std::string(text);
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto emit = [&](std::size_t start, std::size_t end) {
    u.tokens.emplace_back(text.substr(start, end - start));
    u.char_offsets.push_back({start, end});
  };
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_punct(c) && !is_internal(text, i)) {
      emit(i, i + 1);
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n) {
      const auto d = static_cast<unsigned char>(text[i]);
      if (is_space(d)) break;
      if (is_punct(d) && !is_internal(text, i)) break;
      ++i;
    }
    emit(start, i);
  }
  return u;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (c >= 0xF8 || (c >= 0x80 && c < 0xC0)) len = 1;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace oid
