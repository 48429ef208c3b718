#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "oid/types.hpp"

namespace oid {

/// Splits on whitespace, then separates ASCII punctuation into single-char
/// tokens. Punctuation flanked by digits ("10:30", "3.5") and apostrophes or
/// hyphens flanked by alphanumerics ("don't", "e-mail") stay inside the token.
/// Casing is preserved; see `lowercase` for the lookup key.
Utterance tokenize(std::string_view text, std::string id = {});

/// ASCII lowercasing; bytes >= 0x80 pass through untouched.
std::string lowercase(std::string_view text);

/// Splits a UTF-8 string into code points (each returned as its byte
/// sequence). Invalid bytes come back as single-byte entries.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace oid
