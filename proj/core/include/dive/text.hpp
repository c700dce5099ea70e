#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dive {

// True for code points with the Unicode White_Space property.
bool is_unicode_whitespace(char32_t cp);

// Canonical form used for description identity and all text metrics:
// ASCII lowercase, runs of Unicode whitespace collapsed to single spaces,
// leading/trailing whitespace removed, trailing '.', '!', '?' stripped.
// May return an empty string; callers that require non-empty text check.
std::string normalize_text(std::string_view raw);

// Splits normalized (or any) text on Unicode whitespace. No subword logic.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace dive
