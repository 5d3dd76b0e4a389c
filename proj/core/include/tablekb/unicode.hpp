#pragma once

#include <string>
#include <string_view>

namespace tablekb::unicode {

bool is_valid_utf8(std::string_view s);

// Full Unicode case folding (e.g. "Straße" -> "strasse"). Invalid UTF-8
// sequences are folded byte-wise as ASCII.
std::string casefold(std::string_view s);

// Simple lowercase mapping for tokenization.
std::string to_lower(std::string_view s);

// Removes leading and trailing Unicode whitespace.
std::string trim(std::string_view s);

}  // namespace tablekb::unicode
