#pragma once

#include <string>
#include <string_view>

namespace orthovar::text {

// Conversions between UTF-8 and Unicode scalar sequences. All character
// counts and offsets in this project are in scalars, never bytes.
std::u32string to_scalars(std::string_view utf8);
std::string to_utf8(std::u32string_view scalars);

std::string nfc(std::string_view utf8);
std::u32string fold_case(std::u32string_view s);
/// NFD followed by removal of combining marks ("café" -> "cafe").
std::string strip_diacritics(std::string_view utf8);
std::string trim(std::string_view s);

bool is_alnum(char32_t c);

inline std::size_t scalar_length(std::string_view utf8) {
  return to_scalars(utf8).size();
}

}  // namespace orthovar::text
