#include <string>

#include "orthovar/phonetics.hpp"
#include "orthovar/text.hpp"

namespace orthovar::phonetics {

namespace {

bool is_vowel(char c) { return c == 'A' || c == 'E' || c == 'I' || c == 'O' || c == 'U'; }
bool is_soft(char c) { return c == 'E' || c == 'I' || c == 'Y'; }
// Letters that absorb a following H.
bool h_digraph_lead(char c) { return c == 'C' || c == 'G' || c == 'P' || c == 'S' || c == 'T'; }
bool blocks_gh_to_f(char c) { return c == 'B' || c == 'D' || c == 'H'; }

std::string letters_only(std::string_view word) {
  std::string out;
  for (char32_t c : text::to_scalars(text::strip_diacritics(word))) {
    if (c >= U'a' && c <= U'z') out.push_back(static_cast<char>(c - U'a' + U'A'));
    else if (c >= U'A' && c <= U'Z') out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

std::string metaphone(std::string_view word, const MetaphoneOptions& options) {
  const std::string w = letters_only(word);
  if (w.empty()) return {};

  std::size_t i = 0;
  auto at = [&](long offset) -> char {
    const long p = static_cast<long>(i) + offset;
    return p < 0 || p >= static_cast<long>(w.size()) ? '\0' : w[static_cast<std::size_t>(p)];
  };

  std::string code;

  // Initial-letter exceptions.
  switch (w[0]) {
    case 'A':
      if (at(1) == 'E') {
        code += 'E';
        i += 2;
      } else {
        code += 'A';
        i += 1;
      }
      break;
    case 'G':
    case 'K':
    case 'P':
      if (at(1) == 'N') {
        code += 'N';
        i += 2;
      }
      break;
    case 'W':
      if (at(1) == 'R') {
        code += 'R';
        i += 2;
      } else if (at(1) == 'H') {
        code += 'W';
        i += 2;
      } else if (is_vowel(at(1))) {
        code += 'W';
        i += 2;
      }
      break;
    case 'X':
      code += 'S';
      i += 1;
      break;
    case 'E':
    case 'I':
    case 'O':
    case 'U':
      code += w[0];
      i += 1;
      break;
    default:
      break;
  }

  while (i < w.size()) {
    const char c = w[i];
    std::size_t skip = 1;
    if (c == at(-1) && c != 'C') {
      i += 1;
      continue;
    }
    switch (c) {
      case 'B':
        if (at(-1) != 'M') code += 'B';
        break;
      case 'C':
        if (is_soft(at(1))) {
          if (at(1) == 'I' && at(2) == 'A') code += 'X';
          else if (at(-1) != 'S') code += 'S';
        } else if (at(1) == 'H') {
          code += 'X';
          ++skip;
        } else {
          code += 'K';
        }
        break;
      case 'D':
        if (at(1) == 'G' && is_soft(at(2))) {
          code += 'J';
          ++skip;
        } else {
          code += 'T';
        }
        break;
      case 'G':
        if (at(1) == 'H') {
          if (!(blocks_gh_to_f(at(-3)) || at(-4) == 'H')) {
            code += 'F';
            ++skip;
          }
        } else if (at(1) == 'N') {
          const bool silent = at(2) == '\0' || (at(2) == 'E' && at(3) == 'D');
          if (!silent) code += 'K';
        } else if (is_soft(at(1)) && at(-1) != 'G') {
          code += 'J';
        } else {
          code += 'K';
        }
        break;
      case 'H':
        if (is_vowel(at(1)) && !h_digraph_lead(at(-1))) code += 'H';
        break;
      case 'K':
        if (at(-1) != 'C') code += 'K';
        break;
      case 'P':
        code += at(1) == 'H' ? 'F' : 'P';
        break;
      case 'Q':
        code += 'K';
        break;
      case 'S':
        if (at(1) == 'I' && (at(2) == 'O' || at(2) == 'A')) {
          code += 'X';
        } else if (at(1) == 'H') {
          code += 'X';
          ++skip;
        } else {
          code += 'S';
        }
        break;
      case 'T':
        if (at(1) == 'I' && (at(2) == 'O' || at(2) == 'A')) {
          code += 'X';
        } else if (at(1) == 'H') {
          code += '0';
          ++skip;
        } else if (!(at(1) == 'C' && at(2) == 'H')) {
          code += 'T';
        }
        break;
      case 'V':
        code += 'F';
        break;
      case 'W':
        if (is_vowel(at(1))) code += 'W';
        break;
      case 'X':
        code += "KS";
        break;
      case 'Y':
        if (is_vowel(at(1))) code += 'Y';
        break;
      case 'Z':
        code += 'S';
        break;
      case 'F':
      case 'J':
      case 'L':
      case 'M':
      case 'N':
      case 'R':
        code += c;
        break;
      default:  // non-initial vowels
        break;
    }
    i += skip;
  }

  if (options.max_length > 0 && code.size() > options.max_length) code.resize(options.max_length);
  return code;
}

}  // namespace orthovar::phonetics
