#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace orthovar::phonetics {

struct MetaphoneOptions {
  /// 0 keeps the full code.
  std::size_t max_length = 0;
};

/// Original (1990) Metaphone. Non-alphabetic characters are stripped first;
/// case-insensitive. Output alphabet: B F H J K L M N P R S T W X Y 0 plus a
/// leading vowel A E I O U.
std::string metaphone(std::string_view word, const MetaphoneOptions& options = {});

/// Unit-cost edit distance over Unicode scalars.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

std::size_t mphone_distance(std::string_view a, std::string_view b,
                            const MetaphoneOptions& options = {});

enum class EditKind { Sub, Ins, Del };

struct EditOp {
  EditKind kind;
  std::string source;    // removed from the standard form ("" for Ins)
  std::string target;    // written in its place ("" for Del)
  std::size_t position;  // scalar offset into the standard form

  bool operator==(const EditOp&) const = default;
  /// "er->ah", "-g", "+o".
  std::string merged() const;
};

struct EditSignature {
  std::vector<EditOp> ops;
  /// Ops' merged forms joined by "; " (empty when the strings are equal).
  std::string merged;
};

/// Edit script from one minimal-cost alignment. Backtrace ties prefer
/// substitution/match, then insertion, then deletion; each maximal run of
/// non-matching alignment columns becomes a single op.
EditSignature edit_signature(std::string_view standard, std::string_view observed);

/// Replays `ops` over `standard`.
std::string apply_edits(std::string_view standard, const std::vector<EditOp>& ops);

}  // namespace orthovar::phonetics
