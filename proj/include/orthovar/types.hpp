#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace orthovar {

/// The six surface forms carried by every datapoint.
enum class VariantKind : std::uint8_t { Std = 0, Obv, Rev, Ocr, Swp, Rnd };

inline constexpr std::array<VariantKind, 6> kAllKinds = {
    VariantKind::Std, VariantKind::Obv, VariantKind::Rev,
    VariantKind::Ocr, VariantKind::Swp, VariantKind::Rnd};

/// Kinds that appear as the subtrahend of a relative point.
inline constexpr std::array<VariantKind, 5> kRelativeKinds = {
    VariantKind::Obv, VariantKind::Rev, VariantKind::Ocr, VariantKind::Swp,
    VariantKind::Rnd};

inline constexpr std::size_t kind_index(VariantKind k) {
  return static_cast<std::size_t>(k);
}

inline std::string_view to_string(VariantKind k) {
  switch (k) {
    case VariantKind::Std: return "std";
    case VariantKind::Obv: return "obv";
    case VariantKind::Rev: return "rev";
    case VariantKind::Ocr: return "ocr";
    case VariantKind::Swp: return "swp";
    case VariantKind::Rnd: return "rnd";
  }
  return "?";
}

inline std::optional<VariantKind> parse_kind(std::string_view s) {
  for (auto k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Raised for malformed inputs (files, records, configuration).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace orthovar
