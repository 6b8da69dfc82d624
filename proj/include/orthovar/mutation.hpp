#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "orthovar/corpus.hpp"
#include "orthovar/seeding.hpp"
#include "orthovar/types.hpp"

namespace orthovar::mutation {

/// OCR-style confusions: character -> substitutes. Lookups are per scalar.
class ConfusionTable {
 public:
  ConfusionTable() = default;
  explicit ConfusionTable(std::map<char32_t, std::vector<char32_t>> entries);

  static ConfusionTable from_json_file(const std::filesystem::path& path);
  static ConfusionTable from_json_string(const std::string& json_text);

  bool empty() const { return entries_.empty(); }
  const std::vector<char32_t>* substitutes(char32_t c) const;
  const std::map<char32_t, std::vector<char32_t>>& entries() const { return entries_; }

 private:
  std::map<char32_t, std::vector<char32_t>> entries_;
};

/// Default alphabet for single-character substitutions.
std::u32string default_alphabet();

struct Mutated {
  std::string form;
  bool degenerate = false;  // could not be made distinct from the input
  bool fallback = false;    // produced by the random-character fallback
};

std::string reverse_variant(const std::string& word);

/// Falls back to random_char_variant over `alphabet` when no character of
/// `word` has a table entry.
Mutated ocr_variant(const std::string& word, const ConfusionTable& table, Rng& rng,
                    std::size_t mutations = 1,
                    const std::u32string& alphabet = default_alphabet());

/// Length-1 words fall back to random_char_variant and are flagged degenerate.
Mutated swap_variant(const std::string& word, Rng& rng,
                     const std::u32string& alphabet = default_alphabet());

Mutated random_char_variant(const std::string& word, Rng& rng,
                            const std::u32string& alphabet = default_alphabet());

struct VariantSet {
  std::string datapoint_id;
  std::map<VariantKind, std::string> forms;
  std::set<VariantKind> degenerate;
  std::set<VariantKind> fallback;

  const std::string& form(VariantKind k) const { return forms.at(k); }
  bool operator==(const VariantSet&) const = default;
};

struct MutationOptions {
  std::size_t ocr_mutations = 1;
  std::u32string alphabet = default_alphabet();
};

/// Each synthetic kind draws from its own stream seeded by
/// (master_seed, datapoint id, kind), so results do not depend on order.
VariantSet build_variant_set(const corpus::DataPoint& dp, const ConfusionTable& table,
                             std::uint64_t master_seed, const MutationOptions& options = {});

std::vector<VariantSet> build_variant_sets(const std::vector<corpus::DataPoint>& points,
                                           const ConfusionTable& table,
                                           std::uint64_t master_seed,
                                           const MutationOptions& options = {});

/// JSONL {id, kind, form, degenerate, fallback}, one line per (datapoint, kind).
void write_variants(const std::filesystem::path& path, const std::vector<VariantSet>& sets);
std::vector<VariantSet> read_variants(const std::filesystem::path& path);

}  // namespace orthovar::mutation
