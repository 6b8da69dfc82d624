#include <gtest/gtest.h>

#include <set>

#include "orthovar/mutation.hpp"
#include "orthovar/text.hpp"
#include "test_util.hpp"

using namespace orthovar;
using namespace orthovar::mutation;

namespace {

std::size_t hamming(const std::u32string& a, const std::u32string& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

bool is_adjacent_swap(const std::string& word, const std::string& form) {
  const auto a = text::to_scalars(word), b = text::to_scalars(form);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    auto t = a;
    std::swap(t[i], t[i + 1]);
    if (t == b && t != a) return true;
  }
  return false;
}

corpus::DataPoint dp(std::string id, std::string standard, std::string observed) {
  return {std::move(id), std::move(standard), std::move(observed), "ctx", "AA", std::nullopt};
}

ConfusionTable small_table() {
  return ConfusionTable({{U'r', {U'k', U'n'}}, {U'n', {U'm', U'h', U'r'}}});
}

}  // namespace

TEST(ReverseVariant, reverses_scalars) {
  EXPECT_EQ(reverse_variant("circus"), "sucric");
  EXPECT_EQ(reverse_variant("café"), "éfac");
  EXPECT_EQ(reverse_variant(""), "");
}

TEST(SwapVariant, all_equal_letters_degenerate) {
  Rng rng(1);
  auto m = swap_variant("aa", rng);
  EXPECT_EQ(m.form, "aa");
  EXPECT_TRUE(m.degenerate);
}

TEST(SwapVariant, single_letter_falls_back) {
  Rng rng(1);
  auto m = swap_variant("a", rng);
  EXPECT_TRUE(m.degenerate);
  EXPECT_TRUE(m.fallback);
  EXPECT_NE(m.form, "a");
  EXPECT_EQ(text::scalar_length(m.form), 1u);
}

TEST(SwapVariant, is_one_adjacent_transposition) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 500; ++i) {
    auto w = testutil::random_string(gen, 9, "abcd");
    if (w.size() < 2) continue;
    Rng rng(static_cast<std::uint64_t>(i));
    auto m = swap_variant(w, rng);
    if (m.degenerate) {
      EXPECT_EQ(m.form, w);
      EXPECT_TRUE(std::all_of(w.begin(), w.end(), [&](char c) { return c == w[0]; }));
    } else {
      EXPECT_TRUE(is_adjacent_swap(w, m.form)) << w << " -> " << m.form;
    }
  }
}

TEST(RandomCharVariant, hamming_one_from_alphabet) {
  const auto alphabet = default_alphabet();
  std::mt19937_64 gen(9);
  for (int i = 0; i < 500; ++i) {
    auto w = testutil::random_string(gen, 8, "abcxyz");
    if (w.empty()) continue;
    Rng rng(static_cast<std::uint64_t>(i));
    auto m = random_char_variant(w, rng);
    const auto a = text::to_scalars(w), b = text::to_scalars(m.form);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(hamming(a, b), 1u);
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (a[p] != b[p]) EXPECT_NE(alphabet.find(b[p]), std::u32string::npos);
    }
  }
}

TEST(OcrVariant, reachable_set_is_exactly_table_neighbours) {
  const auto table = small_table();
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 400; ++s) {
    Rng rng(s);
    auto m = ocr_variant("rn", table, rng);
    EXPECT_FALSE(m.fallback);
    seen.insert(m.form);
  }
  EXPECT_EQ(seen, (std::set<std::string>{"kn", "nn", "rm", "rh", "rr"}));
}

TEST(OcrVariant, respects_mutation_count) {
  const auto table = ConfusionTable::from_json_string(R"({"a":["o"],"b":["h"],"c":["e"]})");
  Rng rng(3);
  auto m = ocr_variant("abc", table, rng, 2);
  EXPECT_EQ(hamming(U"abc", text::to_scalars(m.form)), 2u);
}

TEST(OcrVariant, falls_back_without_entries) {
  const auto table = small_table();
  Rng rng(3);
  auto m = ocr_variant("xyz", table, rng);
  EXPECT_TRUE(m.fallback);
  EXPECT_EQ(hamming(U"xyz", text::to_scalars(m.form)), 1u);
}

TEST(OcrVariant, empty_table_is_an_error) {
  Rng rng(3);
  EXPECT_THROW(ocr_variant("word", ConfusionTable{}, rng), InputError);
  EXPECT_THROW(ConfusionTable::from_json_string(R"({"a":[]})"), InputError);
  EXPECT_THROW(ConfusionTable::from_json_string(R"({"a":["a"]})"), InputError);
}

TEST(BuildVariantSet, carries_six_kinds) {
  auto vs = build_variant_set(dp("d1", "circus", "sircus"), small_table(), 11);
  EXPECT_EQ(vs.forms.size(), 6u);
  EXPECT_EQ(vs.form(VariantKind::Std), "circus");
  EXPECT_EQ(vs.form(VariantKind::Obv), "sircus");
  EXPECT_EQ(vs.form(VariantKind::Rev), "sucric");
  EXPECT_TRUE(is_adjacent_swap("circus", vs.form(VariantKind::Swp)));
}

TEST(BuildVariantSet, palindrome_reverse_is_degenerate) {
  auto vs = build_variant_set(dp("d1", "level", "levl"), small_table(), 11);
  EXPECT_TRUE(vs.degenerate.count(VariantKind::Rev));
}

TEST(BuildVariantSet, deterministic_and_order_independent) {
  std::vector<corpus::DataPoint> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(dp("id" + std::to_string(i), "northern", "nothern"));
  const auto table = small_table();
  auto a = build_variant_sets(pts, table, 99);
  auto b = build_variant_sets(pts, table, 99);
  EXPECT_EQ(a, b);
  std::reverse(pts.begin(), pts.end());
  auto c = build_variant_sets(pts, table, 99);
  std::reverse(c.begin(), c.end());
  EXPECT_EQ(a, c);
  auto d = build_variant_sets(pts, table, 100);
  std::reverse(d.begin(), d.end());
  EXPECT_NE(a, d);
}

// Positions chosen by the swp and rnd streams should be uniform and
// independent of each other.
TEST(BuildVariantSet, kind_streams_are_independent) {
  const std::string word = "abcdefgh";
  const auto table = small_table();
  std::vector<std::vector<double>> counts(8, std::vector<double>(7, 0.0));
  std::vector<double> swp_marginal(7, 0.0);
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    auto vs = build_variant_set(dp("x" + std::to_string(i), word, "abcdefg"), table, 2024);
    const auto& rnd = vs.form(VariantKind::Rnd);
    const auto& swp = vs.form(VariantKind::Swp);
    std::size_t rp = 0, sp = 0;
    while (rnd[rp] == word[rp]) ++rp;
    while (swp[sp] == word[sp]) ++sp;
    counts[rp][sp] += 1;
    swp_marginal[sp] += 1;
  }
  double uniform_chi = 0.0;
  for (double c : swp_marginal) uniform_chi += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(uniform_chi, 22.46);  // df 6, p = 0.001

  double chi = 0.0;
  for (std::size_t r = 0; r < 8; ++r) {
    double row = 0;
    for (double c : counts[r]) row += c;
    for (std::size_t s = 0; s < 7; ++s) {
      const double expected = row * swp_marginal[s] / n;
      if (expected > 0) chi += (counts[r][s] - expected) * (counts[r][s] - expected) / expected;
    }
  }
  EXPECT_LT(chi, 76.08);  // df 42, p = 0.001
}

TEST(Variants, jsonl_round_trip) {
  testutil::TempDir dir;
  std::vector<corpus::DataPoint> pts = {dp("a", "level", "levl"), dp("b", "a", "ah")};
  auto sets = build_variant_sets(pts, small_table(), 5);
  write_variants(dir / "v.jsonl", sets);
  EXPECT_EQ(read_variants(dir / "v.jsonl"), sets);
}
