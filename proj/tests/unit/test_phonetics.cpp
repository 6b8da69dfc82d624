#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "orthovar/phonetics.hpp"
#include "orthovar/text.hpp"
#include "test_util.hpp"

using namespace orthovar;
using namespace orthovar::phonetics;

TEST(Levenshtein, known_values) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("circus", "icrcus"), 2u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("", ""), 0u);
  EXPECT_EQ(levenshtein("café", "cafe"), 1u);
  EXPECT_EQ(levenshtein("after", "aftah"), 2u);
}

TEST(Levenshtein, matches_full_table_oracle) {
  std::mt19937_64 gen(17);
  for (int i = 0; i < 1000; ++i) {
    const auto a = testutil::random_string(gen, 12, "abcd");
    const auto b = testutil::random_string(gen, 12, "abcd");
    ASSERT_EQ(levenshtein(a, b), oracle::levenshtein(a, b)) << a << " / " << b;
  }
}

TEST(Levenshtein, metric_axioms_and_bounds) {
  std::mt19937_64 gen(23);
  for (int i = 0; i < 500; ++i) {
    const auto a = testutil::random_string(gen, 10, "abc");
    const auto b = testutil::random_string(gen, 10, "abc");
    const auto c = testutil::random_string(gen, 10, "abc");
    const auto ab = levenshtein(a, b);
    EXPECT_EQ(ab, levenshtein(b, a));
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_LE(levenshtein(a, c), ab + levenshtein(b, c));
    const std::size_t la = a.size(), lb = b.size();
    EXPECT_GE(ab, la > lb ? la - lb : lb - la);
    EXPECT_LE(ab, std::max(la, lb));
  }
}

TEST(EditSignature, merged_substitution_run) {
  auto sig = edit_signature("after", "aftah");
  ASSERT_EQ(sig.ops.size(), 1u);
  EXPECT_EQ(sig.ops[0], (EditOp{EditKind::Sub, "er", "ah", 3}));
  EXPECT_EQ(sig.merged, "er->ah");
}

TEST(EditSignature, apostrophe_substitution) {
  auto sig = edit_signature("quarters", "qua'ters");
  ASSERT_EQ(sig.ops.size(), 1u);
  EXPECT_EQ(sig.ops[0], (EditOp{EditKind::Sub, "r", "'", 3}));
  EXPECT_EQ(sig.merged, "r->'");
}

TEST(EditSignature, final_deletion) {
  auto sig = edit_signature("blooming", "bloomin");
  ASSERT_EQ(sig.ops.size(), 1u);
  EXPECT_EQ(sig.ops[0], (EditOp{EditKind::Del, "g", "", 7}));
  EXPECT_EQ(sig.merged, "-g");
}

TEST(EditSignature, substitution_and_deletion_merge) {
  EXPECT_EQ(edit_signature("rather", "ratha").merged, "er->a");
}

TEST(EditSignature, insertion_and_identity) {
  EXPECT_EQ(edit_signature("go", "goo").merged, "+o");
  auto same = edit_signature("same", "same");
  EXPECT_TRUE(same.ops.empty());
  EXPECT_EQ(same.merged, "");
}

TEST(EditSignature, replays_to_observed) {
  std::mt19937_64 gen(31);
  auto word = [&] { return text::to_utf8(text::to_scalars(testutil::random_string(gen, 10, "abcE'"))); };
  auto accent = [](std::string s) {
    for (std::size_t p = s.find('E'); p != std::string::npos; p = s.find('E')) s.replace(p, 1, "é");
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto a = accent(word());
    const auto b = accent(word());
    const auto sig = edit_signature(a, b);
    ASSERT_EQ(apply_edits(a, sig.ops), b) << a << " -> " << b << " via " << sig.merged;
    EXPECT_LE(sig.ops.size(), levenshtein(a, b));
  }
}

TEST(Metaphone, matches_reference_list) {
  std::ifstream in(std::string(ORTHOVAR_TEST_DATA) + "/metaphone_reference.tsv");
  ASSERT_TRUE(in);
  std::string line;
  std::size_t checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    const auto word = line.substr(0, tab);
    EXPECT_EQ(metaphone(word), line.substr(tab + 1)) << word;
    ++checked;
  }
  EXPECT_EQ(checked, 100u);
}

TEST(Metaphone, case_insensitive_and_edge_cases) {
  EXPECT_EQ(metaphone("KNIGHT"), metaphone("knight"));
  EXPECT_EQ(metaphone(""), "");
  EXPECT_EQ(metaphone("123"), "");
  EXPECT_EQ(metaphone("quarters", {3}), "KRT");
  EXPECT_EQ(metaphone("café"), metaphone("cafe"));
}

TEST(MphoneDistance, compares_codes) {
  EXPECT_EQ(mphone_distance("after", "aftah"), 1u);
  EXPECT_EQ(mphone_distance("night", "knight"), 0u);
}
