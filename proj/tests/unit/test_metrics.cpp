#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "orthovar/metrics.hpp"
#include "test_util.hpp"

using namespace orthovar;
using namespace orthovar::metrics;

namespace {

std::vector<int> random_assignment(std::mt19937_64& gen, std::size_t n, int k) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> a(n);
  for (auto& v : a) v = pick(gen);
  return a;
}

}  // namespace

TEST(Purity, worked_example) {
  const std::vector<int> a = {0, 0, 1, 1};
  const std::vector<std::string> l = {"a", "b", "b", "b"};
  EXPECT_DOUBLE_EQ(purity<std::string>(a, l), 0.75);
}

TEST(Purity, single_cluster_distinct_labels) {
  const std::vector<int> a(5, 0);
  const std::vector<int> l = {1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(purity<int>(a, l), 1.0 / 5.0);
}

TEST(Purity, matches_oracle_and_is_relabel_invariant) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + gen() % 50;
    const int k = 1 + static_cast<int>(gen() % 8);
    auto a = random_assignment(gen, n, k);
    auto l = random_assignment(gen, n, 4);
    const double p = purity<int>(a, l);
    EXPECT_EQ(p, oracle::purity(a, l));
    std::vector<int> relabeled = a;
    for (auto& v : relabeled) v = 100 - 3 * v;
    EXPECT_EQ(purity<int>(relabeled, l), p);
    // Splitting clusters never lowers purity.
    std::vector<int> split = a;
    for (std::size_t i = 0; i < n; i += 2) split[i] += 1000;
    EXPECT_GE(purity<int>(split, l), p);
  }
}

TEST(Purity, rejects_empty_and_mismatch) {
  EXPECT_THROW(purity<int>(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW(purity<int>(std::vector<int>{0}, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST(OverallAccuracy, worked_example) {
  const std::vector<int> a = {0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(overall_accuracy(a, {{0, 1}, {2, 3}}), 0.5);
  EXPECT_DOUBLE_EQ(partial_accuracy(a, {{0, 1}, {2, 3}}), 0.75);
  EXPECT_THROW(overall_accuracy(a, {}), std::invalid_argument);
}

TEST(SoAccuracy, worked_example) {
  const std::vector<int> a = {0, 0, 1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(so_accuracy(a, {{0, 1}, {2, 3}, {4, 5}}), 2.0 / 3.0);
  EXPECT_THROW(so_accuracy(a, {}), std::invalid_argument);
}

TEST(Accuracy, matches_oracle_and_overall_below_so) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t groups_n = 1 + gen() % 8;
    const std::size_t n = groups_n * 6;
    auto a = random_assignment(gen, n, 1 + static_cast<int>(gen() % 8));
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t g = 0; g < groups_n; ++g) {
      groups.push_back({6 * g, 6 * g + 1, 6 * g + 2, 6 * g + 3, 6 * g + 4, 6 * g + 5});
      pairs.emplace_back(6 * g, 6 * g + 1);
    }
    const double overall = overall_accuracy(a, groups);
    EXPECT_EQ(overall, oracle::overall(a, groups));
    EXPECT_EQ(so_accuracy(a, pairs), oracle::so(a, pairs));
    EXPECT_LE(overall, so_accuracy(a, pairs));
    EXPECT_LE(overall, partial_accuracy(a, groups));
  }
}

TEST(AdjustedRandIndex, identical_partitions) {
  const std::vector<int> a = {0, 0, 1, 1, 2};
  const std::vector<int> b = {5, 5, 3, 3, 9};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), 1.0);
}

TEST(SemanticCoherency, worked_example) {
  TypeVectors tv;
  tv.add("a", Eigen::Vector3d(1, 0, 0));
  tv.add("b", Eigen::Vector3d(0, 1, 0));
  tv.add("c", Eigen::Vector3d(0.6, 0.6, std::sqrt(1 - 0.72)));
  auto c = semantic_coherency({"a", "b", "c", "oov"}, tv);
  ASSERT_TRUE(c.value);
  EXPECT_NEAR(*c.value, 0.4, 1e-12);
  EXPECT_EQ(c.in_vocabulary, 3u);
  EXPECT_EQ(c.tokens, 4u);
  EXPECT_FALSE(semantic_coherency({"a"}, tv).value);
}

TEST(SemanticCoherency, matches_oracle) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  TypeVectors tv;
  std::vector<std::string> vocab;
  for (int w = 0; w < 60; ++w) {
    Eigen::VectorXd v(4);
    for (int j = 0; j < 4; ++j) v[j] = nd(gen);
    vocab.push_back("w" + std::to_string(w));
    tv.add(vocab.back(), v);
  }
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> tokens;
    std::vector<Eigen::VectorXd> vecs;
    for (std::size_t i = 0, n = gen() % 20; i < n; ++i) {
      tokens.push_back(vocab[gen() % vocab.size()]);
      vecs.push_back(*tv.find(tokens.back()));
    }
    auto got = semantic_coherency(tokens, tv);
    auto want = oracle::coherency(vecs);
    ASSERT_EQ(got.value.has_value(), want.has_value());
    if (want) EXPECT_NEAR(*got.value, *want, 1e-12);
  }
}

TEST(TypeVectors, text_format_with_header) {
  testutil::TempDir dir;
  auto path = testutil::write_file(dir / "v.txt", "2 3\nthe 1 0 0\nCat 0 1 0\n");
  auto tv = TypeVectors::load_text(path);
  EXPECT_EQ(tv.size(), 2u);
  EXPECT_EQ(tv.dim(), 3);
  EXPECT_NE(tv.find("THE"), nullptr);
  EXPECT_EQ(tv.find("dog"), nullptr);
  auto bad = testutil::write_file(dir / "b.txt", "a 1 2\nb 1\n");
  EXPECT_THROW(TypeVectors::load_text(bad), InputError);
}

TEST(MphoneSimilarity, mean_code_distance) {
  EXPECT_DOUBLE_EQ(*mphone_similarity({"after", "aftah"}), 1.0);
  EXPECT_FALSE(mphone_similarity({"after"}).has_value());
  EXPECT_DOUBLE_EQ(*mphone_similarity({"night", "knight"}), 0.0);
  EXPECT_DOUBLE_EQ(*mphone_similarity({"night", "knight", "nite"}), 2.0 / 3.0);
}

TEST(PairSample, capped_sorted_deterministic) {
  auto all = pair_sample(10, {20, 1});
  EXPECT_EQ(all.size(), 10u);
  auto s = pair_sample(100, {10, 1});
  EXPECT_EQ(s.size(), 10u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(s, pair_sample(100, {10, 1}));
  EXPECT_NE(s, pair_sample(100, {10, 2}));
  EXPECT_EQ(pair_sample(100, {0, 1}).size(), 100u);
}

TEST(DtagProportions, matches_oracle) {
  const std::vector<int> a = {0, 0, 1, 0};
  const std::vector<std::string> t = {"AA", "BW", "AA", "AA"};
  auto p = dtag_proportions(a, t, 0);
  EXPECT_DOUBLE_EQ(p.at("AA"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.at("BW"), 1.0 / 3.0);
  EXPECT_EQ(p, oracle::proportions(std::vector<int>(a), t, 0));
  EXPECT_THROW(dtag_proportions(a, t, 7), std::invalid_argument);
}

TEST(LdProfile, splits_by_correctness) {
  auto p = ld_profile({{"cat", "cut"}, {"after", "aftah"}, {"abc", "xyz"}}, {true, true, false});
  EXPECT_DOUBLE_EQ(*p.correct_mean_ld, 1.5);
  EXPECT_DOUBLE_EQ(*p.error_mean_ld, 3.0);
  EXPECT_EQ(p.correct_count, 2u);
  auto none = ld_profile({{"a", "b"}}, {true});
  EXPECT_FALSE(none.error_mean_ld.has_value());
}

TEST(EditFrequencyTable, ranks_by_count_then_text) {
  std::vector<phonetics::EditSignature> sigs = {phonetics::edit_signature("after", "aftah"),
                                                phonetics::edit_signature("water", "watah"),
                                                phonetics::edit_signature("blooming", "bloomin"),
                                                phonetics::edit_signature("going", "goin")};
  auto table = edit_frequency_table(sigs);
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[0], (std::pair<std::string, std::size_t>{"-g", 2}));
  EXPECT_EQ(table[1], (std::pair<std::string, std::size_t>{"er->ah", 2}));
}
