#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "orthovar/phonetics.hpp"
#include "orthovar/types.hpp"

namespace orthovar::metrics {

/// Fraction of points that carry their cluster's majority label.
template <typename Label>
double purity(std::span<const int> assignments, std::span<const Label> labels) {
  if (assignments.empty()) throw std::invalid_argument("purity of an empty assignment");
  if (assignments.size() != labels.size()) throw std::invalid_argument("purity: size mismatch");
  std::map<int, std::map<Label, std::size_t>> counts;
  for (std::size_t i = 0; i < assignments.size(); ++i) ++counts[assignments[i]][labels[i]];
  std::size_t majority_total = 0;
  for (const auto& [cluster, by_label] : counts) {
    std::size_t best = 0;
    for (const auto& [label, n] : by_label) best = std::max(best, n);
    majority_total += best;
  }
  return static_cast<double>(majority_total) / static_cast<double>(assignments.size());
}

/// Share of groups whose members all sit in one cluster.
double overall_accuracy(std::span<const int> assignments,
                        const std::vector<std::vector<std::size_t>>& groups);

/// Partial-credit companion: mean over groups of the largest same-cluster
/// share within the group.
double partial_accuracy(std::span<const int> assignments,
                        const std::vector<std::vector<std::size_t>>& groups);

/// Share of (std, obv) index pairs placed in the same cluster.
double so_accuracy(std::span<const int> assignments,
                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Word -> vector table for semantic coherency.
class TypeVectors {
 public:
  /// Plain text, one "word v1 v2 ... vd" per line. An optional leading
  /// "count dim" line is accepted.
  static TypeVectors load_text(const std::filesystem::path& path);

  void add(std::string word, Eigen::VectorXd v);
  /// Exact match first, then ASCII-lowercased.
  const Eigen::VectorXd* find(const std::string& word) const;
  std::size_t size() const { return table_.size(); }
  Eigen::Index dim() const { return dim_; }

 private:
  std::unordered_map<std::string, Eigen::VectorXd> table_;
  Eigen::Index dim_ = 0;
};

struct PairSampling {
  std::size_t cap = 2000;
  std::uint64_t seed = 0;
};

/// Indices of the tokens a pairwise measure uses: all of them up to `cap`,
/// otherwise a seeded sample of `cap` indices in ascending order.
std::vector<std::size_t> pair_sample(std::size_t n, const PairSampling& sampling);

struct Coherency {
  std::optional<double> value;  // null with fewer than two in-vocabulary tokens
  std::size_t in_vocabulary = 0;
  std::size_t tokens = 0;
  bool sampled = false;
};

/// Mean cosine similarity over unordered pairs of in-vocabulary tokens.
Coherency semantic_coherency(const std::vector<std::string>& tokens, const TypeVectors& vectors,
                             const PairSampling& sampling = {});

/// Mean Metaphone-code Levenshtein distance over unordered token pairs.
/// Null for fewer than two tokens.
std::optional<double> mphone_similarity(const std::vector<std::string>& tokens,
                                        const PairSampling& sampling = {},
                                        const phonetics::MetaphoneOptions& options = {});

/// Tag distribution inside one cluster.
std::map<std::string, double> dtag_proportions(std::span<const int> assignments,
                                               std::span<const std::string> dtags, int cluster_id);

struct LdProfile {
  std::optional<double> correct_mean_ld;
  std::optional<double> error_mean_ld;
  std::size_t correct_count = 0;
  std::size_t error_count = 0;
};

/// Mean Levenshtein(std, obv) over the correctly and incorrectly co-clustered
/// pairs separately.
LdProfile ld_profile(const std::vector<std::pair<std::string, std::string>>& so_pairs,
                     const std::vector<bool>& correct);

/// Merged edit strings ranked by count (descending), ties lexicographic.
std::vector<std::pair<std::string, std::size_t>> edit_frequency_table(
    std::span<const phonetics::EditSignature> signatures);

}  // namespace orthovar::metrics
