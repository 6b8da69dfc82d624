#include "orthovar/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "orthovar/seeding.hpp"
#include "orthovar/text.hpp"
#include "orthovar/types.hpp"

namespace orthovar::metrics {

namespace {

void check_index(std::span<const int> assignments, std::size_t idx) {
  if (idx >= assignments.size()) {
    throw std::out_of_range("point index " + std::to_string(idx) + " outside assignment of size " +
                            std::to_string(assignments.size()));
  }
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double overall_accuracy(std::span<const int> assignments,
                        const std::vector<std::vector<std::size_t>>& groups) {
  if (groups.empty()) throw std::invalid_argument("overall_accuracy: no groups");
  std::size_t intact = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("overall_accuracy: empty group");
    for (auto idx : g) check_index(assignments, idx);
    const int c = assignments[g.front()];
    if (std::all_of(g.begin(), g.end(), [&](std::size_t idx) { return assignments[idx] == c; })) ++intact;
  }
  return static_cast<double>(intact) / static_cast<double>(groups.size());
}

double partial_accuracy(std::span<const int> assignments,
                        const std::vector<std::vector<std::size_t>>& groups) {
  if (groups.empty()) throw std::invalid_argument("partial_accuracy: no groups");
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("partial_accuracy: empty group");
    std::map<int, std::size_t> counts;
    for (auto idx : g) {
      check_index(assignments, idx);
      ++counts[assignments[idx]];
    }
    std::size_t best = 0;
    for (const auto& [c, n] : counts) best = std::max(best, n);
    total += static_cast<double>(best) / static_cast<double>(g.size());
  }
  return total / static_cast<double>(groups.size());
}

double so_accuracy(std::span<const int> assignments,
                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("so_accuracy: no pairs");
  std::size_t together = 0;
  for (const auto& [s, o] : pairs) {
    check_index(assignments, s);
    check_index(assignments, o);
    if (assignments[s] == assignments[o]) ++together;
  }
  return static_cast<double>(together) / static_cast<double>(pairs.size());
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: size mismatch");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [key, v] : table) index += choose2(v);
  for (const auto& [key, v] : rows) sum_a += choose2(v);
  for (const auto& [key, v] : cols) sum_b += choose2(v);
  const double total = choose2(n);
  if (total == 0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

TypeVectors TypeVectors::load_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read type vectors " + path.string());
  TypeVectors tv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw InputError(path.string() + ":" + std::to_string(lineno) + ": non-numeric value");
    // word2vec text header "count dim"
    if (lineno == 1 && values.size() == 1 && std::all_of(word.begin(), word.end(), ::isdigit)) continue;
    if (values.empty()) throw InputError(path.string() + ":" + std::to_string(lineno) + ": no vector");
    tv.add(word, Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return tv;
}

void TypeVectors::add(std::string word, Eigen::VectorXd v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) {
    throw InputError("type vector for '" + word + "' has dimension " + std::to_string(v.size()) +
                     ", expected " + std::to_string(dim_));
  }
  table_.insert_or_assign(std::move(word), std::move(v));
}

const Eigen::VectorXd* TypeVectors::find(const std::string& word) const {
  if (auto it = table_.find(word); it != table_.end()) return &it->second;
  std::string lower = word;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (auto it = table_.find(lower); it != table_.end()) return &it->second;
  return nullptr;
}

std::vector<std::size_t> pair_sample(std::size_t n, const PairSampling& sampling) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (sampling.cap == 0 || n <= sampling.cap) return idx;
  Rng rng(sampling.seed);
  for (std::size_t i = 0; i < sampling.cap; ++i) {
    std::swap(idx[i], idx[i + draw_index(rng, n - i)]);
  }
  idx.resize(sampling.cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Coherency semantic_coherency(const std::vector<std::string>& tokens, const TypeVectors& vectors,
                             const PairSampling& sampling) {
  Coherency out;
  out.tokens = tokens.size();
  std::vector<Eigen::VectorXd> unit;
  for (const auto& t : tokens) {
    const auto* v = vectors.find(t);
    if (!v || v->norm() == 0.0) continue;
    unit.push_back(v->normalized());
  }
  out.in_vocabulary = unit.size();
  const auto idx = pair_sample(unit.size(), sampling);
  out.sampled = idx.size() < unit.size();
  if (idx.size() < 2) return out;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      sum += unit[idx[i]].dot(unit[idx[j]]);
      ++pairs;
    }
  }
  out.value = sum / static_cast<double>(pairs);
  return out;
}

std::optional<double> mphone_similarity(const std::vector<std::string>& tokens,
                                        const PairSampling& sampling,
                                        const phonetics::MetaphoneOptions& options) {
  const auto idx = pair_sample(tokens.size(), sampling);
  if (idx.size() < 2) return std::nullopt;
  std::vector<std::u32string> codes;
  codes.reserve(idx.size());
  for (auto i : idx) codes.push_back(text::to_scalars(phonetics::metaphone(tokens[i], options)));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      sum += static_cast<double>(phonetics::levenshtein(codes[i], codes[j]));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

std::map<std::string, double> dtag_proportions(std::span<const int> assignments,
                                               std::span<const std::string> dtags, int cluster_id) {
  if (assignments.size() != dtags.size()) throw std::invalid_argument("dtag_proportions: size mismatch");
  std::map<std::string, std::size_t> counts;
  std::size_t size = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != cluster_id) continue;
    ++counts[dtags[i]];
    ++size;
  }
  if (size == 0) throw std::invalid_argument("cluster " + std::to_string(cluster_id) + " is empty");
  std::map<std::string, double> out;
  for (const auto& [tag, n] : counts) out[tag] = static_cast<double>(n) / static_cast<double>(size);
  return out;
}

LdProfile ld_profile(const std::vector<std::pair<std::string, std::string>>& so_pairs,
                     const std::vector<bool>& correct) {
  if (so_pairs.size() != correct.size()) throw std::invalid_argument("ld_profile: size mismatch");
  LdProfile p;
  double correct_sum = 0, error_sum = 0;
  for (std::size_t i = 0; i < so_pairs.size(); ++i) {
    const double ld = static_cast<double>(phonetics::levenshtein(so_pairs[i].first, so_pairs[i].second));
    if (correct[i]) {
      correct_sum += ld;
      ++p.correct_count;
    } else {
      error_sum += ld;
      ++p.error_count;
    }
  }
  if (p.correct_count) p.correct_mean_ld = correct_sum / static_cast<double>(p.correct_count);
  if (p.error_count) p.error_mean_ld = error_sum / static_cast<double>(p.error_count);
  return p;
}

std::vector<std::pair<std::string, std::size_t>> edit_frequency_table(
    std::span<const phonetics::EditSignature> signatures) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sig : signatures) {
    for (const auto& op : sig.ops) ++counts[op.merged()];
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace orthovar::metrics
