#include "orthovar/mutation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "orthovar/text.hpp"

namespace orthovar::mutation {

namespace {

using json = nlohmann::json;

char32_t single_scalar(const std::string& s, const char* what) {
  auto u = text::to_scalars(s);
  if (u.size() != 1) {
    throw InputError(std::string("confusion table ") + what + " must be one character, got '" + s + "'");
  }
  return u[0];
}

}  // namespace

ConfusionTable::ConfusionTable(std::map<char32_t, std::vector<char32_t>> entries) {
  for (auto& [from, subs] : entries) {
    std::vector<char32_t> cleaned;
    for (char32_t s : subs) {
      if (s != from && std::find(cleaned.begin(), cleaned.end(), s) == cleaned.end()) {
        cleaned.push_back(s);
      }
    }
    if (cleaned.empty()) {
      throw InputError("confusion entry for '" + text::to_utf8(std::u32string(1, from)) +
                       "' has no substitute other than itself");
    }
    entries_.emplace(from, std::move(cleaned));
  }
}

ConfusionTable ConfusionTable::from_json_string(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid confusion table JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("confusion table must be a JSON object");
  std::map<char32_t, std::vector<char32_t>> entries;
  for (auto& [key, val] : j.items()) {
    if (!val.is_array() || val.empty()) {
      throw InputError("confusion table entry '" + key + "' must be a nonempty array");
    }
    auto& subs = entries[single_scalar(key, "key")];
    for (const auto& s : val) {
      if (!s.is_string()) throw InputError("confusion table values must be strings");
      subs.push_back(single_scalar(s.get<std::string>(), "value"));
    }
  }
  return ConfusionTable(std::move(entries));
}

ConfusionTable ConfusionTable::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read confusion table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

const std::vector<char32_t>* ConfusionTable::substitutes(char32_t c) const {
  auto it = entries_.find(c);
  return it == entries_.end() ? nullptr : &it->second;
}

std::u32string default_alphabet() { return U"abcdefghijklmnopqrstuvwxyz"; }

std::string reverse_variant(const std::string& word) {
  auto s = text::to_scalars(word);
  std::reverse(s.begin(), s.end());
  return text::to_utf8(s);
}

Mutated random_char_variant(const std::string& word, Rng& rng, const std::u32string& alphabet) {
  std::u32string symbols;
  for (char32_t c : alphabet) {
    if (symbols.find(c) == std::u32string::npos) symbols.push_back(c);
  }
  if (symbols.size() < 2) throw std::invalid_argument("alphabet needs at least two symbols");
  auto s = text::to_scalars(word);
  if (s.empty()) throw std::invalid_argument("cannot mutate an empty word");

  const std::size_t pos = draw_index(rng, s.size());
  std::u32string candidates;
  for (char32_t c : symbols) {
    if (c != s[pos]) candidates.push_back(c);
  }
  s[pos] = candidates[draw_index(rng, candidates.size())];
  return {text::to_utf8(s), false, false};
}

Mutated ocr_variant(const std::string& word, const ConfusionTable& table, Rng& rng,
                    std::size_t mutations, const std::u32string& alphabet) {
  if (table.empty()) throw InputError("empty confusion table");
  if (mutations == 0) throw std::invalid_argument("ocr mutation count must be >= 1");
  auto s = text::to_scalars(word);
  if (s.empty()) throw std::invalid_argument("cannot mutate an empty word");

  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (table.substitutes(s[i])) positions.push_back(i);
  }
  if (positions.empty()) {
    auto m = random_char_variant(word, rng, alphabet);
    m.fallback = true;
    return m;
  }
  const std::size_t count = std::min(mutations, positions.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(positions[i], positions[i + draw_index(rng, positions.size() - i)]);
  }
  std::sort(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const auto& subs = *table.substitutes(s[positions[i]]);
    s[positions[i]] = subs[draw_index(rng, subs.size())];
  }
  return {text::to_utf8(s), false, false};
}

Mutated swap_variant(const std::string& word, Rng& rng, const std::u32string& alphabet) {
  auto s = text::to_scalars(word);
  if (s.empty()) throw std::invalid_argument("cannot mutate an empty word");
  if (s.size() == 1) {
    auto m = random_char_variant(word, rng, alphabet);
    m.degenerate = true;
    m.fallback = true;
    return m;
  }
  // Drawing uniformly among effective positions is the same distribution as
  // redrawing until the transposition changes the word.
  std::vector<std::size_t> effective;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] != s[i + 1]) effective.push_back(i);
  }
  if (effective.empty()) return {word, true, false};
  const std::size_t pos = effective[draw_index(rng, effective.size())];
  std::swap(s[pos], s[pos + 1]);
  return {text::to_utf8(s), false, false};
}

VariantSet build_variant_set(const corpus::DataPoint& dp, const ConfusionTable& table,
                             std::uint64_t master_seed, const MutationOptions& options) {
  VariantSet vs;
  vs.datapoint_id = dp.id;
  vs.forms[VariantKind::Std] = dp.standard;
  vs.forms[VariantKind::Obv] = dp.observed;

  vs.forms[VariantKind::Rev] = reverse_variant(dp.standard);
  if (vs.forms[VariantKind::Rev] == dp.standard) vs.degenerate.insert(VariantKind::Rev);

  auto stream = [&](VariantKind k) {
    return Rng(derive_seed(derive_seed(master_seed, dp.id), to_string(k)));
  };
  auto record = [&](VariantKind k, const Mutated& m) {
    vs.forms[k] = m.form;
    if (m.degenerate || m.form == dp.standard) vs.degenerate.insert(k);
    if (m.fallback) vs.fallback.insert(k);
  };

  {
    auto rng = stream(VariantKind::Ocr);
    record(VariantKind::Ocr,
           ocr_variant(dp.standard, table, rng, options.ocr_mutations, options.alphabet));
  }
  {
    auto rng = stream(VariantKind::Swp);
    record(VariantKind::Swp, swap_variant(dp.standard, rng, options.alphabet));
  }
  {
    auto rng = stream(VariantKind::Rnd);
    record(VariantKind::Rnd, random_char_variant(dp.standard, rng, options.alphabet));
  }
  return vs;
}

std::vector<VariantSet> build_variant_sets(const std::vector<corpus::DataPoint>& points,
                                           const ConfusionTable& table,
                                           std::uint64_t master_seed,
                                           const MutationOptions& options) {
  std::vector<VariantSet> out;
  out.reserve(points.size());
  for (const auto& dp : points) out.push_back(build_variant_set(dp, table, master_seed, options));
  return out;
}

void write_variants(const std::filesystem::path& path, const std::vector<VariantSet>& sets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& vs : sets) {
    for (auto k : kAllKinds) {
      nlohmann::ordered_json j;
      j["id"] = vs.datapoint_id;
      j["kind"] = to_string(k);
      j["form"] = vs.form(k);
      j["degenerate"] = vs.degenerate.count(k) != 0;
      j["fallback"] = vs.fallback.count(k) != 0;
      out << j.dump() << '\n';
    }
  }
}

std::vector<VariantSet> read_variants(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read variants " + path.string());
  std::vector<VariantSet> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw InputError(path.string() + ":" + std::to_string(lineno) + ": unknown kind");
    const auto id = j.at("id").get<std::string>();
    auto [it, inserted] = index.emplace(id, out.size());
    if (inserted) {
      out.emplace_back();
      out.back().datapoint_id = id;
    }
    auto& vs = out[it->second];
    vs.forms[*kind] = j.at("form").get<std::string>();
    if (j.value("degenerate", false)) vs.degenerate.insert(*kind);
    if (j.value("fallback", false)) vs.fallback.insert(*kind);
  }
  for (const auto& vs : out) {
    if (vs.forms.size() != kAllKinds.size()) {
      throw InputError("variant set for " + vs.datapoint_id + " is incomplete");
    }
  }
  return out;
}

}  // namespace orthovar::mutation
