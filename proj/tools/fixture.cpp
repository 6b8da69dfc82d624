#include "fixture.hpp"

#include <Eigen/Dense>

#include <fstream>
#include <random>
#include <vector>

#include "json.hpp"
#include "orthovar/embedding_store.hpp"
#include "orthovar/seeding.hpp"

namespace orthovar::fixture {

namespace fs = std::filesystem;

namespace {

const char* kTags[] = {"SOUTH", "NORTH", "COAST", "HILLS", "RIVER", "PLAIN", "ISLE", "MARSH"};

std::string tag_name(std::size_t t) {
  constexpr std::size_t n = sizeof kTags / sizeof kTags[0];
  return t < n ? kTags[t] : "TAG" + std::to_string(t);
}

std::string make_word(Rng& rng) {
  static const std::string onsets[] = {"b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "bl", "st", "gr", "th"};
  static const std::string vowels[] = {"a", "e", "i", "o", "u", "ea", "oo"};
  static const std::string codas[] = {"n", "r", "t", "ng", "ck", "st", "ll", "d"};
  std::string w;
  const std::size_t syllables = 1 + draw_index(rng, 2);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += onsets[draw_index(rng, std::size(onsets))];
    w += vowels[draw_index(rng, std::size(vowels))];
  }
  w += codas[draw_index(rng, std::size(codas))];
  return w;
}

// One recognisable respelling habit per tag.
std::string respell(const std::string& w, std::size_t tag) {
  switch (tag % 4) {
    case 0: return w.substr(0, w.size() - 1);
    case 1: return w + "h";
    case 2: return w.substr(0, w.size() - 1) + "a";
    default: return w + w.back();
  }
}

Eigen::VectorXd gaussian(std::size_t d, double sd, Rng& rng) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
  return v;
}

struct Layout {
  std::vector<std::string> ids;
  std::vector<std::size_t> tags;
};

Layout layout(const FixtureOptions& o) {
  Layout l;
  Rng rng(derive_seed(o.seed, "tags"));
  for (std::size_t i = 0; i < o.datapoints; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "dp%05zu", i);
    l.ids.emplace_back(id);
    l.tags.push_back(draw_index(rng, o.tags));
  }
  return l;
}

}  // namespace

fs::path write_fixture_embeddings(const fs::path& dir, const FixtureOptions& o) {
  fs::create_directories(dir);
  const auto l = layout(o);
  Rng rng(derive_seed(o.seed, "embeddings/" + o.model_id));

  std::vector<Eigen::VectorXd> offsets;
  for (std::size_t k = 0; k < kRelativeKinds.size(); ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(o.dim));
    v[static_cast<Eigen::Index>(k % o.dim)] = o.offset_norm;
    offsets.push_back(v);
  }
  std::vector<Eigen::VectorXd> centres;
  for (std::size_t t = 0; t < o.tags; ++t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(o.dim));
    c[static_cast<Eigen::Index>((kRelativeKinds.size() + t) % o.dim)] = o.tag_spread;
    centres.push_back(c);
  }
  const double sd = o.noise_ratio * o.offset_norm;

  embedding::EmbeddingFile file;
  file.header = {o.model_id, "final", o.dim, "synthetic"};
  for (std::size_t i = 0; i < l.ids.size(); ++i) {
    const Eigen::VectorXd base = centres[l.tags[i]] + gaussian(o.dim, sd, rng);
    for (auto kind : kAllKinds) {
      Eigen::VectorXd v = base;
      if (kind != VariantKind::Std) v += offsets[kind_index(kind) - 1] + gaussian(o.dim, sd, rng);
      // Subtoken rows scatter around v and average back to it.
      const std::size_t rows = 1 + draw_index(rng, std::max<std::size_t>(o.subtokens_max, 1));
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(o.dim));
      for (std::size_t r = 0; r < rows; ++r) m.row(static_cast<Eigen::Index>(r)) = gaussian(o.dim, sd, rng).transpose();
      m.rowwise() -= m.colwise().mean();
      m.rowwise() += v.transpose();
      file.records.push_back({l.ids[i], kind, {m.cast<float>()}});
    }
  }
  const auto path = dir / ("embeddings_" + o.model_id + ".jsonl");
  embedding::write_embedding_file(path, file);
  return path;
}

FixturePaths write_fixture(const fs::path& dir, const FixtureOptions& o) {
  fs::create_directories(dir);
  const auto l = layout(o);
  Rng rng(derive_seed(o.seed, "words"));
  FixturePaths paths;
  paths.dataset = dir / "dataset.jsonl";
  paths.type_vectors = dir / "types.txt";

  std::ofstream data(paths.dataset, std::ios::binary);
  std::ofstream types(paths.type_vectors, std::ios::binary);
  std::vector<Eigen::VectorXd> tag_dirs;
  for (std::size_t t = 0; t < o.tags; ++t) tag_dirs.push_back(gaussian(8, 1.0, rng));
  for (std::size_t i = 0; i < l.ids.size(); ++i) {
    const std::string standard = make_word(rng);
    const std::string observed = respell(standard, l.tags[i]);
    nlohmann::ordered_json j;
    j["id"] = l.ids[i];
    j["standard"] = standard;
    j["observed"] = observed;
    j["context"] = "and then the " + observed + " was gone";
    j["dtag"] = tag_name(l.tags[i]);
    j["target_offset"] = 13;
    data << j.dump() << '\n';

    const Eigen::VectorXd tv = tag_dirs[l.tags[i]] + gaussian(8, 0.5, rng);
    types << observed;
    for (Eigen::Index d = 0; d < tv.size(); ++d) types << ' ' << tv[d];
    types << '\n';
  }
  paths.embeddings = write_fixture_embeddings(dir, o);
  return paths;
}

}  // namespace orthovar::fixture
