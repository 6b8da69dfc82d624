#include "orthovar/embedding_store.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <array>

#include "json.hpp"
#include "orthovar/text.hpp"

namespace orthovar::embedding {

namespace {

using json = nlohmann::json;

std::string where(const std::filesystem::path& path, std::size_t lineno) {
  return path.string() + ":" + std::to_string(lineno);
}

}  // namespace

LayerAggregation parse_aggregation(const std::string& name) {
  if (name == "concat") return LayerAggregation::Concat;
  if (name == "sum") return LayerAggregation::Sum;
  if (name == "last") return LayerAggregation::Last;
  throw InputError("unknown layer aggregation '" + name + "' (expected concat|sum|last)");
}

std::string to_string(LayerAggregation a) {
  switch (a) {
    case LayerAggregation::Concat: return "concat";
    case LayerAggregation::Sum: return "sum";
    case LayerAggregation::Last: return "last";
  }
  return "?";
}

DiffDirection parse_direction(const std::string& name) {
  if (name == "std-minus-var") return DiffDirection::StdMinusVariant;
  if (name == "var-minus-std") return DiffDirection::VariantMinusStd;
  throw InputError("unknown diff direction '" + name + "' (expected std-minus-var|var-minus-std)");
}

std::string to_string(DiffDirection d) {
  return d == DiffDirection::StdMinusVariant ? "std-minus-var" : "var-minus-std";
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path,
                                  const std::set<std::string>* known_ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read embedding file " + path.string());

  EmbeddingFile file;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::set<std::pair<std::string, VariantKind>> seen;

  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where(path, lineno) + ": " + e.what());
    }
    if (!have_header) {
      try {
        file.header.model_id = j.at("model_id").get<std::string>();
        file.header.layer_spec = j.at("layer_spec").get<std::string>();
        file.header.dim = j.at("dim").get<std::size_t>();
        file.header.tokenization = j.at("tokenization").get<std::string>();
      } catch (const json::exception& e) {
        throw InputError(where(path, lineno) + ": bad header: " + e.what());
      }
      if (file.header.dim == 0) throw InputError(where(path, lineno) + ": header dim must be > 0");
      have_header = true;
      continue;
    }

    EmbeddingRecord rec;
    std::string label;
    try {
      rec.datapoint_id = j.at("id").get<std::string>();
      auto kind = parse_kind(j.at("kind").get<std::string>());
      if (!kind) throw InputError("unknown kind " + j.at("kind").dump());
      rec.kind = *kind;
      label = rec.datapoint_id + "/" + std::string(orthovar::to_string(rec.kind));
      const auto& layers = j.at("layers");
      if (!layers.is_array() || layers.empty()) throw InputError("layers must be a nonempty array");
      std::size_t subtokens = 0;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (!layer.is_array() || layer.empty()) throw InputError("layer " + std::to_string(l) + " is empty");
        if (l == 0) subtokens = layer.size();
        if (layer.size() != subtokens) {
          throw InputError("ragged layers: layer " + std::to_string(l) + " has " +
                           std::to_string(layer.size()) + " subtokens, expected " +
                           std::to_string(subtokens));
        }
        Eigen::MatrixXf m(static_cast<Eigen::Index>(subtokens),
                          static_cast<Eigen::Index>(file.header.dim));
        for (std::size_t s = 0; s < subtokens; ++s) {
          const auto& row = layer[s];
          if (!row.is_array() || row.size() != file.header.dim) {
            throw InputError("layer " + std::to_string(l) + " subtoken " + std::to_string(s) +
                             " has dimension " + std::to_string(row.is_array() ? row.size() : 0) +
                             ", header says " + std::to_string(file.header.dim));
          }
          for (std::size_t d = 0; d < file.header.dim; ++d) {
            if (!row[d].is_number()) throw InputError("non-numeric value");
            const float v = row[d].get<float>();
            if (!std::isfinite(v)) throw InputError("non-finite value");
            m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d)) = v;
          }
        }
        rec.layers.push_back(std::move(m));
      }
    } catch (const std::exception& e) {
      throw InputError(where(path, lineno) + (label.empty() ? "" : " (" + label + ")") + ": " +
                       e.what());
    }
    if (!seen.emplace(rec.datapoint_id, rec.kind).second) {
      throw InputError(where(path, lineno) + ": duplicate record " + label);
    }
    if (known_ids && !known_ids->count(rec.datapoint_id)) {
      spdlog::warn("{}: embedding record for unknown datapoint {}", path.string(), rec.datapoint_id);
    }
    file.records.push_back(std::move(rec));
  }
  if (!have_header) throw InputError(path.string() + ": missing header line");
  return file;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  nlohmann::ordered_json h;
  h["model_id"] = file.header.model_id;
  h["layer_spec"] = file.header.layer_spec;
  h["dim"] = file.header.dim;
  h["tokenization"] = file.header.tokenization;
  out << h.dump() << '\n';
  for (const auto& rec : file.records) {
    nlohmann::ordered_json j;
    j["id"] = rec.datapoint_id;
    j["kind"] = orthovar::to_string(rec.kind);
    json layers = json::array();
    for (const auto& m : rec.layers) {
      json layer = json::array();
      for (Eigen::Index s = 0; s < m.rows(); ++s) {
        json row = json::array();
        for (Eigen::Index d = 0; d < m.cols(); ++d) row.push_back(m(s, d));
        layer.push_back(std::move(row));
      }
      layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    out << j.dump() << '\n';
  }
}

PointSet build_absolute_set(const std::vector<EmbeddingRecord>& records,
                            const std::map<std::string, std::string>& dtags,
                            const AggregationSpec& spec, BuildReport* report) {
  std::map<std::string, std::array<const EmbeddingRecord*, 6>> by_id;
  for (const auto& rec : records) {
    auto& slot = by_id[rec.datapoint_id];
    auto& cell = slot[kind_index(rec.kind)];
    if (cell) {
      throw InputError("duplicate embedding record " + rec.datapoint_id + "/" +
                       std::string(orthovar::to_string(rec.kind)));
    }
    cell = &rec;
  }

  PointSet out;
  out.kind = SetKind::Absolute;
  std::vector<Eigen::VectorXf> rows;
  for (const auto& [id, slot] : by_id) {
    if (std::any_of(slot.begin(), slot.end(), [](auto* p) { return p == nullptr; })) {
      spdlog::warn("datapoint {} lacks one or more variant embeddings; excluded", id);
      if (report) report->incomplete.push_back(id);
      continue;
    }
    auto tag = dtags.find(id);
    if (tag == dtags.end()) {
      spdlog::warn("datapoint {} has embeddings but no corpus entry; excluded", id);
      if (report) report->unknown_ids.push_back(id);
      continue;
    }
    for (auto k : kAllKinds) {
      Eigen::VectorXd pooled = mean_pool(aggregate_layers<double>(*slot[kind_index(k)], spec));
      if (!rows.empty() && pooled.size() != rows.front().size()) {
        throw InputError("dimension drift at " + id + "/" + std::string(orthovar::to_string(k)) +
                         ": " + std::to_string(pooled.size()) + " vs " +
                         std::to_string(rows.front().size()));
      }
      if (!pooled.allFinite()) throw InputError("non-finite pooled vector at " + id);
      rows.push_back(pooled.cast<float>());
      out.labels.push_back({id, k, tag->second});
    }
  }
  const Eigen::Index dim = rows.empty() ? 0 : rows.front().size();
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) out.vectors.row(static_cast<Eigen::Index>(r)) = rows[r];
  return out;
}

PointSet build_relative_set(const PointSet& absolute, DiffDirection direction) {
  if (absolute.kind != SetKind::Absolute) throw std::invalid_argument("relative set needs absolute input");
  std::map<std::string, std::array<Eigen::Index, 6>> rows_by_id;
  for (std::size_t r = 0; r < absolute.size(); ++r) {
    auto [it, inserted] = rows_by_id.try_emplace(absolute.labels[r].datapoint_id);
    if (inserted) it->second.fill(-1);
    auto& slot = it->second;
    slot[kind_index(absolute.labels[r].kind)] = static_cast<Eigen::Index>(r);
  }
  PointSet out;
  out.kind = SetKind::Relative;
  out.vectors.resize(static_cast<Eigen::Index>(rows_by_id.size() * kRelativeKinds.size()),
                     absolute.dim());
  Eigen::Index row = 0;
  const float sign = direction == DiffDirection::StdMinusVariant ? 1.0f : -1.0f;
  for (const auto& [id, slot] : rows_by_id) {
    const Eigen::Index std_row = slot[kind_index(VariantKind::Std)];
    if (std_row < 0) throw InputError("absolute set lacks std point for " + id);
    for (auto k : kRelativeKinds) {
      const Eigen::Index var_row = slot[kind_index(k)];
      if (var_row < 0) {
        throw InputError("absolute set lacks " + std::string(orthovar::to_string(k)) + " point for " + id);
      }
      out.vectors.row(row++) =
          sign * (absolute.vectors.row(std_row) - absolute.vectors.row(var_row));
      out.labels.push_back({id, k, absolute.labels[static_cast<std::size_t>(var_row)].dtag});
    }
  }
  return out;
}

PointSet filter_variant_kinds(const PointSet& points, const std::set<VariantKind>& kinds) {
  if (kinds.empty()) throw std::invalid_argument("filter_variant_kinds needs at least one kind");
  std::vector<Eigen::Index> keep;
  for (std::size_t r = 0; r < points.size(); ++r) {
    if (kinds.count(points.labels[r].kind)) keep.push_back(static_cast<Eigen::Index>(r));
  }
  PointSet out;
  out.kind = points.kind;
  out.vectors = points.vectors(keep, Eigen::all);
  for (auto r : keep) out.labels.push_back(points.labels[static_cast<std::size_t>(r)]);
  return out;
}

void write_point_set(const std::filesystem::path& path, const PointSet& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t r = 0; r < points.size(); ++r) {
    nlohmann::ordered_json j;
    j["id"] = points.labels[r].datapoint_id;
    j["kind"] = orthovar::to_string(points.labels[r].kind);
    j["dtag"] = points.labels[r].dtag;
    auto row = points.vectors.row(static_cast<Eigen::Index>(r));
    std::vector<float> v(static_cast<std::size_t>(row.size()));
    for (Eigen::Index d = 0; d < row.size(); ++d) v[static_cast<std::size_t>(d)] = row(d);
    j["vector"] = v;
    out << j.dump() << '\n';
  }
}

PointSet read_point_set(const std::filesystem::path& path, SetKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  PointSet out;
  out.kind = kind;
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      auto k = parse_kind(j.at("kind").get<std::string>());
      if (!k) throw InputError("unknown kind");
      out.labels.push_back({j.at("id").get<std::string>(), *k, j.at("dtag").get<std::string>()});
      rows.push_back(j.at("vector").get<std::vector<float>>());
      if (rows.back().size() != rows.front().size()) throw InputError("dimension drift");
    } catch (const std::exception& e) {
      throw InputError(where(path, lineno) + ": " + e.what());
    }
  }
  const Eigen::Index dim = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  out.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.vectors.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::RowVectorXf>(rows[r].data(), dim);
  }
  return out;
}

std::size_t layers_for_spec(const std::string& layer_spec, std::size_t fallback) {
  if (layer_spec == "final" || layer_spec == "last") return 1;
  if (layer_spec.rfind("last", 0) == 0 && layer_spec.size() > 4) {
    try {
      std::size_t pos = 0;
      const auto n = std::stoul(layer_spec.substr(4), &pos);
      if (pos == layer_spec.size() - 4 && n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return fallback;
}

}  // namespace orthovar::embedding
