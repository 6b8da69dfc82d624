#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "orthovar/types.hpp"

namespace orthovar::embedding {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct EmbeddingHeader {
  std::string model_id;
  std::string layer_spec;
  std::size_t dim = 0;
  std::string tokenization;
  bool operator==(const EmbeddingHeader&) const = default;
};

/// Raw hidden states for one (datapoint, variant): one subtoken x dim matrix
/// per layer, layers in model order.
struct EmbeddingRecord {
  std::string datapoint_id;
  VariantKind kind = VariantKind::Std;
  std::vector<Eigen::MatrixXf> layers;

  Eigen::Index subtoken_count() const { return layers.empty() ? 0 : layers.front().rows(); }
};

struct EmbeddingFile {
  EmbeddingHeader header;
  std::vector<EmbeddingRecord> records;
};

/// Reads the JSONL embedding schema: a header line followed by
/// {"id", "kind", "layers": [layer][subtoken][dim]} records. Shape or
/// finiteness violations throw InputError naming the record. Ids missing
/// from `known_ids` (when given) are kept with a warning.
EmbeddingFile read_embedding_file(const std::filesystem::path& path,
                                  const std::set<std::string>* known_ids = nullptr);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file);

enum class LayerAggregation { Concat, Sum, Last };

LayerAggregation parse_aggregation(const std::string& name);
std::string to_string(LayerAggregation a);

struct AggregationSpec {
  LayerAggregation strategy = LayerAggregation::Concat;
  /// Layers a record must carry for Concat and Sum.
  std::size_t layer_count = 4;
};

/// Concat -> subtokens x (L*d) in layer order; Sum -> elementwise sum;
/// Last -> final layer unchanged.
template <typename Scalar = double>
Matrix<Scalar> aggregate_layers(const EmbeddingRecord& record, const AggregationSpec& spec) {
  const auto& layers = record.layers;
  if (layers.empty()) throw InputError("record " + record.datapoint_id + " has no layers");
  if (spec.strategy == LayerAggregation::Last) return layers.back().cast<Scalar>();
  if (layers.size() != spec.layer_count) {
    throw InputError("record " + record.datapoint_id + "/" + std::string(to_string(record.kind)) +
                     " has " + std::to_string(layers.size()) + " layers, aggregation expects " +
                     std::to_string(spec.layer_count));
  }
  const Eigen::Index rows = layers.front().rows();
  const Eigen::Index d = layers.front().cols();
  if (spec.strategy == LayerAggregation::Sum) {
    Matrix<Scalar> out = Matrix<Scalar>::Zero(rows, d);
    for (const auto& l : layers) out += l.cast<Scalar>();
    return out;
  }
  Matrix<Scalar> out(rows, d * static_cast<Eigen::Index>(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.middleCols(static_cast<Eigen::Index>(l) * d, d) = layers[l].cast<Scalar>();
  }
  return out;
}

/// Mean over the subtoken (row) axis.
template <typename Derived>
Vector<typename Derived::Scalar> mean_pool(const Eigen::MatrixBase<Derived>& subtokens) {
  if (subtokens.rows() < 1) throw std::invalid_argument("mean_pool needs at least one subtoken");
  return subtokens.colwise().mean().transpose();
}

struct PointLabel {
  std::string datapoint_id;
  VariantKind kind = VariantKind::Std;
  std::string dtag;
  bool operator==(const PointLabel&) const = default;
};

enum class SetKind { Absolute, Relative };

/// One row of `vectors` per label. Rows are ordered by (datapoint id, kind).
struct PointSet {
  SetKind kind = SetKind::Absolute;
  std::vector<PointLabel> labels;
  Eigen::MatrixXf vectors;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

enum class DiffDirection { StdMinusVariant, VariantMinusStd };

DiffDirection parse_direction(const std::string& name);
std::string to_string(DiffDirection d);

struct BuildReport {
  std::vector<std::string> incomplete;   // datapoints missing a kind
  std::vector<std::string> unknown_ids;  // no dtag available
};

/// Pools every record and keeps datapoints that carry all six kinds.
/// `dtags` maps datapoint id to its tag.
PointSet build_absolute_set(const std::vector<EmbeddingRecord>& records,
                            const std::map<std::string, std::string>& dtags,
                            const AggregationSpec& spec, BuildReport* report = nullptr);

/// Five difference vectors per datapoint, one per non-std kind.
PointSet build_relative_set(const PointSet& absolute,
                            DiffDirection direction = DiffDirection::StdMinusVariant);

PointSet filter_variant_kinds(const PointSet& points, const std::set<VariantKind>& kinds);

/// JSONL {id, kind, dtag, vector}.
void write_point_set(const std::filesystem::path& path, const PointSet& points);
PointSet read_point_set(const std::filesystem::path& path, SetKind kind);

/// Layers implied by a header layer spec: "lastN" -> N, "final"/"last" -> 1.
std::size_t layers_for_spec(const std::string& layer_spec, std::size_t fallback = 4);

}  // namespace orthovar::embedding
