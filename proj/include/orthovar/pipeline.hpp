#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orthovar/embedding_store.hpp"
#include "orthovar/types.hpp"

namespace orthovar::pipeline {

struct ModelRun {
  std::string model_id;
  std::filesystem::path path;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path confusion_table;
  std::vector<ModelRun> embeddings;
  std::optional<std::filesystem::path> dtag_inventory;
  std::optional<std::filesystem::path> type_vectors;
  std::filesystem::path out;

  std::size_t char_limit = 512;
  std::size_t k_min = 1;
  std::size_t k_max = 20;
  std::uint64_t seed = 20240601;
  embedding::LayerAggregation layer_agg = embedding::LayerAggregation::Concat;
  embedding::DiffDirection diff_direction = embedding::DiffDirection::StdMinusVariant;
  std::set<VariantKind> exclude_kinds = {VariantKind::Rev, VariantKind::Swp};

  // corpus
  bool case_fold_match = false;
  bool reject_unknown_dtags = false;
  // mutation
  std::size_t ocr_mutations = 1;
  // clustering
  std::size_t restarts = 5;
  double tol = 1e-6;
  std::size_t max_iter = 300;
  bool normalize = false;
  // metrics
  std::size_t pair_cap = 2000;
  std::size_t metaphone_max_length = 0;
  bool dtag_purity_all_kinds = false;
};

enum class Stage { Validate, Mutate, BuildSets, Cluster, Evaluate, Report };

std::string to_string(Stage s);

/// Invalid configuration or unusable inputs; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage failed while running; maps to exit code 3.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what)
      : std::runtime_error(to_string(stage) + ": " + what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

/// Checks that every file the requested stages need exists and that
/// numeric settings are in range.
void validate_config(const RunConfig& config, Stage through = Stage::Report);

struct RunSummary {
  std::filesystem::path out;
  std::map<std::string, bool> cached;  // stage instance -> reused from cache
};

/// Runs every stage up to and including `through`. Stage outputs are cached
/// in the run directory keyed by a hash of their inputs and settings, so a
/// re-run recomputes only stages whose inputs changed. Always rewrites
/// manifest.json.
RunSummary run_pipeline(const RunConfig& config, Stage through = Stage::Report);

/// Curves (CSV, always) and SVG charts from a metrics report. Returns the
/// written files relative to `out`. Chart failures degrade to CSV only.
std::vector<std::string> emit_figures(const nlohmann::json& metrics, const std::filesystem::path& out);

/// Canonical names of the clustered sets per model run.
inline constexpr const char* kSetNames[] = {"absolute_full", "absolute_obv", "relative_full",
                                            "relative_filtered", "relative_obv"};

}  // namespace orthovar::pipeline
