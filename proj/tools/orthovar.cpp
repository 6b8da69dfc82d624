#include <spdlog/spdlog.h>

#include <iostream>

#include "CLI11.hpp"
#include "orthovar/pipeline.hpp"

using namespace orthovar;
using pipeline::Stage;

namespace {

pipeline::ModelRun parse_model(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {std::filesystem::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::set<VariantKind> parse_kinds(const std::vector<std::string>& names) {
  std::set<VariantKind> out;
  for (const auto& n : names) {
    if (n == "none" || n.empty()) continue;
    auto k = parse_kind(n);
    if (!k) throw pipeline::ConfigError("unknown variant kind '" + n + "'");
    out.insert(*k);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orthovar: cluster embeddings of orthographic variants and score them"};
  app.require_subcommand(1);
  app.fallthrough();

  pipeline::RunConfig cfg;
  cfg.confusion_table = std::filesystem::path(ORTHOVAR_DATA_DIR) / "ocr_confusions.json";
  std::vector<std::string> embeddings;
  std::vector<std::string> exclude = {"rev", "swp"};
  std::string layer_agg = "concat";
  std::string diff_direction = "std-minus-var";
  std::string dtag_inventory, type_vectors, log_level = "info";

  app.add_option("--dataset", cfg.dataset, "Annotated dataset (JSONL or CSV)");
  app.add_option("--confusion-table", cfg.confusion_table, "OCR confusion table (JSON)")->capture_default_str();
  app.add_option("--embeddings", embeddings, "Embedding file per model as model_id=path (repeatable)");
  app.add_option("--out", cfg.out, "Run directory");
  app.add_option("--char-limit", cfg.char_limit, "Maximum context length in characters")->capture_default_str();
  app.add_option("--k-min", cfg.k_min, "Smallest k")->capture_default_str();
  app.add_option("--k-max", cfg.k_max, "Largest k")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app.add_option("--layer-agg", layer_agg, "Layer aggregation: concat, sum or last")->capture_default_str();
  app.add_option("--diff-direction", diff_direction, "std-minus-var or var-minus-std")->capture_default_str();
  app.add_option("--exclude-kinds", exclude, "Kinds dropped from the filtered relative set ('none' keeps all)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--dtag-inventory", dtag_inventory, "Known dialect tags as a JSON object {code: description}");
  app.add_option("--type-vectors", type_vectors, "Word vectors (text) enabling semantic coherency");
  app.add_flag("--case-fold", cfg.case_fold_match, "Case-insensitive target matching in contexts");
  app.add_flag("--reject-unknown-dtags", cfg.reject_unknown_dtags, "Reject records whose tag is not in the inventory");
  app.add_option("--ocr-mutations", cfg.ocr_mutations, "Characters changed per OCR variant")->capture_default_str();
  app.add_option("--restarts", cfg.restarts, "k-means restarts per k")->capture_default_str();
  app.add_option("--tol", cfg.tol, "Relative inertia tolerance")->capture_default_str();
  app.add_option("--max-iter", cfg.max_iter, "Lloyd iterations per restart")->capture_default_str();
  app.add_flag("--normalize", cfg.normalize, "L2-normalise vectors before clustering");
  app.add_option("--pair-cap", cfg.pair_cap, "Tokens sampled per cluster for pairwise measures (0 = all)")
      ->capture_default_str();
  app.add_option("--metaphone-max-length", cfg.metaphone_max_length, "Truncate Metaphone codes (0 = no limit)")
      ->capture_default_str();
  app.add_flag("--dtag-purity-all-kinds", cfg.dtag_purity_all_kinds,
               "Also report dtag purity on the full absolute set");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  const std::pair<const char*, Stage> commands[] = {
      {"validate", Stage::Validate},   {"mutate", Stage::Mutate},     {"build-sets", Stage::BuildSets},
      {"cluster", Stage::Cluster},     {"evaluate", Stage::Evaluate}, {"report", Stage::Report},
  };
  Stage through = Stage::Report;
  for (const auto& [name, stage] : commands) {
    app.add_subcommand(name, "Run every stage through " + std::string(name))
        ->callback([&through, stage = stage] { through = stage; });
  }
  app.add_subcommand("run", "Run the full pipeline")->callback([&through] { through = Stage::Report; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    for (const auto& e : embeddings) cfg.embeddings.push_back(parse_model(e));
    cfg.exclude_kinds = parse_kinds(exclude);
    try {
      cfg.layer_agg = embedding::parse_aggregation(layer_agg);
      cfg.diff_direction = embedding::parse_direction(diff_direction);
    } catch (const std::exception& e) {
      throw pipeline::ConfigError(e.what());
    }
    if (!dtag_inventory.empty()) cfg.dtag_inventory = dtag_inventory;
    if (!type_vectors.empty()) cfg.type_vectors = type_vectors;

    const auto summary = pipeline::run_pipeline(cfg, through);
    for (const auto& [stage, cached] : summary.cached) {
      std::cout << stage << ": " << (cached ? "cached" : "computed") << '\n';
    }
    std::cout << "outputs in " << summary.out.string() << '\n';
    return 0;
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const pipeline::StageError& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
