#include "orthovar/pipeline.hpp"

#include <fcntl.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "orthovar/clustering_io.hpp"
#include "orthovar/corpus.hpp"
#include "orthovar/hashing.hpp"
#include "orthovar/kmeans.hpp"
#include "orthovar/metrics.hpp"
#include "orthovar/mutation.hpp"
#include "orthovar/phonetics.hpp"
#include "orthovar/plot.hpp"
#include "orthovar/seeding.hpp"

namespace orthovar::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Validate: return "validate";
    case Stage::Mutate: return "mutate";
    case Stage::BuildSets: return "build-sets";
    case Stage::Cluster: return "cluster";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "?";
}

namespace {

constexpr std::size_t kTopEdits = 10;

// Exclusive lock on a run directory for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw ConfigError("run directory is locked by another run (" + path_.string() + ")");
      }
      throw ConfigError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~RunLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

std::string rel(const fs::path& p) { return p.generic_string(); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt2(const json& v) {
  if (v.is_null()) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v.get<double>());
  return buf;
}

std::string fmt_full(const json& v) {
  if (v.is_null()) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  if (!out) throw InputError("failed writing " + path.string());
}

// Stage outputs cached by input key. A hit needs a matching key and every
// recorded output present with its recorded hash.
class StageCache {
 public:
  explicit StageCache(fs::path out) : out_(std::move(out)) {}

  bool hit(const std::string& name, const std::string& key) const {
    std::ifstream in(entry(name));
    if (!in) return false;
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception&) {
      return false;
    }
    if (j.value("key", "") != key) return false;
    for (auto& [file, hash] : j.at("outputs").items()) {
      const fs::path p = out_ / file;
      if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) return false;
    }
    return true;
  }

  void store(const std::string& name, const std::string& key, const std::vector<std::string>& outputs) const {
    fs::create_directories(out_ / ".cache");
    ojson j;
    j["key"] = key;
    ojson files = ojson::object();
    for (const auto& f : outputs) files[f] = sha256_file(out_ / f);
    j["outputs"] = files;
    write_text(entry(name), j.dump(2) + "\n");
  }

 private:
  fs::path entry(const std::string& name) const { return out_ / ".cache" / (safe_name(name) + ".json"); }
  fs::path out_;
};

struct ModelData {
  ModelRun run;
  embedding::EmbeddingHeader header;
  embedding::PointSet absolute;
  embedding::PointSet relative;
  std::map<std::string, embedding::PointSet> sets;
  std::map<std::string, std::vector<clustering::SweepEntry>> sweeps;
  std::string sets_key;
  std::string cluster_key;
  fs::path dir() const { return fs::path("sets") / safe_name(run.model_id); }
  fs::path cluster_dir() const { return fs::path("clusters") / safe_name(run.model_id); }
};

class Runner {
 public:
  explicit Runner(const RunConfig& cfg) : cfg_(cfg), out_(cfg.out), cache_(cfg.out) {}

  RunSummary run(Stage through) {
    summary_.out = out_;
    step(Stage::Validate, [&] { validate(); });
    if (through >= Stage::Mutate) step(Stage::Mutate, [&] { mutate(); });
    if (through >= Stage::BuildSets) step(Stage::BuildSets, [&] { build_sets(); });
    if (through >= Stage::Cluster) step(Stage::Cluster, [&] { cluster(); });
    if (through >= Stage::Evaluate) step(Stage::Evaluate, [&] { evaluate(); });
    if (through >= Stage::Report) step(Stage::Report, [&] { report(); });
    write_manifest(through);
    return summary_;
  }

 private:
  template <typename F>
  void step(Stage stage, F&& body) {
    try {
      body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }

  std::string input_hash(const fs::path& p) {
    auto key = p.string();
    auto it = inputs_.find(key);
    if (it == inputs_.end()) it = inputs_.emplace(key, sha256_file(p)).first;
    return it->second;
  }

  static std::string key_of(const std::string& stage, const ojson& fragment) {
    return sha256_hex(stage + "\n" + fragment.dump());
  }

  // Returns true when the cached outputs were reused.
  template <typename Compute, typename Load>
  bool cached_stage(const std::string& name, const std::string& key, Compute&& compute, Load&& load) {
    if (cache_.hit(name, key)) {
      try {
        load();
        summary_.cached[name] = true;
        stage_keys_[name] = key;
        spdlog::info("{}: reusing cached outputs", name);
        return true;
      } catch (const std::exception& e) {
        spdlog::warn("{}: cached outputs unreadable ({}); recomputing", name, e.what());
      }
    }
    std::vector<std::string> outputs = compute();
    cache_.store(name, key, outputs);
    for (const auto& o : outputs) produced_.insert(o);
    summary_.cached[name] = false;
    stage_keys_[name] = key;
    return false;
  }

  void note_outputs(const std::vector<std::string>& outputs) {
    for (const auto& o : outputs) produced_.insert(o);
  }

  // ---- validate -------------------------------------------------------

  void validate() {
    ojson frag;
    frag["dataset"] = input_hash(cfg_.dataset);
    frag["dtag_inventory"] = cfg_.dtag_inventory ? input_hash(*cfg_.dtag_inventory) : "";
    frag["char_limit"] = cfg_.char_limit;
    frag["case_fold"] = cfg_.case_fold_match;
    frag["reject_unknown_dtags"] = cfg_.reject_unknown_dtags;
    validate_key_ = key_of("validate", frag);

    const std::vector<std::string> outputs = {"corpus/datapoints.jsonl", "corpus/rejections.jsonl",
                                              "corpus/summary.json"};
    cached_stage(
        "validate", validate_key_,
        [&] {
          fs::create_directories(out_ / "corpus");
          corpus::DtagInventory inventory;
          if (cfg_.dtag_inventory) inventory = corpus::DtagInventory::from_json_file(*cfg_.dtag_inventory);
          corpus::LoadOptions opts;
          opts.case_fold_match = cfg_.case_fold_match;
          opts.unknown_dtags = cfg_.reject_unknown_dtags ? corpus::UnknownDtagPolicy::Reject
                                                         : corpus::UnknownDtagPolicy::Register;
          auto loaded = corpus::load_dataset(cfg_.dataset, corpus::format_for(cfg_.dataset),
                                             std::move(inventory), opts);
          datapoints_ = corpus::truncate_by_char_limit(loaded.datapoints, cfg_.char_limit);
          if (!loaded.rejections.empty()) {
            spdlog::warn("validate: {} records rejected (see corpus/rejections.jsonl)", loaded.rejections.size());
          }
          corpus::write_jsonl(out_ / "corpus/datapoints.jsonl", datapoints_);
          corpus::write_rejections(out_ / "corpus/rejections.jsonl", loaded.rejections);

          ojson summary;
          summary["loaded"] = loaded.datapoints.size();
          summary["rejected"] = loaded.rejections.size();
          summary["char_limit"] = cfg_.char_limit;
          summary["after_truncation"] = datapoints_.size();
          summary["tag_histogram_loaded"] = corpus::tag_histogram(loaded.datapoints);
          summary["tag_histogram"] = corpus::tag_histogram(datapoints_);
          summary["dtag_inventory"] = loaded.inventory.codes();
          write_text(out_ / "corpus/summary.json", summary.dump(2) + "\n");
          return outputs;
        },
        [&] {
          auto reloaded = corpus::load_dataset(out_ / "corpus/datapoints.jsonl", corpus::Format::Jsonl, {},
                                               {corpus::UnknownDtagPolicy::Register, cfg_.case_fold_match});
          if (!reloaded.rejections.empty()) throw InputError("cached datapoints failed validation");
          datapoints_ = std::move(reloaded.datapoints);
        });
    note_outputs(outputs);
    for (const auto& dp : datapoints_) by_id_[dp.id] = &dp;
  }

  // ---- mutate ---------------------------------------------------------

  void mutate() {
    ojson frag;
    frag["validate"] = validate_key_;
    frag["confusion_table"] = input_hash(cfg_.confusion_table);
    frag["seed"] = cfg_.seed;
    frag["ocr_mutations"] = cfg_.ocr_mutations;
    mutate_key_ = key_of("mutate", frag);
    const std::vector<std::string> outputs = {"variants.jsonl", "edits.jsonl"};
    cached_stage(
        "mutate", mutate_key_,
        [&] {
          auto table = mutation::ConfusionTable::from_json_file(cfg_.confusion_table);
          mutation::MutationOptions opts;
          opts.ocr_mutations = cfg_.ocr_mutations;
          variants_ = mutation::build_variant_sets(datapoints_, table, cfg_.seed, opts);
          mutation::write_variants(out_ / "variants.jsonl", variants_);

          std::ofstream edits(out_ / "edits.jsonl", std::ios::binary);
          for (const auto& dp : datapoints_) {
            auto sig = phonetics::edit_signature(dp.standard, dp.observed);
            ojson j;
            j["id"] = dp.id;
            j["merged"] = sig.merged;
            ojson ops = ojson::array();
            for (const auto& op : sig.ops) {
              ojson o;
              o["kind"] = op.kind == phonetics::EditKind::Sub ? "sub" : op.kind == phonetics::EditKind::Ins ? "ins" : "del";
              o["source"] = op.source;
              o["target"] = op.target;
              o["position"] = op.position;
              ops.push_back(o);
            }
            j["ops"] = ops;
            edits << j.dump() << '\n';
          }
          return outputs;
        },
        [&] { variants_ = mutation::read_variants(out_ / "variants.jsonl"); });
    note_outputs(outputs);
    for (const auto& vs : variants_) variants_by_id_[vs.datapoint_id] = &vs;
  }

  // ---- build-sets -----------------------------------------------------

  void build_sets() {
    std::set<std::string> known;
    std::map<std::string, std::string> dtags;
    for (const auto& dp : datapoints_) {
      known.insert(dp.id);
      dtags[dp.id] = dp.dtag;
    }
    for (const auto& run : cfg_.embeddings) {
      ModelData m;
      m.run = run;
      ojson frag;
      frag["validate"] = validate_key_;
      frag["model_id"] = run.model_id;
      frag["embeddings"] = input_hash(run.path);
      frag["layer_agg"] = embedding::to_string(cfg_.layer_agg);
      frag["diff_direction"] = embedding::to_string(cfg_.diff_direction);
      m.sets_key = key_of("build-sets", frag);
      const auto dir = m.dir();
      const std::vector<std::string> outputs = {rel(dir / "absolute.jsonl"), rel(dir / "relative.jsonl"),
                                                rel(dir / "build_report.json")};
      cached_stage(
          "build-sets/" + run.model_id, m.sets_key,
          [&] {
            fs::create_directories(out_ / dir);
            auto file = embedding::read_embedding_file(run.path, &known);
            m.header = file.header;
            embedding::AggregationSpec spec{cfg_.layer_agg, embedding::layers_for_spec(file.header.layer_spec)};
            embedding::BuildReport br;
            m.absolute = embedding::build_absolute_set(file.records, dtags, spec, &br);
            m.relative = embedding::build_relative_set(m.absolute, cfg_.diff_direction);
            embedding::write_point_set(out_ / dir / "absolute.jsonl", m.absolute);
            embedding::write_point_set(out_ / dir / "relative.jsonl", m.relative);
            ojson report;
            report["model_id"] = file.header.model_id;
            report["layer_spec"] = file.header.layer_spec;
            report["dim"] = file.header.dim;
            report["tokenization"] = file.header.tokenization;
            report["aggregation"] = embedding::to_string(spec.strategy);
            report["aggregated_layers"] = spec.layer_count;
            report["records"] = file.records.size();
            report["complete_datapoints"] = m.absolute.size() / kAllKinds.size();
            report["incomplete"] = br.incomplete;
            report["not_in_corpus"] = br.unknown_ids;
            write_text(out_ / dir / "build_report.json", report.dump(2) + "\n");
            return outputs;
          },
          [&] {
            m.absolute = embedding::read_point_set(out_ / dir / "absolute.jsonl", embedding::SetKind::Absolute);
            m.relative = embedding::read_point_set(out_ / dir / "relative.jsonl", embedding::SetKind::Relative);
            std::ifstream in(out_ / dir / "build_report.json");
            auto r = json::parse(in);
            m.header = {r.at("model_id").get<std::string>(), r.at("layer_spec").get<std::string>(),
                        r.at("dim").get<std::size_t>(), r.at("tokenization").get<std::string>()};
          });
      note_outputs(outputs);

      std::set<VariantKind> filtered;
      for (auto k : kRelativeKinds) {
        if (!cfg_.exclude_kinds.count(k)) filtered.insert(k);
      }
      m.sets["absolute_full"] = m.absolute;
      m.sets["absolute_obv"] = embedding::filter_variant_kinds(m.absolute, {VariantKind::Obv});
      m.sets["relative_full"] = m.relative;
      m.sets["relative_filtered"] = embedding::filter_variant_kinds(m.relative, filtered);
      m.sets["relative_obv"] = embedding::filter_variant_kinds(m.relative, {VariantKind::Obv});
      models_.push_back(std::move(m));
    }
  }

  // ---- cluster --------------------------------------------------------

  std::uint64_t set_seed(const std::string& set) const { return derive_seed(cfg_.seed, "kmeans/" + set); }

  void cluster() {
    for (auto& m : models_) {
      ojson frag;
      frag["sets"] = m.sets_key;
      frag["k_min"] = cfg_.k_min;
      frag["k_max"] = cfg_.k_max;
      frag["seed"] = cfg_.seed;
      frag["restarts"] = cfg_.restarts;
      frag["tol"] = cfg_.tol;
      frag["max_iter"] = cfg_.max_iter;
      frag["normalize"] = cfg_.normalize;
      ojson excl = ojson::array();
      for (auto k : cfg_.exclude_kinds) excl.push_back(orthovar::to_string(k));
      frag["exclude_kinds"] = excl;
      m.cluster_key = key_of("cluster", frag);

      std::vector<std::string> outputs;
      for (const char* set : kSetNames) outputs.push_back(rel(m.cluster_dir() / (std::string(set) + ".jsonl")));
      cached_stage(
          "cluster/" + m.run.model_id, m.cluster_key,
          [&] {
            fs::create_directories(out_ / m.cluster_dir());
            for (const char* set : kSetNames) {
              const auto& ps = m.sets.at(set);
              if (ps.size() < cfg_.k_max) {
                throw InputError("model " + m.run.model_id + " set " + set + " has " + std::to_string(ps.size()) +
                                 " points, fewer than k_max=" + std::to_string(cfg_.k_max));
              }
            }
            for (const char* set : kSetNames) {
              const auto& ps = m.sets.at(set);
              Eigen::MatrixXd x = ps.vectors.cast<double>();
              if (cfg_.normalize) x = clustering::normalize_rows(x);
              clustering::KMeansOptions opt;
              opt.seed = set_seed(set);
              opt.tol = cfg_.tol;
              opt.max_iter = cfg_.max_iter;
              opt.restarts = cfg_.restarts;
              spdlog::info("cluster: {} {} ({} points, k={}..{})", m.run.model_id, set, ps.size(), cfg_.k_min,
                           cfg_.k_max);
              auto results = clustering::kmeans_sweep(x, cfg_.k_min, cfg_.k_max, opt);
              std::vector<clustering::SweepEntry> entries;
              for (const auto& r : results) entries.push_back(clustering::to_entry(r));
              clustering::write_sweep(out_ / m.cluster_dir() / (std::string(set) + ".jsonl"), entries);
              m.sweeps[set] = std::move(entries);
            }
            return outputs;
          },
          [&] {
            for (const char* set : kSetNames) {
              m.sweeps[set] = clustering::read_sweep(out_ / m.cluster_dir() / (std::string(set) + ".jsonl"));
              for (const auto& e : m.sweeps[set]) {
                if (e.assignments.size() != m.sets.at(set).size()) throw InputError("stale clustering dump");
              }
            }
          });
      note_outputs(outputs);
    }
  }

  // ---- evaluate -------------------------------------------------------

  std::vector<std::string> kind_labels(const embedding::PointSet& ps) const {
    std::vector<std::string> out;
    for (const auto& l : ps.labels) out.emplace_back(orthovar::to_string(l.kind));
    return out;
  }

  static std::vector<std::string> dtag_labels(const embedding::PointSet& ps) {
    std::vector<std::string> out;
    for (const auto& l : ps.labels) out.push_back(l.dtag);
    return out;
  }

  ojson cluster_stats(const std::string& model, const std::string& set, const embedding::PointSet& ps,
                      const clustering::SweepEntry& e) const {
    const auto tags = dtag_labels(ps);
    ojson clusters = ojson::array();
    for (int c = 0; c < static_cast<int>(e.k); ++c) {
      std::vector<std::string> tokens;
      std::vector<phonetics::EditSignature> sigs;
      std::vector<const corpus::DataPoint*> members;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        if (e.assignments[i] != c) continue;
        const auto* dp = by_id_.at(ps.labels[i].datapoint_id);
        members.push_back(dp);
        tokens.push_back(dp->observed);
        sigs.push_back(signature(*dp));
      }
      ojson cj;
      cj["cluster"] = c;
      cj["size"] = members.size();
      ojson props = ojson::object();
      if (!members.empty()) {
        for (const auto& [tag, p] : metrics::dtag_proportions(e.assignments, tags, c)) props[tag] = p;
      }
      cj["dtag_proportions"] = props;

      const std::string tag = model + "/" + set + "/" + std::to_string(e.k) + "/" + std::to_string(c);
      metrics::PairSampling sampling{cfg_.pair_cap, derive_seed(cfg_.seed, "pairs/" + tag)};
      metrics::Coherency coh;
      coh.tokens = tokens.size();
      if (type_vectors_) coh = metrics::semantic_coherency(tokens, *type_vectors_, sampling);
      cj["semantic_coherency"] = optional_json(coh.value);
      cj["coherency_coverage"] = coh.in_vocabulary;
      cj["mphone_similarity"] =
          optional_json(metrics::mphone_similarity(tokens, sampling, {cfg_.metaphone_max_length}));
      cj["pairs_sampled"] = tokens.size() > cfg_.pair_cap && cfg_.pair_cap > 0;

      ojson edits = ojson::array();
      const auto table = metrics::edit_frequency_table(sigs);
      for (std::size_t r = 0; r < table.size() && r < kTopEdits; ++r) {
        ojson ej;
        ej["edit"] = table[r].first;
        ej["count"] = table[r].second;
        for (std::size_t i = 0; i < sigs.size(); ++i) {
          const bool has = std::any_of(sigs[i].ops.begin(), sigs[i].ops.end(),
                                       [&](const phonetics::EditOp& op) { return op.merged() == table[r].first; });
          if (has) {
            ej["standard"] = members[i]->standard;
            ej["observed"] = members[i]->observed;
            break;
          }
        }
        edits.push_back(ej);
      }
      cj["top_edits"] = edits;
      clusters.push_back(cj);
    }
    return clusters;
  }

  const phonetics::EditSignature& signature(const corpus::DataPoint& dp) const {
    auto it = signatures_.find(dp.id);
    if (it == signatures_.end()) it = signatures_.emplace(dp.id, phonetics::edit_signature(dp.standard, dp.observed)).first;
    return it->second;
  }

  ojson evaluate_model(const ModelData& m) const {
    ojson mj;
    mj["model_id"] = m.run.model_id;
    mj["layer_spec"] = m.header.layer_spec;
    mj["tokenization"] = m.header.tokenization;
    mj["dim"] = m.absolute.dim();
    mj["datapoints"] = m.absolute.size() / kAllKinds.size();
    ojson sets = ojson::object();

    for (const char* set_name : kSetNames) {
      const std::string set = set_name;
      const auto& ps = m.sets.at(set);
      ojson sj;
      sj["set"] = ps.kind == embedding::SetKind::Absolute ? "absolute" : "relative";
      ojson kinds = ojson::array();
      std::set<VariantKind> present;
      for (const auto& l : ps.labels) present.insert(l.kind);
      for (auto k : present) kinds.push_back(orthovar::to_string(k));
      sj["kinds"] = kinds;
      sj["points"] = ps.size();
      sj["seed"] = set_seed(set);

      // Per-datapoint index structures for the accuracy measures.
      std::map<std::string, std::array<long, 6>> rows;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        auto [it, inserted] = rows.try_emplace(ps.labels[i].datapoint_id);
        if (inserted) it->second.fill(-1);
        it->second[kind_index(ps.labels[i].kind)] = static_cast<long>(i);
      }
      std::vector<std::vector<std::size_t>> groups;
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      std::vector<std::pair<std::string, std::string>> pair_strings;
      std::size_t excluded = 0;
      if (set == "absolute_full") {
        for (const auto& [id, slot] : rows) {
          const auto vit = variants_by_id_.find(id);
          std::vector<std::size_t> g;
          for (auto k : kAllKinds) {
            if (slot[kind_index(k)] < 0) continue;
            if (vit != variants_by_id_.end() && vit->second->degenerate.count(k)) {
              ++excluded;
              continue;
            }
            g.push_back(static_cast<std::size_t>(slot[kind_index(k)]));
          }
          groups.push_back(std::move(g));
          pairs.emplace_back(static_cast<std::size_t>(slot[kind_index(VariantKind::Std)]),
                             static_cast<std::size_t>(slot[kind_index(VariantKind::Obv)]));
          const auto* dp = by_id_.at(id);
          pair_strings.emplace_back(dp->standard, dp->observed);
        }
        sj["degenerate_excluded"] = excluded;
      }

      const auto kinds_as_labels = kind_labels(ps);
      const auto tags = dtag_labels(ps);
      ojson per_k = ojson::array();
      for (const auto& e : m.sweeps.at(set)) {
        ojson kj;
        kj["k"] = e.k;
        kj["seed"] = e.seed;
        kj["inertia"] = e.inertia;
        kj["iterations"] = e.iterations;
        kj["converged"] = e.converged;
        if (set == "absolute_full") {
          kj["overall_accuracy"] = metrics::overall_accuracy(e.assignments, groups);
          kj["partial_accuracy"] = metrics::partial_accuracy(e.assignments, groups);
          kj["so_accuracy"] = metrics::so_accuracy(e.assignments, pairs);
          std::vector<bool> correct;
          for (const auto& [s, o] : pairs) correct.push_back(e.assignments[s] == e.assignments[o]);
          auto prof = metrics::ld_profile(pair_strings, correct);
          ojson lj;
          lj["correct_mean_ld"] = optional_json(prof.correct_mean_ld);
          lj["error_mean_ld"] = optional_json(prof.error_mean_ld);
          lj["correct_count"] = prof.correct_count;
          lj["error_count"] = prof.error_count;
          kj["ld_profile"] = lj;
          if (cfg_.dtag_purity_all_kinds) kj["dtag_purity"] = metrics::purity<std::string>(e.assignments, tags);
        } else if (set == "relative_full" || set == "relative_filtered") {
          kj["variant_purity"] = metrics::purity<std::string>(e.assignments, kinds_as_labels);
        } else {
          kj["dtag_purity"] = metrics::purity<std::string>(e.assignments, tags);
          kj["clusters"] = cluster_stats(m.run.model_id, set, ps, e);
        }
        per_k.push_back(kj);
      }
      sj["per_k"] = per_k;
      sets[set] = sj;
    }
    mj["sets"] = sets;
    return mj;
  }

  void evaluate() {
    ojson frag;
    frag["mutate"] = mutate_key_;
    ojson models = ojson::array();
    for (const auto& m : models_) models.push_back({m.run.model_id, m.sets_key, m.cluster_key});
    frag["models"] = models;
    frag["type_vectors"] = cfg_.type_vectors ? input_hash(*cfg_.type_vectors) : "";
    frag["pair_cap"] = cfg_.pair_cap;
    frag["metaphone_max_length"] = cfg_.metaphone_max_length;
    frag["dtag_purity_all_kinds"] = cfg_.dtag_purity_all_kinds;
    frag["seed"] = cfg_.seed;
    evaluate_key_ = key_of("evaluate", frag);
    const std::vector<std::string> outputs = {"metrics.json", "curves.csv"};
    cached_stage(
        "evaluate", evaluate_key_,
        [&] {
          if (cfg_.type_vectors) type_vectors_ = metrics::TypeVectors::load_text(*cfg_.type_vectors);
          ojson report;
          ojson meta;
          meta["seed"] = cfg_.seed;
          meta["k_min"] = cfg_.k_min;
          meta["k_max"] = cfg_.k_max;
          meta["char_limit"] = cfg_.char_limit;
          meta["datapoints"] = datapoints_.size();
          meta["layer_agg"] = embedding::to_string(cfg_.layer_agg);
          meta["diff_direction"] = embedding::to_string(cfg_.diff_direction);
          ojson excl = ojson::array();
          for (auto k : cfg_.exclude_kinds) excl.push_back(orthovar::to_string(k));
          meta["exclude_kinds"] = excl;
          meta["restarts"] = cfg_.restarts;
          meta["tol"] = cfg_.tol;
          meta["max_iter"] = cfg_.max_iter;
          meta["normalize"] = cfg_.normalize;
          meta["pair_cap"] = cfg_.pair_cap;
          meta["metaphone_max_length"] = cfg_.metaphone_max_length;
          meta["semantic_vectors"] = cfg_.type_vectors.has_value();
          meta["relative_surface"] = "observed";
          meta["overall_accuracy"] = "all-or-nothing per datapoint; partial_accuracy is the partial-credit variant";
          report["metadata"] = meta;
          ojson mj = ojson::array();
          for (const auto& m : models_) mj.push_back(evaluate_model(m));
          report["models"] = mj;
          metrics_ = json::parse(report.dump());
          write_text(out_ / "metrics.json", report.dump(2) + "\n");
          write_curves(out_ / "curves.csv", metrics_);
          return outputs;
        },
        [&] {
          std::ifstream in(out_ / "metrics.json");
          metrics_ = json::parse(in);
        });
    note_outputs(outputs);
  }

 public:
  static void write_curves(const fs::path& path, const json& metrics) {
    std::ostringstream ss;
    ss << "model,k,overall_accuracy,partial_accuracy,so_accuracy,variant_purity_relative_full,"
          "variant_purity_relative_filtered,dtag_purity_absolute_obv,dtag_purity_relative_obv,"
          "correct_mean_ld,error_mean_ld,inertia_absolute_full\n";
    for (const auto& m : metrics.at("models")) {
      const auto& sets = m.at("sets");
      const auto& abs = sets.at("absolute_full").at("per_k");
      for (std::size_t i = 0; i < abs.size(); ++i) {
        const auto& a = abs[i];
        auto get = [&](const char* set, const char* field) -> json {
          const auto& pk = sets.at(set).at("per_k");
          return i < pk.size() && pk[i].contains(field) ? pk[i].at(field) : json(nullptr);
        };
        ss << csv_field(m.at("model_id").get<std::string>()) << ',' << a.at("k").get<std::size_t>() << ','
           << fmt_full(a.at("overall_accuracy")) << ',' << fmt_full(a.at("partial_accuracy")) << ','
           << fmt_full(a.at("so_accuracy")) << ',' << fmt_full(get("relative_full", "variant_purity")) << ','
           << fmt_full(get("relative_filtered", "variant_purity")) << ','
           << fmt_full(get("absolute_obv", "dtag_purity")) << ',' << fmt_full(get("relative_obv", "dtag_purity"))
           << ',' << fmt_full(a.at("ld_profile").at("correct_mean_ld")) << ','
           << fmt_full(a.at("ld_profile").at("error_mean_ld")) << ',' << fmt_full(a.at("inertia")) << '\n';
      }
    }
    write_text(path, ss.str());
  }

 private:
  // ---- report ---------------------------------------------------------

  std::vector<std::string> write_tables() const {
    std::vector<std::string> written;
    for (const auto& m : metrics_.at("models")) {
      const auto dir = fs::path("tables") / safe_name(m.at("model_id").get<std::string>());
      fs::create_directories(out_ / dir);
      for (const char* set : {"absolute_obv", "relative_obv"}) {
        std::ostringstream clusters, edits;
        clusters << "k,cluster,count,dtag_proportions,mphone_similarity,semantic_coherency,coherency_coverage\n";
        edits << "k,cluster,rank,edit,count,standard,observed\n";
        for (const auto& kj : m.at("sets").at(set).at("per_k")) {
          const auto k = kj.at("k").get<std::size_t>();
          for (const auto& c : kj.at("clusters")) {
            // Tags ordered by share, largest first.
            std::vector<std::pair<std::string, double>> props;
            for (auto& [tag, p] : c.at("dtag_proportions").items()) props.emplace_back(tag, p.get<double>());
            std::stable_sort(props.begin(), props.end(), [](auto& a, auto& b) { return a.second > b.second; });
            std::string prop_str;
            for (const auto& [tag, p] : props) {
              if (!prop_str.empty()) prop_str += ' ';
              prop_str += tag + ":" + fmt2(json(p));
            }
            const auto id = c.at("cluster").get<int>();
            clusters << k << ',' << id << ',' << c.at("size").get<std::size_t>() << ',' << csv_field(prop_str) << ','
                     << fmt2(c.at("mphone_similarity")) << ',' << fmt2(c.at("semantic_coherency")) << ','
                     << c.at("coherency_coverage").get<std::size_t>() << '\n';
            std::size_t rank = 1;
            for (const auto& e : c.at("top_edits")) {
              edits << k << ',' << id << ',' << rank++ << ',' << csv_field(e.at("edit").get<std::string>()) << ','
                    << e.at("count").get<std::size_t>() << ',' << csv_field(e.value("standard", "")) << ','
                    << csv_field(e.value("observed", "")) << '\n';
            }
          }
        }
        const auto cpath = dir / (std::string(set) + "_clusters.csv");
        const auto epath = dir / (std::string(set) + "_edits.csv");
        write_text(out_ / cpath, clusters.str());
        write_text(out_ / epath, edits.str());
        written.push_back(rel(cpath));
        written.push_back(rel(epath));
      }
    }
    return written;
  }

  void report() {
    ojson frag;
    frag["evaluate"] = evaluate_key_;
    report_key_ = key_of("report", frag);
    std::vector<std::string> outputs;
    bool reused = cached_stage(
        "report", report_key_,
        [&] {
          outputs = emit_figures(metrics_, out_);
          auto tables = write_tables();
          outputs.insert(outputs.end(), tables.begin(), tables.end());
          return outputs;
        },
        [] {});
    if (reused) {
      std::ifstream in(out_ / ".cache" / "report.json");
      for (auto& [file, hash] : json::parse(in).at("outputs").items()) produced_.insert(file);
    }
  }

  // ---- manifest -------------------------------------------------------

  void write_manifest(Stage through) {
    ojson man;
    man["tool"] = "orthovar";
    man["through"] = to_string(through);
    ojson c;
    c["dataset"] = cfg_.dataset.string();
    c["confusion_table"] = cfg_.confusion_table.string();
    ojson emb = ojson::array();
    for (const auto& r : cfg_.embeddings) emb.push_back({{"model_id", r.model_id}, {"path", r.path.string()}});
    c["embeddings"] = emb;
    c["dtag_inventory"] = cfg_.dtag_inventory ? json(cfg_.dtag_inventory->string()) : json(nullptr);
    c["type_vectors"] = cfg_.type_vectors ? json(cfg_.type_vectors->string()) : json(nullptr);
    c["char_limit"] = cfg_.char_limit;
    c["k_min"] = cfg_.k_min;
    c["k_max"] = cfg_.k_max;
    c["seed"] = cfg_.seed;
    c["layer_agg"] = embedding::to_string(cfg_.layer_agg);
    c["diff_direction"] = embedding::to_string(cfg_.diff_direction);
    ojson excl = ojson::array();
    for (auto k : cfg_.exclude_kinds) excl.push_back(orthovar::to_string(k));
    c["exclude_kinds"] = excl;
    c["case_fold_match"] = cfg_.case_fold_match;
    c["reject_unknown_dtags"] = cfg_.reject_unknown_dtags;
    c["ocr_mutations"] = cfg_.ocr_mutations;
    c["restarts"] = cfg_.restarts;
    c["tol"] = cfg_.tol;
    c["max_iter"] = cfg_.max_iter;
    c["normalize"] = cfg_.normalize;
    c["pair_cap"] = cfg_.pair_cap;
    c["metaphone_max_length"] = cfg_.metaphone_max_length;
    c["dtag_purity_all_kinds"] = cfg_.dtag_purity_all_kinds;
    man["config"] = c;

    ojson seeds;
    seeds["master"] = cfg_.seed;
    seeds["variants"] = "derive_seed(derive_seed(master, datapoint id), kind)";
    ojson per_set = ojson::object();
    for (const char* set : kSetNames) {
      ojson sj;
      sj["set_seed"] = set_seed(set);
      ojson ks = ojson::object();
      for (std::size_t k = cfg_.k_min; k <= cfg_.k_max; ++k) {
        ks[std::to_string(k)] = clustering::sweep_seed(set_seed(set), k);
      }
      sj["per_k"] = ks;
      per_set[set] = sj;
    }
    seeds["kmeans"] = per_set;
    man["seeds"] = seeds;

    ojson inputs = ojson::object();
    for (const auto& [path, hash] : inputs_) inputs[path] = hash;
    man["inputs"] = inputs;
    ojson stages = ojson::object();
    for (const auto& [name, key] : stage_keys_) {
      stages[name] = {{"key", key}, {"cached", summary_.cached.count(name) ? summary_.cached.at(name) : false}};
    }
    man["stages"] = stages;
    ojson outputs = ojson::object();
    for (const auto& f : produced_) outputs[f] = sha256_file(out_ / f);
    man["outputs"] = outputs;
    write_text(out_ / "manifest.json", man.dump(2) + "\n");
  }

  const RunConfig& cfg_;
  fs::path out_;
  StageCache cache_;
  RunSummary summary_;

  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> stage_keys_;
  std::set<std::string> produced_;
  std::string validate_key_, mutate_key_, evaluate_key_, report_key_;

  std::vector<corpus::DataPoint> datapoints_;
  std::map<std::string, const corpus::DataPoint*> by_id_;
  std::vector<mutation::VariantSet> variants_;
  std::map<std::string, const mutation::VariantSet*> variants_by_id_;
  std::vector<ModelData> models_;
  std::optional<metrics::TypeVectors> type_vectors_;
  mutable std::map<std::string, phonetics::EditSignature> signatures_;
  json metrics_;
};

}  // namespace

void validate_config(const RunConfig& cfg, Stage through) {
  auto need_file = [](const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError(what + " is required");
    if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
  };
  need_file(cfg.dataset, "--dataset");
  if (cfg.out.empty()) throw ConfigError("--out is required");
  if (cfg.dtag_inventory) need_file(*cfg.dtag_inventory, "--dtag-inventory");
  if (cfg.char_limit == 0) throw ConfigError("--char-limit must be > 0");
  if (through >= Stage::Mutate) {
    need_file(cfg.confusion_table, "--confusion-table");
    if (cfg.ocr_mutations == 0) throw ConfigError("--ocr-mutations must be >= 1");
  }
  if (through >= Stage::BuildSets) {
    if (cfg.embeddings.empty()) throw ConfigError("at least one --embeddings model_id=path is required");
    std::set<std::string> ids, dirs;
    for (const auto& r : cfg.embeddings) {
      if (r.model_id.empty()) throw ConfigError("--embeddings entries need a model id (model_id=path)");
      if (!ids.insert(r.model_id).second || !dirs.insert(safe_name(r.model_id)).second) {
        throw ConfigError("duplicate model id " + r.model_id);
      }
      need_file(r.path, "embedding file for " + r.model_id);
    }
  }
  if (through >= Stage::Cluster) {
    if (cfg.k_min < 1 || cfg.k_min > cfg.k_max) {
      throw ConfigError("k range [" + std::to_string(cfg.k_min) + ", " + std::to_string(cfg.k_max) + "] is invalid");
    }
    if (cfg.max_iter == 0) throw ConfigError("--max-iter must be >= 1");
    if (!(cfg.tol >= 0.0)) throw ConfigError("--tol must be >= 0");
    if (cfg.exclude_kinds.count(VariantKind::Std)) throw ConfigError("--exclude-kinds cannot contain std");
    bool any_left = false;
    for (auto k : kRelativeKinds) any_left |= !cfg.exclude_kinds.count(k);
    if (!any_left) throw ConfigError("--exclude-kinds removes every relative kind");
  }
  if (through >= Stage::Evaluate && cfg.type_vectors) need_file(*cfg.type_vectors, "--type-vectors");
}

RunSummary run_pipeline(const RunConfig& config, Stage through) {
  validate_config(config, through);
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + config.out.string() + ": " + ec.message());
  RunLock lock(config.out / ".lock");
  Runner runner(config);
  return runner.run(through);
}

std::vector<std::string> emit_figures(const nlohmann::json& metrics, const fs::path& out) {
  fs::create_directories(out / "figures");
  std::vector<std::string> written;
  Runner::write_curves(out / "figures" / "curves.csv", metrics);
  written.push_back("figures/curves.csv");

  struct Figure {
    const char* file;
    const char* title;
    const char* set;
    const char* field;
    const char* y_label;
  };
  const Figure figures[] = {
      {"overall_accuracy.svg", "Overall accuracy by k (absolute set)", "absolute_full", "overall_accuracy", "accuracy"},
      {"so_accuracy.svg", "SO accuracy by k (absolute set)", "absolute_full", "so_accuracy", "accuracy"},
      {"variant_purity_relative_full.svg", "Variant purity, full relative set", "relative_full", "variant_purity",
       "purity"},
      {"variant_purity_relative_filtered.svg", "Variant purity, relative set without excluded kinds",
       "relative_filtered", "variant_purity", "purity"},
      {"dtag_purity_absolute_obv.svg", "Dtag purity, obv absolute embeddings", "absolute_obv", "dtag_purity",
       "purity"},
      {"dtag_purity_relative_obv.svg", "Dtag purity, std-obv relative set", "relative_obv", "dtag_purity", "purity"},
  };
  for (const auto& f : figures) {
    try {
      std::vector<plot::Series> series;
      for (const auto& m : metrics.at("models")) {
        plot::Series s;
        s.label = m.at("model_id").get<std::string>();
        for (const auto& kj : m.at("sets").at(f.set).at("per_k")) {
          s.x.push_back(kj.at("k").get<double>());
          s.y.push_back(kj.contains(f.field) && !kj.at(f.field).is_null()
                            ? std::optional<double>(kj.at(f.field).get<double>())
                            : std::nullopt);
        }
        series.push_back(std::move(s));
      }
      plot::write_line_chart(out / "figures" / f.file, {f.title, "k", f.y_label, 0.0, 1.0}, series);
      written.push_back(std::string("figures/") + f.file);
    } catch (const std::exception& e) {
      spdlog::warn("figure {} not written ({}); CSV output is unaffected", f.file, e.what());
    }
  }
  return written;
}

}  // namespace orthovar::pipeline
