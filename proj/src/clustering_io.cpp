#include "orthovar/clustering_io.hpp"

#include <fstream>

#include "json.hpp"
#include "orthovar/types.hpp"

namespace orthovar::clustering {

void write_sweep(const std::filesystem::path& path, const std::vector<SweepEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["k"] = e.k;
    j["seed"] = e.seed;
    j["inertia"] = e.inertia;
    j["iterations"] = e.iterations;
    j["converged"] = e.converged;
    j["assignments"] = e.assignments;
    out << j.dump() << '\n';
  }
}

std::vector<SweepEntry> read_sweep(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<SweepEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    SweepEntry e;
    e.k = j.at("k").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.inertia = j.at("inertia").get<double>();
    e.iterations = j.at("iterations").get<std::size_t>();
    e.converged = j.at("converged").get<bool>();
    e.assignments = j.at("assignments").get<std::vector<int>>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace orthovar::clustering
