#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "orthovar/kmeans.hpp"

namespace orthovar::clustering {

/// The persisted part of a ClusteringResult.
struct SweepEntry {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<int> assignments;
  bool operator==(const SweepEntry&) const = default;
};

template <typename Scalar>
SweepEntry to_entry(const ClusteringResult<Scalar>& r) {
  return {r.k, r.seed, r.inertia, r.iterations, r.converged, r.assignments};
}

/// JSONL, one line per k: {k, seed, inertia, iterations, converged, assignments}.
void write_sweep(const std::filesystem::path& path, const std::vector<SweepEntry>& entries);
std::vector<SweepEntry> read_sweep(const std::filesystem::path& path);

}  // namespace orthovar::clustering
