#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace orthovar::fixture {

/// Synthetic corpus plus embeddings with planted structure: every variant
/// kind sits at a fixed offset from its std vector, and std vectors sit
/// around a per-tag centre.
struct FixtureOptions {
  std::size_t datapoints = 500;
  std::size_t dim = 16;
  std::size_t tags = 4;
  std::size_t subtokens_max = 3;
  double offset_norm = 10.0;
  double noise_ratio = 0.05;  // per-coordinate noise sd relative to offset_norm
  double tag_spread = 6.0;
  std::uint64_t seed = 7;
  std::string model_id = "synthetic";
};

struct FixturePaths {
  std::filesystem::path dataset;
  std::filesystem::path embeddings;
  std::filesystem::path type_vectors;
};

FixturePaths write_fixture(const std::filesystem::path& dir, const FixtureOptions& options);

/// Only the embeddings, for an extra model over an existing fixture dataset.
std::filesystem::path write_fixture_embeddings(const std::filesystem::path& dir, const FixtureOptions& options);

}  // namespace orthovar::fixture
