#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orthovar/types.hpp"

namespace orthovar::corpus {

/// Half-open span of Unicode scalar offsets within a context sentence.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct DataPoint {
  std::string id;
  std::string standard;
  std::string observed;
  std::string context;
  std::string dtag;
  std::optional<std::size_t> target_offset;

  bool operator==(const DataPoint&) const = default;
};

inline constexpr std::size_t kMaxDtags = 31;

/// Dialect tag inventory. Codes are unique; size never exceeds kMaxDtags.
class DtagInventory {
 public:
  bool contains(const std::string& code) const { return codes_.count(code) != 0; }
  /// Returns false when the inventory is full or the code is already present.
  bool add(const std::string& code, std::string description = {});
  std::size_t size() const { return codes_.size(); }
  const std::map<std::string, std::string>& codes() const { return codes_; }

  static DtagInventory from_json_file(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> codes_;
};

enum class Format { Jsonl, Csv };

enum class UnknownDtagPolicy { Register, Reject };

struct LoadOptions {
  UnknownDtagPolicy unknown_dtags = UnknownDtagPolicy::Register;
  bool case_fold_match = false;
};

struct Rejection {
  std::string id;
  std::string reason;
  bool operator==(const Rejection&) const = default;
};

struct LoadResult {
  std::vector<DataPoint> datapoints;
  std::vector<Rejection> rejections;
  DtagInventory inventory;
};

/// Parses and validates every record. Invalid records land in `rejections`.
/// `inventory` seeds the known tags; unknown tags are registered or rejected
/// per `options.unknown_dtags`.
LoadResult load_dataset(const std::filesystem::path& path, Format format,
                        DtagInventory inventory = {}, const LoadOptions& options = {});

/// Infers the format from the file extension (.csv, otherwise JSONL).
Format format_for(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<DataPoint>& points);
void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rejections);

/// Keeps datapoints whose context is at most `limit` scalars long.
std::vector<DataPoint> truncate_by_char_limit(const std::vector<DataPoint>& points,
                                              std::size_t limit);

std::map<std::string, std::size_t> tag_histogram(const std::vector<DataPoint>& points);

/// Thrown when the observed form does not occur in the context.
class TargetNotFound : public InputError {
 public:
  using InputError::InputError;
};

/// The hint is returned when it points at `observed`; otherwise the first
/// word-bounded occurrence, then the first raw occurrence.
Span locate_target_span(const std::string& context, const std::string& observed,
                        std::optional<std::size_t> hint, bool case_fold = false,
                        const std::string& datapoint_id = {});

}  // namespace orthovar::corpus
