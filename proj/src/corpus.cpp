#include "orthovar/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "orthovar/text.hpp"

namespace orthovar::corpus {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kRequired[] = {"id", "standard", "observed", "context", "dtag"};

std::string upper_ascii(std::string s) {
  for (auto& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

// RFC 4180 records: quoted fields may contain separators, doubled quotes and
// line breaks.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          quoted = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw InputError("unterminated quoted CSV field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

struct RawRecord {
  std::string line_label;
  json fields;
};

std::vector<RawRecord> read_jsonl_records(std::istream& in, std::vector<Rejection>& rejections) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    std::string label = "line:" + std::to_string(lineno);
    try {
      auto j = json::parse(line);
      if (!j.is_object()) {
        rejections.push_back({label, "record is not a JSON object"});
        continue;
      }
      out.push_back({label, std::move(j)});
    } catch (const json::parse_error& e) {
      rejections.push_back({label, std::string("parse error: ") + e.what()});
    }
  }
  return out;
}

std::vector<RawRecord> read_csv_records(std::istream& in) {
  auto rows = parse_csv(in);
  std::vector<RawRecord> out;
  if (rows.empty()) return out;
  const auto& header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    json obj = json::object();
    for (std::size_t c = 0; c < header.size() && c < rows[r].size(); ++c) {
      const auto name = text::trim(header[c]);
      if (name == "target_offset") {
        auto v = text::trim(rows[r][c]);
        if (v.empty()) continue;
        try {
          std::size_t pos = 0;
          long long n = std::stoll(v, &pos);
          obj[name] = pos == v.size() ? json(n) : json(v);
        } catch (const std::exception&) {
          obj[name] = v;
        }
      } else {
        obj[name] = rows[r][c];
      }
    }
    out.push_back({"row:" + std::to_string(r + 1), std::move(obj)});
  }
  return out;
}

}  // namespace

bool DtagInventory::add(const std::string& code, std::string description) {
  if (codes_.count(code) || codes_.size() >= kMaxDtags) return false;
  codes_.emplace(code, std::move(description));
  return true;
}

DtagInventory DtagInventory::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read dtag inventory " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("invalid dtag inventory " + path.string() + ": " + e.what());
  }
  DtagInventory inv;
  if (!j.is_object()) throw InputError("dtag inventory must be a JSON object {code: description}");
  for (auto& [code, desc] : j.items()) {
    auto norm = upper_ascii(text::trim(code));
    if (norm.empty()) throw InputError("empty dtag code in inventory");
    if (!inv.add(norm, desc.is_string() ? desc.get<std::string>() : std::string{})) {
      throw InputError("dtag inventory has duplicate code or more than 31 codes: " + norm);
    }
  }
  return inv;
}

Format format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? Format::Csv : Format::Jsonl;
}

LoadResult load_dataset(const std::filesystem::path& path, Format format,
                        DtagInventory inventory, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read dataset " + path.string());

  LoadResult result;
  result.inventory = std::move(inventory);
  auto raw = format == Format::Jsonl ? read_jsonl_records(in, result.rejections)
                                     : read_csv_records(in);

  std::set<std::string> seen;
  for (auto& rec : raw) {
    const json& f = rec.fields;
    std::string id = rec.line_label;
    if (f.contains("id") && f["id"].is_string() && !f["id"].get<std::string>().empty()) {
      id = f["id"].get<std::string>();
    }
    auto reject = [&](std::string reason) {
      result.rejections.push_back({id, std::move(reason)});
    };

    std::string missing;
    for (const char* name : kRequired) {
      if (!f.contains(name) || !f[name].is_string()) {
        missing = name;
        break;
      }
    }
    if (!missing.empty()) {
      reject("missing field: " + missing);
      continue;
    }

    DataPoint dp;
    dp.id = text::nfc(f["id"].get<std::string>());
    dp.standard = text::trim(text::nfc(f["standard"].get<std::string>()));
    dp.observed = text::trim(text::nfc(f["observed"].get<std::string>()));
    dp.context = text::nfc(f["context"].get<std::string>());
    dp.dtag = upper_ascii(text::trim(f["dtag"].get<std::string>()));
    id = dp.id;

    if (f.contains("target_offset") && !f["target_offset"].is_null()) {
      const auto& off = f["target_offset"];
      if (!off.is_number_integer() || off.get<long long>() < 0) {
        reject("invalid target_offset");
        continue;
      }
      dp.target_offset = off.get<std::size_t>();
    }
    if (dp.standard.empty()) {
      reject("empty standard");
      continue;
    }
    if (dp.observed.empty()) {
      reject("empty observed");
      continue;
    }
    if (dp.dtag.empty()) {
      reject("missing field: dtag");
      continue;
    }
    if (!seen.insert(dp.id).second) {
      reject("duplicate id");
      continue;
    }
    if (!result.inventory.contains(dp.dtag)) {
      if (options.unknown_dtags == UnknownDtagPolicy::Reject) {
        reject("unknown dtag " + dp.dtag);
        continue;
      }
      if (!result.inventory.add(dp.dtag)) {
        reject("dtag inventory full, cannot register " + dp.dtag);
        continue;
      }
      spdlog::warn("registered unknown dtag {} (first seen in {})", dp.dtag, dp.id);
    }

    try {
      auto span = locate_target_span(dp.context, dp.observed, dp.target_offset,
                                     options.case_fold_match, dp.id);
      if (dp.target_offset && span.begin != *dp.target_offset) {
        reject("target offset mismatch");
        continue;
      }
    } catch (const TargetNotFound&) {
      reject("target not found");
      continue;
    }
    result.datapoints.push_back(std::move(dp));
  }
  return result;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<DataPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& dp : points) {
    ordered_json j;
    j["id"] = dp.id;
    j["standard"] = dp.standard;
    j["observed"] = dp.observed;
    j["context"] = dp.context;
    j["dtag"] = dp.dtag;
    if (dp.target_offset) j["target_offset"] = *dp.target_offset;
    out << j.dump() << '\n';
  }
}

void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rejections) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& r : rejections) {
    ordered_json j;
    j["id"] = r.id;
    j["reason"] = r.reason;
    out << j.dump() << '\n';
  }
}

std::vector<DataPoint> truncate_by_char_limit(const std::vector<DataPoint>& points,
                                              std::size_t limit) {
  std::vector<DataPoint> out;
  std::copy_if(points.begin(), points.end(), std::back_inserter(out), [&](const DataPoint& dp) {
    return text::scalar_length(dp.context) <= limit;
  });
  return out;
}

std::map<std::string, std::size_t> tag_histogram(const std::vector<DataPoint>& points) {
  std::map<std::string, std::size_t> hist;
  for (const auto& dp : points) ++hist[dp.dtag];
  return hist;
}

Span locate_target_span(const std::string& context, const std::string& observed,
                        std::optional<std::size_t> hint, bool case_fold,
                        const std::string& datapoint_id) {
  auto ctx = text::to_scalars(context);
  auto obs = text::to_scalars(observed);
  if (case_fold) {
    ctx = text::fold_case(ctx);
    obs = text::fold_case(obs);
  }
  const std::size_t n = obs.size();
  auto matches_at = [&](std::size_t pos) {
    return n > 0 && pos + n <= ctx.size() && ctx.compare(pos, n, obs) == 0;
  };
  if (hint && matches_at(*hint)) return {*hint, *hint + n};

  std::optional<std::size_t> first_raw;
  for (std::size_t pos = ctx.find(obs); n > 0 && pos != std::u32string::npos;
       pos = ctx.find(obs, pos + 1)) {
    if (!first_raw) first_raw = pos;
    bool left_ok = pos == 0 || !text::is_alnum(ctx[pos - 1]);
    bool right_ok = pos + n == ctx.size() || !text::is_alnum(ctx[pos + n]);
    if (left_ok && right_ok) return {pos, pos + n};
  }
  if (first_raw) return {*first_raw, *first_raw + n};
  throw TargetNotFound("target '" + observed + "' not found in context of datapoint " +
                       (datapoint_id.empty() ? std::string("<unnamed>") : datapoint_id));
}

}  // namespace orthovar::corpus
