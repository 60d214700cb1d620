#pragma once

// Result emission: CSV tables, config hashing and all-or-nothing writes.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace llt {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolkitVersion = "0.1.0";

// Shortest round-trip decimal form with '.' as separator, independent of the
// locale; "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  // Header line plus one line per row, LF terminated.
  std::string str() const;
  // Array of objects keyed by the header (numbers stay strings).
  Json to_json() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// FNV-1a of the key-sorted compact dump, as 16 hex digits.
std::string config_hash(const Json& config);

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string content;
};

// Creates dir, writes every artifact to a temporary file and renames them
// only after all writes succeeded. Throws Error on IO failure.
void write_artifacts(const std::string& dir, const std::vector<Artifact>& files);

// --out flag, then LLT_OUT_DIR, then the config's "out" field, then "lltctl-out".
std::string resolve_out_dir(const std::optional<std::string>& flag, const Json& config);

// Parses a JSON file; unreadable or malformed files raise InputError.
Json load_json_file(const std::string& path);

}  // namespace llt
