#include "llt/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "llt/common.hpp"

namespace llt {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw InputError("csv: empty header");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw Error("csv: row width does not match the header");
  rows_.push_back(std::move(cells));
}

namespace {

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  append_line(out, header_);
  for (const auto& r : rows_) append_line(out, r);
  return out;
}

namespace {

// Numbers become JSON numbers, empty cells null, anything else stays text.
Json cell_json(const std::string& s) {
  if (s.empty()) return nullptr;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
  return s;
}

}  // namespace

Json CsvTable::to_json() const {
  Json arr = Json::array();
  for (const auto& r : rows_) {
    Json row;
    for (std::size_t i = 0; i < r.size(); ++i) row[header_[i]] = cell_json(r[i]);
    arr.push_back(std::move(row));
  }
  return arr;
}

std::string config_hash(const Json& config) {
  const std::string canon = nlohmann::json::parse(config.dump()).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_artifacts(const std::string& dir, const std::vector<Artifact>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::pair<fs::path, fs::path>> staged;
  auto cleanup = [&] {
    for (const auto& [tmp, _] : staged) fs::remove(tmp, ec);
  };
  for (const auto& f : files) {
    const fs::path final_path = fs::path(dir) / f.name;
    const fs::path tmp = fs::path(dir) / (f.name + ".tmp");
    std::ofstream os(tmp, std::ios::binary);
    os << f.content;
    os.close();
    staged.emplace_back(tmp, final_path);
    if (!os) {
      cleanup();
      throw Error("cannot write '" + final_path.string() + "'");
    }
  }
  for (const auto& [tmp, final_path] : staged) {
    fs::rename(tmp, final_path, ec);
    if (ec) {
      cleanup();
      throw Error("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
  }
}

std::string resolve_out_dir(const std::optional<std::string>& flag, const Json& config) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("LLT_OUT_DIR"); env && *env) return env;
  if (config.contains("out") && config["out"].is_string()) return config["out"].get<std::string>();
  return "lltctl-out";
}

Json load_json_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace llt
