#pragma once

// Experiment records. JSON-lines: a schema header, one line per unit of work,
// a summary line, and a trailing timing line. Everything except the timing
// line is a function of the config, so replays compare equal byte for byte.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bergman_lab/harness/config.hpp"

namespace bergman_lab::harness {

inline constexpr const char* kSoftwareVersion = "0.1.0";
inline constexpr const char* kRecordSchema = "bergman-lab.record";
inline constexpr int kRecordSchemaVersion = 1;
inline constexpr const char* kCsvSchema = "# schema: bergman-lab.summary v1";

struct Record {
  std::string kind;
  nlohmann::json config;
  std::vector<nlohmann::json> units;
  nlohmann::json summary = nlohmann::json::object();
  double wall_seconds = 0.0;
  bool pass = true;

  nlohmann::json header() const {
    return {{"schema", kRecordSchema}, {"schema_version", kRecordSchemaVersion}, {"kind", kind},
            {"software_version", kSoftwareVersion}, {"config", config}};
  }

  void add(nlohmann::json unit) { units.push_back(std::move(unit)); }

  // The replayable lines (no timing).
  std::string body() const {
    std::ostringstream os;
    os << header().dump() << '\n';
    for (const auto& u : units) os << u.dump() << '\n';
    os << nlohmann::json{{"summary", summary}, {"pass", pass}}.dump() << '\n';
    return os.str();
  }

  std::string jsonl() const {
    return body() + nlohmann::json{{"timing", {{"wall_seconds", wall_seconds}}}}.dump() + '\n';
  }

  // FNV-1a of the replayable lines.
  std::uint64_t digest() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : body()) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    return h;
  }
};

inline std::string digest_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// A header line, then comma-separated rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    rows.push_back(std::move(r));
  }

  std::string text() const {
    std::ostringstream os;
    os << kCsvSchema << '\n';
    for (size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
    os << '\n';
    for (const auto& r : rows) {
      for (size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
      os << '\n';
    }
    return os.str();
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  template <class N>
  static std::string cell(const N& x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  }
};

// Single writer: files are written after all workers have finished.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << text;
}

inline void write_record(const Record& r, const std::string& out_dir) {
  write_text(std::filesystem::path(out_dir) / (r.kind + ".jsonl"), r.jsonl());
}

inline void write_csv(const CsvTable& t, const std::string& out_dir, const std::string& name) {
  write_text(std::filesystem::path(out_dir) / (name + ".csv"), t.text());
}

// Reads a record file back; the timing line is kept in wall_seconds.
inline Record read_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open record '" + path + "'");
  Record r;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (header) {
      if (j.value("schema", "") != kRecordSchema) throw Error("'" + path + "' is not a record");
      if (j.value("schema_version", 0) != kRecordSchemaVersion) throw Error("unsupported record schema version");
      r.kind = j.at("kind").get<std::string>();
      r.config = j.at("config");
      header = false;
    } else if (j.contains("timing")) {
      r.wall_seconds = j["timing"].value("wall_seconds", 0.0);
    } else if (j.contains("summary")) {
      r.summary = j["summary"];
      r.pass = j.value("pass", false);
    } else {
      r.units.push_back(std::move(j));
    }
  }
  if (header) throw Error("'" + path + "' is empty");
  return r;
}

}  // namespace bergman_lab::harness
