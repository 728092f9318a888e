#include "ulrates_cli/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ulrates/version.hpp"

namespace ulrates_cli {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::filesystem::path& path,
                  const std::string& content) {
  const auto dir = path.parent_path().empty() ? std::filesystem::path(".")
                                              : path.parent_path();
  std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::runtime_error("CSV row width does not match header");
  rows_.push_back(cells);
}

std::string CsvTable::str() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < header_.size(); ++i)
    out << (i ? "," : "") << header_[i];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

ParsedCsv parse_csv(const std::string& text) {
  ParsedCsv out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (first) {
      out.header = cells;
      first = false;
    } else {
      out.rows.push_back(cells);
    }
  }
  return out;
}

Manifest::Manifest(std::string command, nlohmann::json resolved_config)
    : command_(std::move(command)), config_(std::move(resolved_config)) {
  // nlohmann objects iterate in sorted key order, so dump() is canonical
  // and the id is stable across runs of the same resolved config.
  nlohmann::json key;
  key["command"] = command_;
  key["config"] = config_;
  run_id_ = fnv1a_hex(key.dump());
}

void Manifest::add_artifact(const std::string& filename) {
  artifacts_.push_back(filename);
}

void Manifest::write(const std::filesystem::path& output_dir) const {
  nlohmann::json doc;
  doc["tool"] = "ulrates";
  doc["version"] = ulrates::kVersion;
  doc["command"] = command_;
  doc["run_id"] = run_id_;
  doc["config"] = config_;
  doc["artifacts"] = artifacts_;
  atomic_write(output_dir / ("manifest_" + run_id_ + ".json"),
               doc.dump(2) + "\n");
}

}  // namespace ulrates_cli
