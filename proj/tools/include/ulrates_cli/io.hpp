#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ulrates_cli {

// Full-precision text form of a double: shortest round-trippable decimal
// (%.17g), '.' decimal point, no locale surprises.
std::string format_double(double v);

// Write content to path via a temporary file in the same directory plus an
// atomic rename, so partially written artifacts never appear on disk.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// FNV-1a 64-bit over a byte string, rendered as 16 hex digits. Used as the
// run id: a pure function of the resolved configuration, so identical runs
// map to identical artifact names.
std::string fnv1a_hex(const std::string& bytes);

// A CSV table with the fixed dialect: comma delimiter, header row, LF line
// endings, 17-significant-digit reals.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Parse a CSV document produced by this toolkit (no quoting or escapes).
struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
ParsedCsv parse_csv(const std::string& text);

// Records one run: the resolved config, the files it produced, and the
// derived run id. write() emits manifest_<run_id>.json atomically.
class Manifest {
 public:
  Manifest(std::string command, nlohmann::json resolved_config);
  const std::string& run_id() const { return run_id_; }
  void add_artifact(const std::string& filename);
  void write(const std::filesystem::path& output_dir) const;

 private:
  std::string command_;
  nlohmann::json config_;
  std::string run_id_;
  std::vector<std::string> artifacts_;
};

}  // namespace ulrates_cli
