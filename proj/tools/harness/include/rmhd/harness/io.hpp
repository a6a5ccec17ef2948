#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmhd/harness/config.hpp"

namespace rmhd::harness {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
std::string blob_hash(const std::string& content);

// Hash identifying a run: the blob id of the canonical config text, output location excluded.
std::string run_hash(const RunConfig& c);

// Writes through a temporary file and a rename.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& cell(const std::string& s);
  CsvTable& cell(double v);
  CsvTable& cell(long long v);
  CsvTable& cell(int v) { return cell(static_cast<long long>(v)); }
  void end_row();
  std::string str() const;
  std::size_t rows() const { return rows_; }

 private:
  std::size_t ncol_;
  std::size_t rows_ = 0;
  std::vector<std::string> pending_;
  std::string text_;
};

// manifest.json: config echo, run hash, blob ids of the listed outputs
// (paths relative to dir).
void write_manifest(const std::filesystem::path& dir, const RunConfig& c, const std::vector<std::string>& outputs);

}  // namespace rmhd::harness
