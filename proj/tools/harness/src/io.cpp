#include "rmhd/harness/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace rmhd::harness {

std::string blob_hash(const std::string& content) {
  std::string head = "blob " + std::to_string(content.size());
  head.push_back('\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, head.data(), head.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string run_hash(const RunConfig& c) {
  RunConfig located = c;
  located.out_dir.clear();
  return blob_hash(emit_config(located));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable::CsvTable(std::vector<std::string> header) : ncol_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += "\n";
}

CsvTable& CsvTable::cell(const std::string& s) {
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    pending_.push_back(q + "\"");
  } else {
    pending_.push_back(s);
  }
  return *this;
}

CsvTable& CsvTable::cell(double v) { return cell(std::isnan(v) ? std::string() : format_number(v)); }

CsvTable& CsvTable::cell(long long v) { return cell(std::to_string(v)); }

void CsvTable::end_row() {
  if (pending_.size() != ncol_)
    throw std::logic_error("CSV row has " + std::to_string(pending_.size()) + " cells, expected " +
                           std::to_string(ncol_));
  for (std::size_t i = 0; i < pending_.size(); ++i) text_ += (i ? "," : "") + pending_[i];
  text_ += "\n";
  pending_.clear();
  ++rows_;
}

std::string CsvTable::str() const { return text_; }

void write_manifest(const std::filesystem::path& dir, const RunConfig& c, const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["experiment"] = c.experiment;
  j["run_hash"] = run_hash(c);
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  std::istringstream lines(emit_config(c));
  for (std::string line; std::getline(lines, line);) {
    auto eq = line.find('=');
    if (line.compare(0, eq, "out.dir") == 0) continue;
    echo[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = echo;
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  for (const auto& rel : outputs) files[rel] = blob_hash(read_text(dir / rel));
  j["outputs"] = files;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace rmhd::harness
