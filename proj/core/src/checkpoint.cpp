#include "rmhd/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace rmhd {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");

template <class T>
void put(std::array<char, kCheckpointHeaderBytes>& h, std::size_t& off, T v) {
  std::memcpy(h.data() + off, &v, sizeof(T));
  off += sizeof(T);
}

template <class T>
T get(const std::array<char, kCheckpointHeaderBytes>& h, std::size_t& off) {
  T v;
  std::memcpy(&v, h.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const SpectralField& f) {
  std::array<char, kCheckpointHeaderBytes> h{};
  std::memcpy(h.data(), "RMHD", 4);
  std::size_t off = 4;
  put<std::uint32_t>(h, off, kCheckpointVersion);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(h, off, static_cast<std::uint32_t>(f.grid().n(a)));
  for (int a = 0; a < 3; ++a) put<double>(h, off, f.grid().length(a));
  put<std::uint32_t>(h, off, static_cast<std::uint32_t>(f.ncomp()));

  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(h.data(), h.size());
  for (int c = 0; c < f.ncomp(); ++c)
    out.write(reinterpret_cast<const char*>(f[c].data()), static_cast<std::streamsize>(f[c].size() * sizeof(cplx)));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

SpectralField read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::array<char, kCheckpointHeaderBytes> h{};
  in.read(h.data(), h.size());
  if (!in || std::memcmp(h.data(), "RMHD", 4) != 0) throw CheckpointError(path.string() + " is not a checkpoint");
  std::size_t off = 4;
  auto version = get<std::uint32_t>(h, off);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  int n[3];
  double l[3];
  for (int& v : n) v = static_cast<int>(get<std::uint32_t>(h, off));
  for (double& v : l) v = get<double>(h, off);
  int ncomp = static_cast<int>(get<std::uint32_t>(h, off));
  SpectralField f(Grid(n[0], n[1], n[2], l[0], l[1], l[2]), ncomp);
  for (int c = 0; c < ncomp; ++c)
    in.read(reinterpret_cast<char*>(f[c].data()), static_cast<std::streamsize>(f[c].size() * sizeof(cplx)));
  if (!in) throw CheckpointError("truncated checkpoint " + path.string());
  return f;
}

}  // namespace rmhd
