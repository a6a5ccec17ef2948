#pragma once

#include <filesystem>
#include <stdexcept>

#include "rmhd/field.hpp"

namespace rmhd {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::size_t kCheckpointHeaderBytes = 64;

// 64-byte header ("RMHD", version, dims, box lengths, component count, zero
// padding) followed by little-endian (re, im) double pairs per component.
void write_checkpoint(const std::filesystem::path& path, const SpectralField& f);
SpectralField read_checkpoint(const std::filesystem::path& path);

}  // namespace rmhd
