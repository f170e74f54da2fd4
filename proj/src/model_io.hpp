#pragma once

#include <filesystem>

#include "model.hpp"

namespace homlab {

// Weight file layout (all integers little-endian):
//   magic "HEN1"
//   u32 format version (1)
//   u32 layer count
//   per layer: u32 in, u32 out, u32 stride,
//              f32 weights in (out, in, ky, kx) order, f32 bias per out
//   u32 CRC32 (IEEE) of every byte between the magic and the checksum
// Throws kFormatVersionMismatch on a bad magic/version/header and
// kChecksumMismatch on truncation or payload corruption; a failed load
// never yields a partial model.
void SaveWeights(const HenModel<float>& model, const std::filesystem::path& path);
HenModel<float> LoadWeights(const std::filesystem::path& path, int patch_size,
                            double loss_scale);

uint32_t Crc32(const uint8_t* data, size_t n);

}  // namespace homlab
