#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "archpipe/types.hpp"

namespace archpipe {

// On-disk grid formats. Confidence maps are raw little-endian IEEE-754
// 32-bit floats, row-major; masks are one byte per pixel, 0x00/0x01. Each
// payload file <stem> is paired with a sidecar <stem>.json of the exact form
//   {"width":W,"height":H,"dtype":"f32le"}   or   ...,"dtype":"u8"}

void save_f32_grid(const std::filesystem::path& file,
                   const std::vector<float>& values, std::uint32_t width,
                   std::uint32_t height);

// Reads payload + sidecar; validates dtype and payload size.
std::vector<float> load_f32_grid(const std::filesystem::path& file,
                                 std::uint32_t& width, std::uint32_t& height);

void save_u8_grid(const std::filesystem::path& file,
                  const std::vector<std::uint8_t>& bits, std::uint32_t width,
                  std::uint32_t height);

std::vector<std::uint8_t> load_u8_grid(const std::filesystem::path& file,
                                       std::uint32_t& width,
                                       std::uint32_t& height);

// Serialization of mask payload bytes (the u8 format without the sidecar),
// used by the HTTP adapters which carry dims out of band.
std::vector<std::uint8_t> f32_grid_to_bytes(const std::vector<float>& values);
std::vector<float> f32_grid_from_bytes(const std::vector<std::uint8_t>& bytes);

}  // namespace archpipe
