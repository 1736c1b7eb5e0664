#include "archpipe/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "archpipe/errors.hpp"

namespace archpipe {

namespace {

std::uint32_t bswap32(std::uint32_t v) {
  return ((v & 0xff000000u) >> 24) | ((v & 0x00ff0000u) >> 8) |
         ((v & 0x0000ff00u) << 8) | ((v & 0x000000ffu) << 24);
}

void write_sidecar(const std::filesystem::path& file, std::uint32_t width,
                   std::uint32_t height, const char* dtype) {
  json side{{"width", width}, {"height", height}, {"dtype", dtype}};
  std::ofstream out(std::filesystem::path(file) += ".json",
                    std::ios::binary | std::ios::trunc);
  if (!out) throw BackendError(BackendError::Kind::bad_request,
                               "cannot write sidecar for " + file.string());
  out << side.dump();
}

json read_sidecar(const std::filesystem::path& file, const char* want_dtype) {
  std::ifstream in(std::filesystem::path(file) += ".json", std::ios::binary);
  if (!in) throw BackendError(BackendError::Kind::not_found,
                              "missing sidecar for " + file.string());
  json side = json::parse(in);
  if (side.value("dtype", "") != want_dtype)
    throw BackendError(BackendError::Kind::bad_request,
                       "unexpected dtype in sidecar of " + file.string());
  return side;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw BackendError(BackendError::Kind::not_found,
                              "missing grid file " + file.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<std::uint8_t> f32_grid_to_bytes(const std::vector<float>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &values[i], 4);
    if constexpr (std::endian::native == std::endian::big) u = bswap32(u);
    std::memcpy(bytes.data() + i * 4, &u, 4);
  }
  return bytes;
}

std::vector<float> f32_grid_from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0)
    throw BackendError(BackendError::Kind::bad_request,
                       "f32 payload length not a multiple of 4");
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, bytes.data() + i * 4, 4);
    if constexpr (std::endian::native == std::endian::big) u = bswap32(u);
    std::memcpy(&values[i], &u, 4);
  }
  return values;
}

void save_f32_grid(const std::filesystem::path& file,
                   const std::vector<float>& values, std::uint32_t width,
                   std::uint32_t height) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "grid size does not match dims");
  auto bytes = f32_grid_to_bytes(values);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw BackendError(BackendError::Kind::bad_request,
                               "cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  write_sidecar(file, width, height, "f32le");
}

std::vector<float> load_f32_grid(const std::filesystem::path& file,
                                 std::uint32_t& width, std::uint32_t& height) {
  json side = read_sidecar(file, "f32le");
  width = side.at("width").get<std::uint32_t>();
  height = side.at("height").get<std::uint32_t>();
  auto bytes = read_all(file);
  auto values = f32_grid_from_bytes(bytes);
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "payload size does not match sidecar dims: " + file.string());
  return values;
}

void save_u8_grid(const std::filesystem::path& file,
                  const std::vector<std::uint8_t>& bits, std::uint32_t width,
                  std::uint32_t height) {
  if (bits.size() != static_cast<std::size_t>(width) * height)
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "grid size does not match dims");
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw BackendError(BackendError::Kind::bad_request,
                               "cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bits.data()),
            static_cast<std::streamsize>(bits.size()));
  write_sidecar(file, width, height, "u8");
}

std::vector<std::uint8_t> load_u8_grid(const std::filesystem::path& file,
                                       std::uint32_t& width,
                                       std::uint32_t& height) {
  json side = read_sidecar(file, "u8");
  width = side.at("width").get<std::uint32_t>();
  height = side.at("height").get<std::uint32_t>();
  auto bits = read_all(file);
  if (bits.size() != static_cast<std::size_t>(width) * height)
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "payload size does not match sidecar dims: " + file.string());
  for (auto b : bits)
    if (b > 1)
      throw BackendError(BackendError::Kind::bad_request,
                         "mask byte outside {0,1} in " + file.string());
  return bits;
}

}  // namespace archpipe
