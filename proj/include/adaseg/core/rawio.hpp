#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adaseg/core/error.hpp"

namespace adaseg {

// Raw array files are little-endian regardless of host order. Checkpoints and
// volume files must round-trip bitwise.

inline void write_f32_le(const std::filesystem::path& path,
                         const float* data, std::size_t n) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  std::vector<unsigned char> buf(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    buf[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
    buf[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    buf[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    buf[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  if (!os) throw FormatError("short write: " + path.string());
}

inline std::vector<float> read_f32_le(const std::filesystem::path& path,
                                      std::size_t expected_n) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError("cannot open: " + path.string());
  const auto bytes = static_cast<std::uint64_t>(is.tellg());
  if (bytes != expected_n * 4)
    throw FormatError("raw f32 size mismatch for " + path.string() + ": got " +
                      std::to_string(bytes) + " bytes, expected " +
                      std::to_string(expected_n * 4));
  is.seekg(0);
  std::vector<unsigned char> buf(bytes);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(bytes));
  if (!is) throw FormatError("short read: " + path.string());
  std::vector<float> out(expected_n);
  for (std::size_t i = 0; i < expected_n; ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i + 0]) |
                         (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                         (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                         (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

inline void write_u8(const std::filesystem::path& path,
                     const std::uint8_t* data, std::size_t n) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(n));
  if (!os) throw FormatError("short write: " + path.string());
}

inline std::vector<std::uint8_t> read_u8(const std::filesystem::path& path,
                                         std::size_t expected_n) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError("cannot open: " + path.string());
  const auto bytes = static_cast<std::uint64_t>(is.tellg());
  if (bytes != expected_n)
    throw FormatError("raw u8 size mismatch for " + path.string() + ": got " +
                      std::to_string(bytes) + " bytes, expected " +
                      std::to_string(expected_n));
  is.seekg(0);
  std::vector<std::uint8_t> out(expected_n);
  is.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(bytes));
  if (!is) throw FormatError("short read: " + path.string());
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path.string());
  std::string s((std::istreambuf_iterator<char>(is)),
                std::istreambuf_iterator<char>());
  return s;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os << text;
  if (!os) throw FormatError("short write: " + path.string());
}

}  // namespace adaseg
