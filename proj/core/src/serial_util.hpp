#pragma once

// Little-endian binary IO helpers shared by the checkpoint and feature-file
// writers. Byte order is fixed so files are portable across hosts.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace glemb::detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw std::runtime_error("binary read: truncated u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

inline void write_f64(std::ostream& os, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline double read_f64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw std::runtime_error("binary read: truncated f64");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void write_magic(std::ostream& os, const char (&magic)[9]) {
  os.write(magic, 8);
}

inline void expect_magic(std::istream& is, const char (&magic)[9],
                         const char* what) {
  char buf[8];
  is.read(buf, 8);
  if (!is || !std::equal(buf, buf + 8, magic)) {
    throw std::runtime_error(std::string(what) + ": bad magic");
  }
}

}  // namespace glemb::detail
