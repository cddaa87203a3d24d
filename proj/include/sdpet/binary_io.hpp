#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sdpet/error.hpp"

namespace sdpet::binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian and written natively");

inline void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw Error(ErrorKind::Io, "truncated binary file");
  return v;
}

template <typename T>
void write_array(std::ostream& os, std::span<const T> v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
std::vector<T> read_array(std::istream& is, std::size_t n) {
  std::vector<T> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw Error(ErrorKind::Io, "truncated binary file");
  return v;
}

inline void write_magic(std::ostream& os, const std::string& magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline bool read_magic(std::istream& is, const std::string& magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  return is && got == magic;
}

}  // namespace sdpet::binio
