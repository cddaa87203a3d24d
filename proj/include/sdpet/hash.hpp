#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace sdpet {

/// 64-bit FNV-1a, used for stable cache and config keys.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& text(std::string_view s) { return bytes(s.data(), s.size()); }
  template <typename T>
  Fnv1a& value(const T& v) {
    return bytes(&v, sizeof(T));
  }
  Fnv1a& doubles(std::span<const double> v) { return bytes(v.data(), v.size_bytes()); }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace sdpet
