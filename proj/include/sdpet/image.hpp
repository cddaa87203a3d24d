#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sdpet {

/// Row-major 2D pixel grid with a physical pixel size in millimetres.
struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pixel_size = 1.0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t r, std::size_t c, double ps, double fill = 0.0)
      : rows(r), cols(c), pixel_size(ps), data(r * c, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> view() const noexcept { return data; }
  std::span<double> view() noexcept { return data; }
};

/// Boolean pixel mask sharing the Image layout.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<unsigned char> data;

  Mask() = default;
  Mask(std::size_t r, std::size_t c, bool fill = false) : rows(r), cols(c), data(r * c, fill ? 1 : 0) {}

  bool operator()(std::size_t r, std::size_t c) const { return data[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { data[r * cols + c] = v ? 1 : 0; }
  std::size_t count() const;
};

inline std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto v : data) n += v != 0;
  return n;
}

}  // namespace sdpet

namespace sdpet {

/// Region of interest: a labelled nonempty mask.
struct Roi {
  std::string label;
  Mask mask;
};

}  // namespace sdpet
