#include <algorithm>
#include <vector>

#include "sdpet/kernels.hpp"
#include "sdpet/sparse.hpp"

namespace sdpet {

GridNeighborhood GridNeighborhood::eight_point(std::size_t rows, std::size_t cols) {
  return {rows, cols, {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
}

GridNeighborhood GridNeighborhood::four_point(std::size_t rows, std::size_t cols) {
  return {rows, cols, {{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
}

bool GridNeighborhood::is_symmetric() const {
  for (auto [dr, dc] : offsets) {
    if (std::find(offsets.begin(), offsets.end(), std::pair{-dr, -dc}) == offsets.end()) return false;
    if (dr == 0 && dc == 0) return false;
  }
  return true;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (auto c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t c = 0; c < cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::uint64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
      const auto dst = cursor[col_idx[e]]++;
      t.col_idx[dst] = static_cast<std::uint32_t>(r);
      t.values[dst] = values[e];
    }
  }
  return t;
}

CsrMatrix CsrMatrix::select_rows(const std::vector<std::size_t>& row_ids) const {
  CsrMatrix s;
  s.rows = row_ids.size();
  s.cols = cols;
  s.row_ptr.reserve(row_ids.size() + 1);
  for (auto r : row_ids) {
    s.col_idx.insert(s.col_idx.end(), col_idx.begin() + row_ptr[r], col_idx.begin() + row_ptr[r + 1]);
    s.values.insert(s.values.end(), values.begin() + row_ptr[r], values.begin() + row_ptr[r + 1]);
    s.row_ptr.push_back(s.values.size());
  }
  return s;
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> d(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (auto e = row_ptr[r]; e < row_ptr[r + 1]; ++e) d[r * cols + col_idx[e]] += values[e];
  return d;
}

}  // namespace sdpet
