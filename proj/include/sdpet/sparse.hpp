#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sdpet {

/// Compressed sparse row matrix. Column indices are sorted within each row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }

  /// Transpose via counting sort; output rows are sorted, result is deterministic.
  CsrMatrix transpose() const;

  /// Extract the given rows (in the given order) into a new matrix.
  CsrMatrix select_rows(const std::vector<std::size_t>& row_ids) const;

  /// Dense row-major copy, for tests on tiny problems.
  std::vector<double> to_dense() const;
};

}  // namespace sdpet
