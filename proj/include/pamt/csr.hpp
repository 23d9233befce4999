#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pamt/dense.hpp"

namespace pamt {

// Square sparse matrix in CSR form. Column indices are ascending within each
// row; `symmetric` records that the pattern and values mirror across the
// diagonal (all propagation operands here are symmetric by construction).
struct SparseAdjacency {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  bool symmetric = true;

  std::size_t nnz() const { return cols.size(); }
  bool same_pattern(const SparseAdjacency& o) const {
    return n == o.n && offsets == o.offsets && cols == o.cols;
  }
};

// out = a * m. Accumulation runs left to right in ascending column order so
// results are bit-identical across runs and thread counts.
DenseMatrix spmm(const SparseAdjacency& a, const DenseMatrix& m);

// Entry (i,j) of the result = dot(h_i, h_j), computed only on `pattern`'s
// sparsity (diagonal included when present). The full Gram product is never
// materialized.
SparseAdjacency gram_on_pattern(const SparseAdjacency& pattern, const DenseMatrix& h);

// Entrywise product; requires identical patterns.
SparseAdjacency hadamard(const SparseAdjacency& a, const SparseAdjacency& b);

}  // namespace pamt
