#include "pamt/csr.hpp"

namespace pamt {

DenseMatrix spmm(const SparseAdjacency& a, const DenseMatrix& m) {
  require(a.n == m.rows, "spmm: dimension mismatch");
  DenseMatrix out(a.n, m.cols);
  for (std::size_t i = 0; i < a.n; ++i) {
    double* oi = out.row(i);
    for (std::size_t e = a.offsets[i]; e < a.offsets[i + 1]; ++e) {
      const double w = a.vals[e];
      const double* mj = m.row(a.cols[e]);
      for (std::size_t k = 0; k < m.cols; ++k) oi[k] += w * mj[k];
    }
  }
  return out;
}

SparseAdjacency gram_on_pattern(const SparseAdjacency& pattern, const DenseMatrix& h) {
  require(pattern.n == h.rows, "gram_on_pattern: dimension mismatch");
  SparseAdjacency out;
  out.n = pattern.n;
  out.offsets = pattern.offsets;
  out.cols = pattern.cols;
  out.vals.resize(pattern.nnz());
  out.symmetric = pattern.symmetric;
  for (std::size_t i = 0; i < pattern.n; ++i) {
    const double* hi = h.row(i);
    for (std::size_t e = pattern.offsets[i]; e < pattern.offsets[i + 1]; ++e) {
      const double* hj = h.row(pattern.cols[e]);
      double acc = 0.0;
      for (std::size_t k = 0; k < h.cols; ++k) acc += hi[k] * hj[k];
      out.vals[e] = acc;
    }
  }
  return out;
}

SparseAdjacency hadamard(const SparseAdjacency& a, const SparseAdjacency& b) {
  require(a.same_pattern(b), "hadamard: pattern mismatch");
  SparseAdjacency out = a;
  for (std::size_t e = 0; e < out.vals.size(); ++e) out.vals[e] *= b.vals[e];
  out.symmetric = a.symmetric && b.symmetric;
  return out;
}

}  // namespace pamt
