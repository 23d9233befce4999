#include "pamt/propagation.hpp"

namespace pamt {

SparseAdjacency build_similarity_mask(const DenseMatrix& h, const SparseAdjacency& norm_adj) {
  require(h.rows == norm_adj.n, "build_similarity_mask: shape mismatch");
  return gram_on_pattern(norm_adj, h);
}

SparseAdjacency build_propagation_matrix(const SparseAdjacency& norm_adj,
                                         const SparseAdjacency& mask) {
  return hadamard(norm_adj, mask);
}

DenseMatrix propagate(const SparseAdjacency& a, const DenseMatrix& m,
                      const PropagationConfig& cfg) {
  require(a.n == m.rows, "propagate: dimension mismatch");
  require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "propagate: alpha out of range");
  require(cfg.K >= 1, "propagate: K < 1");
  DenseMatrix z = m;
  for (int t = 0; t < cfg.K; ++t) {
    DenseMatrix az = spmm(a, z);
    for (std::size_t k = 0; k < az.v.size(); ++k)
      az.v[k] = (1.0 - cfg.alpha) * az.v[k] + cfg.alpha * m.v[k];
    z = std::move(az);
  }
  return z;
}

DenseMatrix propagate_labels(const SparseAdjacency& a_p, const DenseMatrix& y_l,
                             const PropagationConfig& cfg) {
  for (double x : y_l.v) require(x >= 0.0, "propagate_labels: negative input entry");
  return propagate(a_p, y_l, cfg);
}

}  // namespace pamt
