#pragma once

#include "pamt/csr.hpp"
#include "pamt/dense.hpp"

namespace pamt {

struct PropagationConfig {
  double alpha = 0.1;  // restart / bias weight in [0, 1]
  int K = 10;          // power-iteration steps, >= 1
};

// Similarity mask on norm_adj's pattern: entry (i,j) = dot(h_i, h_j) where h
// rows are the classifier's softmax outputs. Entries land in [0, 1].
SparseAdjacency build_similarity_mask(const DenseMatrix& h, const SparseAdjacency& norm_adj);

// A_p = norm_adj ⊙ mask. Keeps norm_adj's sparsity; no renormalization.
SparseAdjacency build_propagation_matrix(const SparseAdjacency& norm_adj,
                                         const SparseAdjacency& mask);

// K-step approximate personalized PageRank applied to m:
//   Z0 = m;  Z_{t+1} = (1-alpha) * a * Z_t + alpha * m
// which equals ((1-a)^K A^K + a * sum_{k=0}^{K-1} (1-a)^k A^k) m.
DenseMatrix propagate(const SparseAdjacency& a, const DenseMatrix& m, const PropagationConfig& cfg);

// Soft labels: propagate the one-hot label rows. Inputs must be non-negative.
DenseMatrix propagate_labels(const SparseAdjacency& a_p, const DenseMatrix& y_l,
                             const PropagationConfig& cfg);

}  // namespace pamt
