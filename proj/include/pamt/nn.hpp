#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pamt/dense.hpp"

namespace pamt {

// Feature matrix stored sparsely (CSR, rectangular). Zero entries contribute
// exactly nothing to every kernel below, so results are bit-identical to the
// dense row-major evaluation while skipping the ~98% zeros of citation data.
struct SparseFeatures {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> idx;
  std::vector<double> vals;

  static SparseFeatures from_dense(const DenseMatrix& x);
  DenseMatrix to_dense() const;
};

// One-hidden-layer relu network: logits = relu(X W1 + b1) W2 + b2.
struct ClassifierParams {
  DenseMatrix W1;            // d x f
  std::vector<double> b1;    // f
  DenseMatrix W2;            // f x c
  std::vector<double> b2;    // c
};

struct Gradients {
  DenseMatrix W1;
  std::vector<double> b1;
  DenseMatrix W2;
  std::vector<double> b2;
};

struct OptimizerState {
  ClassifierParams m;  // first moments, same shapes as params
  ClassifierParams v;  // second moments
  std::uint64_t step = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ForwardCache {
  std::vector<double> x_vals;  // input after dropout, aligned with features.vals
  DenseMatrix z1;              // pre-activation
  DenseMatrix hmask;           // hidden dropout mask (scaled), all-ones when off
  DenseMatrix h1d;             // relu(z1) * hmask
  DenseMatrix logits;
};

// Uniform Glorot-style init, zero biases.
ClassifierParams init_params(std::size_t d, std::size_t f, std::size_t c, std::uint64_t seed);

OptimizerState init_optimizer(const ClassifierParams& p, double lr);

// Training-mode forward. Dropout keeps each input entry / hidden activation
// with probability 1-drop and rescales by 1/(1-drop); draws come from per-row
// streams derived from rng_seed so row order never matters.
DenseMatrix forward_train(const SparseFeatures& x, const ClassifierParams& p, double drop,
                          std::uint64_t rng_seed, ForwardCache& cache);

// Eval-mode forward: deterministic, no dropout, no cache.
DenseMatrix forward_eval(const SparseFeatures& x, const ClassifierParams& p);

// Weighted soft-label cross entropy. Target rows are L1-normalized first;
// all-zero rows drop out of the sum (their weight is forced to 0).
//   loss = sum_i w_i * ( -sum_k yhat_ik * log softmax(logits_i)_k ) / sum_i w_i
double soft_cross_entropy(const DenseMatrix& logits, const DenseMatrix& y_soft,
                          const std::vector<double>& node_weights);

// Exact gradient of soft_cross_entropy + wd/2 * ||theta||^2, with the cached
// dropout masks treated as constants.
Gradients backward(const ForwardCache& cache, const SparseFeatures& x, const DenseMatrix& y_soft,
                   const std::vector<double>& node_weights, const ClassifierParams& p, double wd);

// Standard bias-corrected Adam. Weight decay is not applied here; it enters
// through backward as part of the loss gradient.
void adam_step(ClassifierParams& p, const Gradients& g, OptimizerState& s);

// Row softmax / log-softmax with max subtraction.
DenseMatrix row_softmax(const DenseMatrix& logits);

std::string save_checkpoint_json(const ClassifierParams& p);
ClassifierParams load_checkpoint_json(const std::string& text);

}  // namespace pamt
