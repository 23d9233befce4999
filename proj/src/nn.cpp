#include "pamt/nn.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "pamt/rng.hpp"

namespace pamt {

using json = nlohmann::json;

SparseFeatures SparseFeatures::from_dense(const DenseMatrix& x) {
  SparseFeatures s;
  s.rows = x.rows;
  s.cols = x.cols;
  s.offsets.assign(x.rows + 1, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      if (x.at(i, j) != 0.0) {
        s.idx.push_back(std::uint32_t(j));
        s.vals.push_back(x.at(i, j));
      }
    }
    s.offsets[i + 1] = s.idx.size();
  }
  return s;
}

DenseMatrix SparseFeatures::to_dense() const {
  DenseMatrix x(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) x.at(i, idx[e]) = vals[e];
  return x;
}

ClassifierParams init_params(std::size_t d, std::size_t f, std::size_t c, std::uint64_t seed) {
  ClassifierParams p;
  p.W1 = DenseMatrix(d, f);
  p.b1.assign(f, 0.0);
  p.W2 = DenseMatrix(f, c);
  p.b2.assign(c, 0.0);
  Rng rng(seed);
  const double s1 = std::sqrt(6.0 / double(d + f));
  for (double& w : p.W1.v) w = rng.uniform_sym(s1);
  const double s2 = std::sqrt(6.0 / double(f + c));
  for (double& w : p.W2.v) w = rng.uniform_sym(s2);
  return p;
}

OptimizerState init_optimizer(const ClassifierParams& p, double lr) {
  OptimizerState s;
  s.m.W1 = DenseMatrix(p.W1.rows, p.W1.cols);
  s.m.b1.assign(p.b1.size(), 0.0);
  s.m.W2 = DenseMatrix(p.W2.rows, p.W2.cols);
  s.m.b2.assign(p.b2.size(), 0.0);
  s.v = s.m;
  s.step = 0;
  s.lr = lr;
  return s;
}

namespace {

// One decision per stored input entry / hidden cell, from a per-row stream.
void fill_dropout_row(Rng& rng, double keep, double* out, std::size_t count) {
  const double scale = 1.0 / keep;
  for (std::size_t k = 0; k < count; ++k) out[k] = rng.uniform() < keep ? scale : 0.0;
}

void hidden_and_logits(const SparseFeatures& x, const ClassifierParams& p,
                       const std::vector<double>& xvals, const DenseMatrix* hmask,
                       DenseMatrix& z1, DenseMatrix& h1d, DenseMatrix& logits) {
  const std::size_t n = x.rows, f = p.b1.size(), c = p.b2.size();
  z1 = DenseMatrix(n, f);
  h1d = DenseMatrix(n, f);
  logits = DenseMatrix(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double* zi = z1.row(i);
    for (std::size_t k = 0; k < f; ++k) zi[k] = p.b1[k];
    for (std::size_t e = x.offsets[i]; e < x.offsets[i + 1]; ++e) {
      const double xv = xvals[e];
      if (xv == 0.0) continue;
      const double* w = p.W1.row(x.idx[e]);
      for (std::size_t k = 0; k < f; ++k) zi[k] += xv * w[k];
    }
    double* hi = h1d.row(i);
    if (hmask) {
      const double* mi = hmask->row(i);
      for (std::size_t k = 0; k < f; ++k) hi[k] = zi[k] > 0.0 ? zi[k] * mi[k] : 0.0;
    } else {
      for (std::size_t k = 0; k < f; ++k) hi[k] = zi[k] > 0.0 ? zi[k] : 0.0;
    }
    double* li = logits.row(i);
    for (std::size_t k = 0; k < c; ++k) li[k] = p.b2[k];
    for (std::size_t k = 0; k < f; ++k) {
      const double hv = hi[k];
      if (hv == 0.0) continue;
      const double* w = p.W2.row(k);
      for (std::size_t j = 0; j < c; ++j) li[j] += hv * w[j];
    }
  }
}

}  // namespace

DenseMatrix forward_train(const SparseFeatures& x, const ClassifierParams& p, double drop,
                          std::uint64_t rng_seed, ForwardCache& cache) {
  require(x.cols == p.W1.rows, "forward: shape mismatch");
  require(drop >= 0.0 && drop < 1.0, "forward: drop out of range");
  const std::size_t n = x.rows, f = p.b1.size();

  cache.x_vals = x.vals;
  cache.hmask = DenseMatrix(n, f, 1.0);
  if (drop > 0.0) {
    const double keep = 1.0 - drop;
    std::vector<double> inmask;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rin(subseed(rng_seed, 2 * i));
      const std::size_t cnt = x.offsets[i + 1] - x.offsets[i];
      inmask.resize(cnt);
      fill_dropout_row(rin, keep, inmask.data(), cnt);
      for (std::size_t k = 0; k < cnt; ++k) cache.x_vals[x.offsets[i] + k] *= inmask[k];
      Rng rh(subseed(rng_seed, 2 * i + 1));
      fill_dropout_row(rh, keep, cache.hmask.row(i), f);
    }
  }
  hidden_and_logits(x, p, cache.x_vals, drop > 0.0 ? &cache.hmask : nullptr, cache.z1, cache.h1d,
                    cache.logits);
  return cache.logits;
}

DenseMatrix forward_eval(const SparseFeatures& x, const ClassifierParams& p) {
  require(x.cols == p.W1.rows, "forward: shape mismatch");
  DenseMatrix z1, h1d, logits;
  hidden_and_logits(x, p, x.vals, nullptr, z1, h1d, logits);
  return logits;
}

namespace {

// Shared by loss and backward: per-row log-softmax plus normalized targets.
struct LossRows {
  std::vector<double> w;      // effective weights (zero-mass rows zeroed)
  double wsum = 0.0;
};

LossRows effective_weights(const DenseMatrix& y_soft, const std::vector<double>& node_weights) {
  LossRows r;
  r.w.assign(y_soft.rows, 0.0);
  for (std::size_t i = 0; i < y_soft.rows; ++i) {
    require(node_weights[i] >= 0.0, "soft_cross_entropy: negative weight");
    double mass = 0.0;
    for (std::size_t k = 0; k < y_soft.cols; ++k) {
      require(y_soft.at(i, k) >= 0.0, "soft_cross_entropy: negative soft label");
      mass += y_soft.at(i, k);
    }
    r.w[i] = mass > 0.0 ? node_weights[i] : 0.0;
    r.wsum += r.w[i];
  }
  return r;
}

}  // namespace

double soft_cross_entropy(const DenseMatrix& logits, const DenseMatrix& y_soft,
                          const std::vector<double>& node_weights) {
  require(logits.same_shape(y_soft), "soft_cross_entropy: shape mismatch");
  require(node_weights.size() == logits.rows, "soft_cross_entropy: weight size");
  LossRows r = effective_weights(y_soft, node_weights);
  if (r.wsum <= 0.0) return 0.0;
  double total = 0.0;
  std::vector<double> ls(logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    if (r.w[i] == 0.0) continue;
    const double* li = logits.row(i);
    double mx = li[0];
    for (std::size_t k = 1; k < logits.cols; ++k) mx = std::max(mx, li[k]);
    double se = 0.0;
    for (std::size_t k = 0; k < logits.cols; ++k) se += std::exp(li[k] - mx);
    const double lse = mx + std::log(se);
    double mass = 0.0, dot = 0.0;
    for (std::size_t k = 0; k < logits.cols; ++k) {
      mass += y_soft.at(i, k);
      dot += y_soft.at(i, k) * (li[k] - lse);
    }
    total += r.w[i] * (-dot / mass);
  }
  return total / r.wsum;
}

Gradients backward(const ForwardCache& cache, const SparseFeatures& x, const DenseMatrix& y_soft,
                   const std::vector<double>& node_weights, const ClassifierParams& p, double wd) {
  const std::size_t n = x.rows, f = p.b1.size(), c = p.b2.size();
  require(cache.logits.rows == n && cache.logits.cols == c, "backward: stale cache");
  require(y_soft.rows == n && y_soft.cols == c && node_weights.size() == n,
          "backward: shape mismatch");
  LossRows r = effective_weights(y_soft, node_weights);

  Gradients g;
  g.W1 = DenseMatrix(p.W1.rows, p.W1.cols);
  g.b1.assign(f, 0.0);
  g.W2 = DenseMatrix(f, c);
  g.b2.assign(c, 0.0);

  // dL/dlogits, then propagate down. Zero total weight leaves only the decay term.
  std::vector<double> gl(c), g1(f);
  for (std::size_t i = 0; i < n && r.wsum > 0.0; ++i) {
    if (r.w[i] == 0.0) continue;
    const double* li = cache.logits.row(i);
    double mx = li[0];
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, li[k]);
    double se = 0.0;
    for (std::size_t k = 0; k < c; ++k) se += std::exp(li[k] - mx);
    double mass = 0.0;
    for (std::size_t k = 0; k < c; ++k) mass += y_soft.at(i, k);
    const double wi = r.w[i] / r.wsum;
    for (std::size_t k = 0; k < c; ++k) {
      const double soft = std::exp(li[k] - mx) / se;
      gl[k] = wi * (soft - y_soft.at(i, k) / mass);
    }
    const double* hi = cache.h1d.row(i);
    for (std::size_t k = 0; k < f; ++k) {
      if (hi[k] != 0.0)
        for (std::size_t j = 0; j < c; ++j) g.W2.at(k, j) += hi[k] * gl[j];
    }
    for (std::size_t j = 0; j < c; ++j) g.b2[j] += gl[j];

    const double* zi = cache.z1.row(i);
    const double* mi = cache.hmask.row(i);
    for (std::size_t k = 0; k < f; ++k) {
      if (zi[k] <= 0.0 || mi[k] == 0.0) {
        g1[k] = 0.0;
        continue;
      }
      const double* w2k = p.W2.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) acc += gl[j] * w2k[j];
      g1[k] = acc * mi[k];
      g.b1[k] += g1[k];
    }
    for (std::size_t e = x.offsets[i]; e < x.offsets[i + 1]; ++e) {
      const double xv = cache.x_vals[e];
      if (xv == 0.0) continue;
      double* gw = g.W1.row(x.idx[e]);
      for (std::size_t k = 0; k < f; ++k) gw[k] += xv * g1[k];
    }
  }

  if (wd != 0.0) {
    for (std::size_t k = 0; k < g.W1.v.size(); ++k) g.W1.v[k] += wd * p.W1.v[k];
    for (std::size_t k = 0; k < f; ++k) g.b1[k] += wd * p.b1[k];
    for (std::size_t k = 0; k < g.W2.v.size(); ++k) g.W2.v[k] += wd * p.W2.v[k];
    for (std::size_t k = 0; k < c; ++k) g.b2[k] += wd * p.b2[k];
  }
  return g;
}

namespace {

void adam_tensor(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, double lr, double b1, double b2, double eps, double bc1,
                 double bc2) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
    p[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
  }
}

}  // namespace

void adam_step(ClassifierParams& p, const Gradients& g, OptimizerState& s) {
  s.step += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, double(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, double(s.step));
  adam_tensor(p.W1.v, g.W1.v, s.m.W1.v, s.v.W1.v, s.lr, s.beta1, s.beta2, s.eps, bc1, bc2);
  adam_tensor(p.b1, g.b1, s.m.b1, s.v.b1, s.lr, s.beta1, s.beta2, s.eps, bc1, bc2);
  adam_tensor(p.W2.v, g.W2.v, s.m.W2.v, s.v.W2.v, s.lr, s.beta1, s.beta2, s.eps, bc1, bc2);
  adam_tensor(p.b2, g.b2, s.m.b2, s.v.b2, s.lr, s.beta1, s.beta2, s.eps, bc1, bc2);
}

DenseMatrix row_softmax(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* li = logits.row(i);
    double* oi = out.row(i);
    double mx = li[0];
    for (std::size_t k = 1; k < logits.cols; ++k) mx = std::max(mx, li[k]);
    double se = 0.0;
    for (std::size_t k = 0; k < logits.cols; ++k) {
      oi[k] = std::exp(li[k] - mx);
      se += oi[k];
    }
    for (std::size_t k = 0; k < logits.cols; ++k) oi[k] /= se;
  }
  return out;
}

std::string save_checkpoint_json(const ClassifierParams& p) {
  json j;
  j["format"] = "pamt-checkpoint";
  j["version"] = 1;
  j["d"] = p.W1.rows;
  j["f"] = p.W1.cols;
  j["c"] = p.W2.cols;
  j["W1"] = p.W1.v;
  j["b1"] = p.b1;
  j["W2"] = p.W2.v;
  j["b2"] = p.b2;
  return j.dump();
}

ClassifierParams load_checkpoint_json(const std::string& text) {
  json j = json::parse(text);
  require(j.at("format") == "pamt-checkpoint" && j.at("version") == 1,
          "checkpoint: unknown format");
  const std::size_t d = j.at("d"), f = j.at("f"), c = j.at("c");
  ClassifierParams p;
  p.W1 = DenseMatrix(d, f);
  p.W1.v = j.at("W1").get<std::vector<double>>();
  p.b1 = j.at("b1").get<std::vector<double>>();
  p.W2 = DenseMatrix(f, c);
  p.W2.v = j.at("W2").get<std::vector<double>>();
  p.b2 = j.at("b2").get<std::vector<double>>();
  require(p.W1.v.size() == d * f && p.b1.size() == f && p.W2.v.size() == f * c && p.b2.size() == c,
          "checkpoint: shape mismatch");
  return p;
}

}  // namespace pamt
