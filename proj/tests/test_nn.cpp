#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pamt/nn.hpp"
#include "pamt/rng.hpp"

using namespace pamt;

namespace {

SparseFeatures random_features(std::size_t n, std::size_t d, double density, std::uint64_t seed) {
  DenseMatrix x(n, d);
  Rng rng(seed);
  for (auto& v : x.v)
    if (rng.uniform() < density) v = rng.uniform_sym(1.5);
  return SparseFeatures::from_dense(x);
}

DenseMatrix random_targets(std::size_t n, std::size_t c, std::uint64_t seed) {
  DenseMatrix y(n, c);
  Rng rng(seed);
  for (auto& v : y.v) v = rng.uniform();
  return y;
}

double loss_at(const SparseFeatures& x, const ClassifierParams& p, const DenseMatrix& y,
               const std::vector<double>& w, double wd) {
  DenseMatrix logits = forward_eval(x, p);
  double loss = soft_cross_entropy(logits, y, w);
  double reg = 0.0;
  for (const std::vector<double>* t : {&p.W1.v, &p.b1, &p.W2.v, &p.b2})
    for (double v : *t) reg += v * v;
  return loss + 0.5 * wd * reg;
}

// max relative error of analytic vs central finite differences over all params
double fd_check(std::size_t n, std::size_t d, std::size_t f, std::size_t c, std::uint64_t seed,
                double wd, bool zero_some_weights) {
  SparseFeatures x = random_features(n, d, 0.5, seed);
  ClassifierParams p = init_params(d, f, c, seed + 1);
  // nonzero biases so their gradients are exercised too
  {
    Rng rng(seed + 2);
    for (auto& v : p.b1) v = rng.uniform_sym(0.3);
    for (auto& v : p.b2) v = rng.uniform_sym(0.3);
  }
  DenseMatrix y = random_targets(n, c, seed + 3);
  std::vector<double> w(n, 1.0);
  Rng wr(seed + 4);
  for (auto& wi : w) wi = 0.25 + wr.uniform();
  if (zero_some_weights)
    for (std::size_t i = 0; i < n; i += 3) w[i] = 0.0;

  ForwardCache cache;
  forward_train(x, p, 0.0, seed + 5, cache);
  Gradients g = backward(cache, x, y, w, p, wd);

  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](std::vector<double>& theta, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double keep = theta[i];
      theta[i] = keep + h;
      double up = loss_at(x, p, y, w, wd);
      theta[i] = keep - h;
      double dn = loss_at(x, p, y, w, wd);
      theta[i] = keep;
      double fd = (up - dn) / (2.0 * h);
      double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      worst = std::max(worst, std::abs(fd - grad[i]) / denom);
    }
  };
  probe(p.W1.v, g.W1.v);
  probe(p.b1, g.b1);
  probe(p.W2.v, g.W2.v);
  probe(p.b2, g.b2);
  return worst;
}

}  // namespace

TEST_CASE("init_params shapes, bounds, determinism") {
  ClassifierParams p = init_params(10, 6, 3, 42);
  CHECK(p.W1.rows == 10);
  CHECK(p.W1.cols == 6);
  CHECK(p.W2.rows == 6);
  CHECK(p.W2.cols == 3);
  CHECK(p.b1.size() == 6);
  CHECK(p.b2.size() == 3);
  for (double v : p.b1) CHECK(v == 0.0);
  for (double v : p.b2) CHECK(v == 0.0);
  double s1 = std::sqrt(6.0 / (10 + 6)), s2 = std::sqrt(6.0 / (6 + 3));
  for (double v : p.W1.v) CHECK(std::abs(v) <= s1);
  for (double v : p.W2.v) CHECK(std::abs(v) <= s2);
  ClassifierParams q = init_params(10, 6, 3, 42);
  CHECK(p.W1.v == q.W1.v);
  CHECK(p.W2.v == q.W2.v);
  ClassifierParams r = init_params(10, 6, 3, 43);
  CHECK(p.W1.v != r.W1.v);
}

TEST_CASE("forward_eval matches a dense hand computation") {
  // d=2, f=2, c=2 with explicit parameters
  ClassifierParams p;
  p.W1 = DenseMatrix(2, 2);
  p.b1 = {0.1, -0.2};
  p.W2 = DenseMatrix(2, 2);
  p.b2 = {0.0, 0.3};
  p.W1.at(0, 0) = 1.0;
  p.W1.at(0, 1) = -1.0;
  p.W1.at(1, 0) = 0.5;
  p.W1.at(1, 1) = 2.0;
  p.W2.at(0, 0) = 1.0;
  p.W2.at(1, 1) = -1.0;

  DenseMatrix xd(1, 2);
  xd.at(0, 0) = 2.0;
  xd.at(0, 1) = -1.0;
  SparseFeatures x = SparseFeatures::from_dense(xd);
  DenseMatrix z = forward_eval(x, p);
  // z1 = [2*1 + (-1)*0.5 + 0.1, 2*(-1) + (-1)*2 - 0.2] = [1.6, -4.2]; relu -> [1.6, 0]
  // logits = [1.6*1 + 0, 0*(-1) + 0.3] = [1.6, 0.3]
  CHECK(z.at(0, 0) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(z.at(0, 1) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("forward_train without dropout equals forward_eval bitwise") {
  SparseFeatures x = random_features(7, 9, 0.4, 1);
  ClassifierParams p = init_params(9, 5, 3, 2);
  ForwardCache cache;
  forward_train(x, p, 0.0, 777, cache);
  DenseMatrix z = forward_eval(x, p);
  CHECK(cache.logits.v == z.v);
}

TEST_CASE("dropout masks are deterministic and correctly scaled") {
  SparseFeatures x = random_features(6, 8, 0.8, 3);
  ClassifierParams p = init_params(8, 4, 2, 4);
  ForwardCache a, b;
  forward_train(x, p, 0.5, 99, a);
  forward_train(x, p, 0.5, 99, b);
  CHECK(a.logits.v == b.logits.v);
  ForwardCache c;
  forward_train(x, p, 0.5, 100, c);
  CHECK(a.logits.v != c.logits.v);
  for (double v : a.hmask.v) CHECK((v == 0.0 || v == doctest::Approx(2.0).epsilon(1e-15)));
}

TEST_CASE("row_softmax rows sum to one and ties stay finite") {
  DenseMatrix z(2, 3);
  z.at(0, 0) = 1000.0;
  z.at(0, 1) = 1000.0;
  z.at(0, 2) = -1000.0;
  DenseMatrix s = row_softmax(z);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::isfinite(s.at(i, k)));
      sum += s.at(i, k);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("soft_cross_entropy hand values") {
  // single row, uniform logits over 2 classes, one-hot target -> ln 2
  DenseMatrix z(1, 2);
  DenseMatrix y(1, 2);
  y.at(0, 0) = 1.0;
  std::vector<double> w{1.0};
  CHECK(soft_cross_entropy(z, y, w) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // weighted three-row case with a zero-mass row, frozen from an
  // independent reference computation
  DenseMatrix z3(3, 2);
  z3.at(0, 0) = 0.2;  z3.at(0, 1) = -0.4;
  z3.at(1, 0) = 1.5;  z3.at(1, 1) = 1.5;
  z3.at(2, 0) = -2.0; z3.at(2, 1) = 0.3;
  DenseMatrix y3(3, 2);
  y3.at(0, 0) = 2.0;  y3.at(0, 1) = 1.0;
  y3.at(2, 0) = 0.4;  y3.at(2, 1) = 0.4;
  std::vector<double> w3{1.0, 5.0, 2.0};
  CHECK(soft_cross_entropy(z3, y3, w3) == doctest::Approx(1.042859626560604).epsilon(1e-14));
}

TEST_CASE("soft_cross_entropy is invariant to per-row logit shifts") {
  DenseMatrix z(4, 3);
  Rng rng(8);
  for (auto& v : z.v) v = rng.uniform_sym(3.0);
  DenseMatrix y = random_targets(4, 3, 9);
  std::vector<double> w{1.0, 2.0, 0.5, 3.0};
  double base = soft_cross_entropy(z, y, w);
  DenseMatrix zs = z;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) zs.at(i, k) += 7.5 * double(i + 1);
  CHECK(soft_cross_entropy(zs, y, w) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("soft_cross_entropy rejects bad inputs") {
  DenseMatrix z(2, 2);
  DenseMatrix y(2, 2);
  std::vector<double> w{1.0, 1.0};
  std::vector<double> short_w{1.0};
  CHECK_THROWS_AS(soft_cross_entropy(z, y, short_w), std::invalid_argument);
  DenseMatrix bad = y;
  bad.at(0, 0) = -0.5;
  CHECK_THROWS_AS(soft_cross_entropy(z, bad, w), std::invalid_argument);
  std::vector<double> negw{-1.0, 1.0};
  CHECK_THROWS_AS(soft_cross_entropy(z, y, negw), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences") {
  for (std::uint64_t t = 0; t < 6; ++t) {
    double wd = (t % 2) ? 0.05 : 0.0;
    double err = fd_check(5 + t, 6, 4, 3, 5000 + 10 * t, wd, t % 3 == 0);
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("all-zero node weights reduce the gradient to pure decay") {
  SparseFeatures x = random_features(6, 7, 0.5, 61);
  ClassifierParams p = init_params(7, 4, 3, 62);
  DenseMatrix y = random_targets(6, 3, 63);
  std::vector<double> w(6, 0.0);
  ForwardCache cache;
  forward_train(x, p, 0.0, 64, cache);
  const double wd = 0.03;
  Gradients g = backward(cache, x, y, w, p, wd);
  for (std::size_t i = 0; i < p.W1.v.size(); ++i)
    CHECK(g.W1.v[i] == doctest::Approx(wd * p.W1.v[i]).epsilon(1e-15));
  for (std::size_t i = 0; i < p.W2.v.size(); ++i)
    CHECK(g.W2.v[i] == doctest::Approx(wd * p.W2.v[i]).epsilon(1e-15));
  for (std::size_t i = 0; i < p.b1.size(); ++i)
    CHECK(g.b1[i] == doctest::Approx(wd * p.b1[i]).epsilon(1e-15));
}

TEST_CASE("adam_step reproduces the frozen reference trajectory") {
  ClassifierParams p;
  p.W1 = DenseMatrix(1, 2);
  p.W1.at(0, 0) = 1.0;
  p.W1.at(0, 1) = -2.0;
  p.W2 = DenseMatrix(0, 0);
  OptimizerState s = init_optimizer(p, 0.1);
  Gradients g;
  g.W1 = DenseMatrix(1, 2);
  g.W2 = DenseMatrix(0, 0);

  const double steps[3][2] = {{0.5, -1.0}, {-0.25, 0.75}, {1.5, 0.1}};
  const double want[3][2] = {{0.900000002, -1.900000001},
                             {0.8733662987078463, -1.8910675003605355},
                             {0.8063162429161115, -1.889283064791367}};
  for (int t = 0; t < 3; ++t) {
    g.W1.at(0, 0) = steps[t][0];
    g.W1.at(0, 1) = steps[t][1];
    adam_step(p, g, s);
    CHECK(p.W1.at(0, 0) == doctest::Approx(want[t][0]).epsilon(1e-14));
    CHECK(p.W1.at(0, 1) == doctest::Approx(want[t][1]).epsilon(1e-14));
  }
  CHECK(s.step == 3);
}

TEST_CASE("checkpoint JSON round-trips bitwise") {
  ClassifierParams p = init_params(5, 4, 3, 123);
  Rng rng(124);
  for (auto& v : p.b1) v = rng.uniform_sym(1.0);
  for (auto& v : p.b2) v = rng.uniform_sym(1.0);
  std::string text = save_checkpoint_json(p);
  ClassifierParams q = load_checkpoint_json(text);
  CHECK(p.W1.v == q.W1.v);
  CHECK(p.b1 == q.b1);
  CHECK(p.W2.v == q.W2.v);
  CHECK(p.b2 == q.b2);
  CHECK_THROWS(load_checkpoint_json("{}"));
  CHECK_THROWS(load_checkpoint_json("not json"));
}
