#include "pamt/trainer.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "pamt/rng.hpp"

namespace pamt {

namespace {

constexpr std::uint64_t kSeedParams = 1;
constexpr std::uint64_t kSeedWarmup = 0x100000;
constexpr std::uint64_t kSeedEpoch = 0x200000;

std::vector<std::uint32_t> argmax_rows(const DenseMatrix& z) {
  std::vector<std::uint32_t> out(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) {
    const double* r = z.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.cols; ++k)
      if (r[k] > r[best]) best = k;
    out[i] = std::uint32_t(best);
  }
  return out;
}

std::vector<double> row_masses(const DenseMatrix& y) {
  std::vector<double> w(y.rows);
  for (std::size_t i = 0; i < y.rows; ++i) {
    const double* r = y.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < y.cols; ++k) s += r[k];
    w[i] = s;
  }
  return w;
}

}  // namespace

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::PAMT: return "pamt";
    case ModelVariant::PAMT0: return "pamt0";
    case ModelVariant::PAMT1: return "pamt1";
    case ModelVariant::PAMTR: return "pamtr";
    case ModelVariant::PTS: return "pts";
    case ModelVariant::LP_ONLY: return "lp_only";
    case ModelVariant::MLP_ONLY: return "mlp_only";
  }
  return "?";
}

ModelVariant variant_from(const std::string& name) {
  for (ModelVariant v : {ModelVariant::PAMT, ModelVariant::PAMT0, ModelVariant::PAMT1,
                         ModelVariant::PAMTR, ModelVariant::PTS, ModelVariant::LP_ONLY,
                         ModelVariant::MLP_ONLY})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

std::string TrainingLog::to_json_lines() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::json rec{{"epoch", e.epoch}, {"loss", e.loss}, {"val_acc", e.val_acc},
                       {"refined", e.refined}};
    out += rec.dump() + "\n";
  }
  nlohmann::json fin{{"test_acc", test_acc}, {"best_epoch", best_epoch}};
  out += fin.dump() + "\n";
  return out;
}

DenseMatrix seed_label_matrix(const LabelAssignment& labels,
                              const std::vector<std::uint32_t>& nodes, std::size_t n) {
  DenseMatrix y(n, labels.num_classes);
  for (auto i : nodes) {
    require(i < n, "seed_label_matrix: node id out of range");
    require(labels.label[i] != kUnknownLabel, "seed_label_matrix: unlabeled node in split");
    y.at(i, labels.label[i]) = 1.0;
  }
  return y;
}

ClassifierParams init_classifier(const SparseFeatures& x, const LabelAssignment& labels,
                                 const SplitSpec& split, const HyperParams& hp) {
  require(!split.train.empty(), "init_classifier: empty training split");
  ClassifierParams p = init_params(x.cols, hp.dim, labels.num_classes, subseed(hp.seed, kSeedParams));
  if (hp.init_epochs == 0) return p;

  DenseMatrix yl = seed_label_matrix(labels, split.train, x.rows);
  std::vector<double> w(x.rows, 0.0);
  for (auto i : split.train) w[i] = 1.0;
  OptimizerState opt = init_optimizer(p, hp.lr);
  for (int e = 1; e <= hp.init_epochs; ++e) {
    ForwardCache cache;
    forward_train(x, p, hp.drop, subseed(hp.seed, kSeedWarmup + std::uint64_t(e)), cache);
    Gradients g = backward(cache, x, yl, w, p, hp.wd);
    adam_step(p, g, opt);
  }
  return p;
}

SparseAdjacency masked_propagation_matrix(const SparseAdjacency& norm_adj,
                                          const SparseFeatures& x, const ClassifierParams& p,
                                          const std::string& mask_source, bool renormalize) {
  DenseMatrix logits = forward_eval(x, p);
  DenseMatrix h = mask_source == "logits" ? logits : row_softmax(logits);
  SparseAdjacency mask = build_similarity_mask(h, norm_adj);
  SparseAdjacency ap = build_propagation_matrix(norm_adj, mask);
  if (renormalize) {
    for (std::size_t i = 0; i < ap.n; ++i) {
      double s = 0.0;
      for (std::size_t e = ap.offsets[i]; e < ap.offsets[i + 1]; ++e) s += ap.vals[e];
      if (s <= 0.0) continue;
      for (std::size_t e = ap.offsets[i]; e < ap.offsets[i + 1]; ++e) ap.vals[e] /= s;
    }
    ap.symmetric = false;
  }
  return ap;
}

std::vector<std::uint32_t> infer(const ClassifierParams& p, const SparseFeatures& x,
                                 const SparseAdjacency& norm_adj, const PropagationConfig& cfg,
                                 bool masked, const std::string& mask_source,
                                 bool renormalize_mask) {
  DenseMatrix h = row_softmax(forward_eval(x, p));
  if (masked) {
    SparseAdjacency ap = masked_propagation_matrix(norm_adj, x, p, mask_source, renormalize_mask);
    return argmax_rows(propagate(ap, h, cfg));
  }
  return argmax_rows(propagate(norm_adj, h, cfg));
}

double evaluate(const std::vector<std::uint32_t>& pred, const LabelAssignment& labels,
                const std::vector<std::uint32_t>& idx) {
  require(!idx.empty(), "evaluate: empty split");
  std::size_t hit = 0;
  for (auto i : idx) {
    require(i < pred.size(), "evaluate: node id out of range");
    require(labels.label[i] != kUnknownLabel, "evaluate: unlabeled node in split");
    if (pred[i] == labels.label[i]) ++hit;
  }
  return double(hit) / double(idx.size());
}

std::pair<ClassifierParams, TrainingLog> train_model(const GraphBundle& b, const SplitSpec& split,
                                                     const HyperParams& hp, ModelVariant variant,
                                                     const TrainOverrides* ovr) {
  hp.validate();
  require(!split.train.empty(), "train_model: empty training split");
  require(!split.test.empty(), "train_model: empty test split");
  const std::size_t n = b.graph.n;
  const PropagationConfig cfg{hp.alpha, hp.K};
  const SparseAdjacency ahat = normalize_adjacency(b.graph);
  const DenseMatrix yl = seed_label_matrix(b.labels, split.train, n);
  TrainingLog log;

  if (variant == ModelVariant::LP_ONLY) {
    auto pred = argmax_rows(propagate_labels(ahat, yl, cfg));
    log.test_acc = evaluate(pred, b.labels, split.test);
    return {init_params(b.features.cols, hp.dim, b.labels.num_classes, subseed(hp.seed, kSeedParams)),
            log};
  }
  require(!split.val.empty(), "train_model: empty validation split");

  const SparseFeatures x = hp.normalize_features ? l1_normalize_rows(b.features) : b.features;
  const bool plain_mlp = variant == ModelVariant::MLP_ONLY;
  const bool unit_mask = variant == ModelVariant::PTS || (ovr && ovr->force_unit_mask);
  const bool refines = variant == ModelVariant::PAMT || variant == ModelVariant::PAMT1 ||
                       variant == ModelVariant::PAMTR;
  const double beta = variant == ModelVariant::PAMT1 ? 0.0 : hp.beta;

  HyperParams hp_init = hp;
  if (variant == ModelVariant::PAMTR || plain_mlp) hp_init.init_epochs = 0;
  ClassifierParams p = init_classifier(x, b.labels, split, hp_init);
  OptimizerState opt = init_optimizer(p, hp.lr);

  auto propagated_targets = [&]() {
    if (unit_mask) return propagate_labels(ahat, yl, cfg);
    SparseAdjacency ap =
        masked_propagation_matrix(ahat, x, p, hp.mask_source, hp.renormalize_mask);
    return propagate_labels(ap, yl, cfg);
  };

  DenseMatrix y_soft = plain_mlp ? yl : propagated_targets();
  std::vector<double> weights;
  if (plain_mlp) {
    weights.assign(n, 0.0);
    for (auto i : split.train) weights[i] = 1.0;
  } else {
    weights = row_masses(y_soft);
  }

  auto validate_now = [&]() {
    auto pred = plain_mlp ? argmax_rows(forward_eval(x, p))
                          : infer(p, x, ahat, cfg, hp.masked_inference, hp.mask_source,
                                  hp.renormalize_mask);
    return evaluate(pred, b.labels, split.val);
  };

  ClassifierParams best = p;
  double best_val = -1.0;
  int best_epoch = 0;
  for (int t = 1; t <= hp.max_epochs; ++t) {
    bool refined = false;
    if (refines && t % hp.t_u == 0) {
      DenseMatrix yt = propagated_targets();
      for (std::size_t i = 0; i < y_soft.v.size(); ++i)
        y_soft.v[i] = beta * y_soft.v[i] + (1.0 - beta) * yt.v[i];
      weights = row_masses(y_soft);
      refined = true;
    }
    ForwardCache cache;
    forward_train(x, p, hp.drop, subseed(hp.seed, kSeedEpoch + std::uint64_t(t)), cache);
    double loss = soft_cross_entropy(cache.logits, y_soft, weights);
    Gradients g = backward(cache, x, y_soft, weights, p, hp.wd);
    adam_step(p, g, opt);
    double va = validate_now();
    log.epochs.push_back({t, loss, va, refined});
    if (va > best_val) {
      best_val = va;
      best = p;
      best_epoch = t;
    }
    if (t - best_epoch >= hp.patience) break;
  }

  p = best;
  log.best_epoch = best_epoch;
  log.best_val_acc = best_val;
  auto pred = plain_mlp ? argmax_rows(forward_eval(x, p))
                        : infer(p, x, ahat, cfg, hp.masked_inference, hp.mask_source,
                                hp.renormalize_mask);
  log.test_acc = evaluate(pred, b.labels, split.test);
  return {std::move(p), std::move(log)};
}

std::pair<ClassifierParams, TrainingLog> train_pamt(const GraphBundle& b, const SplitSpec& split,
                                                    const HyperParams& hp, ModelVariant variant) {
  require(variant == ModelVariant::PAMT || variant == ModelVariant::PAMT0 ||
              variant == ModelVariant::PAMT1 || variant == ModelVariant::PAMTR,
          "train_pamt: not a masked-propagation variant");
  return train_model(b, split, hp, variant);
}

std::pair<ClassifierParams, TrainingLog> train_pts(const GraphBundle& b, const SplitSpec& split,
                                                   const HyperParams& hp) {
  return train_model(b, split, hp, ModelVariant::PTS);
}

}  // namespace pamt
