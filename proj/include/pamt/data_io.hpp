#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pamt/graph.hpp"
#include "pamt/nn.hpp"

namespace pamt {

struct SplitSpec {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

struct GraphBundle {
  std::string name;
  Graph graph;
  SparseFeatures features;  // n x d
  LabelAssignment labels;
  std::optional<SplitSpec> split;
  bool features_sparse_file = true;  // which on-disk layout the bundle uses
};

struct HyperParams {
  // Core knobs (per-dataset presets ship with the repo).
  std::size_t dim = 128;
  double alpha = 0.1;
  double wd = 0.0;
  double lr = 0.01;
  double beta = 0.0;  // soft-label momentum, in [0, 1)
  int K = 10;
  double drop = 0.0;
  int t_u = 10;  // refinement period, >= 1
  // Loop control.
  int max_epochs = 1000;
  int init_epochs = 100;
  int patience = 100;
  std::uint64_t seed = 0;
  // Switches (all default off / conventional).
  bool normalize_features = false;  // row-L1 normalize X before use
  bool renormalize_mask = false;    // row-stochastic rescale of A_p
  bool masked_inference = false;    // propagate predictions over A_p instead of A
  std::string mask_source = "softmax";  // "softmax" | "logits"

  void validate() const;
};

// Directory bundle: meta.json + edges.tsv + features.{tsv,csv} + labels.tsv
// [+ splits.json]. Duplicate and reversed edge lines collapse; self-loop
// lines are invalid.
GraphBundle load_bundle(const std::string& dir);
void save_bundle(const GraphBundle& b, const std::string& dir);

// Per-class uniform training sample, then val_size validation nodes from the
// remainder; everything else is test. Ids come back sorted.
SplitSpec generate_split(const GraphBundle& b, std::size_t per_class_train, std::size_t val_size,
                         std::uint64_t seed);

// Flat "key = value" config. Unknown keys are errors. When `base` is given
// the file overrides it, otherwise every core knob must be present.
HyperParams load_config(const std::string& path, const HyperParams* base = nullptr);

// Table-borne per-dataset defaults. Known names: cora_ml, citeseer, pubmed,
// ms_academic. Throws on anything else.
HyperParams preset_for(const std::string& dataset);

// Row-L1 normalization used behind HyperParams::normalize_features.
SparseFeatures l1_normalize_rows(const SparseFeatures& x);

}  // namespace pamt
