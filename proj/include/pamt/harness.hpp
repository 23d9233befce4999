#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pamt/data_io.hpp"
#include "pamt/trainer.hpp"

namespace pamt {

// Experiment drivers shared by the command-line tool and the test suite.
// Each run derives everything random (split, parameter init, dropout, noise)
// from its single seed, so a (config, seed) pair pins the outcome bitwise.
// Wall-clock timings appear only in the text renderings; the JSON artifacts
// carry nothing run-dependent beyond the numbers themselves.

struct SplitPolicy {
  std::size_t per_class_train = 20;
  std::size_t val_size = 500;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  double test_acc = 0.0;
  int best_epoch = 0;
};

struct VariantSeries {
  std::string variant;
  std::vector<SeedOutcome> runs;  // one per seed, in seed-list order
  double mean = 0.0;
  double stddev = 0.0;  // population std over seeds
  double wall_seconds = 0.0;
};

struct Benchmark {
  std::string dataset;
  SplitPolicy split;
  std::vector<std::uint64_t> seeds;
  std::vector<VariantSeries> rows;
};

struct NoiseCell {
  double rate = 0.0;
  std::string variant;
  std::vector<SeedOutcome> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

struct NoiseSweep {
  std::string dataset;
  SplitPolicy split;
  std::vector<std::uint64_t> seeds;
  std::vector<double> rates;
  double base_rate = 0.0;          // cross-label fraction of the clean graph
  std::size_t base_edges = 0;      // undirected edge count of the clean graph
  std::vector<double> achieved_rates;       // per (rate, seed), rate-major
  std::vector<std::size_t> edge_counts;     // per (rate, seed), rate-major
  std::vector<NoiseCell> cells;             // per (rate, variant), rate-major
  double wall_seconds = 0.0;
};

struct SweepPoint {
  double value = 0.0;
  std::vector<SeedOutcome> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ParamSweep {
  std::string dataset;
  SplitPolicy split;
  std::string param;  // "K" or "alpha"
  std::string variant;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepPoint> points;
  double wall_seconds = 0.0;
};

// One full training with a fresh split drawn from `seed` (hp.seed is
// overwritten with `seed`). Optionally returns the log and parameters.
SeedOutcome run_single(const GraphBundle& b, HyperParams hp, ModelVariant variant,
                       std::uint64_t seed, const SplitPolicy& sp, TrainingLog* log_out = nullptr,
                       ClassifierParams* params_out = nullptr);

Benchmark run_benchmark(const GraphBundle& b, const HyperParams& hp,
                        const std::vector<ModelVariant>& variants,
                        const std::vector<std::uint64_t>& seeds, const SplitPolicy& sp,
                        int workers = 1);

// For every target rate: rewire the clean graph up to that cross-label rate
// (seeded per (rate, seed)), then train every variant on the same noisy
// graph. Rates below the clean graph's own rate are rejected.
NoiseSweep run_noise_sweep(const GraphBundle& b, const HyperParams& hp,
                           const std::vector<ModelVariant>& variants,
                           const std::vector<double>& rates,
                           const std::vector<std::uint64_t>& seeds, const SplitPolicy& sp,
                           int workers = 1);

// Accuracy-vs-value series for param "K" (positive integers) or "alpha"
// (values in [0,1]), all other hyperparameters held at `hp`.
ParamSweep run_param_sweep(const GraphBundle& b, const HyperParams& hp, ModelVariant variant,
                           const std::string& param, const std::vector<double>& values,
                           const std::vector<std::uint64_t>& seeds, const SplitPolicy& sp,
                           int workers = 1);

// JSON artifacts (schema "pamt-results", version 1) and aligned-text views.
std::string benchmark_json(const Benchmark& r, const HyperParams& hp, const std::string& command);
std::string benchmark_text(const Benchmark& r);
std::string noise_sweep_json(const NoiseSweep& r, const HyperParams& hp);
std::string noise_sweep_text(const NoiseSweep& r);
std::string param_sweep_json(const ParamSweep& r, const HyperParams& hp);
std::string param_sweep_text(const ParamSweep& r);

}  // namespace pamt
