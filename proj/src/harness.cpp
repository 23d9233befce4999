#include "pamt/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "pamt/rng.hpp"

namespace pamt {

namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void run_pool(int workers, std::size_t ntasks, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || ntasks <= 1) {
    for (std::size_t i = 0; i < ntasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= ntasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  std::size_t n = std::min<std::size_t>(std::size_t(workers), ntasks);
  pool.reserve(n);
  for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void fill_stats(const std::vector<SeedOutcome>& runs, double& mean, double& stddev) {
  double s = 0.0;
  for (const auto& r : runs) s += r.test_acc;
  mean = s / double(runs.size());
  double q = 0.0;
  for (const auto& r : runs) q += (r.test_acc - mean) * (r.test_acc - mean);
  stddev = std::sqrt(q / double(runs.size()));
}

json hp_json(const HyperParams& hp) {
  return json{{"dim", hp.dim},
              {"alpha", hp.alpha},
              {"wd", hp.wd},
              {"lr", hp.lr},
              {"beta", hp.beta},
              {"K", hp.K},
              {"drop", hp.drop},
              {"t_u", hp.t_u},
              {"max_epochs", hp.max_epochs},
              {"init_epochs", hp.init_epochs},
              {"patience", hp.patience},
              {"normalize_features", hp.normalize_features},
              {"renormalize_mask", hp.renormalize_mask},
              {"masked_inference", hp.masked_inference},
              {"mask_source", hp.mask_source}};
}

json runs_json(const std::vector<SeedOutcome>& runs) {
  json arr = json::array();
  for (const auto& r : runs)
    arr.push_back({{"seed", r.seed}, {"test_acc", r.test_acc}, {"best_epoch", r.best_epoch}});
  return arr;
}

json result_header(const std::string& command, const std::string& dataset, const HyperParams& hp,
                   const SplitPolicy& sp, const std::vector<std::uint64_t>& seeds) {
  return json{{"schema", "pamt-results"},
              {"version", 1},
              {"command", command},
              {"dataset", dataset},
              {"hyperparams", hp_json(hp)},
              {"split_policy",
               {{"per_class_train", sp.per_class_train}, {"val_size", sp.val_size}}},
              {"seeds", seeds}};
}

std::string pct(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", acc * 100.0);
  return buf;
}

std::string seed_accs(const std::vector<SeedOutcome>& runs) {
  std::string s = "[";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i) s += ' ';
    s += pct(runs[i].test_acc);
  }
  return s + "]";
}

std::uint64_t noise_purpose(double rate) {
  return 0x4000 + std::uint64_t(std::llround(rate * 1000.0));
}

}  // namespace

SeedOutcome run_single(const GraphBundle& b, HyperParams hp, ModelVariant variant,
                       std::uint64_t seed, const SplitPolicy& sp, TrainingLog* log_out,
                       ClassifierParams* params_out) {
  hp.seed = seed;
  SplitSpec split = generate_split(b, sp.per_class_train, sp.val_size, seed);
  auto [params, log] = train_model(b, split, hp, variant);
  SeedOutcome out{seed, log.test_acc, log.best_epoch};
  if (log_out) *log_out = std::move(log);
  if (params_out) *params_out = std::move(params);
  return out;
}

Benchmark run_benchmark(const GraphBundle& b, const HyperParams& hp,
                        const std::vector<ModelVariant>& variants,
                        const std::vector<std::uint64_t>& seeds, const SplitPolicy& sp,
                        int workers) {
  require(!variants.empty() && !seeds.empty(), "benchmark: nothing to run");
  Benchmark r;
  r.dataset = b.name;
  r.split = sp;
  r.seeds = seeds;
  r.rows.resize(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    r.rows[v].variant = variant_name(variants[v]);
    r.rows[v].runs.resize(seeds.size());
  }
  std::vector<double> task_secs(variants.size() * seeds.size(), 0.0);
  run_pool(workers, variants.size() * seeds.size(), [&](std::size_t i) {
    std::size_t v = i / seeds.size(), s = i % seeds.size();
    auto t0 = clock_type::now();
    r.rows[v].runs[s] = run_single(b, hp, variants[v], seeds[s], sp);
    task_secs[i] = seconds_since(t0);
  });
  for (std::size_t v = 0; v < variants.size(); ++v) {
    fill_stats(r.rows[v].runs, r.rows[v].mean, r.rows[v].stddev);
    for (std::size_t s = 0; s < seeds.size(); ++s)
      r.rows[v].wall_seconds += task_secs[v * seeds.size() + s];
  }
  return r;
}

NoiseSweep run_noise_sweep(const GraphBundle& b, const HyperParams& hp,
                           const std::vector<ModelVariant>& variants,
                           const std::vector<double>& rates,
                           const std::vector<std::uint64_t>& seeds, const SplitPolicy& sp,
                           int workers) {
  require(!variants.empty() && !seeds.empty() && !rates.empty(), "noise sweep: nothing to run");
  auto t0 = clock_type::now();
  NoiseSweep r;
  r.dataset = b.name;
  r.split = sp;
  r.seeds = seeds;
  r.rates = rates;
  r.base_rate = structure_noise_rate(b.graph, b.labels);
  r.base_edges = b.graph.undirected_edge_count();
  for (double rate : rates) {
    require(rate <= 1.0, "noise sweep: rate above 1");
    require(rate >= r.base_rate - 1e-12,
            "cannot denoise: requested rate below the dataset's own rate");
  }
  const std::size_t R = rates.size(), S = seeds.size(), V = variants.size();
  r.achieved_rates.assign(R * S, 0.0);
  r.edge_counts.assign(R * S, 0);
  r.cells.resize(R * V);
  for (std::size_t ri = 0; ri < R; ++ri)
    for (std::size_t v = 0; v < V; ++v) {
      auto& cell = r.cells[ri * V + v];
      cell.rate = rates[ri];
      cell.variant = variant_name(variants[v]);
      cell.runs.resize(S);
    }
  run_pool(workers, R * S, [&](std::size_t i) {
    std::size_t ri = i / S, si = i % S;
    GraphBundle noisy = b;
    noisy.graph = inject_structure_noise(b.graph, b.labels, rates[ri],
                                         subseed(seeds[si], noise_purpose(rates[ri])));
    r.achieved_rates[i] = structure_noise_rate(noisy.graph, noisy.labels);
    r.edge_counts[i] = noisy.graph.undirected_edge_count();
    for (std::size_t v = 0; v < V; ++v)
      r.cells[ri * V + v].runs[si] = run_single(noisy, hp, variants[v], seeds[si], sp);
  });
  for (auto& cell : r.cells) fill_stats(cell.runs, cell.mean, cell.stddev);
  r.wall_seconds = seconds_since(t0);
  return r;
}

ParamSweep run_param_sweep(const GraphBundle& b, const HyperParams& hp, ModelVariant variant,
                           const std::string& param, const std::vector<double>& values,
                           const std::vector<std::uint64_t>& seeds, const SplitPolicy& sp,
                           int workers) {
  require(param == "K" || param == "alpha", "param sweep: param must be K or alpha");
  require(!values.empty() && !seeds.empty(), "param sweep: nothing to run");
  auto t0 = clock_type::now();
  std::vector<HyperParams> configs;
  for (double x : values) {
    HyperParams h = hp;
    if (param == "K") {
      double r = std::round(x);
      require(std::abs(x - r) < 1e-9 && r >= 1.0, "param sweep: K values must be integers >= 1");
      h.K = int(r);
    } else {
      require(x >= 0.0 && x <= 1.0, "param sweep: alpha values must lie in [0,1]");
      h.alpha = x;
    }
    configs.push_back(h);
  }
  ParamSweep r;
  r.dataset = b.name;
  r.split = sp;
  r.param = param;
  r.variant = variant_name(variant);
  r.seeds = seeds;
  r.points.resize(values.size());
  const std::size_t S = seeds.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.points[i].value = values[i];
    r.points[i].runs.resize(S);
  }
  run_pool(workers, values.size() * S, [&](std::size_t i) {
    std::size_t p = i / S, s = i % S;
    r.points[p].runs[s] = run_single(b, configs[p], variant, seeds[s], sp);
  });
  for (auto& p : r.points) fill_stats(p.runs, p.mean, p.stddev);
  r.wall_seconds = seconds_since(t0);
  return r;
}

std::string benchmark_json(const Benchmark& r, const HyperParams& hp, const std::string& command) {
  json out = result_header(command, r.dataset, hp, r.split, r.seeds);
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"variant", row.variant},
                    {"mean", row.mean},
                    {"stddev", row.stddev},
                    {"per_seed", runs_json(row.runs)}});
  out["rows"] = rows;
  return out.dump(2) + "\n";
}

std::string benchmark_text(const Benchmark& r) {
  std::string out = "dataset: " + r.dataset + "   seeds: " + std::to_string(r.seeds.size()) + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %8s %7s %9s\n", "variant", "mean%", "std%", "wall(s)");
  out += line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-10s %8s %7s %9.1f  ", row.variant.c_str(),
                  pct(row.mean).c_str(), pct(row.stddev).c_str(), row.wall_seconds);
    out += line;
    out += seed_accs(row.runs) + "\n";
  }
  return out;
}

std::string noise_sweep_json(const NoiseSweep& r, const HyperParams& hp) {
  json out = result_header("noise-sweep", r.dataset, hp, r.split, r.seeds);
  out["base_rate"] = r.base_rate;
  out["base_edges"] = r.base_edges;
  out["rates"] = r.rates;
  const std::size_t S = r.seeds.size();
  json inj = json::array();
  for (std::size_t ri = 0; ri < r.rates.size(); ++ri) {
    json per = json::array();
    for (std::size_t si = 0; si < S; ++si)
      per.push_back({{"seed", r.seeds[si]},
                     {"achieved_rate", r.achieved_rates[ri * S + si]},
                     {"edges", r.edge_counts[ri * S + si]}});
    inj.push_back({{"rate", r.rates[ri]}, {"per_seed", per}});
  }
  out["injection"] = inj;
  json grid = json::array();
  for (const auto& cell : r.cells)
    grid.push_back({{"rate", cell.rate},
                    {"variant", cell.variant},
                    {"mean", cell.mean},
                    {"stddev", cell.stddev},
                    {"per_seed", runs_json(cell.runs)}});
  out["grid"] = grid;
  return out.dump(2) + "\n";
}

std::string noise_sweep_text(const NoiseSweep& r) {
  char line[160];
  std::snprintf(line, sizeof line,
                "dataset: %s   seeds: %zu   base rate %.4f   edges %zu   wall %.1fs\n",
                r.dataset.c_str(), r.seeds.size(), r.base_rate, r.base_edges, r.wall_seconds);
  std::string out = line;
  std::snprintf(line, sizeof line, "%-7s %-10s %8s %7s\n", "rate", "variant", "mean%", "std%");
  out += line;
  for (const auto& cell : r.cells) {
    std::snprintf(line, sizeof line, "%-7.3f %-10s %8s %7s  ", cell.rate, cell.variant.c_str(),
                  pct(cell.mean).c_str(), pct(cell.stddev).c_str());
    out += line;
    out += seed_accs(cell.runs) + "\n";
  }
  return out;
}

std::string param_sweep_json(const ParamSweep& r, const HyperParams& hp) {
  json out = result_header("param-sweep", r.dataset, hp, r.split, r.seeds);
  out["param"] = r.param;
  out["variant"] = r.variant;
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({{"value", p.value},
                   {"mean", p.mean},
                   {"stddev", p.stddev},
                   {"per_seed", runs_json(p.runs)}});
  out["points"] = pts;
  return out.dump(2) + "\n";
}

std::string param_sweep_text(const ParamSweep& r) {
  char line[160];
  std::snprintf(line, sizeof line, "dataset: %s   param: %s   variant: %s   wall %.1fs\n",
                r.dataset.c_str(), r.param.c_str(), r.variant.c_str(), r.wall_seconds);
  std::string out = line;
  std::snprintf(line, sizeof line, "%-8s %8s %7s\n", "value", "mean%", "std%");
  out += line;
  for (const auto& p : r.points) {
    std::snprintf(line, sizeof line, "%-8.3g %8s %7s  ", p.value, pct(p.mean).c_str(),
                  pct(p.stddev).c_str());
    out += line;
    out += seed_accs(p.runs) + "\n";
  }
  return out;
}

}  // namespace pamt
