#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "pamt/harness.hpp"
#include "pamt/rng.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pamt;

struct CommonArgs {
  std::string data;
  std::string config;
  std::string out = "results";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int n_seeds = 10;
  std::size_t per_class = 20;
  std::size_t val_size = 500;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool multi_seed) {
  cmd->add_option("--data", a.data, "dataset bundle directory")->required();
  cmd->add_option("--config", a.config, "hyperparameter file overriding the dataset preset");
  cmd->add_option("--out", a.out, "output directory");
  auto* s = cmd->add_option("--seed", a.seed, "base seed (omitted: drawn and recorded)");
  s->each([&a](const std::string&) { a.seed_given = true; });
  if (multi_seed) cmd->add_option("--n-seeds", a.n_seeds, "number of seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--train-per-class", a.per_class, "training nodes sampled per class");
  cmd->add_option("--val-size", a.val_size, "validation set size");
}

int env_workers() {
  const char* v = std::getenv("PAMT_WORKERS");
  if (!v) return 1;
  int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

std::uint64_t draw_seed() {
  std::random_device rd;
  return (std::uint64_t(rd()) << 32) ^ rd();
}

std::uint64_t resolve_seed(CommonArgs& a) {
  if (!a.seed_given) {
    a.seed = draw_seed();
    std::cout << "seed: " << a.seed << " (drawn)\n";
  }
  return a.seed;
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, int n) {
  std::vector<std::uint64_t> s(n);
  for (int i = 0; i < n; ++i) s[i] = base + std::uint64_t(i);
  return s;
}

HyperParams resolve_hp(const GraphBundle& b, const std::string& config) {
  HyperParams hp;
  bool preset = true;
  try {
    hp = preset_for(b.name);
  } catch (const std::invalid_argument&) {
    preset = false;
  }
  if (!config.empty()) return load_config(config, preset ? &hp : nullptr);
  if (!preset)
    throw std::invalid_argument("no preset for dataset '" + b.name + "'; pass --config");
  return hp;
}

std::vector<ModelVariant> parse_variants(const std::string& csv) {
  std::vector<ModelVariant> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t next = csv.find(',', pos);
    std::string tok = csv.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!tok.empty()) out.push_back(variant_from(tok));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  require(!out.empty(), "no variants given");
  return out;
}

void write_text_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write: " + p.string());
  f << text;
}

int cmd_train(CommonArgs& a, const std::string& variant_name_raw) {
  ModelVariant variant = variant_from(variant_name_raw);
  GraphBundle b = load_bundle(a.data);
  HyperParams hp = resolve_hp(b, a.config);
  hp.seed = resolve_seed(a);

  SplitSpec split = b.split ? *b.split
                            : generate_split(b, a.per_class, a.val_size, hp.seed);
  auto [params, log] = train_model(b, split, hp, variant);

  fs::path out(a.out);
  write_text_file(out / "train_log.jsonl", log.to_json_lines());
  write_text_file(out / "checkpoint.json", save_checkpoint_json(params));
  nlohmann::json run{{"schema", "pamt-results"},
                     {"version", 1},
                     {"command", "train"},
                     {"dataset", b.name},
                     {"variant", pamt::variant_name(variant)},
                     {"seed", hp.seed},
                     {"stored_split", bool(b.split)},
                     {"test_acc", log.test_acc},
                     {"best_epoch", log.best_epoch}};
  write_text_file(out / "run.json", run.dump(2) + "\n");
  std::cout << "dataset=" << b.name << " variant=" << pamt::variant_name(variant)
            << " seed=" << hp.seed << " test_acc=" << log.test_acc
            << " best_epoch=" << log.best_epoch << "\n";
  return 0;
}

int cmd_benchmark(CommonArgs& a, const std::string& variants_csv, const char* command,
                  const char* stem) {
  GraphBundle b = load_bundle(a.data);
  HyperParams hp = resolve_hp(b, a.config);
  auto seeds = seed_list(resolve_seed(a), a.n_seeds);
  Benchmark r = run_benchmark(b, hp, parse_variants(variants_csv), seeds,
                              {a.per_class, a.val_size}, env_workers());
  std::string text = benchmark_text(r);
  fs::path out(a.out);
  write_text_file(out / (std::string(stem) + ".json"), benchmark_json(r, hp, command));
  write_text_file(out / (std::string(stem) + ".txt"), text);
  std::cout << text;
  return 0;
}

int cmd_noise_sweep(CommonArgs& a, const std::string& variants_csv,
                    const std::vector<double>& rates) {
  GraphBundle b = load_bundle(a.data);
  HyperParams hp = resolve_hp(b, a.config);
  auto seeds = seed_list(resolve_seed(a), a.n_seeds);
  NoiseSweep r = run_noise_sweep(b, hp, parse_variants(variants_csv), rates, seeds,
                                 {a.per_class, a.val_size}, env_workers());
  std::string text = noise_sweep_text(r);
  fs::path out(a.out);
  write_text_file(out / "noise_sweep.json", noise_sweep_json(r, hp));
  write_text_file(out / "noise_sweep.txt", text);
  std::cout << text;
  return 0;
}

int cmd_param_sweep(CommonArgs& a, const std::string& param, std::vector<double> values,
                    const std::string& variant_raw) {
  GraphBundle b = load_bundle(a.data);
  HyperParams hp = resolve_hp(b, a.config);
  if (values.empty()) {
    if (param == "K")
      for (int k = 6; k <= 20; k += 2) values.push_back(k);
    else
      for (int i = 0; i <= 10; ++i) values.push_back(0.05 * i);
  }
  auto seeds = seed_list(resolve_seed(a), a.n_seeds);
  ParamSweep r = run_param_sweep(b, hp, variant_from(variant_raw), param, values, seeds,
                                 {a.per_class, a.val_size}, env_workers());
  std::string text = param_sweep_text(r);
  fs::path out(a.out);
  write_text_file(out / "param_sweep.json", param_sweep_json(r, hp));
  write_text_file(out / "param_sweep.txt", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masked-propagation node classification toolkit"};
  app.require_subcommand(1);

  CommonArgs train_a, bench_a, noise_a, sweep_a, ablate_a;
  std::string train_variant = "pamt";
  std::string bench_variants = "pamt,pts";
  std::string noise_variants = "pamt,pts";
  std::vector<double> noise_rates{0.3, 0.4, 0.5, 0.6};
  std::string sweep_param = "alpha";
  std::vector<double> sweep_values;
  std::string sweep_variant = "pamt";

  auto* train = app.add_subcommand("train", "single training run");
  add_common(train, train_a, false);
  train->add_option("--variant", train_variant, "model variant");

  auto* bench = app.add_subcommand("benchmark", "variants x seeds accuracy table");
  add_common(bench, bench_a, true);
  bench->add_option("--variants", bench_variants, "comma-separated variant list");

  auto* noise = app.add_subcommand("noise-sweep", "accuracy under injected structure noise");
  add_common(noise, noise_a, true);
  noise_a.n_seeds = 5;
  noise->add_option("--variants", noise_variants, "comma-separated variant list");
  noise->add_option("--rates", noise_rates, "target cross-label edge rates")->delimiter(',');

  auto* sweep = app.add_subcommand("param-sweep", "accuracy versus K or alpha");
  add_common(sweep, sweep_a, true);
  sweep_a.n_seeds = 5;
  sweep->add_option("--param", sweep_param, "K or alpha")
      ->check(CLI::IsMember({"K", "alpha"}));
  sweep->add_option("--values", sweep_values, "values to sweep")->delimiter(',');
  sweep->add_option("--variant", sweep_variant, "model variant");

  auto* ablate = app.add_subcommand("ablate", "refinement/momentum ablation table");
  add_common(ablate, ablate_a, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_a, train_variant);
    if (bench->parsed()) return cmd_benchmark(bench_a, bench_variants, "benchmark", "benchmark");
    if (noise->parsed()) return cmd_noise_sweep(noise_a, noise_variants, noise_rates);
    if (sweep->parsed()) return cmd_param_sweep(sweep_a, sweep_param, sweep_values, sweep_variant);
    if (ablate->parsed()) return cmd_benchmark(ablate_a, "pts,pamt0,pamt1,pamt", "ablate", "ablate");
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
