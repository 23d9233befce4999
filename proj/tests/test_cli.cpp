#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "pamt/data_io.hpp"
#include "pamt/rng.hpp"

using namespace pamt;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string g_cli;
fs::path g_root;
int g_run_id = 0;

struct CmdResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in), {});
}

CmdResult run_cmd(const std::string& args) {
  fs::path o = g_root / ("stdout." + std::to_string(g_run_id));
  fs::path e = g_root / ("stderr." + std::to_string(g_run_id));
  ++g_run_id;
  std::string full = g_cli + " " + args + " >" + o.string() + " 2>" + e.string();
  int rc = std::system(full.c_str());
  int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return {code, slurp(o), slurp(e)};
}

// Three ring-with-chords clusters, one bridge between consecutive clusters.
// Features separate the clusters linearly; labels follow the clusters.
GraphBundle toy_bundle() {
  const std::uint32_t per = 10, n = 3 * per;
  Rng rng(424242);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t c = 0; c < 3; ++c) {
    std::uint32_t base = c * per;
    for (std::uint32_t i = 0; i < per; ++i) edges.push_back({base + i, base + (i + 1) % per});
    for (std::uint32_t i = 0; i < per; i += 2)
      edges.push_back({base + i, base + (i + per / 2) % per});
  }
  edges.push_back({0, per});
  edges.push_back({per, 2 * per});
  GraphBundle b;
  b.name = "toy";
  b.graph = build_graph(n, edges);
  DenseMatrix x(n, 6);
  for (std::uint32_t i = 0; i < n; ++i) {
    x.at(i, i / per) = 1.0 + 0.2 * rng.uniform_sym(1.0);
    x.at(i, 3 + i % 3) = 0.1 * rng.uniform_sym(1.0);
  }
  b.features = SparseFeatures::from_dense(x);
  b.labels.num_classes = 3;
  b.labels.label.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) b.labels.label[i] = i / per;
  return b;
}

const char* kToyConfig =
    "dim = 8\nalpha = 0.1\nwd = 0.01\nlr = 0.05\nbeta = 0.5\nK = 4\ndrop = 0.1\nt_u = 5\n"
    "max_epochs = 30\ninit_epochs = 5\npatience = 10\n";

std::string toy_args;  // "--data <dir> --config <conf>" for the unsplit toy

double reaggregate_mean(const json& row) {
  double s = 0.0;
  for (const auto& r : row["per_seed"]) s += r["test_acc"].get<double>();
  return s / double(row["per_seed"].size());
}

}  // namespace

TEST_CASE("train writes its artifacts and reruns byte-identically") {
  fs::path a = g_root / "train_a", b = g_root / "train_b";
  CmdResult r1 = run_cmd("train " + toy_args + " --seed 7 --train-per-class 3 --val-size 6 --out " +
                         a.string());
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("test_acc=") != std::string::npos);

  json run = json::parse(slurp(a / "run.json"));
  CHECK(run["schema"] == "pamt-results");
  CHECK(run["command"] == "train");
  CHECK(run["dataset"] == "toy");
  CHECK(run["variant"] == "pamt");
  CHECK(run["seed"] == 7);
  CHECK(run["stored_split"] == false);
  double acc = run["test_acc"].get<double>();
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);

  // the training log is one record per epoch plus the closing summary
  std::string log = slurp(a / "train_log.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') >= 2);
  CHECK(json::parse(slurp(a / "checkpoint.json")).contains("W1"));

  CmdResult r2 = run_cmd("train " + toy_args + " --seed 7 --train-per-class 3 --val-size 6 --out " +
                         b.string());
  REQUIRE(r2.code == 0);
  for (const char* f : {"run.json", "train_log.jsonl", "checkpoint.json"})
    CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("train prefers a stored split and says so") {
  CmdResult r = run_cmd("train --data " + (g_root / "toy_split").string() + " --config " +
                        (g_root / "toy.conf").string() + " --seed 3 --out " +
                        (g_root / "train_s").string());
  REQUIRE(r.code == 0);
  json run = json::parse(slurp(g_root / "train_s" / "run.json"));
  CHECK(run["stored_split"] == true);
}

TEST_CASE("an omitted seed is drawn and reported") {
  CmdResult r = run_cmd("train " + toy_args + " --train-per-class 3 --val-size 6 --out " +
                        (g_root / "train_d").string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("(drawn)") != std::string::npos);
  json run = json::parse(slurp(g_root / "train_d" / "run.json"));
  CHECK(run["seed"].get<std::uint64_t>() > 0);
}

TEST_CASE("usage and validation failures exit with code 2") {
  CHECK(run_cmd("train " + toy_args + " --variant gcn --out " + (g_root / "x1").string()).code == 2);
  CmdResult bad_variant = run_cmd("train " + toy_args + " --variant gcn");
  CHECK(bad_variant.err.find("unknown variant") != std::string::npos);

  CHECK(run_cmd("train --data " + (g_root / "absent").string()).code == 2);
  CHECK(run_cmd("train --data " + (g_root / "toy").string()).code == 2);  // no preset, no config
  CmdResult no_preset = run_cmd("train --data " + (g_root / "toy").string());
  CHECK(no_preset.err.find("pass --config") != std::string::npos);

  CHECK(run_cmd("train").code == 2);            // missing required --data
  CHECK(run_cmd("bogus-subcommand").code == 2);

  CmdResult denoise = run_cmd("noise-sweep " + toy_args +
                              " --rates 0.0 --n-seeds 1 --seed 1 --train-per-class 3 --val-size 6");
  CHECK(denoise.code == 2);
  CHECK(denoise.err.find("cannot denoise") != std::string::npos);

  CHECK(run_cmd("param-sweep " + toy_args + " --param gamma").code == 2);
  CmdResult badk = run_cmd("param-sweep " + toy_args +
                           " --param K --values 2.5 --n-seeds 1 --seed 1 --train-per-class 3"
                           " --val-size 6");
  CHECK(badk.code == 2);
  CHECK(badk.err.find("integers") != std::string::npos);
}

TEST_CASE("benchmark aggregates per-seed runs and is byte-stable") {
  std::string common = "benchmark " + toy_args +
                       " --variants pamt,pts --n-seeds 3 --seed 11 --train-per-class 3"
                       " --val-size 6 --out ";
  fs::path a = g_root / "bench_a", b = g_root / "bench_b";
  CmdResult r1 = run_cmd(common + a.string());
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("variant") != std::string::npos);

  json doc = json::parse(slurp(a / "benchmark.json"));
  CHECK(doc["schema"] == "pamt-results");
  CHECK(doc["command"] == "benchmark");
  CHECK(doc["seeds"] == json({11, 12, 13}));
  REQUIRE(doc["rows"].size() == 2);
  CHECK(doc["rows"][0]["variant"] == "pamt");
  CHECK(doc["rows"][1]["variant"] == "pts");
  for (const auto& row : doc["rows"]) {
    REQUIRE(row["per_seed"].size() == 3);
    CHECK(row["mean"].get<double>() == doctest::Approx(reaggregate_mean(row)).epsilon(1e-12));
  }
  CHECK(!slurp(a / "benchmark.txt").empty());

  CmdResult r2 = run_cmd(common + b.string());
  REQUIRE(r2.code == 0);
  CHECK(slurp(a / "benchmark.json") == slurp(b / "benchmark.json"));
}

TEST_CASE("worker count never changes the JSON artifact") {
  std::string common = toy_args +
                       " --variants pamt,pamt0 --n-seeds 4 --seed 17 --train-per-class 3"
                       " --val-size 6 --out ";
  fs::path a = g_root / "w1", b = g_root / "w3";
  std::string save = g_cli;
  CmdResult r1 = run_cmd("benchmark " + common + a.string());
  g_cli = "PAMT_WORKERS=3 " + save;
  CmdResult r2 = run_cmd("benchmark " + common + b.string());
  g_cli = save;
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  CHECK(slurp(a / "benchmark.json") == slurp(b / "benchmark.json"));
}

TEST_CASE("noise sweep reports injection bookkeeping and reruns byte-identically") {
  std::string common = "noise-sweep " + toy_args +
                       " --rates 0.5,0.6 --variants pamt,pts --n-seeds 2 --seed 5"
                       " --train-per-class 3 --val-size 6 --out ";
  fs::path a = g_root / "noise_a", b = g_root / "noise_b";
  CmdResult r1 = run_cmd(common + a.string());
  REQUIRE(r1.code == 0);

  json doc = json::parse(slurp(a / "noise_sweep.json"));
  std::size_t base_edges = doc["base_edges"].get<std::size_t>();
  CHECK(doc["base_rate"].get<double>() < 0.5);
  REQUIRE(doc["injection"].size() == 2);
  for (const auto& inj : doc["injection"]) {
    double target = inj["rate"].get<double>();
    for (const auto& per : inj["per_seed"]) {
      CHECK(per["edges"].get<std::size_t>() == base_edges);
      // the toy graph has few edges, so the reachable rate is coarse
      CHECK(std::abs(per["achieved_rate"].get<double>() - target) <= 2.0 / double(base_edges));
    }
  }
  REQUIRE(doc["grid"].size() == 4);  // 2 rates x 2 variants
  for (const auto& cell : doc["grid"]) CHECK(cell["per_seed"].size() == 2);

  CmdResult r2 = run_cmd(common + b.string());
  REQUIRE(r2.code == 0);
  CHECK(slurp(a / "noise_sweep.json") == slurp(b / "noise_sweep.json"));
}

TEST_CASE("a single-point parameter sweep agrees with the benchmark") {
  std::string tail = " --n-seeds 2 --seed 21 --train-per-class 3 --val-size 6 --out ";
  CmdResult rs = run_cmd("param-sweep " + toy_args + " --param alpha --values 0.1 --variant pamt" +
                         tail + (g_root / "sweep1").string());
  CmdResult rb = run_cmd("benchmark " + toy_args + " --variants pamt" + tail +
                         (g_root / "bench1").string());
  REQUIRE(rs.code == 0);
  REQUIRE(rb.code == 0);
  json sweep = json::parse(slurp(g_root / "sweep1" / "param_sweep.json"));
  json bench = json::parse(slurp(g_root / "bench1" / "benchmark.json"));
  REQUIRE(sweep["points"].size() == 1);
  CHECK(sweep["param"] == "alpha");
  CHECK(sweep["points"][0]["value"].get<double>() == 0.1);
  CHECK(sweep["points"][0]["mean"].get<double>() == bench["rows"][0]["mean"].get<double>());
  CHECK(sweep["points"][0]["per_seed"] == bench["rows"][0]["per_seed"]);
}

TEST_CASE("ablate runs the fixed variant ladder") {
  CmdResult r = run_cmd("ablate " + toy_args +
                        " --n-seeds 1 --seed 31 --train-per-class 3 --val-size 6 --out " +
                        (g_root / "ablate").string());
  REQUIRE(r.code == 0);
  json doc = json::parse(slurp(g_root / "ablate" / "ablate.json"));
  CHECK(doc["command"] == "ablate");
  REQUIRE(doc["rows"].size() == 4);
  CHECK(doc["rows"][0]["variant"] == "pts");
  CHECK(doc["rows"][1]["variant"] == "pamt0");
  CHECK(doc["rows"][2]["variant"] == "pamt1");
  CHECK(doc["rows"][3]["variant"] == "pamt");
}

TEST_CASE("label propagation alone runs through the CLI") {
  CmdResult r = run_cmd("train " + toy_args +
                        " --variant lp_only --seed 9 --train-per-class 3 --val-size 6 --out " +
                        (g_root / "lp").string());
  REQUIRE(r.code == 0);
  json run = json::parse(slurp(g_root / "lp" / "run.json"));
  CHECK(run["variant"] == "lp_only");
  CHECK(run["best_epoch"] == 0);
  CHECK(run["test_acc"].get<double>() > 0.5);
}

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <cli-binary> <data-dir> [doctest args]\n", argv[0]);
    return 1;
  }
  g_cli = argv[1];
  g_root = fs::temp_directory_path() / "pamt_cli_tests";
  fs::remove_all(g_root);
  fs::create_directories(g_root);

  GraphBundle toy = toy_bundle();
  save_bundle(toy, (g_root / "toy").string());
  GraphBundle with_split = toy;
  with_split.split = generate_split(toy, 3, 6, 1);
  save_bundle(with_split, (g_root / "toy_split").string());
  {
    std::ofstream conf(g_root / "toy.conf", std::ios::binary);
    conf << kToyConfig;
  }
  toy_args = "--data " + (g_root / "toy").string() + " --config " + (g_root / "toy.conf").string();

  doctest::Context ctx;
  ctx.applyCommandLine(1, argv);
  int rc = ctx.run();
  fs::remove_all(g_root);
  return rc;
}
