#include "pamt/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pamt/rng.hpp"

namespace pamt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::invalid_argument("missing file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write: " + p.string());
  out << text;
}

std::string fmt_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const char* what) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string(what) + ": non-numeric value '" + std::string(s) + "'");
  return x;
}

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t x = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string(what) + ": bad integer '" + std::string(s) + "'");
  return x;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

// Iterates non-empty lines, tolerating a trailing newline.
template <typename F>
void for_lines(const std::string& text, F&& f) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) f(line);
    pos = end + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

void HyperParams::validate() const {
  require(alpha >= 0.0 && alpha <= 1.0, "config: alpha out of [0,1]");
  require(beta >= 0.0 && beta < 1.0, "config: beta out of [0,1)");
  require(drop >= 0.0 && drop < 1.0, "config: drop out of [0,1)");
  require(K >= 1, "config: K < 1");
  require(t_u >= 1, "config: t_u < 1");
  require(dim >= 1, "config: dim < 1");
  require(max_epochs >= 1 && init_epochs >= 0 && patience >= 1, "config: bad loop bounds");
  require(mask_source == "softmax" || mask_source == "logits", "config: bad mask_source");
}

GraphBundle load_bundle(const std::string& dir) {
  fs::path root(dir);
  json meta = json::parse(read_file(root / "meta.json"));
  GraphBundle b;
  b.name = meta.at("name").get<std::string>();
  const std::size_t n = meta.at("n").get<std::size_t>();
  const std::size_t d = meta.at("d").get<std::size_t>();
  const std::uint32_t c = meta.at("c").get<std::uint32_t>();
  require(meta.at("format_version").get<int>() == 1, "meta.json: unsupported format_version");

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for_lines(read_file(root / "edges.tsv"), [&](std::string_view line) {
    auto f = split_fields(line, '\t');
    require(f.size() == 2, "edges.tsv: expected 'u<TAB>v'");
    auto u = parse_u64(f[0], "edges.tsv"), v = parse_u64(f[1], "edges.tsv");
    require(u < n && v < n, "edges.tsv: node id >= n");
    require(u != v, "edges.tsv: self-loop");
    edges.emplace_back(std::uint32_t(u), std::uint32_t(v));
  });
  b.graph = build_graph(n, edges);

  const fs::path sparse_path = root / "features.tsv";
  const fs::path dense_path = root / "features.csv";
  if (fs::exists(sparse_path)) {
    b.features_sparse_file = true;
    std::vector<std::pair<std::uint64_t, double>> trip;  // key = row*d+col
    for_lines(read_file(sparse_path), [&](std::string_view line) {
      auto f = split_fields(line, '\t');
      require(f.size() == 3, "features.tsv: expected 'row<TAB>col<TAB>val'");
      auto r = parse_u64(f[0], "features.tsv"), col = parse_u64(f[1], "features.tsv");
      require(r < n, "features.tsv: node id >= n");
      require(col < d, "features.tsv: column id >= d");
      trip.emplace_back(r * d + col, parse_double(f[2], "features.tsv"));
    });
    std::sort(trip.begin(), trip.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    b.features.rows = n;
    b.features.cols = d;
    b.features.offsets.assign(n + 1, 0);
    for (auto& [key, val] : trip) {
      std::size_t r = key / d;
      b.features.idx.push_back(std::uint32_t(key % d));
      b.features.vals.push_back(val);
      b.features.offsets[r + 1]++;
    }
    for (std::size_t i = 0; i < n; ++i) b.features.offsets[i + 1] += b.features.offsets[i];
  } else if (fs::exists(dense_path)) {
    b.features_sparse_file = false;
    DenseMatrix x(n, d);
    std::size_t row = 0;
    for_lines(read_file(dense_path), [&](std::string_view line) {
      require(row < n, "features.csv: too many rows");
      auto f = split_fields(line, ',');
      require(f.size() == d, "features.csv: wrong column count");
      for (std::size_t j = 0; j < d; ++j) x.at(row, j) = parse_double(f[j], "features.csv");
      ++row;
    });
    require(row == n, "features.csv: too few rows");
    b.features = SparseFeatures::from_dense(x);
  } else {
    throw std::invalid_argument("missing file: features.tsv or features.csv in " + dir);
  }

  b.labels.num_classes = c;
  b.labels.label.assign(n, kUnknownLabel);
  for_lines(read_file(root / "labels.tsv"), [&](std::string_view line) {
    auto f = split_fields(line, '\t');
    require(f.size() == 2, "labels.tsv: expected 'node<TAB>class'");
    auto node = parse_u64(f[0], "labels.tsv");
    auto cls = parse_u64(f[1], "labels.tsv");
    require(node < n, "labels.tsv: node id >= n");
    require(cls < c, "labels.tsv: label id >= c");
    b.labels.label[node] = std::uint32_t(cls);
  });

  if (fs::exists(root / "splits.json")) {
    json s = json::parse(read_file(root / "splits.json"));
    SplitSpec sp;
    sp.train = s.at("train").get<std::vector<std::uint32_t>>();
    sp.val = s.at("val").get<std::vector<std::uint32_t>>();
    sp.test = s.at("test").get<std::vector<std::uint32_t>>();
    for (auto* ids : {&sp.train, &sp.val, &sp.test})
      for (auto id : *ids) require(id < n, "splits.json: node id >= n");
    b.split = std::move(sp);
  }
  return b;
}

void save_bundle(const GraphBundle& b, const std::string& dir) {
  fs::path root(dir);
  fs::create_directories(root);
  const std::size_t n = b.graph.n, d = b.features.cols;

  json meta;
  meta["c"] = b.labels.num_classes;
  meta["d"] = d;
  meta["format_version"] = 1;
  meta["n"] = n;
  meta["name"] = b.name;
  write_file(root / "meta.json", meta.dump(2) + "\n");

  std::string edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = b.graph.offsets[i]; e < b.graph.offsets[i + 1]; ++e) {
      std::uint32_t j = b.graph.cols[e];
      if (i < j) edges += std::to_string(i) + "\t" + std::to_string(j) + "\n";
    }
  write_file(root / "edges.tsv", edges);

  if (b.features_sparse_file) {
    std::string feats;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = b.features.offsets[i]; e < b.features.offsets[i + 1]; ++e)
        feats += std::to_string(i) + "\t" + std::to_string(b.features.idx[e]) + "\t" +
                 fmt_double(b.features.vals[e]) + "\n";
    write_file(root / "features.tsv", feats);
  } else {
    DenseMatrix x = b.features.to_dense();
    std::string feats;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (j) feats += ',';
        feats += fmt_double(x.at(i, j));
      }
      feats += '\n';
    }
    write_file(root / "features.csv", feats);
  }

  std::string labels;
  for (std::size_t i = 0; i < n; ++i)
    if (b.labels.label[i] != kUnknownLabel)
      labels += std::to_string(i) + "\t" + std::to_string(b.labels.label[i]) + "\n";
  write_file(root / "labels.tsv", labels);

  if (b.split) {
    json s;
    s["test"] = b.split->test;
    s["train"] = b.split->train;
    s["val"] = b.split->val;
    write_file(root / "splits.json", s.dump(2) + "\n");
  }
}

SplitSpec generate_split(const GraphBundle& b, std::size_t per_class_train, std::size_t val_size,
                         std::uint64_t seed) {
  const std::size_t n = b.graph.n;
  const std::uint32_t c = b.labels.num_classes;
  Rng rng(subseed(seed, 3));

  auto sample = [&](std::vector<std::uint32_t>& pool, std::size_t k) {
    require(pool.size() >= k, "generate_split: sizes infeasible");
    for (std::size_t t = 0; t < k; ++t) {
      std::size_t j = t + std::size_t(rng.uniform_below(pool.size() - t));
      std::swap(pool[t], pool[j]);
    }
    std::vector<std::uint32_t> out(pool.begin(), pool.begin() + k);
    pool.erase(pool.begin(), pool.begin() + k);
    return out;
  };

  SplitSpec sp;
  std::vector<char> in_train(n, 0);
  for (std::uint32_t k = 0; k < c; ++k) {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < n; ++i)
      if (b.labels.label[i] == k) ids.push_back(std::uint32_t(i));
    require(ids.size() >= per_class_train, "generate_split: class too small");
    for (auto id : sample(ids, per_class_train)) {
      sp.train.push_back(id);
      in_train[id] = 1;
    }
  }
  std::vector<std::uint32_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (!in_train[i]) rest.push_back(std::uint32_t(i));
  require(rest.size() >= val_size + 1, "generate_split: sizes infeasible");
  sp.val = sample(rest, val_size);
  sp.test = rest;

  std::sort(sp.train.begin(), sp.train.end());
  std::sort(sp.val.begin(), sp.val.end());
  std::sort(sp.test.begin(), sp.test.end());
  return sp;
}

namespace {

void apply_config_line(HyperParams& hp, std::string_view key, std::string_view val) {
  auto as_bool = [&](std::string_view s) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw std::invalid_argument("config: bad boolean '" + std::string(s) + "'");
  };
  if (key == "dim") hp.dim = std::size_t(parse_u64(val, "config.dim"));
  else if (key == "alpha") hp.alpha = parse_double(val, "config.alpha");
  else if (key == "wd") hp.wd = parse_double(val, "config.wd");
  else if (key == "lr") hp.lr = parse_double(val, "config.lr");
  else if (key == "beta") hp.beta = parse_double(val, "config.beta");
  else if (key == "K") hp.K = int(parse_u64(val, "config.K"));
  else if (key == "drop") hp.drop = parse_double(val, "config.drop");
  else if (key == "t_u") hp.t_u = int(parse_u64(val, "config.t_u"));
  else if (key == "max_epochs") hp.max_epochs = int(parse_u64(val, "config.max_epochs"));
  else if (key == "init_epochs") hp.init_epochs = int(parse_u64(val, "config.init_epochs"));
  else if (key == "patience") hp.patience = int(parse_u64(val, "config.patience"));
  else if (key == "seed") hp.seed = parse_u64(val, "config.seed");
  else if (key == "normalize_features") hp.normalize_features = as_bool(val);
  else if (key == "renormalize_mask") hp.renormalize_mask = as_bool(val);
  else if (key == "masked_inference") hp.masked_inference = as_bool(val);
  else if (key == "mask_source") hp.mask_source = std::string(val);
  else throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

HyperParams load_config(const std::string& path, const HyperParams* base) {
  HyperParams hp = base ? *base : HyperParams{};
  std::map<std::string, bool, std::less<>> seen;
  for_lines(read_file(path), [&](std::string_view line) {
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') return;
    std::size_t eq = t.find('=');
    require(eq != std::string_view::npos, "config: expected 'key = value'");
    std::string_view key = trim(t.substr(0, eq));
    std::string_view val = trim(t.substr(eq + 1));
    apply_config_line(hp, key, val);
    seen[std::string(key)] = true;
  });
  if (!base) {
    for (const char* k : {"dim", "alpha", "wd", "lr", "beta", "K", "drop", "t_u"})
      if (!seen.count(k))
        throw std::invalid_argument(std::string("config: missing required key '") + k + "'");
  }
  hp.validate();
  return hp;
}

HyperParams preset_for(const std::string& dataset) {
  HyperParams hp;
  if (dataset == "cora_ml") {
    hp.dim = 128; hp.alpha = 0.10; hp.wd = 0.025; hp.lr = 0.05;
    hp.beta = 0.50; hp.K = 10; hp.drop = 0.20; hp.t_u = 30;
  } else if (dataset == "citeseer") {
    hp.dim = 128; hp.alpha = 0.15; hp.wd = 0.055; hp.lr = 0.10;
    hp.beta = 0.25; hp.K = 10; hp.drop = 0.15; hp.t_u = 20;
  } else if (dataset == "pubmed") {
    hp.dim = 128; hp.alpha = 0.10; hp.wd = 0.015; hp.lr = 0.10;
    hp.beta = 0.10; hp.K = 10; hp.drop = 0.35; hp.t_u = 10;
  } else if (dataset == "ms_academic") {
    hp.dim = 256; hp.alpha = 0.10; hp.wd = 0.010; hp.lr = 0.05;
    hp.beta = 0.10; hp.K = 10; hp.drop = 0.35; hp.t_u = 10;
  } else {
    throw std::invalid_argument("preset_for: unknown dataset '" + dataset + "'");
  }
  return hp;
}

SparseFeatures l1_normalize_rows(const SparseFeatures& x) {
  SparseFeatures out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double s = 0.0;
    for (std::size_t e = x.offsets[i]; e < x.offsets[i + 1]; ++e) s += std::abs(x.vals[e]);
    if (s == 0.0) continue;
    for (std::size_t e = x.offsets[i]; e < x.offsets[i + 1]; ++e) out.vals[e] = x.vals[e] / s;
  }
  return out;
}

}  // namespace pamt
