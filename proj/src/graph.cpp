#include "pamt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "pamt/rng.hpp"

namespace pamt {

namespace {

std::uint64_t edge_key(std::uint32_t u, std::uint32_t v, std::size_t n) {
  if (u > v) std::swap(u, v);
  return std::uint64_t(u) * n + v;
}

void check_labels_known(const Graph& g, const LabelAssignment& labels) {
  require(labels.label.size() == g.n, "labels: size mismatch");
  for (std::size_t i = 0; i < g.n; ++i)
    require(labels.label[i] != kUnknownLabel, "labels: endpoint label unknown");
}

}  // namespace

bool Graph::has_edge(std::size_t u, std::size_t v) const {
  auto b = cols.begin() + offsets[u];
  auto e = cols.begin() + offsets[u + 1];
  return std::binary_search(b, e, std::uint32_t(v));
}

Graph build_graph(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dir;
  dir.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    require(u < n && v < n, "build_graph: node id out of range");
    require(u != v, "build_graph: self-loop");
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  Graph g;
  g.n = n;
  g.offsets.assign(n + 1, 0);
  g.cols.reserve(dir.size());
  for (auto [u, v] : dir) g.offsets[u + 1]++;
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  for (auto [u, v] : dir) g.cols.push_back(v);
  return g;
}

SparseAdjacency normalize_adjacency(const Graph& g) {
  std::vector<double> dinv(g.n);
  for (std::size_t i = 0; i < g.n; ++i) dinv[i] = 1.0 / std::sqrt(double(g.degree(i) + 1));

  SparseAdjacency a;
  a.n = g.n;
  a.symmetric = true;
  a.offsets.assign(g.n + 1, 0);
  a.cols.reserve(g.cols.size() + g.n);
  a.vals.reserve(g.cols.size() + g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    bool diag_done = false;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      std::uint32_t j = g.cols[e];
      if (!diag_done && j > i) {
        a.cols.push_back(std::uint32_t(i));
        a.vals.push_back(dinv[i] * dinv[i]);
        diag_done = true;
      }
      a.cols.push_back(j);
      a.vals.push_back(dinv[i] * dinv[j]);
    }
    if (!diag_done) {
      a.cols.push_back(std::uint32_t(i));
      a.vals.push_back(dinv[i] * dinv[i]);
    }
    a.offsets[i + 1] = a.cols.size();
  }
  return a;
}

double structure_noise_rate(const Graph& g, const LabelAssignment& labels) {
  check_labels_known(g, labels);
  require(g.cols.size() > 0, "empty graph");
  std::size_t cross = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      std::uint32_t j = g.cols[e];
      if (i < j && labels.label[i] != labels.label[j]) ++cross;
    }
  return double(cross) / double(g.undirected_edge_count());
}

Graph inject_structure_noise(const Graph& g, const LabelAssignment& labels, double target_rate,
                             std::uint64_t rng_seed) {
  check_labels_known(g, labels);
  require(g.cols.size() > 0, "empty graph");
  require(target_rate <= 1.0, "inject_structure_noise: rate > 1");

  const std::size_t m = g.undirected_edge_count();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> same, cross;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      std::uint32_t j = g.cols[e];
      if (i >= j) continue;
      auto& side = labels.label[i] == labels.label[j] ? same : cross;
      side.emplace_back(std::uint32_t(i), j);
    }

  const double current = double(cross.size()) / double(m);
  if (target_rate < current - 1e-12) throw std::invalid_argument("cannot denoise");
  const long long want = std::llround(target_rate * double(m));
  long long swaps = want - (long long)cross.size();
  if (swaps <= 0) return g;
  if (swaps > (long long)same.size()) throw std::invalid_argument("target unreachable");

  std::unordered_set<std::uint64_t> present;
  present.reserve(m * 2);
  for (auto [u, v] : same) present.insert(edge_key(u, v, g.n));
  for (auto [u, v] : cross) present.insert(edge_key(u, v, g.n));

  Rng rng(rng_seed);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> removed_pool = same;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> added;
  added.reserve(std::size_t(swaps));
  const std::uint64_t max_tries = 1000 + 10000 * std::uint64_t(swaps);
  std::uint64_t tries = 0;
  for (long long s = 0; s < swaps; ++s) {
    std::size_t pick = std::size_t(rng.uniform_below(removed_pool.size()));
    auto [ru, rv] = removed_pool[pick];
    removed_pool[pick] = removed_pool.back();
    removed_pool.pop_back();
    present.erase(edge_key(ru, rv, g.n));

    for (;;) {
      if (++tries > max_tries) throw std::invalid_argument("target unreachable");
      std::uint32_t u = std::uint32_t(rng.uniform_below(g.n));
      std::uint32_t v = std::uint32_t(rng.uniform_below(g.n));
      if (u == v || labels.label[u] == labels.label[v]) continue;
      if (present.count(edge_key(u, v, g.n))) continue;
      present.insert(edge_key(u, v, g.n));
      if (u > v) std::swap(u, v);
      added.emplace_back(u, v);
      break;
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(m);
  edges.insert(edges.end(), removed_pool.begin(), removed_pool.end());
  edges.insert(edges.end(), cross.begin(), cross.end());
  edges.insert(edges.end(), added.begin(), added.end());
  return build_graph(g.n, edges);
}

}  // namespace pamt
