#pragma once

#include <cstdint>
#include <vector>

#include "pamt/csr.hpp"

namespace pamt {

constexpr std::uint32_t kUnknownLabel = ~std::uint32_t(0);

// Undirected simple graph: every edge stored in both directions, no
// self-loops, no multi-edges. Column indices ascending per row.
struct Graph {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> cols;

  std::size_t undirected_edge_count() const { return cols.size() / 2; }
  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  bool has_edge(std::size_t u, std::size_t v) const;
};

struct LabelAssignment {
  std::vector<std::uint32_t> label;  // kUnknownLabel when absent
  std::uint32_t num_classes = 0;
};

// Builds the CSR representation from undirected pairs; duplicates (in either
// orientation) collapse to one edge. Self-loops are invalid input.
Graph build_graph(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

// D̃^(-1/2) (A + I) D̃^(-1/2) with d̃_i = degree_i + 1. Pattern = graph + diagonal.
SparseAdjacency normalize_adjacency(const Graph& g);

// Fraction of undirected edges whose endpoints carry different labels.
double structure_noise_rate(const Graph& g, const LabelAssignment& labels);

// Raises the cross-label edge fraction to target_rate by swapping edges:
// remove a uniformly chosen same-label edge, add a uniformly chosen absent
// cross-label pair. Node set and edge count are preserved exactly.
Graph inject_structure_noise(const Graph& g, const LabelAssignment& labels, double target_rate,
                             std::uint64_t rng_seed);

}  // namespace pamt
