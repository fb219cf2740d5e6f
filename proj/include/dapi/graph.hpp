#pragma once

// Undirected weighted graphs and their Laplacians. The same type describes
// the physical coupling network (edge weights k_ij) and the communication
// network of the averaging integrators (edge weights c_ij).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dapi/errors.hpp"
#include "dapi/types.hpp"

namespace dapi {

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;
};

/// Undirected graph on nodes 0..n-1 with strictly positive edge weights.
///
/// The edge list is the canonical storage. Self-loops, non-positive or
/// non-finite weights and repeated unordered pairs are rejected; duplicates
/// are never merged.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  explicit WeightedGraph(std::size_t node_count, std::vector<Edge> edges = {}) : n_(node_count) {
    edges_.reserve(edges.size());
    for (const auto& e : edges) add_edge(e.from, e.to, e.weight);
  }

  void add_edge(std::size_t i, std::size_t j, double w) {
    if (i >= n_ || j >= n_) {
      throw InvalidArgument("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") references a node outside 0.." + std::to_string(n_) + "-1");
    }
    if (i == j) throw InvalidArgument("self-loop at node " + std::to_string(i));
    if (!std::isfinite(w) || w <= 0.0) {
      throw InvalidArgument("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") has non-positive weight");
    }
    const auto key = std::minmax(i, j);
    if (!pairs_.insert({key.first, key.second}).second) {
      throw InvalidArgument("duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    edges_.push_back({i, j, w});
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Same topology with every weight multiplied by `factor` (> 0).
  WeightedGraph scaled(double factor) const {
    if (!std::isfinite(factor) || factor <= 0.0) throw InvalidArgument("graph scale factor must be positive");
    WeightedGraph out(n_);
    for (const auto& e : edges_) out.add_edge(e.from, e.to, e.weight * factor);
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::set<std::pair<std::size_t, std::size_t>> pairs_;
};

/// Dense weighted Laplacian: L_ii = sum of incident weights, L_ij = -w_ij.
inline Matrix laplacian(const WeightedGraph& g) {
  const auto n = static_cast<Index>(g.size());
  Matrix L = Matrix::Zero(n, n);
  for (const auto& e : g.edges()) {
    const auto i = static_cast<Index>(e.from);
    const auto j = static_cast<Index>(e.to);
    L(i, j) -= e.weight;
    L(j, i) -= e.weight;
    L(i, i) += e.weight;
    L(j, j) += e.weight;
  }
  return L;
}

/// True iff the graph has exactly one connected component (breadth-first
/// traversal). The empty graph is not connected; a single node is.
inline bool is_connected(const WeightedGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (const auto& e : g.edges()) {
    adjacency[e.from].push_back(e.to);
    adjacency[e.to].push_back(e.from);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> frontier{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push_back(w);
      }
    }
  }
  return reached == n;
}

}  // namespace dapi
