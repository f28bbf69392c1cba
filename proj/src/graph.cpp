#include "page/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

namespace page {

int Graph::num_edges() const {
  int count = 0;
  const int n = num_nodes();
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < v; ++u)
      if (adjacency(u, v) != 0.0) ++count;
  return count;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  const int n = num_nodes();
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (adjacency(u, v) != 0.0) out.emplace_back(u, v);
  return out;
}

void Graph::add_edge(int u, int v) {
  if (u == v) throw InvalidGraph("self-loops are not stored");
  if (u < 0 || v < 0 || u >= num_nodes() || v >= num_nodes()) throw IndexError("edge endpoint out of range");
  adjacency(u, v) = 1.0;
  adjacency(v, u) = 1.0;
}

void Graph::validate() const {
  const int n = num_nodes();
  if (adjacency.cols() != n) throw InvalidGraph("adjacency must be square");
  if (features.rows() != n) throw InvalidGraph("feature rows must equal node count");
  for (int u = 0; u < n; ++u) {
    if (adjacency(u, u) != 0.0) throw InvalidGraph("adjacency diagonal must be zero");
    for (int v = u + 1; v < n; ++v) {
      const double a = adjacency(u, v);
      if (a != adjacency(v, u)) throw InvalidGraph("adjacency must be symmetric");
      if (a != 0.0 && a != 1.0) throw InvalidGraph("adjacency entries must be 0 or 1");
    }
  }
  if (!node_labels.empty() && static_cast<int>(node_labels.size()) != n)
    throw InvalidGraph("node label count must equal node count");
  for (const auto& [u, v] : motif_edges) {
    if (u < 0 || v >= n || u >= v || adjacency(u, v) != 1.0) throw InvalidGraph("motif edge not in graph");
  }
}

Graph make_graph(int n, const std::vector<Edge>& edges, int feature_dim) {
  Graph g;
  g.features = Eigen::MatrixXd::Ones(n, feature_dim);
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [u, v] : edges) g.add_edge(u, v);
  return g;
}

Subgraph k_hop_subgraph(const Graph& g, int center, int k) {
  const int n = g.num_nodes();
  if (center < 0 || center >= n) throw IndexError("center node " + std::to_string(center) + " out of range");
  if (k < 0) throw ParameterError("k must be non-negative");

  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::queue<int> frontier;
  dist[center] = 0;
  frontier.push(center);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    if (dist[u] == k) continue;
    for (int v = 0; v < n; ++v) {
      if (g.adjacency(u, v) != 0.0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
    }
  }

  Subgraph out;
  std::vector<int> local(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    if (dist[v] >= 0) {
      local[v] = static_cast<int>(out.original_ids.size());
      out.original_ids.push_back(v);
    }
  }
  const int m = static_cast<int>(out.original_ids.size());
  out.center = local[center];
  auto& sub = out.graph;
  sub.features.resize(m, g.features.cols());
  sub.adjacency.resize(m, m);
  for (int i = 0; i < m; ++i) {
    sub.features.row(i) = g.features.row(out.original_ids[i]);
    for (int j = 0; j < m; ++j) sub.adjacency(i, j) = g.adjacency(out.original_ids[i], out.original_ids[j]);
  }
  if (!g.node_labels.empty()) {
    for (int id : out.original_ids) sub.node_labels.push_back(g.node_labels[id]);
  }
  sub.graph_label = g.graph_label;
  for (const auto& [u, v] : g.motif_edges) {
    if (local[u] >= 0 && local[v] >= 0) sub.motif_edges.insert(make_edge(local[u], local[v]));
  }
  return out;
}

Graph apply_mask(const Graph& g, const Eigen::MatrixXd& mask, MaskMode mode) {
  if (mask.rows() != g.num_nodes() || mask.cols() != g.num_nodes())
    throw InvalidMask("mask shape does not match graph");
  Graph out = g;
  if (mode == MaskMode::keep) {
    out.adjacency = g.adjacency.cwiseProduct(mask);
  } else {
    out.adjacency = g.adjacency.cwiseProduct((1.0 - mask.array()).matrix());
  }
  std::set<Edge> kept;
  for (const auto& [u, v] : g.motif_edges)
    if (out.adjacency(u, v) != 0.0) kept.insert({u, v});
  out.motif_edges = std::move(kept);
  return out;
}

namespace {

Eigen::MatrixXd select_top(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores, int k) {
  if (scores.rows() != adjacency.rows() || scores.cols() != adjacency.cols())
    throw InvalidMask("score matrix shape does not match adjacency");
  const int n = static_cast<int>(adjacency.rows());
  std::vector<std::tuple<double, int, int>> ranked;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (adjacency(u, v) != 0.0) ranked.emplace_back(0.5 * (scores(u, v) + scores(v, u)), u, v);
  // Stable sort keeps the lexicographic enumeration order among equal scores.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
  Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(n, n);
  const int take = std::min<int>(std::max(k, 0), static_cast<int>(ranked.size()));
  for (int i = 0; i < take; ++i) {
    const auto [s, u, v] = ranked[static_cast<std::size_t>(i)];
    hard(u, v) = hard(v, u) = 1.0;
  }
  return hard;
}

}  // namespace

Eigen::MatrixXd top_k_edges(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores, int k) {
  if (k < 1) throw ParameterError("top-k budget must be at least 1");
  return select_top(adjacency, scores, k);
}

int edges_for_ratio(int num_edges, double keep_ratio) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) throw ParameterError("keep_ratio must lie in (0, 1]");
  // Tolerate representation error such as 0.7 * 10 = 7.000000000000001.
  return static_cast<int>(std::ceil(keep_ratio * num_edges - 1e-9));
}

Eigen::MatrixXd sparsity_threshold_edges(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores,
                                         double keep_ratio) {
  int m = 0;
  for (Eigen::Index u = 0; u < adjacency.rows(); ++u)
    for (Eigen::Index v = u + 1; v < adjacency.cols(); ++v)
      if (adjacency(u, v) != 0.0) ++m;
  return select_top(adjacency, scores, edges_for_ratio(m, keep_ratio));
}

std::vector<Edge> mask_edges(const Eigen::MatrixXd& hard_mask) {
  std::vector<Edge> out;
  for (Eigen::Index u = 0; u < hard_mask.rows(); ++u)
    for (Eigen::Index v = u + 1; v < hard_mask.cols(); ++v)
      if (hard_mask(u, v) != 0.0) out.emplace_back(static_cast<int>(u), static_cast<int>(v));
  return out;
}

}  // namespace page
