#pragma once

#include "page/errors.hpp"

#include <Eigen/Dense>

#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace page {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Task { node, graph };

using Edge = std::pair<int, int>;  // undirected, stored with first < second

inline Edge make_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

// Undirected graph with dense features and adjacency. Self-loops are never
// stored; they are added only inside normalization.
struct Graph {
  Eigen::MatrixXd features;
  Eigen::MatrixXd adjacency;
  std::vector<int> node_labels;
  std::optional<int> graph_label;
  std::set<Edge> motif_edges;

  int num_nodes() const { return static_cast<int>(adjacency.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  int num_edges() const;
  std::vector<Edge> edges() const;  // lexicographic order

  void add_edge(int u, int v);

  // Throws InvalidGraph on a broken invariant.
  void validate() const;
};

Graph make_graph(int n, const std::vector<Edge>& edges, int feature_dim = 1);

enum class MaskMode { keep, remove };

template <typename Derived>
void require_square_symmetric(const Eigen::MatrixBase<Derived>& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) throw InvalidGraph("adjacency must be square");
  if (a.rows() > 0 && ((a - a.transpose()).cwiseAbs().maxCoeff() > tol))
    throw InvalidGraph("adjacency must be symmetric");
}

// D^-1/2 (A + I) D^-1/2 with D_ii = sum_j (A + I)_ij; weighted degrees allowed.
template <typename Derived>
MatrixX<typename Derived::Scalar> normalize_adjacency(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  require_square_symmetric(a);
  const auto n = a.rows();
  MatrixX<Scalar> hat = a + MatrixX<Scalar>::Identity(n, n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s = hat.rowwise().sum().array().rsqrt().matrix();
  return s.asDiagonal() * hat * s.asDiagonal();
}

// (M + M^T) / 2
template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) * typename Derived::Scalar(0.5);
}

struct Subgraph {
  Graph graph;
  std::vector<int> original_ids;  // local index -> id in the parent graph
  int center = 0;                 // local index of the center node
};

Subgraph k_hop_subgraph(const Graph& g, int center, int k);

// Keep returns A .* M; remove returns A .* (1 - M). Features are untouched.
Graph apply_mask(const Graph& g, const Eigen::MatrixXd& mask, MaskMode mode);

// Binary mask over the K highest-scoring undirected edges of the support of
// `adjacency`. Ties go to the lexicographically smaller (u, v).
Eigen::MatrixXd top_k_edges(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores, int k);

// ceil(keep_ratio * |E|) edges chosen as in top_k_edges.
Eigen::MatrixXd sparsity_threshold_edges(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores,
                                         double keep_ratio);

int edges_for_ratio(int num_edges, double keep_ratio);

std::vector<Edge> mask_edges(const Eigen::MatrixXd& hard_mask);

}  // namespace page
