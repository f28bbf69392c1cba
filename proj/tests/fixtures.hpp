#pragma once

#include "page/training.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace fixtures {

inline page::Graph path_graph(int n, int feature_dim = 1) {
  std::vector<page::Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return page::make_graph(n, e, feature_dim);
}

inline page::Graph star_graph(int leaves) {
  std::vector<page::Edge> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return page::make_graph(leaves + 1, e);
}

// Erdos-Renyi graph with Gaussian features.
inline page::Graph random_graph(int n, double p, int feature_dim, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto g = page::make_graph(n, {}, feature_dim);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng)) g.add_edge(u, v);
  g.features = Eigen::MatrixXd::NullaryExpr(n, feature_dim, [&]() { return normal(rng); });
  return g;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&]() { return normal(rng); });
}

// Small graph-classification set: label 1 graphs contain a triangle, label 0
// graphs are trees. Features are one-hot degree buckets so the task is
// learnable by a GCN in a few epochs.
inline page::DatasetBundle triangle_dataset(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  page::DatasetBundle b;
  b.name = "triangles";
  b.task = page::Task::graph;
  b.num_classes = 2;
  for (int i = 0; i < count; ++i) {
    const int n = 5 + static_cast<int>(rng() % 4);
    auto g = page::make_graph(n, {}, 4);
    for (int v = 1; v < n; ++v) g.add_edge(v, static_cast<int>(rng() % static_cast<std::uint64_t>(v)));
    const bool triangle = i % 2 == 1;
    if (triangle) {
      // Close a triangle over a path u - w - v.
      for (int v = 2; v < n; ++v) {
        int w = -1;
        for (int x = 0; x < v; ++x)
          if (g.adjacency(v, x) != 0.0) w = x;
        for (int u = 0; u < n; ++u)
          if (u != v && u != w && g.adjacency(u, w) != 0.0 && g.adjacency(u, v) == 0.0) {
            g.add_edge(u, v);
            g.motif_edges = {page::make_edge(u, v), page::make_edge(u, w), page::make_edge(w, v)};
            break;
          }
        if (!g.motif_edges.empty()) break;
      }
    }
    g.features.setZero();
    for (int v = 0; v < n; ++v) g.features(v, std::min(3, static_cast<int>(g.adjacency.row(v).sum()) - 1)) = 1.0;
    g.graph_label = g.motif_edges.empty() ? 0 : 1;
    b.graphs.push_back(std::move(g));
  }
  return page::make_splits(std::move(b), {0.6, 0.2, 0.2}, seed);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("page_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
