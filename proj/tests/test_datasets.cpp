#include "doctest.h"
#include "fixtures.hpp"

#include <fstream>
#include <numeric>

using namespace page;

namespace {

int count_label(const Graph& g, int label) {
  return static_cast<int>(std::count(g.node_labels.begin(), g.node_labels.end(), label));
}

int components(const Graph& g) {
  std::vector<int> parent(static_cast<std::size_t>(g.num_nodes()));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int count = g.num_nodes();
  for (const auto& [u, v] : g.edges()) {
    const int a = find(u), b = find(v);
    if (a != b) {
      parent[a] = b;
      --count;
    }
  }
  return count;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

void write_triangle(const std::filesystem::path& dir) {
  write_file(dir / "TOY_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n");
  write_file(dir / "TOY_graph_indicator.txt", "1\n1\n1\n");
  write_file(dir / "TOY_graph_labels.txt", "-1\n");
  write_file(dir / "TOY_node_labels.txt", "0\n6\n0\n");
}

}  // namespace

TEST_CASE("BA-Shapes default build") {
  const auto b = generate_ba_shapes(0);
  REQUIRE(b.graphs.size() == 1);
  const auto& g = b.graphs[0];
  CHECK_NOTHROW(b.validate());
  CHECK(b.task == Task::node);
  CHECK(b.num_classes == 4);
  CHECK(g.num_nodes() == 700);
  CHECK(count_label(g, 0) == 300);
  CHECK(700 - count_label(g, 0) == 400);
  CHECK(count_label(g, 1) == 80);
  CHECK(count_label(g, 2) == 160);
  CHECK(count_label(g, 3) == 160);
  CHECK(g.motif_edges.size() == 480);
  // Seed clique (10) + 295 growth edges + 480 house edges + 80 attachments.
  CHECK(g.num_edges() == 865);
  CHECK(components(g) == 1);

  // Each house is 5 consecutive nodes holding 6 motif edges among themselves.
  for (int h = 0; h < 80; ++h) {
    const int s = 300 + 5 * h;
    int internal = 0;
    for (const auto& [u, v] : g.motif_edges) internal += (u >= s && v < s + 5);
    CHECK(internal == 6);
    for (int v = s; v < s + 5; ++v) CHECK(g.node_labels[v] != 0);
  }
}

TEST_CASE("BA-Shapes knobs and determinism") {
  BaShapesOptions none;
  none.num_houses = 0;
  const auto base = generate_ba_shapes(3, none);
  CHECK(base.graphs[0].num_nodes() == 300);
  CHECK(count_label(base.graphs[0], 0) == 300);
  CHECK(base.graphs[0].motif_edges.empty());

  const auto a = generate_ba_shapes(5), b = generate_ba_shapes(5), c = generate_ba_shapes(6);
  CHECK(a.graphs[0].adjacency == b.graphs[0].adjacency);
  CHECK(a.splits.test == b.splits.test);
  CHECK(a.graphs[0].adjacency != c.graphs[0].adjacency);
}

TEST_CASE("Tree-Cycles default build") {
  const auto b = generate_tree_cycles(0);
  const auto& g = b.graphs[0];
  CHECK_NOTHROW(b.validate());
  CHECK(b.num_classes == 2);
  CHECK(count_label(g, 1) == 80 * 6);
  CHECK(g.num_nodes() == 511 + 480);
  CHECK(g.motif_edges.size() == 480);
  CHECK(g.num_edges() == 510 + 480 + 80);

  // Removing motif and attachment edges leaves a forest: |E| = |V| - #components.
  Graph stripped = g;
  for (const auto& [u, v] : g.edges()) {
    const bool motif = g.motif_edges.count({u, v}) > 0;
    const bool attachment = g.node_labels[u] != g.node_labels[v];
    if (motif || attachment) stripped.adjacency(u, v) = stripped.adjacency(v, u) = 0.0;
  }
  CHECK(stripped.num_edges() == stripped.num_nodes() - components(stripped));

  TreeCyclesOptions none;
  none.num_cycles = 0;
  const auto tree = generate_tree_cycles(1, none);
  CHECK(tree.graphs[0].num_nodes() == 511);
  CHECK(count_label(tree.graphs[0], 1) == 0);
  CHECK(components(tree.graphs[0]) == 1);
  CHECK(tree.graphs[0].num_edges() == 510);
}

TEST_CASE("make_splits sizes and determinism") {
  DatasetBundle b;
  b.name = "many";
  b.task = Task::graph;
  b.num_classes = 2;
  auto g = make_graph(1, {});
  g.graph_label = 0;
  b.graphs.assign(4337, g);
  const auto s = make_splits(b, {0.8, 0.1, 0.1}, 9);
  CHECK(s.splits.val.size() == 434);
  CHECK(s.splits.test.size() == 434);
  CHECK(s.splits.train.size() == 3469);

  std::vector<int> all;
  for (const auto* part : {&s.splits.train, &s.splits.val, &s.splits.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  std::vector<int> expected(4337);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(all == expected);

  const auto again = make_splits(b, {0.8, 0.1, 0.1}, 9);
  CHECK(again.splits.train == s.splits.train);
  CHECK(make_splits(b, {0.8, 0.1, 0.1}, 10).splits.train != s.splits.train);

  const auto only_train = make_splits(b, {1.0, 0.0, 0.0}, 1);
  CHECK(only_train.splits.train.size() == 4337);
  CHECK(only_train.splits.test.empty());

  CHECK_THROWS_AS(make_splits(b, {0.5, 0.1, 0.1}, 1), ParameterError);
  b.graphs.resize(3);
  CHECK_THROWS_AS(make_splits(b, {0.8, 0.1, 0.1}, 1), ParameterError);
}

TEST_CASE("TU loader on a toy triangle") {
  const auto dir = fixtures::temp_dir("tu_triangle");
  write_triangle(dir);
  const auto b = load_tu_dataset(dir, "TOY");
  REQUIRE(b.graphs.size() == 1);
  const auto& g = b.graphs[0];
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 3);
  CHECK(b.task == Task::graph);
  CHECK(g.graph_label == 0);
  // Distinct node labels {0, 6} become a two-column one-hot.
  CHECK(g.feature_dim() == 2);
  CHECK(g.features(1, 1) == 1.0);
  CHECK(g.features(0, 0) == 1.0);
  CHECK(g.features.rowwise().sum() == Eigen::VectorXd::Ones(3));
  std::filesystem::remove_all(dir);
}

TEST_CASE("TU loader errors") {
  const auto dir = fixtures::temp_dir("tu_errors");
  write_triangle(dir);
  std::filesystem::remove(dir / "TOY_graph_labels.txt");
  try {
    load_tu_dataset(dir, "TOY");
    FAIL("expected a dataset-format error");
  } catch (const DatasetFormatError& e) {
    CHECK(std::string(e.what()).find("TOY_graph_labels.txt") != std::string::npos);
  }
  write_triangle(dir);
  write_file(dir / "TOY_A.txt", "1, 2\n2, 1\n2, 9\n9, 2\n");
  CHECK_THROWS_AS(load_tu_dataset(dir, "TOY"), IntegrityError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("TU and bundle round trips") {
  const auto dir = fixtures::temp_dir("tu_roundtrip");
  auto b = fixtures::triangle_dataset(12, 4);
  b.name = "TRI";
  // The TU layout stores one categorical label per node, so use one-hot rows.
  write_tu_dataset(b, dir / "tu");
  const auto back = load_tu_dataset(dir / "tu", "TRI");
  REQUIRE(back.graphs.size() == b.graphs.size());
  for (std::size_t i = 0; i < b.graphs.size(); ++i) {
    CHECK(back.graphs[i].adjacency == b.graphs[i].adjacency);
    CHECK(back.graphs[i].graph_label == b.graphs[i].graph_label);
  }

  std::mt19937_64 rng(2);
  auto node_bundle = generate_ba_shapes(1);
  node_bundle.graphs[0].features = fixtures::random_matrix(700, 10, rng);
  save_bundle(node_bundle, dir / "cache");
  const auto cached = load_bundle(dir / "cache");
  CHECK(cached.name == node_bundle.name);
  CHECK(cached.graphs[0].features == node_bundle.graphs[0].features);
  CHECK(cached.graphs[0].adjacency == node_bundle.graphs[0].adjacency);
  CHECK(cached.graphs[0].node_labels == node_bundle.graphs[0].node_labels);
  CHECK(cached.graphs[0].motif_edges == node_bundle.graphs[0].motif_edges);
  CHECK(cached.splits.train == node_bundle.splits.train);
  CHECK(cached.splits.test == node_bundle.splits.test);
  CHECK_THROWS_AS(load_bundle(dir / "missing"), DatasetFormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("supported dataset names") {
  const auto names = supported_datasets();
  CHECK(names == std::vector<std::string>{"ba-shapes", "tree-cycles", "Mutagenicity", "NCI1"});
}
