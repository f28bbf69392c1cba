#pragma once

#include "page/graph.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace page {

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

// Node tasks hold one graph and split its nodes; graph tasks split graphs.
struct DatasetBundle {
  std::string name;
  Task task = Task::node;
  int num_classes = 0;
  std::vector<Graph> graphs;
  Splits splits;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BaShapesOptions {
  int base_nodes = 300;
  int num_houses = 80;
  int attach_edges = 1;  // Barabasi-Albert growth parameter m
  int seed_clique = 5;
  int feature_dim = 10;
};

struct TreeCyclesOptions {
  int tree_height = 8;  // balanced binary tree with 2^(h+1) - 1 nodes
  int num_cycles = 80;
  int cycle_size = 6;
  int feature_dim = 10;
};

// Labels: 0 base, 1 roof, 2 middle, 3 bottom. Default splits 0.8/0.1/0.1.
DatasetBundle generate_ba_shapes(std::uint64_t seed, const BaShapesOptions& options = {});

// Labels: 0 tree, 1 cycle member.
DatasetBundle generate_tree_cycles(std::uint64_t seed, const TreeCyclesOptions& options = {});

// All graphs land in the train split; call make_splits for a partition.
DatasetBundle load_tu_dataset(const std::filesystem::path& root, const std::string& name);

// Val and test sizes are round(fraction * N); train takes the remainder.
DatasetBundle make_splits(DatasetBundle bundle, std::array<double, 3> fractions, std::uint64_t seed);

// Writes the TU layout (DS_A.txt etc.) for `bundle`; inverse of load_tu_dataset.
void write_tu_dataset(const DatasetBundle& bundle, const std::filesystem::path& root);

// Bundle cache: manifest.json plus one edge list and one node table per graph.
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);

std::vector<std::string> supported_datasets();

}  // namespace page
