#pragma once

#include "page/datasets.hpp"
#include "page/layers.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace page {

// Three GCN layers of width 20. Node task: linear head over the concatenated
// layer outputs (60 wide). Graph task: linear head over the max-pooled last
// layer. The last GCN layer has identity activation.
struct TargetModel {
  Task task = Task::node;
  int input_dim = 0;
  int hidden_dim = 20;
  int num_classes = 0;
  std::array<Dense, 3> layers;
  Dense head;
  std::string dataset;
  std::map<std::string, double> metrics;

  std::vector<Eigen::MatrixXd*> parameters();
  std::vector<const Eigen::MatrixXd*> parameters() const;
};

TargetModel make_target_model(Task task, int input_dim, int num_classes, std::uint64_t seed, int hidden_dim = 20);

struct BoundTarget {
  std::array<BoundDense, 3> layers;
  BoundDense head;

  std::vector<ad::Var> parameters() const;
};

BoundTarget bind(ad::Tape& tape, const TargetModel& model, bool trainable);

// Logits for every node (node task, n x C) or for the graph (1 x C).
// `adjacency` may be a soft-masked, differentiable matrix.
ad::Var target_logits(const BoundTarget& model, Task task, const Graph& g, const ad::Var& adjacency);

Eigen::MatrixXd predict(const TargetModel& model, const Graph& g);

// Same path as predict with A replaced by A .* sym(M) before normalization.
Eigen::MatrixXd predict_masked(const TargetModel& model, const Graph& g, const Eigen::MatrixXd& mask);

struct TargetTrainOptions {
  double lr = 0.01;
  int epochs = 1000;
  int patience = 300;  // epochs without validation improvement before stopping
  int batch_size = 32;  // graphs per step for graph tasks
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct TargetEpochLog {
  int epoch;
  double loss;
  double train_accuracy;
  double val_accuracy;
};

struct TargetTrainResult {
  TargetModel model;  // best-validation checkpoint
  std::vector<TargetEpochLog> log;
  int best_epoch = 0;
  double test_accuracy = 0.0;
};

TargetTrainResult train_target(TargetModel model, const DatasetBundle& bundle, const TargetTrainOptions& options);

double target_accuracy(const TargetModel& model, const DatasetBundle& bundle, const std::vector<int>& indices);

}  // namespace page
