#pragma once

#include "page/explainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace page {

// Mean drop of the originally predicted class probability when only the
// complement of each hard mask is kept. Higher is better.
double fidelity(const TargetModel& target, const std::vector<Instance>& instances,
                const std::vector<Eigen::MatrixXd>& hard_masks);

// Mean drop when only the explanation is kept. Lower is better.
double infidelity(const TargetModel& target, const std::vector<Instance>& instances,
                  const std::vector<Eigen::MatrixXd>& hard_masks);

// Fraction of instances whose argmax prediction survives masking.
double explanation_accuracy(const TargetModel& target, const std::vector<Instance>& instances,
                            const std::vector<Eigen::MatrixXd>& hard_masks);

// Per-edge agreement of (edge selected) with (edge in motif), pooled over
// every edge of every instance whose graph contains a motif edge.
double edge_accuracy(const std::vector<Eigen::MatrixXd>& hard_masks, const std::vector<Instance>& instances);

double mean_sparsity(const std::vector<Instance>& instances, const std::vector<Eigen::MatrixXd>& hard_masks);

struct TimingRecord {
  double train_ms = 0.0;
  double inference_ms = 0.0;
  int instances = 0;
  int forward_passes = 0;
};

// Wall-clock time of one explanation forward pass per instance.
TimingRecord measure_inference(const ExplainerModel& model, const std::vector<Instance>& instances);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct BudgetRecord {
  std::string budget;
  double fidelity = 0.0;
  double infidelity = 0.0;
  double explanation_accuracy = 0.0;
  std::optional<double> edge_accuracy;
  double mean_sparsity = 0.0;
  double inference_ms = 0.0;
};

struct MetricsReport {
  std::string dataset;
  std::string explainer;
  std::uint64_t seed = 0;
  double train_ms = 0.0;
  double mean_mask_ratio = 0.0;  // ||A .* M||_1 / ||A||_1 of the soft masks
  std::vector<BudgetRecord> records;

  // Without timing the output is a pure function of models, data and seed.
  std::string to_json(bool with_timing = true) const;
  std::string to_csv(bool with_timing = true) const;
};

struct SoftMasks {
  std::vector<Eigen::MatrixXd> masks;
  double inference_ms = 0.0;
};

SoftMasks soft_masks(const ExplainerModel& model, const std::vector<Instance>& instances);

std::vector<Eigen::MatrixXd> hard_masks(const std::vector<Instance>& instances, const std::vector<Eigen::MatrixXd>& soft,
                                        const Budget& budget);

// Uniformly random scores pushed through the same budget rule.
std::vector<Eigen::MatrixXd> random_masks(const std::vector<Instance>& instances, const Budget& budget,
                                          std::uint64_t seed);

MetricsReport evaluate(const ExplainerModel& model, const TargetModel& target, const std::vector<Instance>& instances,
                       const std::vector<Budget>& budgets);

// Instances whose computation graph has a motif edge and whose explained
// node itself belongs to a motif (label != 0).
std::vector<Instance> motif_instances(const std::vector<Instance>& instances);

// Test-split population scored by evaluate: motif nodes for node tasks (all
// test nodes if none carry a motif), every test graph for graph tasks.
std::vector<Instance> evaluation_instances(const DatasetBundle& bundle);

}  // namespace page
