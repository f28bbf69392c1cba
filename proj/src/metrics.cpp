#include "page/metrics.hpp"

#include "page/training.hpp"

#include "json.hpp"

#include <chrono>
#include <iomanip>
#include <random>
#include <sstream>

namespace page {

namespace {

void check_inputs(const std::vector<Instance>& instances, const std::vector<Eigen::MatrixXd>& masks) {
  if (instances.empty()) throw ParameterError("metric needs at least one instance");
  if (instances.size() != masks.size()) throw ParameterError("one hard mask per instance is required");
}

int predicted_class(const Eigen::RowVectorXd& p) {
  Eigen::Index c = 0;
  p.maxCoeff(&c);
  return static_cast<int>(c);
}

// Mean of P(G)_y - P(G masked)_y with y the original argmax.
double mean_drop(const TargetModel& target, const std::vector<Instance>& instances,
                 const std::vector<Eigen::MatrixXd>& masks, bool complement) {
  check_inputs(instances, masks);
  double total = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const Eigen::RowVectorXd original = instance_prediction(predict(target, inst.graph), inst);
    const Eigen::MatrixXd m = complement ? Eigen::MatrixXd((1.0 - masks[i].array()).matrix()) : masks[i];
    const Eigen::RowVectorXd masked = instance_prediction(predict_masked(target, inst.graph, m), inst);
    const int y = predicted_class(original);
    total += original(y) - masked(y);
  }
  return total / static_cast<double>(instances.size());
}

}  // namespace

double fidelity(const TargetModel& target, const std::vector<Instance>& instances,
                const std::vector<Eigen::MatrixXd>& hard_masks) {
  return mean_drop(target, instances, hard_masks, true);
}

double infidelity(const TargetModel& target, const std::vector<Instance>& instances,
                  const std::vector<Eigen::MatrixXd>& hard_masks) {
  return mean_drop(target, instances, hard_masks, false);
}

double explanation_accuracy(const TargetModel& target, const std::vector<Instance>& instances,
                            const std::vector<Eigen::MatrixXd>& hard_masks) {
  check_inputs(instances, hard_masks);
  int agree = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto original = instance_prediction(predict(target, inst.graph), inst);
    const auto masked = instance_prediction(predict_masked(target, inst.graph, hard_masks[i]), inst);
    agree += predicted_class(original) == predicted_class(masked);
  }
  return static_cast<double>(agree) / static_cast<double>(instances.size());
}

double edge_accuracy(const std::vector<Eigen::MatrixXd>& hard_masks, const std::vector<Instance>& instances) {
  check_inputs(instances, hard_masks);
  long long evaluated = 0, correct = 0;
  bool any_annotation = false;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& g = instances[i].graph;
    if (g.motif_edges.empty()) continue;
    any_annotation = true;
    for (const auto& e : g.edges()) {
      const bool selected = hard_masks[i](e.first, e.second) != 0.0;
      const bool truth = g.motif_edges.count(e) > 0;
      correct += selected == truth;
      ++evaluated;
    }
  }
  if (!any_annotation) throw MetricUnavailable("edge accuracy needs ground-truth motif edges");
  return static_cast<double>(correct) / static_cast<double>(evaluated);
}

double mean_sparsity(const std::vector<Instance>& instances, const std::vector<Eigen::MatrixXd>& hard_masks) {
  check_inputs(instances, hard_masks);
  double total = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& a = instances[i].graph.adjacency;
    total += a.sum() > 0.0 ? 1.0 - mask_ratio(a, hard_masks[i]) : 0.0;
  }
  return total / static_cast<double>(instances.size());
}

SoftMasks soft_masks(const ExplainerModel& model, const std::vector<Instance>& instances) {
  SoftMasks out;
  if (instances.empty()) return out;
  out.masks.reserve(instances.size());
  const auto start = std::chrono::steady_clock::now();
  for (const auto& inst : instances) {
    const auto code = encode(model, inst.graph);
    out.masks.push_back(decode_mask(model, code.causal(), inst.graph.adjacency));
  }
  out.inference_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

TimingRecord measure_inference(const ExplainerModel& model, const std::vector<Instance>& instances) {
  TimingRecord t;
  const auto before = encoder_passes();
  const auto masks = soft_masks(model, instances);
  t.inference_ms = masks.inference_ms;
  t.instances = static_cast<int>(instances.size());
  t.forward_passes = static_cast<int>(encoder_passes() - before);
  return t;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("line fit needs at least two paired points");
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::VectorXd> xs(x.data(), n), ys(y.data(), n);
  const double mx = xs.mean(), my = ys.mean();
  const double sxx = (xs.array() - mx).square().sum();
  const double sxy = ((xs.array() - mx) * (ys.array() - my)).sum();
  const double syy = (ys.array() - my).square().sum();
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r_squared = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

std::vector<Eigen::MatrixXd> hard_masks(const std::vector<Instance>& instances, const std::vector<Eigen::MatrixXd>& soft,
                                        const Budget& budget) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) out.push_back(budget.select(instances[i].graph.adjacency, soft[i]));
  return out;
}

std::vector<Eigen::MatrixXd> random_masks(const std::vector<Instance>& instances, const Budget& budget,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& inst : instances) {
    const int n = inst.graph.num_nodes();
    Eigen::MatrixXd scores = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return u(rng); });
    out.push_back(budget.select(inst.graph.adjacency, symmetrize(scores)));
  }
  return out;
}

std::vector<Instance> motif_instances(const std::vector<Instance>& instances) {
  std::vector<Instance> out;
  for (const auto& inst : instances) {
    if (inst.graph.motif_edges.empty()) continue;
    if (inst.center && !inst.graph.node_labels.empty() && inst.graph.node_labels[*inst.center] == 0) continue;
    out.push_back(inst);
  }
  return out;
}

std::vector<Instance> evaluation_instances(const DatasetBundle& bundle) {
  auto all = make_instances(bundle, bundle.splits.test);
  if (bundle.task == Task::graph) return all;
  auto motif = motif_instances(all);
  return motif.empty() ? all : motif;
}

MetricsReport evaluate(const ExplainerModel& model, const TargetModel& target, const std::vector<Instance>& instances,
                       const std::vector<Budget>& budgets) {
  MetricsReport report;
  report.dataset = model.dataset;
  report.explainer = model.config.variant == Variant::vgae ? "PAGE" : "PAGE-GAE";
  if (instances.empty()) return report;
  const auto soft = soft_masks(model, instances);
  double ratio = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) ratio += mask_ratio(instances[i].graph.adjacency, soft.masks[i]);
  report.mean_mask_ratio = ratio / static_cast<double>(instances.size());

  bool annotated = false;
  for (const auto& inst : instances) annotated = annotated || !inst.graph.motif_edges.empty();
  for (const auto& budget : budgets) {
    const auto hard = hard_masks(instances, soft.masks, budget);
    BudgetRecord r;
    r.budget = budget.describe();
    r.fidelity = fidelity(target, instances, hard);
    r.infidelity = infidelity(target, instances, hard);
    r.explanation_accuracy = explanation_accuracy(target, instances, hard);
    if (annotated) r.edge_accuracy = edge_accuracy(hard, instances);
    r.mean_sparsity = mean_sparsity(instances, hard);
    r.inference_ms = soft.inference_ms;
    report.records.push_back(r);
  }
  return report;
}

std::string MetricsReport::to_json(bool with_timing) const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["explainer"] = explainer;
  j["seed"] = seed;
  if (with_timing) j["train_ms"] = train_ms;
  j["mean_mask_ratio"] = mean_mask_ratio;
  j["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json e{{"budget", r.budget},
                     {"fidelity", r.fidelity},
                     {"infidelity", r.infidelity},
                     {"explanation_accuracy", r.explanation_accuracy},
                     {"mean_sparsity", r.mean_sparsity}};
    if (with_timing) e["wall_clock_ms"] = {{"train", train_ms}, {"inference", r.inference_ms}};
    e["edge_accuracy"] = r.edge_accuracy ? nlohmann::json(*r.edge_accuracy) : nlohmann::json(nullptr);
    j["records"].push_back(e);
  }
  return j.dump(2);
}

std::string MetricsReport::to_csv(bool with_timing) const {
  std::ostringstream ss;
  ss << "method,budget,explanation_accuracy,fidelity,infidelity,edge_accuracy,mean_sparsity";
  ss << (with_timing ? ",inference_ms\n" : "\n");
  ss << std::setprecision(6);
  for (const auto& r : records) {
    ss << explainer << ',' << r.budget << ',' << r.explanation_accuracy << ',' << r.fidelity << ',' << r.infidelity
       << ',';
    if (r.edge_accuracy) ss << *r.edge_accuracy;
    ss << ',' << r.mean_sparsity;
    if (with_timing) ss << ',' << r.inference_ms;
    ss << '\n';
  }
  return ss.str();
}

}  // namespace page
