#include "page/target_gnn.hpp"

#include "page/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace page {

Dense glorot_dense(int in, int out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Dense d;
  d.weight = Eigen::MatrixXd::NullaryExpr(in, out, [&]() { return dist(rng); });
  d.bias = Eigen::MatrixXd::Zero(1, out);
  return d;
}

void spread_bias(Dense& layer, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  layer.bias = Eigen::MatrixXd::NullaryExpr(1, layer.out_dim(), [&]() { return dist(rng); });
}

std::vector<Eigen::MatrixXd*> TargetModel::parameters() {
  std::vector<Eigen::MatrixXd*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

std::vector<const Eigen::MatrixXd*> TargetModel::parameters() const {
  std::vector<const Eigen::MatrixXd*> out;
  for (const auto* p : const_cast<TargetModel*>(this)->parameters()) out.push_back(p);
  return out;
}

TargetModel make_target_model(Task task, int input_dim, int num_classes, std::uint64_t seed, int hidden_dim) {
  if (input_dim <= 0 || num_classes <= 0) throw ModelError("target model needs positive input width and classes");
  std::mt19937_64 rng(seed);
  TargetModel m;
  m.task = task;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.num_classes = num_classes;
  m.layers[0] = glorot_dense(input_dim, hidden_dim, rng);
  m.layers[1] = glorot_dense(hidden_dim, hidden_dim, rng);
  m.layers[2] = glorot_dense(hidden_dim, hidden_dim, rng);
  for (auto& l : m.layers) spread_bias(l, rng);
  m.head = glorot_dense(task == Task::node ? 3 * hidden_dim : hidden_dim, num_classes, rng);
  return m;
}

std::vector<ad::Var> BoundTarget::parameters() const {
  std::vector<ad::Var> out;
  for (const auto& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  out.push_back(head.weight);
  out.push_back(head.bias);
  return out;
}

BoundTarget bind(ad::Tape& tape, const TargetModel& model, bool trainable) {
  BoundTarget b;
  for (std::size_t i = 0; i < 3; ++i) b.layers[i] = bind(tape, model.layers[i], trainable);
  b.head = bind(tape, model.head, trainable);
  return b;
}

ad::Var target_logits(const BoundTarget& model, Task task, const Graph& g, const ad::Var& adjacency) {
  auto* tape = adjacency.tape();
  if (g.feature_dim() != model.layers[0].weight.rows())
    throw ModelError("feature width " + std::to_string(g.feature_dim()) + " does not match target input width " +
                     std::to_string(model.layers[0].weight.rows()));
  const auto a_norm = ad::sym_normalize(adjacency);
  const auto x = tape->constant(g.features);
  const auto h1 = gcn_layer(x, a_norm, model.layers[0], Activation::relu);
  const auto h2 = gcn_layer(h1, a_norm, model.layers[1], Activation::relu);
  const auto h3 = gcn_layer(h2, a_norm, model.layers[2], Activation::identity);
  if (task == Task::node) return dense(ad::concat_cols(ad::concat_cols(h1, h2), h3), model.head);
  return dense(ad::max_rows(h3), model.head);
}

Eigen::MatrixXd predict_masked(const TargetModel& model, const Graph& g, const Eigen::MatrixXd& mask) {
  if (mask.rows() != g.num_nodes() || mask.cols() != g.num_nodes())
    throw InvalidMask("mask shape does not match graph");
  ad::Tape tape;
  const auto bound = bind(tape, model, false);
  const auto adjacency = tape.constant(g.adjacency.cwiseProduct(symmetrize(mask)));
  return ad::softmax_rows(target_logits(bound, model.task, g, adjacency)).value();
}

Eigen::MatrixXd predict(const TargetModel& model, const Graph& g) {
  return predict_masked(model, g, Eigen::MatrixXd::Ones(g.num_nodes(), g.num_nodes()));
}

namespace {

int argmax(const Eigen::MatrixXd& probs, int row) {
  Eigen::Index c = 0;
  probs.row(row).maxCoeff(&c);
  return static_cast<int>(c);
}

}  // namespace

double target_accuracy(const TargetModel& model, const DatasetBundle& bundle, const std::vector<int>& indices) {
  if (indices.empty()) return 0.0;
  int correct = 0;
  if (bundle.task == Task::node) {
    const auto& g = bundle.graphs[0];
    const auto probs = predict(model, g);
    for (int v : indices) correct += argmax(probs, v) == g.node_labels[v];
  } else {
    for (int i : indices) {
      const auto& g = bundle.graphs[i];
      correct += argmax(predict(model, g), 0) == *g.graph_label;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

namespace {

int row_accuracy_count(const Eigen::MatrixXd& logits, const Graph& g, const std::vector<int>& rows) {
  int correct = 0;
  for (int v : rows) correct += argmax(logits, v) == g.node_labels[v];
  return correct;
}

// Full-graph step: cross-entropy over the training rows. Also reports the
// accuracies of the pre-update parameters from the same forward pass.
struct NodeStep {
  double loss;
  double train_accuracy;
  double val_accuracy;
};

NodeStep node_step(const TargetModel& model, const Graph& g, const Splits& splits, const std::vector<int>& val_rows,
                   std::vector<Eigen::MatrixXd>& grads) {
  ad::Tape tape;
  const auto bound = bind(tape, model, true);
  const auto logits = target_logits(bound, Task::node, g, tape.constant(g.adjacency));
  std::vector<int> labels;
  for (int v : splits.train) labels.push_back(g.node_labels[v]);
  const auto loss = ad::softmax_cross_entropy(logits, splits.train, labels);
  tape.backward(loss);
  collect_grads(bound.parameters(), grads);
  const auto& out = logits.value();
  return {loss.scalar(), double(row_accuracy_count(out, g, splits.train)) / double(splits.train.size()),
          double(row_accuracy_count(out, g, val_rows)) / double(val_rows.size())};
}

double graph_step(const TargetModel& model, const Graph& g, std::vector<Eigen::MatrixXd>& grads) {
  ad::Tape tape;
  const auto bound = bind(tape, model, true);
  const auto logits = target_logits(bound, Task::graph, g, tape.constant(g.adjacency));
  const auto loss = ad::softmax_cross_entropy(logits, {0}, {*g.graph_label});
  tape.backward(loss);
  collect_grads(bound.parameters(), grads);
  return loss.scalar();
}

}  // namespace

TargetTrainResult train_target(TargetModel model, const DatasetBundle& bundle, const TargetTrainOptions& options) {
  if (bundle.task != model.task) throw ModelError("bundle task does not match target model task");
  if (bundle.splits.train.empty()) throw ParameterError("training split is empty");
  Adam adam(options.lr);
  std::mt19937_64 rng(options.seed);
  auto params = model.parameters();

  TargetTrainResult result;
  result.model = model;
  double best_val = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto& val_idx = bundle.splits.val.empty() ? bundle.splits.train : bundle.splits.val;

  auto consider = [&](int epoch, double loss, double train_acc, double val_acc, const TargetModel& state) {
    result.log.push_back({epoch, loss, train_acc, val_acc});
    if (val_acc > best_val || (val_acc == best_val && loss < best_loss)) {
      best_val = val_acc;
      best_loss = loss;
      result.model = state;
      result.best_epoch = epoch;
      since_best = 0;
      return true;
    }
    return ++since_best < options.patience;
  };

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    if (model.task == Task::node) {
      std::vector<Eigen::MatrixXd> grads;
      const auto step = node_step(model, bundle.graphs[0], bundle.splits, val_idx, grads);
      if (!std::isfinite(step.loss)) throw TrainingError("target loss diverged", epoch);
      // The logged accuracies belong to the parameters before this update.
      if (!consider(epoch, step.loss, step.train_accuracy, step.val_accuracy, model)) break;
      if (options.weight_decay > 0)
        for (std::size_t i = 0; i < params.size(); ++i) grads[i] += options.weight_decay * *params[i];
      adam.step(params, grads);
      continue;
    }

    double loss = 0.0;
    auto order = bundle.splits.train;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      std::vector<Eigen::MatrixXd> grads;
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) batch_loss += graph_step(model, bundle.graphs[order[i]], grads);
      const double count = static_cast<double>(stop - start);
      for (std::size_t i = 0; i < grads.size(); ++i) {
        grads[i] /= count;
        if (options.weight_decay > 0) grads[i] += options.weight_decay * *params[i];
      }
      if (!std::isfinite(batch_loss)) throw TrainingError("target loss diverged", epoch);
      adam.step(params, grads);
      loss += batch_loss;
    }
    loss /= static_cast<double>(order.size());
    if (!consider(epoch, loss, target_accuracy(model, bundle, bundle.splits.train),
                  target_accuracy(model, bundle, val_idx), model))
      break;
  }

  result.test_accuracy =
      bundle.splits.test.empty() ? 0.0 : target_accuracy(result.model, bundle, bundle.splits.test);
  result.model.dataset = bundle.name;
  result.model.metrics["test_accuracy"] = result.test_accuracy;
  result.model.metrics["val_accuracy"] = std::max(best_val, 0.0);
  result.model.metrics["best_epoch"] = result.best_epoch;
  return result;
}

}  // namespace page
