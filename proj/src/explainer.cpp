#include "page/explainer.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace page {

std::vector<Eigen::MatrixXd*> ExplainerModel::encoder_parameters() {
  std::vector<Eigen::MatrixXd*> out{&enc1.weight, &enc1.bias, &enc2.weight, &enc2.bias, &enc_mu.weight, &enc_mu.bias};
  if (config.variant == Variant::vgae) {
    out.push_back(&enc_logvar.weight);
    out.push_back(&enc_logvar.bias);
  }
  if (config.mlp_decoder()) {
    for (auto* p : {&dec1.weight, &dec1.bias, &dec2.weight, &dec2.bias}) out.push_back(p);
  }
  return out;
}

std::vector<Eigen::MatrixXd*> ExplainerModel::discriminator_parameters() {
  return {&disc1.weight, &disc1.bias, &disc2.weight, &disc2.bias};
}

std::vector<Eigen::MatrixXd*> ExplainerModel::parameters() {
  auto out = encoder_parameters();
  for (auto* p : discriminator_parameters()) out.push_back(p);
  return out;
}

ExplainerModel make_explainer(Task task, int input_dim, int num_classes, const ExplainerConfig& config,
                              std::uint64_t seed) {
  if (config.causal_dim < 1 || config.causal_dim >= config.latent_dim)
    throw ModelError("causal width must satisfy 1 <= K_c < latent width");
  if (config.decoder_hidden < 0) throw ModelError("decoder width must be non-negative");
  if (input_dim <= 0 || num_classes <= 0) throw ModelError("explainer needs positive input width and classes");
  std::mt19937_64 rng(seed);
  ExplainerModel m;
  m.config = config;
  m.task = task;
  m.input_dim = input_dim;
  m.num_classes = num_classes;
  m.enc1 = glorot_dense(input_dim, config.hidden1, rng);
  m.enc2 = glorot_dense(config.hidden1, config.hidden2, rng);
  m.enc_mu = glorot_dense(config.hidden2, config.latent_dim, rng);
  if (config.variant == Variant::vgae) {
    m.enc_logvar = glorot_dense(config.hidden2, config.latent_dim, rng);
  }
  spread_bias(m.enc1, rng);
  spread_bias(m.enc2, rng);
  if (config.mlp_decoder()) {
    m.dec1 = glorot_dense(config.latent_dim, config.decoder_hidden, rng);
    m.dec2 = glorot_dense(config.decoder_hidden, config.decoder_hidden, rng);
  }
  m.disc1 = glorot_dense(config.causal_dim, config.discriminator_hidden, rng);
  m.disc2 = glorot_dense(config.discriminator_hidden, num_classes, rng);
  return m;
}

std::vector<ad::Var> BoundExplainer::encoder_parameters() const {
  std::vector<ad::Var> out{enc1.weight, enc1.bias, enc2.weight, enc2.bias, enc_mu.weight, enc_mu.bias};
  if (vgae) {
    out.push_back(enc_logvar.weight);
    out.push_back(enc_logvar.bias);
  }
  if (mlp_decoder) {
    for (const auto& p : {dec1.weight, dec1.bias, dec2.weight, dec2.bias}) out.push_back(p);
  }
  return out;
}

std::vector<ad::Var> BoundExplainer::discriminator_parameters() const {
  return {disc1.weight, disc1.bias, disc2.weight, disc2.bias};
}

BoundExplainer bind(ad::Tape& tape, const ExplainerModel& model, bool train_encoder, bool train_discriminator) {
  BoundExplainer b;
  b.vgae = model.config.variant == Variant::vgae;
  b.enc1 = bind(tape, model.enc1, train_encoder);
  b.enc2 = bind(tape, model.enc2, train_encoder);
  b.enc_mu = bind(tape, model.enc_mu, train_encoder);
  if (b.vgae) b.enc_logvar = bind(tape, model.enc_logvar, train_encoder);
  b.mlp_decoder = model.config.mlp_decoder();
  if (b.mlp_decoder) {
    b.dec1 = bind(tape, model.dec1, train_encoder);
    b.dec2 = bind(tape, model.dec2, train_encoder);
  }
  b.disc1 = bind(tape, model.disc1, train_discriminator);
  b.disc2 = bind(tape, model.disc2, train_discriminator);
  return b;
}

EncodedVars encode(const BoundExplainer& model, const Graph& g, const Eigen::MatrixXd* noise) {
  auto* tape = model.enc1.weight.tape();
  if (g.feature_dim() != model.enc1.weight.rows())
    throw ModelError("feature width does not match explainer input width");
  const auto a_norm = ad::sym_normalize(tape->constant(g.adjacency));
  const auto x = tape->constant(g.features);
  const auto h1 = gcn_layer(x, a_norm, model.enc1, Activation::relu);
  const auto h2 = gcn_layer(h1, a_norm, model.enc2, Activation::relu);
  EncodedVars out;
  out.mu = gcn_layer(h2, a_norm, model.enc_mu, Activation::identity);
  out.z = out.mu;
  if (model.vgae) {
    out.logvar = gcn_layer(h2, a_norm, model.enc_logvar, Activation::identity);
    if (noise != nullptr) {
      if (noise->rows() != out.mu.rows() || noise->cols() != out.mu.cols())
        throw ModelError("reparameterization noise has the wrong shape");
      const auto sigma = ad::exp(ad::scale(out.logvar, 0.5));
      out.z = out.mu + ad::hadamard(sigma, tape->constant(*noise));
    }
  }
  return out;
}

ad::Var decode_mask(const ad::Var& causal, int latent_dim, const Eigen::MatrixXd& adjacency) {
  auto* tape = causal.tape();
  if (causal.rows() != adjacency.rows()) throw ModelError("latent rows do not match adjacency");
  const auto padded = ad::pad_cols(causal, latent_dim);
  const auto probs = ad::sigmoid(ad::matmul(padded, ad::transpose(padded)));
  const auto masked = ad::hadamard(probs, tape->constant(adjacency));
  return ad::scale(masked + ad::transpose(masked), 0.5);
}

ad::Var decoder_embedding(const BoundExplainer& model, const ad::Var& z) {
  if (!model.mlp_decoder) return z;
  return dense(dense(z, model.dec1, Activation::relu), model.dec2);
}

ad::Var decode_mask(const BoundExplainer& model, const ad::Var& causal, int latent_dim,
                    const Eigen::MatrixXd& adjacency) {
  if (!model.mlp_decoder) return decode_mask(causal, latent_dim, adjacency);
  auto* tape = causal.tape();
  if (causal.rows() != adjacency.rows()) throw ModelError("latent rows do not match adjacency");
  const auto e = decoder_embedding(model, ad::pad_cols(causal, latent_dim));
  const auto probs = ad::sigmoid(ad::matmul(e, ad::transpose(e)));
  const auto masked = ad::hadamard(probs, tape->constant(adjacency));
  return ad::scale(masked + ad::transpose(masked), 0.5);
}

ad::Var discriminate(const BoundExplainer& model, const ad::Var& causal, Task task, std::optional<int> target_node,
                     Readout readout) {
  ad::Var pooled;
  if (task == Task::node) {
    if (!target_node) throw UsageError("node-task discrimination requires a target node");
    pooled = ad::row(causal, *target_node);
  } else {
    pooled = readout == Readout::mean ? ad::mean_rows(causal) : ad::max_rows(causal);
  }
  const auto hidden = dense(pooled, model.disc1, Activation::relu);
  return ad::softmax_rows(dense(hidden, model.disc2));
}

namespace {
std::atomic<std::uint64_t> g_encoder_passes{0};
}

std::uint64_t encoder_passes() { return g_encoder_passes.load(); }

LatentCode encode(const ExplainerModel& model, const Graph& g, std::mt19937_64* rng) {
  g_encoder_passes.fetch_add(1, std::memory_order_relaxed);
  ad::Tape tape;
  const auto bound = bind(tape, model, false, false);
  Eigen::MatrixXd noise;
  const Eigen::MatrixXd* noise_ptr = nullptr;
  if (rng != nullptr && model.config.variant == Variant::vgae) {
    std::normal_distribution<double> normal(0.0, 1.0);
    noise = Eigen::MatrixXd::NullaryExpr(g.num_nodes(), model.config.latent_dim, [&]() { return normal(*rng); });
    noise_ptr = &noise;
  }
  const auto vars = encode(bound, g, noise_ptr);
  LatentCode code;
  code.z = vars.z.value();
  code.mu = vars.mu.value();
  if (vars.logvar.valid()) code.logvar = vars.logvar.value();
  code.causal_dim = model.config.causal_dim;
  return code;
}

Eigen::MatrixXd decode_mask(const Eigen::MatrixXd& causal, const Eigen::MatrixXd& adjacency, int latent_dim) {
  ad::Tape tape;
  return decode_mask(tape.constant(causal), latent_dim, adjacency).value();
}

Eigen::MatrixXd decode_mask(const ExplainerModel& model, const Eigen::MatrixXd& causal,
                            const Eigen::MatrixXd& adjacency) {
  if (causal.cols() != model.config.causal_dim) throw ModelError("causal block has the wrong width");
  ad::Tape tape;
  const auto bound = bind(tape, model, false, false);
  return decode_mask(bound, tape.constant(causal), model.config.latent_dim, adjacency).value();
}

Eigen::MatrixXd discriminate(const ExplainerModel& model, const Eigen::MatrixXd& causal,
                             std::optional<int> target_node) {
  if (causal.cols() != model.config.causal_dim) throw ModelError("causal block has the wrong width");
  ad::Tape tape;
  const auto bound = bind(tape, model, false, false);
  return discriminate(bound, tape.constant(causal), model.task, target_node, model.config.readout).value();
}

std::vector<Instance> make_instances(const DatasetBundle& bundle, const std::vector<int>& indices, int k) {
  std::vector<Instance> out;
  out.reserve(indices.size());
  for (int idx : indices) {
    Instance inst;
    inst.source = idx;
    if (bundle.task == Task::node) {
      auto sub = k_hop_subgraph(bundle.graphs.at(0), idx, k);
      inst.graph = std::move(sub.graph);
      inst.center = sub.center;
      inst.original_ids = std::move(sub.original_ids);
    } else {
      inst.graph = bundle.graphs.at(static_cast<std::size_t>(idx));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::string Budget::describe() const {
  std::ostringstream ss;
  if (kind == Kind::top_k) {
    ss << "top-" << k;
  } else {
    ss << "keep-" << keep_ratio;
  }
  return ss.str();
}

Eigen::MatrixXd Budget::select(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores) const {
  return kind == Kind::top_k ? top_k_edges(adjacency, scores, k)
                             : sparsity_threshold_edges(adjacency, scores, keep_ratio);
}

Eigen::RowVectorXd instance_prediction(const Eigen::MatrixXd& probs, const Instance& instance) {
  return probs.row(instance.center.value_or(0));
}

Explanation explain_instance(const ExplainerModel& model, const TargetModel& target, const Instance& instance,
                             const Budget& budget) {
  if (!model.trained) throw UsageError("explainer has not been trained");
  const auto& g = instance.graph;
  const auto code = encode(model, g);
  Explanation e;
  e.soft_mask = decode_mask(model, code.causal(), g.adjacency);
  e.hard_mask = budget.select(g.adjacency, e.soft_mask);
  e.masked = apply_mask(g, e.hard_mask, MaskMode::keep);
  e.prediction = instance_prediction(predict_masked(target, g, e.hard_mask), instance);
  e.original_prediction = instance_prediction(predict(target, g), instance);
  e.target_node = instance.center;
  e.original_ids = instance.original_ids;
  return e;
}

Explanation explain(const ExplainerModel& model, const TargetModel& target, const Graph& g, const Budget& budget,
                    std::optional<int> target_node) {
  Instance inst;
  if (model.task == Task::node) {
    if (!target_node) throw UsageError("node-task explanation requires a target node");
    auto sub = k_hop_subgraph(g, *target_node, kTargetDepth);
    inst.graph = std::move(sub.graph);
    inst.center = sub.center;
    inst.original_ids = std::move(sub.original_ids);
    inst.source = *target_node;
  } else {
    inst.graph = g;
  }
  return explain_instance(model, target, inst, budget);
}

}  // namespace page
