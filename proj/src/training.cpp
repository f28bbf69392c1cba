#include "page/training.hpp"

#include "page/optim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace page {

void StageConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw ParameterError("lambda weights must be non-negative");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
  if (!(lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (epochs_stage1 < 0 || epochs_stage2 < 0) throw ParameterError("epoch counts must be non-negative");
  if (batch_size < 1) throw ParameterError("batch size must be at least 1");
}

LossTerms& LossTerms::operator+=(const LossTerms& o) {
  recon += o.recon;
  kl_prior += o.kl_prior;
  kl_disc += o.kl_disc;
  kl_target += o.kl_target;
  size += o.size;
  total += o.total;
  return *this;
}

LossTerms LossTerms::scaled(double s) const {
  return {recon * s, kl_prior * s, kl_disc * s, kl_target * s, size * s, total * s};
}

double positive_weight(const Eigen::MatrixXd& adjacency) {
  const double n = static_cast<double>(adjacency.rows());
  const double positives = adjacency.sum();
  const double negatives = n * (n - 1.0) - positives;
  // Unweighted when either class is empty (edgeless or complete graph).
  return positives > 0.0 && negatives > 0.0 ? negatives / positives : 1.0;
}

double recon_loss(const Graph& g, const Eigen::MatrixXd& z) {
  ad::Tape tape;
  const auto zv = tape.constant(z);
  const auto logits = ad::matmul(zv, ad::transpose(zv));
  return ad::bce_with_logits_offdiag(logits, g.adjacency, positive_weight(g.adjacency)).scalar();
}

double vgae_kl(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar) {
  ad::Tape tape;
  return ad::gaussian_kl(tape.constant(mu), tape.constant(logvar)).scalar();
}

double kl_categorical(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q) {
  if (p.size() != q.size()) throw DistributionError("distributions differ in length");
  if (std::abs(p.sum() - 1.0) > 1e-5 || std::abs(q.sum() - 1.0) > 1e-5 || p.minCoeff() < 0 || q.minCoeff() < 0)
    throw DistributionError("input is not a probability vector");
  ad::Tape tape;
  return ad::kl_divergence(tape.constant(p), tape.constant(q), kProbabilityFloor).scalar();
}

double mask_ratio(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& mask) {
  const double total = adjacency.cwiseAbs().sum();
  if (total == 0.0) return 0.0;
  return adjacency.cwiseProduct(mask).cwiseAbs().sum() / total;
}

double size_loss(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& mask, double gamma) {
  if (adjacency.cwiseAbs().sum() == 0.0) return 0.0;
  return std::abs(mask_ratio(adjacency, mask) - gamma);
}

namespace {

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw TrainingError(std::string("non-finite loss term: ") + term, 0);
}

}  // namespace

StageEvaluation evaluate_stage(Stage stage, const ExplainerModel& model, const TargetModel& target,
                               const Instance& instance, const Eigen::RowVectorXd& original,
                               const StageConfig& config, const Eigen::MatrixXd* noise, bool with_gradients) {
  const bool stage_two = stage == Stage::two;
  if (stage_two && !model.discriminator_frozen) throw UsageError("stage two requires a frozen discriminator");
  const auto& g = instance.graph;

  ad::Tape tape;
  const auto ex = bind(tape, model, with_gradients, with_gradients && !stage_two);
  const auto tgt = bind(tape, target, false);

  const auto code = encode(ex, g, noise);
  const auto causal = ad::cols(code.z, 0, model.config.causal_dim);

  // L_AE on the full latent code.
  const auto embedded = decoder_embedding(ex, code.z);
  const auto logits = ad::matmul(embedded, ad::transpose(embedded));
  const auto recon = ad::bce_with_logits_offdiag(logits, g.adjacency, positive_weight(g.adjacency));
  ad::Var loss = recon;
  ad::Var prior;
  if (code.logvar.valid()) {
    prior = ad::gaussian_kl(code.mu, code.logvar);
    loss = loss + prior;
  }

  // P(Y | g(Z_c)): target on the soft-masked instance.
  const auto mask = decode_mask(ex, causal, model.config.latent_dim, g.adjacency);
  const auto masked_adj = ad::hadamard(tape.constant(g.adjacency), mask);
  const auto masked_probs = ad::softmax_rows(target_logits(tgt, target.task, g, masked_adj));
  const auto p_mask = ad::row(masked_probs, instance.center.value_or(0));
  const auto p_disc = discriminate(ex, causal, model.task, instance.center, model.config.readout);

  LossTerms terms;
  terms.recon = recon.scalar();
  if (prior.valid()) terms.kl_prior = prior.scalar();

  if (!stage_two) {
    const auto disc_term = config.lambda1_discriminator_first ? ad::kl_divergence(p_disc, p_mask, kProbabilityFloor)
                                                              : ad::kl_divergence(p_mask, p_disc, kProbabilityFloor);
    const auto target_term = ad::kl_divergence(p_mask, tape.constant(original), kProbabilityFloor);
    loss = loss + ad::scale(disc_term, config.lambda1) + ad::scale(target_term, config.lambda2);
    terms.kl_disc = config.lambda1 * disc_term.scalar();
    terms.kl_target = config.lambda2 * target_term.scalar();
  } else {
    const double total_edges = g.adjacency.sum();
    if (total_edges > 0.0) {
      const auto ratio = ad::scale(ad::sum(masked_adj), 1.0 / total_edges);
      const auto size = ad::abs(ad::offset(ratio, -config.gamma));
      loss = loss + size;
      terms.size = size.scalar();
    }
    const auto disc_term = ad::kl_divergence(p_mask, p_disc, kProbabilityFloor);
    loss = loss + ad::scale(disc_term, config.lambda3);
    terms.kl_disc = config.lambda3 * disc_term.scalar();
  }
  terms.total = loss.scalar();

  check_finite(terms.recon, "recon");
  check_finite(terms.kl_prior, "kl_prior");
  check_finite(terms.kl_disc, "kl_disc");
  check_finite(terms.kl_target, "kl_target");
  check_finite(terms.size, "size");

  StageEvaluation out;
  out.terms = terms;
  if (with_gradients) {
    tape.backward(loss);
    collect_grads(ex.encoder_parameters(), out.encoder_grads);
    if (!stage_two) collect_grads(ex.discriminator_parameters(), out.discriminator_grads);
  }
  return out;
}

namespace {

Eigen::RowVectorXd original_prediction(const TargetModel& target, const Instance& instance) {
  return instance_prediction(predict(target, instance.graph), instance);
}

}  // namespace

LossTerms stage1_loss(const Instance& instance, const ExplainerModel& model, const TargetModel& target,
                      const StageConfig& config, const Eigen::MatrixXd* noise) {
  return evaluate_stage(Stage::one, model, target, instance, original_prediction(target, instance), config, noise,
                        false)
      .terms;
}

LossTerms stage2_loss(const Instance& instance, const ExplainerModel& model, const TargetModel& target,
                      const StageConfig& config, const Eigen::MatrixXd* noise) {
  return evaluate_stage(Stage::two, model, target, instance, original_prediction(target, instance), config, noise,
                        false)
      .terms;
}

namespace {

std::vector<Eigen::MatrixXd> snapshot(const std::vector<const Eigen::MatrixXd*>& params) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto* p : params) out.push_back(*p);
  return out;
}

std::vector<Eigen::MatrixXd> snapshot(const std::vector<Eigen::MatrixXd*>& params) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto* p : params) out.push_back(*p);
  return out;
}

bool identical(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i]) return false;
  return true;
}

void add_into(std::vector<Eigen::MatrixXd>& acc, const std::vector<Eigen::MatrixXd>& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
}

}  // namespace

ExplainerTrainResult train_explainer(ExplainerModel model, const TargetModel& target,
                                     const std::vector<Instance>& instances, const StageConfig& config) {
  config.validate();
  if (model.task != target.task) throw UsageError("explainer and target tasks differ");
  if (model.config.variant != config.variant) throw UsageError("explainer variant differs from stage config");
  if (instances.empty() && (config.epochs_stage1 > 0 || config.epochs_stage2 > 0))
    throw ParameterError("no training instances");

  const auto target_before = snapshot(target.parameters());
  std::vector<Eigen::RowVectorXd> originals;
  originals.reserve(instances.size());
  for (const auto& inst : instances) originals.push_back(original_prediction(target, inst));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Adam encoder_opt(config.lr), disc_opt(config.lr);
  auto encoder_params = model.encoder_parameters();
  auto disc_params = model.discriminator_parameters();

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t per_epoch = config.instances_per_epoch > 0
                                    ? std::min(order.size(), static_cast<std::size_t>(config.instances_per_epoch))
                                    : order.size();
  const bool vgae = model.config.variant == Variant::vgae;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  ExplainerTrainResult result;
  auto run_epoch = [&](Stage stage, int epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossTerms sum;
    for (std::size_t start = 0; start < per_epoch; start += batch) {
      const std::size_t stop = std::min(per_epoch, start + batch);
      std::vector<Eigen::MatrixXd> enc_grads, disc_grads;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& inst = instances[order[i]];
        Eigen::MatrixXd noise;
        if (vgae)
          noise = Eigen::MatrixXd::NullaryExpr(inst.graph.num_nodes(), model.config.latent_dim,
                                               [&]() { return normal(rng); });
        StageEvaluation ev;
        try {
          ev = evaluate_stage(stage, model, target, inst, originals[order[i]], config, vgae ? &noise : nullptr, true);
        } catch (const TrainingError& e) {
          throw TrainingError(e.what(), epoch);
        }
        sum += ev.terms;
        add_into(enc_grads, ev.encoder_grads);
        if (stage == Stage::one) add_into(disc_grads, ev.discriminator_grads);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto& g : enc_grads) g *= inv;
      encoder_opt.step(encoder_params, enc_grads);
      if (stage == Stage::one) {
        for (auto& g : disc_grads) g *= inv;
        disc_opt.step(disc_params, disc_grads);
      }
    }
    result.history.push_back({epoch, static_cast<int>(stage), sum.scaled(1.0 / static_cast<double>(per_epoch))});
  };

  model.discriminator_frozen = false;
  for (int e = 1; e <= config.epochs_stage1; ++e) run_epoch(Stage::one, e);

  model.discriminator_frozen = true;
  result.after_stage_one = model;
  const auto disc_before = snapshot(disc_params);
  for (int e = 1; e <= config.epochs_stage2; ++e) run_epoch(Stage::two, config.epochs_stage1 + e);
  if (!identical(disc_before, snapshot(disc_params)))
    throw std::logic_error("discriminator parameters changed during stage two");
  if (!identical(target_before, snapshot(target.parameters())))
    throw std::logic_error("target parameters changed during explainer training");

  model.trained = true;
  result.model = std::move(model);
  return result;
}

ExplainerTrainResult train_explainer(ExplainerModel model, const TargetModel& target, const DatasetBundle& bundle,
                                     const StageConfig& config) {
  return train_explainer(std::move(model), target, make_instances(bundle, bundle.splits.train), config);
}

double discriminator_gap(const ExplainerModel& model, const TargetModel& target,
                         const std::vector<Instance>& instances) {
  if (instances.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : instances) {
    const auto code = encode(model, inst.graph);
    const auto mask = decode_mask(model, code.causal(), inst.graph.adjacency);
    const Eigen::RowVectorXd p_mask = instance_prediction(predict_masked(target, inst.graph, mask), inst);
    const Eigen::RowVectorXd p_disc = discriminate(model, code.causal(), inst.center);
    total += kl_categorical(p_mask, p_disc);
  }
  return total / static_cast<double>(instances.size());
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream ss;
  ss << "epoch,stage,recon,kl_prior,kl_disc,kl_target,size,total\n";
  ss << std::setprecision(10);
  for (const auto& r : history) {
    const auto& t = r.terms;
    ss << r.epoch << ',' << r.stage << ',' << t.recon << ',' << t.kl_prior << ',' << t.kl_disc << ','
       << t.kl_target << ',' << t.size << ',' << t.total << '\n';
  }
  return ss.str();
}

}  // namespace page
