#pragma once

#include "page/explainer.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace page {

struct StageConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double lambda3 = 0.01;
  double gamma = 0.5;
  double lr = 0.003;
  int epochs_stage1 = 300;
  int epochs_stage2 = 50;
  Variant variant = Variant::vgae;
  int batch_size = 32;
  // Stage-one discriminator term as printed, KL[P_phi(Y|Z_c) || P(Y|g(Z_c))].
  // False flips it to KL[P(Y|g(Z_c)) || P_phi(Y|Z_c)].
  bool lambda1_discriminator_first = true;
  // Training instances drawn per epoch; 0 uses the whole training split.
  int instances_per_epoch = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Stage { one = 1, two = 2 };

// Each field is the term's contribution to `total` (lambda weights applied).
struct LossTerms {
  double recon = 0.0;
  double kl_prior = 0.0;
  double kl_disc = 0.0;
  double kl_target = 0.0;
  double size = 0.0;
  double total = 0.0;

  LossTerms& operator+=(const LossTerms& o);
  LossTerms scaled(double s) const;
};

inline constexpr double kProbabilityFloor = 1e-7;

// Mean weighted BCE between sigmoid(Z Z^T) and A over off-diagonal entries;
// positives weighted by (#non-edges / #edges).
double recon_loss(const Graph& g, const Eigen::MatrixXd& z);
double positive_weight(const Eigen::MatrixXd& adjacency);

// Mean over nodes of 0.5 * sum_d (mu^2 + sigma^2 - 1 - log sigma^2).
double vgae_kl(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar);

// KL[p || q] with both clamped to [1e-7, 1]; rejects inputs that are not
// normalized within 1e-5.
double kl_categorical(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q);

// | ||A .* M||_1 / ||A||_1 - gamma |, zero for an edgeless graph.
double size_loss(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& mask, double gamma);
double mask_ratio(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& mask);

struct StageEvaluation {
  LossTerms terms;
  std::vector<Eigen::MatrixXd> encoder_grads;        // ExplainerModel::encoder_parameters order
  std::vector<Eigen::MatrixXd> discriminator_grads;  // empty in stage two
};

// Loss of one instance. `original` is P(Y|X), the target's prediction on the
// unmasked instance. `noise` drives the VGAE reparameterization; null means
// Z = mu.
StageEvaluation evaluate_stage(Stage stage, const ExplainerModel& model, const TargetModel& target,
                               const Instance& instance, const Eigen::RowVectorXd& original,
                               const StageConfig& config, const Eigen::MatrixXd* noise, bool with_gradients);

LossTerms stage1_loss(const Instance& instance, const ExplainerModel& model, const TargetModel& target,
                      const StageConfig& config, const Eigen::MatrixXd* noise = nullptr);

// Requires model.discriminator_frozen.
LossTerms stage2_loss(const Instance& instance, const ExplainerModel& model, const TargetModel& target,
                      const StageConfig& config, const Eigen::MatrixXd* noise = nullptr);

struct EpochRecord {
  int epoch = 0;
  int stage = 1;
  LossTerms terms;
};

struct ExplainerTrainResult {
  ExplainerModel model;
  ExplainerModel after_stage_one;  // snapshot taken when the discriminator is frozen
  std::vector<EpochRecord> history;
};

// Stage one trains encoder and discriminator jointly; stage two freezes the
// discriminator. The target is read-only throughout.
ExplainerTrainResult train_explainer(ExplainerModel model, const TargetModel& target,
                                     const std::vector<Instance>& instances, const StageConfig& config);

ExplainerTrainResult train_explainer(ExplainerModel model, const TargetModel& target, const DatasetBundle& bundle,
                                     const StageConfig& config);

// Mean KL[P(Y|g(Z_c)) || P_phi(Y|Z_c)] in evaluation mode.
double discriminator_gap(const ExplainerModel& model, const TargetModel& target, const std::vector<Instance>& instances);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace page
