#pragma once

#include "page/target_gnn.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace page {

enum class Variant { gae, vgae };
enum class Readout { mean, max };

struct ExplainerConfig {
  Variant variant = Variant::vgae;
  int hidden1 = 32;
  int hidden2 = 32;
  int latent_dim = 16;
  int causal_dim = 8;
  int discriminator_hidden = 32;
  // Width of an optional two-layer perceptron applied row-wise to the
  // (padded) latent code before the inner product. 0 keeps the decoder
  // parameter-free.
  int decoder_hidden = 0;
  Readout readout = Readout::mean;

  bool mlp_decoder() const { return decoder_hidden > 0; }
};

// GCN encoder (32, 32, 16) whose VGAE variant shares the first two layers
// between the mean and log-variance heads, an inner-product decoder
// (parameter-free unless decoder_hidden > 0), and a two-layer perceptron
// discriminator over the causal block.
struct ExplainerModel {
  ExplainerConfig config;
  Task task = Task::node;
  int input_dim = 0;
  int num_classes = 0;
  Dense enc1, enc2, enc_mu, enc_logvar;
  Dense dec1, dec2;  // decoder perceptron, empty unless config.mlp_decoder()
  Dense disc1, disc2;
  bool trained = false;
  bool discriminator_frozen = false;
  std::string dataset;

  int causal_dim() const { return config.causal_dim; }
  int spurious_dim() const { return config.latent_dim - config.causal_dim; }

  // Autoencoder parameters: encoder plus the decoder perceptron if present.
  std::vector<Eigen::MatrixXd*> encoder_parameters();
  std::vector<Eigen::MatrixXd*> discriminator_parameters();
  std::vector<Eigen::MatrixXd*> parameters();
};

ExplainerModel make_explainer(Task task, int input_dim, int num_classes, const ExplainerConfig& config,
                              std::uint64_t seed);

struct LatentCode {
  Eigen::MatrixXd z;
  Eigen::MatrixXd mu;      // VGAE only
  Eigen::MatrixXd logvar;  // VGAE only
  int causal_dim = 0;

  auto causal() const { return z.leftCols(causal_dim); }
  auto spurious() const { return z.rightCols(z.cols() - causal_dim); }
};

struct BoundExplainer {
  BoundDense enc1, enc2, enc_mu, enc_logvar;
  BoundDense dec1, dec2;
  BoundDense disc1, disc2;
  bool vgae = true;
  bool mlp_decoder = false;

  std::vector<ad::Var> encoder_parameters() const;
  std::vector<ad::Var> discriminator_parameters() const;
};

BoundExplainer bind(ad::Tape& tape, const ExplainerModel& model, bool train_encoder, bool train_discriminator);

struct EncodedVars {
  ad::Var z;
  ad::Var mu;
  ad::Var logvar;
};

// `noise` supplies epsilon for the reparameterization; null means evaluation
// mode (Z = mu).
EncodedVars encode(const BoundExplainer& model, const Graph& g, const Eigen::MatrixXd* noise);
ad::Var decode_mask(const ad::Var& causal, int latent_dim, const Eigen::MatrixXd& adjacency);
// Row-wise decoder perceptron (identity when absent) and the mask built on it.
ad::Var decoder_embedding(const BoundExplainer& model, const ad::Var& z);
ad::Var decode_mask(const BoundExplainer& model, const ad::Var& causal, int latent_dim,
                    const Eigen::MatrixXd& adjacency);
ad::Var discriminate(const BoundExplainer& model, const ad::Var& causal, Task task, std::optional<int> target_node,
                     Readout readout);

LatentCode encode(const ExplainerModel& model, const Graph& g, std::mt19937_64* rng = nullptr);

// Process-wide count of encode(ExplainerModel, ...) calls.
std::uint64_t encoder_passes();

// sym(sigmoid(pad(Z_c) pad(Z_c)^T) .* A)
Eigen::MatrixXd decode_mask(const Eigen::MatrixXd& causal, const Eigen::MatrixXd& adjacency, int latent_dim = 16);
Eigen::MatrixXd decode_mask(const ExplainerModel& model, const Eigen::MatrixXd& causal,
                            const Eigen::MatrixXd& adjacency);

Eigen::MatrixXd discriminate(const ExplainerModel& model, const Eigen::MatrixXd& causal,
                             std::optional<int> target_node = std::nullopt);

// One unit of explanation work: a whole graph (graph task) or the k-hop
// computation subgraph around a node (node task).
struct Instance {
  Graph graph;
  std::optional<int> center;      // local index of the explained node
  std::vector<int> original_ids;  // local -> parent ids (node task)
  int source = 0;                 // graph index or node id in the bundle
};

constexpr int kTargetDepth = 3;

std::vector<Instance> make_instances(const DatasetBundle& bundle, const std::vector<int>& indices,
                                     int k = kTargetDepth);

struct Budget {
  enum class Kind { top_k, keep_ratio };
  Kind kind = Kind::top_k;
  int k = 6;
  double keep_ratio = 1.0;

  static Budget top(int k) { return {Kind::top_k, k, 1.0}; }
  static Budget ratio(double r) { return {Kind::keep_ratio, 0, r}; }
  std::string describe() const;
  Eigen::MatrixXd select(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& scores) const;
};

struct Explanation {
  Eigen::MatrixXd soft_mask;
  Eigen::MatrixXd hard_mask;
  Graph masked;
  Eigen::RowVectorXd prediction;           // target on the masked graph
  Eigen::RowVectorXd original_prediction;  // target on the input
  std::optional<int> target_node;          // local index, node task only
  std::vector<int> original_ids;
};

// Single forward pass in evaluation mode.
Explanation explain_instance(const ExplainerModel& model, const TargetModel& target, const Instance& instance,
                             const Budget& budget);

// For node tasks, explains `target_node` on its 3-hop computation subgraph.
Explanation explain(const ExplainerModel& model, const TargetModel& target, const Graph& g, const Budget& budget,
                    std::optional<int> target_node = std::nullopt);

Eigen::RowVectorXd instance_prediction(const Eigen::MatrixXd& probs, const Instance& instance);

}  // namespace page
