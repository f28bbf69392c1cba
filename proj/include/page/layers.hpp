#pragma once

#include "page/autodiff.hpp"
#include "page/graph.hpp"

#include <random>
#include <vector>

namespace page {

enum class Activation { identity, relu };

// Affine map x W + b; bias is a 1 x out row.
struct Dense {
  Eigen::MatrixXd weight;
  Eigen::MatrixXd bias;

  int in_dim() const { return static_cast<int>(weight.rows()); }
  int out_dim() const { return static_cast<int>(weight.cols()); }
};

Dense glorot_dense(int in, int out, std::mt19937_64& rng);

// Redraws the bias from U(-1, 1). With constant input features every
// first-layer unit is an affine function of one propagated degree signal,
// and zero biases put all ReLU kinks outside the data range, collapsing the
// layer output to rank one.
void spread_bias(Dense& layer, std::mt19937_64& rng);

// Tape handles for one Dense layer.
struct BoundDense {
  ad::Var weight;
  ad::Var bias;
};

inline BoundDense bind(ad::Tape& tape, const Dense& layer, bool trainable) {
  if (trainable) return {tape.variable(layer.weight), tape.variable(layer.bias)};
  return {tape.constant(layer.weight), tape.constant(layer.bias)};
}

inline ad::Var activate(const ad::Var& x, Activation act) { return act == Activation::relu ? ad::relu(x) : x; }

inline ad::Var dense(const ad::Var& x, const BoundDense& layer, Activation act = Activation::identity) {
  return activate(ad::add_row(ad::matmul(x, layer.weight), layer.bias), act);
}

// act(A_norm H W + b)
inline ad::Var gcn_layer(const ad::Var& h, const ad::Var& a_norm, const BoundDense& layer, Activation act) {
  if (h.cols() != layer.weight.rows()) throw ModelError("gcn_layer: feature width does not match weights");
  if (a_norm.rows() != h.rows()) throw ModelError("gcn_layer: adjacency does not match node count");
  return activate(ad::add_row(ad::matmul(a_norm, ad::matmul(h, layer.weight)), layer.bias), act);
}

// Plain-matrix counterpart: act(A_norm H W).
template <typename DH, typename DA, typename DW>
MatrixX<typename DH::Scalar> gcn_layer(const Eigen::MatrixBase<DH>& h, const Eigen::MatrixBase<DA>& a_norm,
                                        const Eigen::MatrixBase<DW>& w, Activation act) {
  if (h.cols() != w.rows() || a_norm.cols() != h.rows() || a_norm.rows() != a_norm.cols())
    throw ModelError("gcn_layer: shape mismatch");
  MatrixX<typename DH::Scalar> out = a_norm * (h * w);
  if (act == Activation::relu) out = out.cwiseMax(typename DH::Scalar(0));
  return out;
}

// Gathers gradients of bound layers in the same order as their parameters.
inline void collect_grads(const std::vector<ad::Var>& vars, std::vector<Eigen::MatrixXd>& grads) {
  if (grads.size() != vars.size()) grads.resize(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& g = vars[i].grad();
    if (grads[i].size() == 0) grads[i] = Eigen::MatrixXd::Zero(vars[i].rows(), vars[i].cols());
    if (g.size() != 0) grads[i] += g;
  }
}

}  // namespace page
