#pragma once

// Minimal reverse-mode differentiation over dense Eigen matrices.
//
// A tape records every intermediate matrix together with a closure that
// scatters the upstream gradient into its parents. Nodes live in a deque so
// references handed out by value()/grad() stay valid while the tape grows.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace page::ad {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class BasicTape;

template <typename Scalar>
class BasicVar {
 public:
  using Matrix = Mat<Scalar>;

  BasicVar() = default;
  BasicVar(BasicTape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const { return tape_->value(id_); }
  const Matrix& grad() const { return tape_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const { return value()(0, 0); }
  bool requires_grad() const { return tape_->requires_grad(id_); }

  BasicTape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  BasicTape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class BasicTape {
 public:
  using Matrix = Mat<Scalar>;
  using Var = BasicVar<Scalar>;
  using Backward = std::function<void(BasicTape&, const Matrix& upstream)>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, {}); }
  Var variable(Matrix value) { return push(std::move(value), true, {}); }

  // Records an op result. The closure is dropped when no parent needs a
  // gradient, so inference-only graphs cost one matrix per node.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward fn) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || requires_grad(p.id());
    return push(std::move(value), needs, needs ? std::move(fn) : Backward{});
  }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  template <typename Expr>
  void accumulate(const Var& v, const Expr& g) {
    auto& node = nodes_[v.id()];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  void backward(const Var& root) {
    if (root.value().size() != 1) throw std::logic_error("backward: root must be a scalar");
    auto& r = nodes_[root.id()];
    if (!r.requires_grad) return;
    r.grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      auto& node = nodes_[i];
      if (node.backward && node.grad.size() != 0) {
        // Copy out: the closure may touch other nodes but never this grad.
        const Matrix upstream = node.grad;
        node.backward(*this, upstream);
      }
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Matrix value, bool needs, Backward fn) {
    nodes_.push_back(Node{std::move(value), Matrix{}, needs, std::move(fn)});
    return Var(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

namespace detail {
inline void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace detail

template <typename Scalar>
BasicVar<Scalar> matmul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  detail::check(a.cols() == b.rows(), "matmul: inner dimensions differ");
  auto* t = a.tape();
  return t->record(a.value() * b.value(), {a, b}, [a, b](auto& tape, const auto& g) {
    if (a.requires_grad()) tape.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) tape.accumulate(b, a.value().transpose() * g);
  });
}

template <typename Scalar>
BasicVar<Scalar> operator+(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](auto& tape, const auto& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

template <typename Scalar>
BasicVar<Scalar> operator-(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](auto& tape, const auto& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, -g);
  });
}

template <typename Scalar>
BasicVar<Scalar> scale(const BasicVar<Scalar>& a, Scalar s) {
  return a.tape()->record(a.value() * s, {a},
                          [a, s](auto& tape, const auto& g) { tape.accumulate(a, g * s); });
}

template <typename Scalar>
BasicVar<Scalar> offset(const BasicVar<Scalar>& a, Scalar s) {
  return a.tape()->record((a.value().array() + s).matrix(), {a},
                          [a](auto& tape, const auto& g) { tape.accumulate(a, g); });
}

template <typename Scalar>
BasicVar<Scalar> hadamard(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard: shape mismatch");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b},
                          [a, b](auto& tape, const auto& g) {
                            if (a.requires_grad()) tape.accumulate(a, g.cwiseProduct(b.value()));
                            if (b.requires_grad()) tape.accumulate(b, g.cwiseProduct(a.value()));
                          });
}

// a + broadcast(bias) over rows; bias is 1 x cols.
template <typename Scalar>
BasicVar<Scalar> add_row(const BasicVar<Scalar>& a, const BasicVar<Scalar>& bias) {
  detail::check(bias.rows() == 1 && bias.cols() == a.cols(), "add_row: bias shape");
  Mat<Scalar> v = a.value().rowwise() + bias.value().row(0);
  return a.tape()->record(std::move(v), {a, bias}, [a, bias](auto& tape, const auto& g) {
    tape.accumulate(a, g);
    if (bias.requires_grad()) tape.accumulate(bias, g.colwise().sum());
  });
}

template <typename Scalar>
BasicVar<Scalar> transpose(const BasicVar<Scalar>& a) {
  return a.tape()->record(a.value().transpose(), {a},
                          [a](auto& tape, const auto& g) { tape.accumulate(a, g.transpose()); });
}

template <typename Scalar>
BasicVar<Scalar> relu(const BasicVar<Scalar>& a) {
  Mat<Scalar> v = a.value().cwiseMax(Scalar(0));
  return a.tape()->record(std::move(v), {a}, [a](auto& tape, const auto& g) {
    tape.accumulate(a, (a.value().array() > Scalar(0)).select(g, Scalar(0)));
  });
}

template <typename Scalar>
BasicVar<Scalar> sigmoid(const BasicVar<Scalar>& a) {
  Mat<Scalar> v = a.value().unaryExpr([](Scalar x) {
    return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x)) : std::exp(x) / (Scalar(1) + std::exp(x));
  });
  Mat<Scalar> copy = v;
  return a.tape()->record(std::move(v), {a}, [a, s = std::move(copy)](auto& tape, const auto& g) {
    tape.accumulate(a, g.cwiseProduct(s.cwiseProduct((Scalar(1) - s.array()).matrix())));
  });
}

template <typename Scalar>
BasicVar<Scalar> exp(const BasicVar<Scalar>& a) {
  Mat<Scalar> v = a.value().array().exp().matrix();
  Mat<Scalar> copy = v;
  return a.tape()->record(std::move(v), {a}, [a, copy = std::move(copy)](auto& tape, const auto& g) {
    tape.accumulate(a, g.cwiseProduct(copy));
  });
}

template <typename Scalar>
BasicVar<Scalar> abs(const BasicVar<Scalar>& a) {
  return a.tape()->record(a.value().cwiseAbs(), {a}, [a](auto& tape, const auto& g) {
    tape.accumulate(a, g.cwiseProduct(a.value().unaryExpr([](Scalar x) {
      return x > 0 ? Scalar(1) : (x < 0 ? Scalar(-1) : Scalar(0));
    })));
  });
}

template <typename Scalar>
BasicVar<Scalar> sum(const BasicVar<Scalar>& a) {
  Mat<Scalar> v(1, 1);
  v(0, 0) = a.value().sum();
  const auto r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(v), {a}, [a, r, c](auto& tape, const auto& g) {
    tape.accumulate(a, Mat<Scalar>::Constant(r, c, g(0, 0)));
  });
}

template <typename Scalar>
BasicVar<Scalar> mean(const BasicVar<Scalar>& a) {
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.value().size()));
}

template <typename Scalar>
BasicVar<Scalar> cols(const BasicVar<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  detail::check(start >= 0 && count >= 0 && start + count <= a.cols(), "cols: out of range");
  const auto r = a.rows(), c = a.cols();
  return a.tape()->record(a.value().middleCols(start, count), {a},
                          [a, start, count, r, c](auto& tape, const auto& g) {
                            Mat<Scalar> full = Mat<Scalar>::Zero(r, c);
                            full.middleCols(start, count) = g;
                            tape.accumulate(a, full);
                          });
}

template <typename Scalar>
BasicVar<Scalar> row(const BasicVar<Scalar>& a, Eigen::Index i) {
  detail::check(i >= 0 && i < a.rows(), "row: out of range");
  const auto r = a.rows(), c = a.cols();
  return a.tape()->record(a.value().row(i), {a}, [a, i, r, c](auto& tape, const auto& g) {
    Mat<Scalar> full = Mat<Scalar>::Zero(r, c);
    full.row(i) = g.row(0);
    tape.accumulate(a, full);
  });
}

// Right-pads with zero columns up to `width`.
template <typename Scalar>
BasicVar<Scalar> pad_cols(const BasicVar<Scalar>& a, Eigen::Index width) {
  detail::check(width >= a.cols(), "pad_cols: width smaller than input");
  Mat<Scalar> v = Mat<Scalar>::Zero(a.rows(), width);
  v.leftCols(a.cols()) = a.value();
  const auto c = a.cols();
  return a.tape()->record(std::move(v), {a}, [a, c](auto& tape, const auto& g) {
    tape.accumulate(a, g.leftCols(c));
  });
}

template <typename Scalar>
BasicVar<Scalar> concat_cols(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  detail::check(a.rows() == b.rows(), "concat_cols: row mismatch");
  Mat<Scalar> v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const auto ca = a.cols(), cb = b.cols();
  return a.tape()->record(std::move(v), {a, b}, [a, b, ca, cb](auto& tape, const auto& g) {
    tape.accumulate(a, g.leftCols(ca));
    tape.accumulate(b, g.rightCols(cb));
  });
}

// D^-1/2 (A + I) D^-1/2 with D_ii = sum_j (A + I)_ij.
template <typename Scalar>
BasicVar<Scalar> sym_normalize(const BasicVar<Scalar>& adj) {
  detail::check(adj.rows() == adj.cols(), "sym_normalize: adjacency must be square");
  const auto n = adj.rows();
  Mat<Scalar> hat = adj.value() + Mat<Scalar>::Identity(n, n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> deg = hat.rowwise().sum();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s = deg.array().rsqrt().matrix();
  Mat<Scalar> v = s.asDiagonal() * hat * s.asDiagonal();
  return adj.tape()->record(std::move(v), {adj}, [adj, s, deg](auto& tape, const auto& g) {
    Mat<Scalar> hat = adj.value();
    hat.diagonal().array() += Scalar(1);
    Mat<Scalar> gh = g.cwiseProduct(hat);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ds = gh * s + gh.transpose() * s;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dd =
        (ds.array() * Scalar(-0.5) * deg.array().pow(Scalar(-1.5))).matrix();
    Mat<Scalar> out = g.cwiseProduct(s * s.transpose());
    out.colwise() += dd;
    tape.accumulate(adj, out);
  });
}

template <typename Scalar>
Mat<Scalar> softmax_rows_value(const Mat<Scalar>& x) {
  Mat<Scalar> out = x.colwise() - x.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

template <typename Scalar>
BasicVar<Scalar> softmax_rows(const BasicVar<Scalar>& a) {
  Mat<Scalar> p = softmax_rows_value<Scalar>(a.value());
  Mat<Scalar> copy = p;
  return a.tape()->record(std::move(p), {a}, [a, p = std::move(copy)](auto& tape, const auto& g) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = g.cwiseProduct(p).rowwise().sum();
    Mat<Scalar> out = g;
    out.colwise() -= dot;
    tape.accumulate(a, out.cwiseProduct(p));
  });
}

template <typename Scalar>
BasicVar<Scalar> mean_rows(const BasicVar<Scalar>& a) {
  detail::check(a.rows() > 0, "mean_rows: empty input");
  const auto n = a.rows();
  return a.tape()->record(a.value().colwise().mean(), {a}, [a, n](auto& tape, const auto& g) {
    tape.accumulate(a, g.replicate(n, 1) / static_cast<Scalar>(n));
  });
}

template <typename Scalar>
BasicVar<Scalar> max_rows(const BasicVar<Scalar>& a) {
  detail::check(a.rows() > 0, "max_rows: empty input");
  const auto c = a.cols();
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(c));
  Mat<Scalar> v(1, c);
  for (Eigen::Index j = 0; j < c; ++j) v(0, j) = a.value().col(j).maxCoeff(&arg[std::size_t(j)]);
  const auto r = a.rows();
  return a.tape()->record(std::move(v), {a}, [a, arg, r, c](auto& tape, const auto& g) {
    Mat<Scalar> out = Mat<Scalar>::Zero(r, c);
    for (Eigen::Index j = 0; j < c; ++j) out(arg[std::size_t(j)], j) = g(0, j);
    tape.accumulate(a, out);
  });
}

// KL[p || q] summed over all entries, each argument clamped to [eps, 1].
// The clamp has zero gradient outside its range.
template <typename Scalar>
BasicVar<Scalar> kl_divergence(const BasicVar<Scalar>& p, const BasicVar<Scalar>& q,
                               Scalar eps = Scalar(1e-7)) {
  detail::check(p.rows() == q.rows() && p.cols() == q.cols(), "kl: shape mismatch");
  auto clamp = [eps](const Mat<Scalar>& m) { return m.cwiseMax(eps).cwiseMin(Scalar(1)).eval(); };
  Mat<Scalar> pc = clamp(p.value()), qc = clamp(q.value());
  Mat<Scalar> v(1, 1);
  v(0, 0) = (pc.array() * (pc.array().log() - qc.array().log())).sum();
  return p.tape()->record(std::move(v), {p, q}, [p, q, pc, qc, eps](auto& tape, const auto& g) {
    const Scalar up = g(0, 0);
    auto inside = [eps](const Mat<Scalar>& raw) {
      return ((raw.array() >= eps) && (raw.array() <= Scalar(1))).template cast<Scalar>();
    };
    if (p.requires_grad()) {
      Mat<Scalar> dp = ((pc.array().log() - qc.array().log() + Scalar(1)) * inside(p.value())).matrix();
      tape.accumulate(p, dp * up);
    }
    if (q.requires_grad()) {
      Mat<Scalar> dq = ((-pc.array() / qc.array()) * inside(q.value())).matrix();
      tape.accumulate(q, dq * up);
    }
  });
}

// Mean weighted binary cross-entropy between sigmoid(logits) and a 0/1 target,
// taken over off-diagonal entries. Positive entries are weighted by pos_weight.
template <typename Scalar>
BasicVar<Scalar> bce_with_logits_offdiag(const BasicVar<Scalar>& logits, const Mat<Scalar>& target,
                                         Scalar pos_weight) {
  detail::check(logits.rows() == logits.cols() && target.rows() == logits.rows() &&
                    target.cols() == logits.cols(),
                "bce: shape mismatch");
  const auto n = logits.rows();
  const Scalar count = static_cast<Scalar>(n * (n - 1));
  auto softplus = [](Scalar x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
  Mat<Scalar> v = Mat<Scalar>::Zero(1, 1);
  if (count == 0) return logits.tape()->constant(std::move(v));
  Scalar total = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const Scalar x = logits.value()(i, j);
      const Scalar y = target(i, j);
      total += pos_weight * y * softplus(-x) + (Scalar(1) - y) * softplus(x);
    }
  v(0, 0) = total / count;
  return logits.tape()->record(std::move(v), {logits}, [logits, target, pos_weight, count, n](auto& tape,
                                                                                              const auto& g) {
    Mat<Scalar> out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) {
          out(i, j) = 0;
          continue;
        }
        const Scalar x = logits.value()(i, j);
        const Scalar s = x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x)) : std::exp(x) / (Scalar(1) + std::exp(x));
        const Scalar y = target(i, j);
        out(i, j) = (pos_weight * y * (s - Scalar(1)) + (Scalar(1) - y) * s) / count;
      }
    tape.accumulate(logits, out * g(0, 0));
  });
}

// Mean over rows of 0.5 * sum_d (mu^2 + exp(logvar) - 1 - logvar).
template <typename Scalar>
BasicVar<Scalar> gaussian_kl(const BasicVar<Scalar>& mu, const BasicVar<Scalar>& logvar) {
  detail::check(mu.rows() == logvar.rows() && mu.cols() == logvar.cols(), "gaussian_kl: shape mismatch");
  const auto n = static_cast<Scalar>(std::max<Eigen::Index>(mu.rows(), 1));
  Mat<Scalar> v(1, 1);
  v(0, 0) = Scalar(0.5) *
            (mu.value().array().square() + logvar.value().array().exp() - Scalar(1) - logvar.value().array()).sum() /
            n;
  return mu.tape()->record(std::move(v), {mu, logvar}, [mu, logvar, n](auto& tape, const auto& g) {
    const Scalar up = g(0, 0) / n;
    tape.accumulate(mu, mu.value() * up);
    tape.accumulate(logvar, ((logvar.value().array().exp() - Scalar(1)) * Scalar(0.5) * up).matrix());
  });
}

// Mean negative log-likelihood of softmax(logits) at the given rows/labels.
template <typename Scalar>
BasicVar<Scalar> softmax_cross_entropy(const BasicVar<Scalar>& logits, const std::vector<int>& rows,
                                       const std::vector<int>& labels) {
  detail::check(rows.size() == labels.size() && !rows.empty(), "cross_entropy: bad selection");
  Mat<Scalar> p = softmax_rows_value<Scalar>(logits.value());
  Scalar total = 0;
  for (std::size_t k = 0; k < rows.size(); ++k)
    total -= std::log(std::max(p(rows[k], labels[k]), std::numeric_limits<Scalar>::min()));
  const Scalar m = static_cast<Scalar>(rows.size());
  Mat<Scalar> v(1, 1);
  v(0, 0) = total / m;
  return logits.tape()->record(std::move(v), {logits}, [logits, p, rows, labels, m](auto& tape, const auto& g) {
    Mat<Scalar> out = Mat<Scalar>::Zero(p.rows(), p.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.row(rows[k]) += p.row(rows[k]);
      out(rows[k], labels[k]) -= Scalar(1);
    }
    tape.accumulate(logits, out * (g(0, 0) / m));
  });
}

}  // namespace page::ad
