#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dela/rng.hpp"

namespace dela::tensor {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Running statistics of a non-affine batch-norm layer (one per head).
template <class S>
struct BatchNormState {
  Mat<S> running_mean;  // 1 x c
  Mat<S> running_var;   // 1 x c
  double momentum = 0.1;

  void ensure(int c) {
    if (running_mean.size() == 0) {
      running_mean = Mat<S>::Zero(1, c);
      running_var = Mat<S>::Ones(1, c);
    }
  }
};

/// Reverse-mode tape over dense Eigen matrices. Nodes are created in
/// topological order; backward replays the registered rules once, in reverse.
template <class S>
class Tape {
 public:
  using M = Mat<S>;

  int push_leaf(M value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  const M& value(int id) const { return nodes_[id].value; }
  const M& grad(int id) const { return nodes_[id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  void backward(int loss) {
    if (backward_done_)
      throw std::logic_error("Tape::backward called twice without reset");
    const M& lv = nodes_[loss].value;
    if (lv.rows() != 1 || lv.cols() != 1)
      throw std::invalid_argument("Tape::backward: loss must be a 1x1 scalar");
    backward_done_ = true;
    nodes_[loss].grad(0, 0) = S(1);
    for (int id = loss; id >= 0; --id)
      if (nodes_[id].back) nodes_[id].back(*this);
  }

  // ------------------------------------------------------------------- ops

  int matmul(int a, int b) {
    check_cols_rows(a, b);
    M v = value(a) * value(b);
    return unary_binary(std::move(v), {a, b}, [a, b](Tape& t, const M& g) {
      t.accum(a, g * t.value(b).transpose());
      t.accum(b, t.value(a).transpose() * g);
    });
  }

  /// a * b^T
  int matmul_nt(int a, int b) {
    if (value(a).cols() != value(b).cols())
      throw std::invalid_argument("matmul_nt: inner dimension mismatch");
    M v = value(a) * value(b).transpose();
    return unary_binary(std::move(v), {a, b}, [a, b](Tape& t, const M& g) {
      t.accum(a, g * t.value(b));
      t.accum(b, g.transpose() * t.value(a));
    });
  }

  int add(int a, int b) {
    check_same_shape(a, b);
    M v = value(a) + value(b);
    return unary_binary(std::move(v), {a, b}, [a, b](Tape& t, const M& g) {
      t.accum(a, g);
      t.accum(b, g);
    });
  }

  int sub(int a, int b) {
    check_same_shape(a, b);
    M v = value(a) - value(b);
    return unary_binary(std::move(v), {a, b}, [a, b](Tape& t, const M& g) {
      t.accum(a, g);
      t.accum(b, -g);
    });
  }

  int scale(int a, S s) {
    M v = value(a) * s;
    return unary_binary(std::move(v), {a}, [a, s](Tape& t, const M& g) {
      t.accum(a, g * s);
    });
  }

  /// Adds the 1 x c row vector `bias` to every row of a.
  int add_rowvec(int a, int bias) {
    if (value(bias).rows() != 1 || value(bias).cols() != value(a).cols())
      throw std::invalid_argument("add_rowvec: bias must be 1 x cols(a)");
    M v = value(a).rowwise() + value(bias).row(0);
    return unary_binary(std::move(v), {a, bias}, [a, bias](Tape& t, const M& g) {
      t.accum(a, g);
      t.accum(bias, g.colwise().sum());
    });
  }

  int cwise_mul(int a, int b) {
    check_same_shape(a, b);
    M v = value(a).cwiseProduct(value(b));
    return unary_binary(std::move(v), {a, b}, [a, b](Tape& t, const M& g) {
      t.accum(a, g.cwiseProduct(t.value(b)));
      t.accum(b, g.cwiseProduct(t.value(a)));
    });
  }

  int concat_cols(int a, int b) {
    if (value(a).rows() != value(b).rows())
      throw std::invalid_argument("concat_cols: row mismatch");
    M v(value(a).rows(), value(a).cols() + value(b).cols());
    v << value(a), value(b);
    const int ca = static_cast<int>(value(a).cols());
    return unary_binary(std::move(v), {a, b}, [a, b, ca](Tape& t, const M& g) {
      t.accum(a, g.leftCols(ca));
      t.accum(b, g.rightCols(g.cols() - ca));
    });
  }

  int concat_rows(const std::vector<int>& ids) {
    if (ids.empty()) throw std::invalid_argument("concat_rows: empty");
    int rows = 0;
    const int cols = static_cast<int>(value(ids[0]).cols());
    for (int id : ids) rows += static_cast<int>(value(id).rows());
    M v(rows, cols);
    int at = 0;
    for (int id : ids) {
      v.middleRows(at, value(id).rows()) = value(id);
      at += static_cast<int>(value(id).rows());
    }
    return unary_binary(std::move(v), ids, [ids](Tape& t, const M& g) {
      int at = 0;
      for (int id : ids) {
        int r = static_cast<int>(t.value(id).rows());
        t.accum(id, g.middleRows(at, r));
        at += r;
      }
    });
  }

  int slice_cols(int a, int start, int len) {
    M v = value(a).middleCols(start, len);
    return unary_binary(std::move(v), {a}, [a, start, len](Tape& t, const M& g) {
      M ga = M::Zero(t.value(a).rows(), t.value(a).cols());
      ga.middleCols(start, len) = g;
      t.accum(a, ga);
    });
  }

  /// r x c -> 1 x c column means (mean pooling over the token axis).
  int row_mean_pool(int a) {
    M v = value(a).colwise().mean();
    const S inv_r = S(1) / static_cast<S>(value(a).rows());
    return unary_binary(std::move(v), {a}, [a, inv_r](Tape& t, const M& g) {
      M ga = (g * inv_r).replicate(t.value(a).rows(), 1);
      t.accum(a, ga);
    });
  }

  int layer_norm(int x, int gain, int bias) {
    const M& xv = value(x);
    const int r = static_cast<int>(xv.rows()), c = static_cast<int>(xv.cols());
    if (value(gain).cols() != c || value(bias).cols() != c)
      throw std::invalid_argument("layer_norm: gain/bias must be 1 x c");
    constexpr S eps = S(1e-5);
    M xhat(r, c);
    M inv_std(r, 1);
    for (int i = 0; i < r; ++i) {
      S mu = xv.row(i).mean();
      S var = (xv.row(i).array() - mu).square().mean();
      inv_std(i, 0) = S(1) / std::sqrt(var + eps);
      xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i, 0);
    }
    M v = (xhat.array().rowwise() * value(gain).row(0).array()).rowwise() +
          value(bias).row(0).array();
    return unary_binary(
        std::move(v), {x, gain, bias},
        [x, gain, bias, xhat, inv_std](Tape& t, const M& g) {
          const int c = static_cast<int>(g.cols());
          M dxhat = g.array().rowwise() * t.value(gain).row(0).array();
          M m1 = dxhat.rowwise().mean();                          // r x 1
          M m2 = dxhat.cwiseProduct(xhat).rowwise().mean();       // r x 1
          M dx = ((dxhat.array().colwise() - m1.col(0).array()) -
                  xhat.array().colwise() * m2.col(0).array())
                     .colwise() *
                 inv_std.col(0).array();
          (void)c;
          t.accum(x, dx);
          t.accum(gain, g.cwiseProduct(xhat).colwise().sum());
          t.accum(bias, g.colwise().sum());
        });
  }

  /// x = [value | gate] halves; out = value .* sigmoid(gate).
  int glu(int x) {
    const M& xv = value(x);
    if (xv.cols() % 2 != 0) throw std::invalid_argument("glu: odd width");
    const int c = static_cast<int>(xv.cols()) / 2;
    M sig = (S(1) / (S(1) + (-xv.rightCols(c).array()).exp())).matrix();
    M v = xv.leftCols(c).cwiseProduct(sig);
    return unary_binary(std::move(v), {x}, [x, sig, c](Tape& t, const M& g) {
      M gx(g.rows(), 2 * c);
      gx.leftCols(c) = g.cwiseProduct(sig);
      gx.rightCols(c) = g.cwiseProduct(t.value(x).leftCols(c))
                            .cwiseProduct(sig)
                            .cwiseProduct((S(1) - sig.array()).matrix());
      t.accum(x, gx);
    });
  }

  int softmax_rows(int x, S tau) {
    if (tau <= S(0)) throw std::invalid_argument("softmax_rows: tau must be > 0");
    const M& xv = value(x);
    M y(xv.rows(), xv.cols());
    for (int i = 0; i < xv.rows(); ++i) {
      Eigen::Array<S, 1, Eigen::Dynamic> row = xv.row(i).array() / tau;
      row -= row.maxCoeff();
      Eigen::Array<S, 1, Eigen::Dynamic> e = row.exp();
      y.row(i) = (e / e.sum()).matrix();
    }
    return unary_binary(std::move(y), {x}, [x, tau](Tape& t, const M& g, const M& y_) {
      M dx(g.rows(), g.cols());
      for (int i = 0; i < g.rows(); ++i) {
        S dot = y_.row(i).cwiseProduct(g.row(i)).sum();
        dx.row(i) = (y_.row(i).array() * (g.row(i).array() - dot) / tau).matrix();
      }
      t.accum(x, dx);
    });
  }

  int tanh_(int x) {
    M v = value(x).array().tanh();
    return unary_binary(std::move(v), {x}, [x](Tape& t, const M& g, const M& y) {
      t.accum(x, (g.array() * (S(1) - y.array().square())).matrix());
    });
  }

  int sigmoid_(int x) {
    M v = (S(1) / (S(1) + (-value(x).array()).exp())).matrix();
    return unary_binary(std::move(v), {x}, [x](Tape& t, const M& g, const M& y) {
      t.accum(x, (g.array() * y.array() * (S(1) - y.array())).matrix());
    });
  }

  int dropout(int x, double rate, bool train, Rng* rng) {
    if (rate < 0 || rate >= 1) throw std::invalid_argument("dropout: rate in [0,1)");
    if (!train || rate == 0) return identity(x);
    const M& xv = value(x);
    M mask(xv.rows(), xv.cols());
    const S keep_scale = S(1.0 / (1.0 - rate));
    for (int i = 0; i < xv.rows(); ++i)
      for (int j = 0; j < xv.cols(); ++j)
        mask(i, j) = rng->uniform01() < rate ? S(0) : keep_scale;
    M v = xv.cwiseProduct(mask);
    return unary_binary(std::move(v), {x}, [x, mask](Tape& t, const M& g) {
      t.accum(x, g.cwiseProduct(mask));
    });
  }

  /// Column-wise batch normalization without scale/shift parameters.
  /// Train mode normalizes by batch statistics and updates the running state;
  /// eval mode normalizes by the running state.
  int batch_norm(int x, BatchNormState<S>& state, bool train) {
    const M& xv = value(x);
    const int n = static_cast<int>(xv.rows()), c = static_cast<int>(xv.cols());
    constexpr S eps = S(1e-5);
    state.ensure(c);
    if (train) {
      if (n < 2) throw std::invalid_argument("batch_norm: train mode needs n >= 2");
      M mu = xv.colwise().mean();
      M var = (xv.rowwise() - mu.row(0)).array().square().colwise().mean();
      M inv_std = (var.array() + eps).rsqrt();
      M xhat = (xv.rowwise() - mu.row(0)).array().rowwise() * inv_std.row(0).array();
      const S mom = static_cast<S>(state.momentum);
      state.running_mean = (S(1) - mom) * state.running_mean + mom * mu;
      state.running_var = (S(1) - mom) * state.running_var + mom * var;
      M v = xhat;
      return unary_binary(std::move(v), {x},
                          [x, xhat, inv_std, n](Tape& t, const M& g) {
                            M s1 = g.colwise().sum();                      // 1 x c
                            M s2 = g.cwiseProduct(xhat).colwise().sum();   // 1 x c
                            M dx = g * static_cast<S>(n) - s1.replicate(n, 1) -
                                   (xhat.array().rowwise() * s2.row(0).array())
                                       .matrix();
                            dx = (dx.array().rowwise() *
                                  (inv_std.row(0).array() / static_cast<S>(n)))
                                     .matrix();
                            t.accum(x, dx);
                          });
    }
    M inv_std = (state.running_var.array() + eps).rsqrt();
    M v = (xv.rowwise() - state.running_mean.row(0)).array().rowwise() *
          inv_std.row(0).array();
    return unary_binary(std::move(v), {x}, [x, inv_std](Tape& t, const M& g) {
      t.accum(x, (g.array().rowwise() * inv_std.row(0).array()).matrix());
    });
  }

  /// Mean over rows of (logsumexp(row) - diagonal entry); the InfoNCE core
  /// for a square logits matrix against identity targets.
  int diag_cross_entropy(int logits) {
    const M& s = value(logits);
    if (s.rows() != s.cols())
      throw std::invalid_argument("diag_cross_entropy: logits must be square");
    const int j = static_cast<int>(s.rows());
    M p(j, j);
    S total = S(0);
    for (int i = 0; i < j; ++i) {
      S mx = s.row(i).maxCoeff();
      Eigen::Array<S, 1, Eigen::Dynamic> e = (s.row(i).array() - mx).exp();
      S z = e.sum();
      p.row(i) = (e / z).matrix();
      total += std::log(z) + mx - s(i, i);
    }
    M v(1, 1);
    v(0, 0) = total / static_cast<S>(j);
    return unary_binary(std::move(v), {logits}, [logits, p, j](Tape& t, const M& g) {
      M d = p;
      for (int i = 0; i < j; ++i) d(i, i) -= S(1);
      t.accum(logits, d * (g(0, 0) / static_cast<S>(j)));
    });
  }

  int sum_all(int a) {
    M v(1, 1);
    v(0, 0) = value(a).sum();
    return unary_binary(std::move(v), {a}, [a](Tape& t, const M& g) {
      t.accum(a, M::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
    });
  }

  int identity(int a) {
    M v = value(a);
    return unary_binary(std::move(v), {a}, [a](Tape& t, const M& g) { t.accum(a, g); });
  }

  void accum(int id, const M& g) { nodes_[id].grad += g; }

 private:
  struct Node {
    M value;
    M grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;
  };

  int push(M value, bool requires_grad, std::function<void(Tape&)> back) {
    Node n;
    n.grad = M::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Registers an op node; the backward rule is skipped entirely when no
  // input requires gradients (teacher/inference paths).
  template <class Fn>
  int unary_binary(M value, const std::vector<int>& inputs, Fn&& fn) {
    bool rg = false;
    for (int id : inputs) rg = rg || nodes_[id].requires_grad;
    if (!rg) return push(std::move(value), false, nullptr);
    int out = push(std::move(value), true, nullptr);
    if constexpr (std::is_invocable_v<Fn, Tape&, const M&>) {
      nodes_[out].back = [out, fn](Tape& t) { fn(t, t.nodes_[out].grad); };
    } else {
      nodes_[out].back = [out, fn](Tape& t) {
        fn(t, t.nodes_[out].grad, t.nodes_[out].value);
      };
    }
    return out;
  }

  void check_same_shape(int a, int b) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw std::invalid_argument("tensor op: shape mismatch");
  }
  void check_cols_rows(int a, int b) const {
    if (value(a).cols() != value(b).rows())
      throw std::invalid_argument("matmul: inner dimension mismatch");
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace dela::tensor
