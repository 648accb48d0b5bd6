#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation in creation order, so the record is already
// topologically sorted and backward() is a single reverse sweep. Rows of a
// matrix are batch samples by convention. Supported primitives are the ones
// declared below; anything else has to be expressed through them.
//
// Subgradient conventions:
//  * clip(x, lo, hi) passes the gradient through for lo <= x <= hi (boundary
//    included, i.e. the interior derivative) and blocks it outside.
//  * minimum(a, b) routes the gradient to `a` on ties.
//  * relu'(0) = 0.

#include "ppodice/common.hpp"

#include <functional>
#include <vector>

namespace ppodice::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var constant(Matrix value);
  Var constant(double value);
  /// Leaf whose gradient is tracked.
  Var parameter(Matrix value);

  /// Seeds d(root)/d(root) = 1 and propagates to every node. `root` must be 1x1.
  /// May be called once per tape.
  void backward(Var root);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient of the last backward root w.r.t. `v` (zeros if unreachable).
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;
  Var record(Matrix value, std::vector<Var> parents, BackwardFn backward);
  void accumulate(Var v, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Arithmetic. Shapes must match exactly unless stated.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var add_scalar(Var a, double c);
Var scale(Var a, double c);
Var neg(Var a);
Var add_row(Var a, Var row);           // row is [1, cols], broadcast over rows
Var mul_row(Var a, Var row);           // elementwise with broadcast row
Var mul_col(Var a, Var col);           // col is [rows, 1], broadcast over columns
Var matmul(Var a, Var b);
Var concat_cols(Var a, Var b);

// Elementwise nonlinearities.
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var minimum(Var a, Var b);
Var clip(Var a, double lo, double hi);

// Reductions (to 1x1 unless stated).
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);                    // [n, 1]
Var log_sum_exp(Var a);                // over all entries, max-subtracted
Var log_mean_exp(Var a);               // log_sum_exp(a) - log(size)

// Row-wise probability helpers.
Var log_softmax(Var logits);           // per row
Var pick(Var a, const std::vector<int>& cols);  // out(i) = a(i, cols[i]), [n, 1]

/// Diagonal Gaussian log-density per row, [n, 1]:
///   -0.5 sum_k ((x_k - m_k) / s_k)^2 - sum_k log s_k - 0.5 d log(2 pi)
/// with s = exp(log_std); log_std is a [1, d] row broadcast over samples.
Var gaussian_log_density(Var x, Var mean, Var log_std);

}  // namespace ppodice::ad
