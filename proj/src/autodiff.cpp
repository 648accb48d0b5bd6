#include "ppodice/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace ppodice::ad {

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw InputError("autodiff: operands live on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream err;
    err << "autodiff " << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
        << b.cols();
    throw InputError(err.str());
  }
}

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

const Matrix& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw InputError("autodiff: scalar() on a non-scalar node");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), Matrix(), false, false, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(double value) { return constant(scalar_matrix(value)); }

Var Tape::parameter(Matrix value) {
  nodes_.push_back({std::move(value), Matrix(), true, false, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape != this) throw InputError("autodiff: operand from another tape");
    needs = needs || nodes_[p.id].requires_grad;
  }
  nodes_.push_back({std::move(value), Matrix(), needs, false, needs ? std::move(backward) : nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.tape != this) throw InputError("autodiff: backward root from another tape");
  if (value(root).size() != 1) throw InputError("autodiff: backward root must be scalar");
  if (backward_done_) throw InputError("autodiff: backward already called on this tape");
  backward_done_ = true;
  accumulate(root, scalar_matrix(1.0));
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Copy: the callback may grow nothing but can touch other nodes' grads.
    const Matrix upstream = n.grad;
    n.backward(*this, upstream);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  return a.tape->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(b.value()));
    t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var add_scalar(Var a, double c) {
  return a.tape->record(a.value().array() + c, {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var scale(Var a, double c) {
  return a.tape->record(c * a.value(), {a}, [a, c](Tape& t, const Matrix& g) { t.accumulate(a, c * g); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw InputError("autodiff add_row: row must be [1, cols]");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(row, g.colwise().sum());
  });
}

Var mul_row(Var a, Var row) {
  require_same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw InputError("autodiff mul_row: row must be [1, cols]");
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return a.tape->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array().rowwise() * row.value().row(0).array()).matrix());
    t.accumulate(row, g.cwiseProduct(a.value()).colwise().sum());
  });
}

Var mul_col(Var a, Var col) {
  require_same_tape(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) throw InputError("autodiff mul_col: col must be [rows, 1]");
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return a.tape->record(std::move(out), {a, col}, [a, col](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array().colwise() * col.value().col(0).array()).matrix());
    t.accumulate(col, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    std::ostringstream err;
    err << "autodiff matmul: inner dimensions " << a.cols() << " and " << b.rows() << " differ";
    throw InputError(err.str());
  }
  return a.tape->record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows()) throw InputError("autodiff concat_cols: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Eigen::Index split = a.cols();
  return a.tape->record(std::move(out), {a, b}, [a, b, split](Tape& t, const Matrix& g) {
    t.accumulate(a, g.leftCols(split));
    t.accumulate(b, g.rightCols(g.cols() - split));
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh();
  return a.tape->record(out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() * (1.0 - out.array().square())).matrix());
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape->record(out, {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() * (a.value().array() > 0.0).cast<double>()).matrix());
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp();
  return a.tape->record(out, {a}, [a, out](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(out)); });
}

Var log(Var a) {
  Matrix out = a.value().array().log();
  return a.tape->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() / a.value().array()).matrix());
  });
}

Var square(Var a) {
  return a.tape->record(a.value().array().square(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, 2.0 * g.cwiseProduct(a.value()));
  });
}

Var minimum(Var a, Var b) {
  require_same_shape(a, b, "minimum");
  // Mask is 1 where `a` is selected (ties included).
  Matrix mask = (a.value().array() <= b.value().array()).cast<double>();
  Matrix out = a.value().cwiseMin(b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b, mask](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(mask));
    t.accumulate(b, (g.array() * (1.0 - mask.array())).matrix());
  });
}

Var clip(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw InputError("autodiff clip: lo must not exceed hi");
  Matrix pass = ((a.value().array() >= lo) && (a.value().array() <= hi)).cast<double>();
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape->record(std::move(out), {a}, [a, pass](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(pass));
  });
}

Var sum(Var a) {
  return a.tape->record(scalar_matrix(a.value().sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw InputError("autodiff mean: empty input");
  return a.tape->record(scalar_matrix(a.value().sum() / n), {a}, [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

Var row_sum(Var a) {
  return a.tape->record(a.value().rowwise().sum(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.col(0).replicate(1, a.cols()));
  });
}

Var log_sum_exp(Var a) {
  if (a.value().size() == 0) throw InputError("autodiff log_sum_exp: empty input");
  const double m = a.value().maxCoeff();
  const Matrix shifted = (a.value().array() - m).exp();
  const double z = shifted.sum();
  Matrix weights = shifted / z;
  return a.tape->record(scalar_matrix(m + std::log(z)), {a}, [a, weights](Tape& t, const Matrix& g) {
    t.accumulate(a, g(0, 0) * weights);
  });
}

Var log_mean_exp(Var a) {
  return add_scalar(log_sum_exp(a), -std::log(static_cast<double>(a.value().size())));
}

Var log_softmax(Var logits) {
  const Matrix& x = logits.value();
  const Eigen::VectorXd m = x.rowwise().maxCoeff();
  const Matrix shifted = x.colwise() - m;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  Matrix out = shifted.colwise() - lse;
  Matrix probs = out.array().exp();
  return logits.tape->record(std::move(out), {logits}, [logits, probs](Tape& t, const Matrix& g) {
    const Eigen::VectorXd gsum = g.rowwise().sum();
    t.accumulate(logits, g - (probs.array().colwise() * gsum.array()).matrix());
  });
}

Var pick(Var a, const std::vector<int>& cols) {
  if (static_cast<Eigen::Index>(cols.size()) != a.rows()) throw InputError("autodiff pick: one index per row");
  Matrix out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (cols[i] < 0 || cols[i] >= a.cols()) throw InputError("autodiff pick: column index out of range");
    out(i, 0) = a.value()(i, cols[i]);
  }
  return a.tape->record(std::move(out), {a}, [a, cols](Tape& t, const Matrix& g) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) ga(i, cols[i]) = g(i, 0);
    t.accumulate(a, ga);
  });
}

Var gaussian_log_density(Var x, Var mean, Var log_std) {
  require_same_shape(x, mean, "gaussian_log_density");
  require_same_tape(x, log_std);
  if (log_std.rows() != 1 || log_std.cols() != x.cols()) {
    throw InputError("autodiff gaussian_log_density: log_std must be [1, d]");
  }
  const Eigen::ArrayXXd inv_std = (-log_std.value().array()).exp().replicate(x.rows(), 1);
  const Eigen::ArrayXXd z = (x.value() - mean.value()).array() * inv_std;
  const double d = static_cast<double>(x.cols());
  Matrix out = (-0.5 * z.square().rowwise().sum()).matrix();
  out.array() -= log_std.value().sum() + 0.5 * d * std::log(2.0 * M_PI);
  return x.tape->record(std::move(out), {x, mean, log_std},
                        [x, mean, log_std, z, inv_std](Tape& t, const Matrix& g) {
                          // d/dx = -z / s, d/dmean = z / s, d/dlog_std = z^2 - 1
                          const Eigen::ArrayXXd gcol = g.col(0).array().replicate(1, z.cols());
                          const Matrix dx = (-gcol * z * inv_std).matrix();
                          t.accumulate(x, dx);
                          t.accumulate(mean, -dx);
                          t.accumulate(log_std, (gcol * (z.square() - 1.0)).colwise().sum().matrix());
                        });
}

}  // namespace ppodice::ad
