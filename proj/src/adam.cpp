#include "ppodice/adam.hpp"

#include <cmath>

namespace ppodice {

namespace {

void check_shapes(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) throw InputError("optimizer: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols()) {
      throw InputError("optimizer: gradient shape mismatch");
    }
    if (!grads[i].allFinite()) throw NumericalError("optimizer: non-finite gradient");
  }
}

}  // namespace

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (Matrix& g : grads) g *= scale;
  }
  return norm;
}

void Sgd::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
  check_shapes(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr_ * grads[i];
}

Adam::Adam(AdamConfig config) : config_(config) {
  if (!(config_.learning_rate >= 0.0)) throw InputError("adam: learning rate must be nonnegative");
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads_in) {
  check_shapes(params, grads_in);
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (m_.size() != params.size()) {
    throw InputError("adam: parameter list changed between steps");
  }
  std::vector<Matrix> grads = grads_in;
  clip_global_norm(grads, config_.max_grad_norm);
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double step = config_.learning_rate * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
    params[i]->array() -= step * m_[i].array() / (v_[i].array().sqrt() + config_.epsilon);
  }
}

}  // namespace ppodice
