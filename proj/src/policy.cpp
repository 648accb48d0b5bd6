#include "ppodice/policy.hpp"

#include <cmath>

namespace ppodice {

namespace {

std::vector<int> action_indices(const PolicyParams& policy, const Matrix& actions) {
  if (actions.cols() != 1) throw InputError("categorical actions must be a single column");
  std::vector<int> idx(actions.rows());
  for (Eigen::Index i = 0; i < actions.rows(); ++i) {
    const double a = actions(i, 0);
    if (!std::isfinite(a) || a != std::floor(a) || a < 0 || a >= policy.action.size) {
      throw InputError("categorical action outside the support");
    }
    idx[i] = static_cast<int>(a);
  }
  return idx;
}

Matrix plain_log_softmax(const Matrix& x) {
  const Eigen::VectorXd m = x.rowwise().maxCoeff();
  const Matrix shifted = x.colwise() - m;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  return shifted.colwise() - lse;
}

void check_states(const PolicyParams& policy, const Matrix& states) {
  if (!states.allFinite()) throw InputError("policy: non-finite state");
  if (states.cols() != policy.observation.raw_dim()) throw InputError("policy: state has wrong dimension");
}

}  // namespace

PolicyParams make_policy(const Space& observation, const Space& action, const std::vector<int>& hidden, Rng& rng,
                         double initial_log_std) {
  PolicyParams p;
  p.head = action.is_discrete() ? HeadKind::kCategorical : HeadKind::kDiagonalGaussian;
  p.observation = observation;
  p.action = action;
  std::vector<int> sizes{observation.encoded_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action.size);
  p.net = init_mlp(sizes, rng, 1.0, 0.01);
  if (p.head == HeadKind::kDiagonalGaussian) p.log_std = Matrix::Constant(1, action.size, initial_log_std);
  return p;
}

Matrix policy_output(const PolicyParams& policy, const Matrix& states) {
  check_states(policy, states);
  return forward(policy.net, encode(policy.observation, states));
}

Matrix action_probabilities(const PolicyParams& policy, const Matrix& states) {
  if (policy.head != HeadKind::kCategorical) throw CapabilityError("action_probabilities: categorical heads only");
  return plain_log_softmax(policy_output(policy, states)).array().exp();
}

Vector log_prob(const PolicyParams& policy, const Matrix& states, const Matrix& actions) {
  if (actions.rows() != states.rows()) throw InputError("log_prob: states and actions differ in count");
  if (!actions.allFinite()) throw InputError("log_prob: non-finite action");
  const Matrix out = policy_output(policy, states);
  if (policy.head == HeadKind::kCategorical) {
    const std::vector<int> idx = action_indices(policy, actions);
    const Matrix lp = plain_log_softmax(out);
    Vector r(states.rows());
    for (Eigen::Index i = 0; i < states.rows(); ++i) r(i) = lp(i, idx[i]);
    return r;
  }
  if (actions.cols() != policy.action_dim()) throw InputError("log_prob: action has wrong dimension");
  const Matrix ls = policy.clamped_log_std();
  const Eigen::ArrayXXd inv_std = (-ls.array()).exp().replicate(states.rows(), 1);
  const Eigen::ArrayXXd z = (actions - out).array() * inv_std;
  const double d = static_cast<double>(policy.action_dim());
  Vector r = -0.5 * z.square().rowwise().sum().matrix();
  r.array() -= ls.sum() + 0.5 * d * std::log(2.0 * M_PI);
  return r;
}

double mean_entropy(const PolicyParams& policy, const Matrix& states) {
  if (policy.head == HeadKind::kDiagonalGaussian) {
    return policy.clamped_log_std().sum() + 0.5 * policy.action_dim() * std::log(2.0 * M_PI * M_E);
  }
  if (states.rows() == 0) return 0.0;
  const Matrix lp = plain_log_softmax(policy_output(policy, states));
  const Matrix p = lp.array().exp();
  return -(p.array() * lp.array()).sum() / static_cast<double>(states.rows());
}

SampledActions sample(const PolicyParams& policy, const Matrix& states, Rng& rng) {
  SampledActions s;
  const Matrix out = policy_output(policy, states);
  const Eigen::Index n = states.rows();
  if (policy.head == HeadKind::kCategorical) {
    const Matrix lp = plain_log_softmax(out);
    const Matrix probs = lp.transpose().array().exp();  // one column per row of `states`
    s.actions.resize(n, 1);
    s.log_probs.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = sample_discrete(probs.col(i).data(), static_cast<int>(probs.rows()), rng);
      s.actions(i, 0) = a;
      s.log_probs(i) = lp(i, a);
    }
    return s;
  }
  const Matrix noise = sample_noise(policy, n, rng);
  const Matrix ls = policy.clamped_log_std();
  s.actions = out + (noise.array().rowwise() * ls.row(0).array().exp()).matrix();
  const double d = static_cast<double>(policy.action_dim());
  s.log_probs = -0.5 * noise.array().square().rowwise().sum().matrix();
  s.log_probs.array() -= ls.sum() + 0.5 * d * std::log(2.0 * M_PI);
  return s;
}

Matrix sample_noise(const PolicyParams& policy, Eigen::Index rows, Rng& rng) {
  Matrix noise(rows, policy.action_dim());
  // Row-major fill so a prefix of rows does not depend on the total count.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < noise.cols(); ++k) noise(i, k) = standard_normal(rng);
  }
  return noise;
}

Matrix reparam_sample(const PolicyParams& policy, const Matrix& states, const Matrix& noise) {
  if (policy.head != HeadKind::kDiagonalGaussian) {
    throw CapabilityError("reparam_sample: categorical heads are not reparametrizable; use the score-function path");
  }
  const Matrix ls = policy.clamped_log_std();
  return policy_output(policy, states) + (noise.array().rowwise() * ls.row(0).array().exp()).matrix();
}

TabularPolicy to_tabular(const PolicyParams& policy) {
  if (!policy.observation.is_discrete() || policy.head != HeadKind::kCategorical) {
    throw CapabilityError("to_tabular: needs discrete observations and a categorical head");
  }
  Matrix states(policy.observation.size, 1);
  for (int s = 0; s < policy.observation.size; ++s) states(s, 0) = s;
  TabularPolicy t{action_probabilities(policy, states)};
  // Renormalize to absorb rounding in exp/log.
  for (Eigen::Index s = 0; s < t.probs.rows(); ++s) t.probs.row(s) /= t.probs.row(s).sum();
  return t;
}

BoundPolicy bind(ad::Tape& tape, const PolicyParams& policy, bool trainable) {
  BoundPolicy b;
  b.params = &policy;
  b.net = bind(tape, policy.net, trainable);
  if (policy.head == HeadKind::kDiagonalGaussian) {
    b.raw_log_std = trainable ? tape.parameter(policy.log_std) : tape.constant(policy.log_std);
    b.log_std = ad::clip(b.raw_log_std, kLogStdMin, kLogStdMax);
  }
  return b;
}

namespace {

ad::Var bound_output(const BoundPolicy& policy, const Matrix& states) {
  check_states(*policy.params, states);
  ad::Tape& tape = *policy.net.weights.front().tape;
  return forward(policy.net, tape.constant(encode(policy.params->observation, states)));
}

}  // namespace

ad::Var log_prob(const BoundPolicy& policy, const Matrix& states, const Matrix& actions) {
  if (actions.rows() != states.rows()) throw InputError("log_prob: states and actions differ in count");
  const ad::Var out = bound_output(policy, states);
  if (policy.params->head == HeadKind::kCategorical) {
    return ad::pick(ad::log_softmax(out), action_indices(*policy.params, actions));
  }
  return ad::gaussian_log_density(out.tape->constant(actions), out, policy.log_std);
}

ad::Var log_prob(const BoundPolicy& policy, const Matrix& states, ad::Var actions) {
  if (policy.params->head != HeadKind::kDiagonalGaussian) {
    throw CapabilityError("log_prob with differentiable actions needs a Gaussian head");
  }
  return ad::gaussian_log_density(actions, bound_output(policy, states), policy.log_std);
}

ad::Var entropy(const BoundPolicy& policy, const Matrix& states) {
  ad::Tape& tape = *policy.net.weights.front().tape;
  if (policy.params->head == HeadKind::kCategorical) {
    const ad::Var lp = ad::log_softmax(bound_output(policy, states));
    return ad::neg(ad::row_sum(ad::mul(ad::exp(lp), lp)));
  }
  const double d = static_cast<double>(policy.params->action_dim());
  const ad::Var per_sample = ad::add_scalar(ad::sum(policy.log_std), 0.5 * d * std::log(2.0 * M_PI * M_E));
  return ad::matmul(tape.constant(Matrix::Ones(states.rows(), 1)), per_sample);
}

ad::Var reparam_sample(const BoundPolicy& policy, const Matrix& states, const Matrix& noise) {
  if (policy.params->head != HeadKind::kDiagonalGaussian) {
    throw CapabilityError("reparam_sample: categorical heads are not reparametrizable; use the score-function path");
  }
  const ad::Var mean = bound_output(policy, states);
  return ad::add(mean, ad::mul_row(mean.tape->constant(noise), ad::exp(policy.log_std)));
}

PolicyParams gradients(const ad::Tape& tape, const BoundPolicy& policy) {
  PolicyParams g = *policy.params;
  g.net = gradients(tape, policy.net);
  if (policy.params->head == HeadKind::kDiagonalGaussian) g.log_std = tape.grad(policy.raw_log_std);
  return g;
}

std::vector<Matrix*> tensors(PolicyParams& policy) {
  std::vector<Matrix*> out = tensors(policy.net);
  if (policy.head == HeadKind::kDiagonalGaussian) out.push_back(&policy.log_std);
  return out;
}

std::vector<const Matrix*> tensors(const PolicyParams& policy) {
  std::vector<const Matrix*> out = tensors(policy.net);
  if (policy.head == HeadKind::kDiagonalGaussian) out.push_back(&policy.log_std);
  return out;
}

}  // namespace ppodice
