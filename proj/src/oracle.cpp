#include "ppodice/oracle.hpp"

#include <cmath>
#include <sstream>

namespace ppodice {

namespace {

constexpr double kSolveTarget = 1e-10;
constexpr double kSolveFailure = 1e-8;
constexpr double kBoundSlack = 1e-10;

void check_compatible(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions) {
    throw InputError("policy shape does not match the MDP");
  }
  if (static_cast<long>(mdp.n_states) * mdp.n_actions > kOracleMaxPairs) {
    std::ostringstream err;
    err << "oracle supports at most " << kOracleMaxPairs << " state-action pairs";
    throw InputError(err.str());
  }
}

// P_pi(s, s') = sum_a pi(a|s) P(s'|s,a)
Matrix policy_transition(const TabularMdp& mdp, const TabularPolicy& policy) {
  Matrix p = Matrix::Zero(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      p.row(s) += policy.probs(s, a) * mdp.transition.row(mdp.index(s, a));
    }
  }
  return p;
}

Vector policy_reward(const TabularMdp& mdp, const TabularPolicy& policy) {
  return mdp.reward.cwiseProduct(policy.probs).rowwise().sum();
}

// Solves x = b + gamma * op x by LU, then polishes with fixed-point sweeps
// if the residual is above target. `op` is applied as a dense matrix.
Vector solve_fixed_point(const Matrix& op, const Vector& b, double gamma, double* residual) {
  const Eigen::Index n = op.rows();
  const Matrix system = Matrix::Identity(n, n) - gamma * op;
  Vector x = system.partialPivLu().solve(b);
  auto res = [&](const Vector& v) { return (v - b - gamma * op * v).cwiseAbs().maxCoeff(); };
  double r = res(x);
  // Power-iteration fallback; contraction factor gamma.
  for (int it = 0; it < 10000 && r > kSolveTarget; ++it) {
    x = b + gamma * op * x;
    r = res(x);
  }
  *residual = r;
  return x;
}

}  // namespace

void TabularPolicy::validate() const {
  if (probs.rows() < 1 || probs.cols() < 1) throw InputError("policy: empty probability table");
  if (!probs.allFinite() || (probs.array() < 0.0).any()) throw InputError("policy: invalid probabilities");
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    if (std::abs(probs.row(s).sum() - 1.0) > 1e-12) throw InputError("policy: rows must sum to 1");
  }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  return {Matrix::Constant(n_states, n_actions, 1.0 / n_actions)};
}

TabularPolicy TabularPolicy::greedy(const Matrix& scores) {
  TabularPolicy p{Matrix::Zero(scores.rows(), scores.cols())};
  for (Eigen::Index s = 0; s < scores.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < scores.cols(); ++a) {
      if (scores(s, a) > scores(s, best)) best = a;
    }
    p.probs(s, best) = 1.0;
  }
  return p;
}

TabularPolicy TabularPolicy::random(int n_states, int n_actions, Rng& rng) {
  TabularPolicy p{Matrix(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double u = uniform01(rng);
      while (u <= 0.0) u = uniform01(rng);
      p.probs(s, a) = -std::log(u);
    }
    p.probs.row(s) /= p.probs.row(s).sum();
  }
  return p;
}

ValueFunctions exact_value(const TabularMdp& mdp, const TabularPolicy& policy) {
  check_compatible(mdp, policy);
  ValueFunctions out;
  out.value = solve_fixed_point(policy_transition(mdp, policy), policy_reward(mdp, policy), mdp.discount,
                                &out.residual);
  if (out.residual > kSolveFailure) {
    throw NumericalError("exact_value: Bellman residual above 1e-8");
  }
  out.qvalue.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      out.qvalue(s, a) = mdp.reward(s, a) + mdp.discount * mdp.transition.row(mdp.index(s, a)).dot(out.value);
    }
  }
  out.advantage = out.qvalue.colwise() - out.value;
  return out;
}

Matrix state_action_transition(const TabularMdp& mdp, const TabularPolicy& policy) {
  const int n = mdp.n_states * mdp.n_actions;
  Matrix m(n, n);
  for (int row = 0; row < n; ++row) {
    for (int s2 = 0; s2 < mdp.n_states; ++s2) {
      const double p = mdp.transition(row, s2);
      for (int a2 = 0; a2 < mdp.n_actions; ++a2) m(row, mdp.index(s2, a2)) = p * policy.probs(s2, a2);
    }
  }
  return m;
}

Visitation exact_visitation(const TabularMdp& mdp, const TabularPolicy& policy) {
  check_compatible(mdp, policy);
  const double g = mdp.discount;
  // State level: d = (1-g) rho + g P_pi^T d, then mu = d * pi.
  double state_residual = 0.0;
  Visitation out;
  out.state = solve_fixed_point(policy_transition(mdp, policy).transpose(), (1.0 - g) * mdp.initial_dist, g,
                                &state_residual);
  out.state_action = policy.probs.array().colwise() * out.state.array();

  // Residual of the state-action fixed point itself.
  double worst = 0.0;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    double inflow = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) inflow += mdp.prob(s, a, s2) * out.state_action(s, a);
    }
    for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
      const double rhs = policy.probs(s2, a2) * ((1.0 - g) * mdp.initial_dist(s2) + g * inflow);
      worst = std::max(worst, std::abs(out.state_action(s2, a2) - rhs));
    }
  }
  out.residual = std::max(worst, state_residual);
  if (out.residual > kSolveFailure) {
    throw NumericalError("exact_visitation: fixed-point residual above 1e-8");
  }
  return out;
}

double exact_performance(const TabularMdp& mdp, const TabularPolicy& policy) {
  return (1.0 - mdp.discount) * mdp.initial_dist.dot(exact_value(mdp, policy).value);
}

double exact_performance_dual(const TabularMdp& mdp, const TabularPolicy& policy) {
  return exact_visitation(mdp, policy).state_action.cwiseProduct(mdp.reward).sum();
}

ExactQuantities exact_quantities(const TabularMdp& mdp, const TabularPolicy& policy) {
  const ValueFunctions v = exact_value(mdp, policy);
  const Visitation d = exact_visitation(mdp, policy);
  ExactQuantities q;
  q.value = v.value;
  q.qvalue = v.qvalue;
  q.advantage = v.advantage;
  q.state_visitation = d.state;
  q.sa_visitation = d.state_action;
  q.performance = (1.0 - mdp.discount) * mdp.initial_dist.dot(v.value);
  return q;
}

double exact_phi_divergence(const Matrix& target, const Matrix& base, DivergenceKind kind,
                            PhiDivergenceOptions options) {
  if (target.size() != base.size()) throw InputError("exact_phi_divergence: size mismatch");
  const bool target_weighted = options.order == DivergenceOrder::kTargetWeighted;
  double total = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double t = target.data()[i];
    const double b = base.data()[i];
    if (t < 0.0 || b < 0.0) throw InputError("exact_phi_divergence: negative mass");
    const double weight = target_weighted ? t : b;
    const double other = target_weighted ? b : t;
    if (weight > 0.0) {
      total += weight * phi(kind, other / weight);
    } else if (other > 0.0) {
      // Perspective limit w * phi(o / w) -> o * phi(t)/t as w -> 0.
      const double slope = phi_recession_slope(kind);
      if (std::isinf(slope)) return kInfinity;
      total += other * slope;
    }
  }
  if (kind == DivergenceKind::kTotalVariation && options.halve_tv) total *= 0.5;
  return total;
}

double total_variation(const Matrix& p, const Matrix& q, bool halved) {
  if (p.size() != q.size()) throw InputError("total_variation: size mismatch");
  const double sum = (p.reshaped() - q.reshaped()).cwiseAbs().sum();
  return halved ? 0.5 * sum : sum;
}

PerformanceDifference performance_difference(const TabularMdp& mdp, const TabularPolicy& pi,
                                             const TabularPolicy& pi_new) {
  const ValueFunctions v = exact_value(mdp, pi);
  const Visitation d_new = exact_visitation(mdp, pi_new);
  PerformanceDifference out;
  out.lhs = exact_performance(mdp, pi_new) - (1.0 - mdp.discount) * mdp.initial_dist.dot(v.value);
  const Vector expected_adv = pi_new.probs.cwiseProduct(v.advantage).rowwise().sum();
  out.rhs = d_new.state.dot(expected_adv);
  return out;
}

double surrogate_objective(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_new) {
  const ValueFunctions v = exact_value(mdp, pi);
  const Visitation d = exact_visitation(mdp, pi);
  const Vector expected_adv = pi_new.probs.cwiseProduct(v.advantage).rowwise().sum();
  return (1.0 - mdp.discount) * mdp.initial_dist.dot(v.value) + d.state.dot(expected_adv);
}

double advantage_bound(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_new) {
  const ValueFunctions v = exact_value(mdp, pi);
  return pi_new.probs.cwiseProduct(v.advantage).rowwise().sum().cwiseAbs().maxCoeff();
}

LowerBoundReport lower_bound_check(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_new) {
  const double g = mdp.discount;
  const ValueFunctions v = exact_value(mdp, pi);
  const Visitation d_old = exact_visitation(mdp, pi);
  const Visitation d_new = exact_visitation(mdp, pi_new);
  const Vector expected_adv = pi_new.probs.cwiseProduct(v.advantage).rowwise().sum();

  LowerBoundReport r;
  r.j_old = (1.0 - g) * mdp.initial_dist.dot(v.value);
  r.j_new = exact_performance(mdp, pi_new);
  r.surrogate = r.j_old + d_old.state.dot(expected_adv);
  r.epsilon = expected_adv.cwiseAbs().maxCoeff();
  r.tv_state = total_variation(d_new.state, d_old.state);
  r.tv_state_action = total_variation(d_new.state_action, d_old.state_action);

  double expected_action_tv = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    expected_action_tv += d_old.state(s) * (pi_new.probs.row(s) - pi.probs.row(s)).cwiseAbs().sum();
  }
  r.action_tv_bound = 2.0 * g / (1.0 - g) * expected_action_tv;
  r.kl_state_action = exact_phi_divergence(d_new.state_action, d_old.state_action, DivergenceKind::kKL,
                                           {DivergenceOrder::kBaseWeighted, false});
  r.pinsker_tv = total_variation(d_new.state_action, d_old.state_action, true);

  r.performance_bound_holds = r.j_new >= r.surrogate - r.epsilon * r.tv_state - kBoundSlack;
  r.visitation_tv_holds = r.tv_state <= r.tv_state_action + kBoundSlack;
  r.action_bound_holds = r.tv_state <= r.action_tv_bound + kBoundSlack;
  r.pinsker_holds = r.pinsker_tv <= std::sqrt(0.5 * r.kl_state_action) + kBoundSlack;
  return r;
}

OptimalSolution policy_iteration(const TabularMdp& mdp, int max_iterations) {
  OptimalSolution sol;
  sol.policy = TabularPolicy::greedy(mdp.reward);
  for (sol.iterations = 1; sol.iterations <= max_iterations; ++sol.iterations) {
    const ValueFunctions v = exact_value(mdp, sol.policy);
    sol.value = v.value;
    // Switch only on strict improvement so the loop terminates.
    TabularPolicy next = sol.policy;
    bool changed = false;
    for (int s = 0; s < mdp.n_states; ++s) {
      Eigen::Index current = 0;
      sol.policy.probs.row(s).maxCoeff(&current);
      Eigen::Index best = current;
      for (int a = 0; a < mdp.n_actions; ++a) {
        if (v.qvalue(s, a) > v.qvalue(s, best) + 1e-12) best = a;
      }
      if (best != current) {
        next.probs.row(s).setZero();
        next.probs(s, best) = 1.0;
        changed = true;
      }
    }
    if (!changed) break;
    sol.policy = std::move(next);
  }
  sol.performance = (1.0 - mdp.discount) * mdp.initial_dist.dot(sol.value);
  return sol;
}

double expected_episode_return(const TabularMdp& mdp, const TabularPolicy& policy, int horizon) {
  check_compatible(mdp, policy);
  const Matrix p = policy_transition(mdp, policy);
  const Vector r = policy_reward(mdp, policy);
  RowVector dist = mdp.initial_dist.transpose();
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    total += dist.dot(r.transpose());
    dist = dist * p;
  }
  return total;
}

}  // namespace ppodice
