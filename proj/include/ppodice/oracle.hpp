#pragma once

// Exact dynamic-programming quantities on small finite MDPs. Everything here
// is computed by dense linear algebra and serves as ground truth for the
// sampled estimators elsewhere in the library.
//
// Conventions:
//  * d and mu are normalized distributions (they carry the (1 - gamma) factor).
//  * J(pi) = (1 - gamma) rho^T V^pi = sum_{s,a} mu(s,a) r(s,a).
//  * D_TV is the un-halved sum |p - q| unless explicitly halved.

#include "ppodice/common.hpp"
#include "ppodice/divergence.hpp"
#include "ppodice/tabular_mdp.hpp"

namespace ppodice {

/// Stochastic matrix pi(a|s), shape [S, A].
struct TabularPolicy {
  Matrix probs;

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }

  /// Rows nonnegative and summing to 1 within 1e-12.
  void validate() const;

  static TabularPolicy uniform(int n_states, int n_actions);
  /// Deterministic policy choosing argmax_a scores(s, a) (first index on ties).
  static TabularPolicy greedy(const Matrix& scores);
  /// Rows drawn from Dirichlet(1).
  static TabularPolicy random(int n_states, int n_actions, Rng& rng);
};

struct ValueFunctions {
  Vector value;       // V^pi  [S]
  Matrix qvalue;      // Q^pi  [S, A]
  Matrix advantage;   // A^pi  [S, A]
  double residual = 0.0;  // max |V - r_pi - gamma P_pi V|
};

struct Visitation {
  Vector state;         // d^pi  [S]
  Matrix state_action;  // mu^pi [S, A]
  double residual = 0.0;  // max residual of the visitation fixed point
};

struct ExactQuantities {
  Vector value;
  Matrix qvalue;
  Matrix advantage;
  Vector state_visitation;
  Matrix sa_visitation;
  double performance = 0.0;
};

/// Largest instance the oracle accepts (S * A).
inline constexpr int kOracleMaxPairs = 4096;

/// V, Q, A of `policy`. Throws NumericalError if the Bellman residual of the
/// solution exceeds 1e-8.
ValueFunctions exact_value(const TabularMdp& mdp, const TabularPolicy& policy);

/// Discounted visitation distributions d and mu, from the fixed point
///   mu(s',a') = (1-g) rho(s') pi(a'|s') + g pi(a'|s') sum_{s,a} P(s'|s,a) mu(s,a).
/// Throws NumericalError if the residual exceeds 1e-8.
Visitation exact_visitation(const TabularMdp& mdp, const TabularPolicy& policy);

/// J(pi) = (1 - gamma) rho^T V^pi.
double exact_performance(const TabularMdp& mdp, const TabularPolicy& policy);

/// J(pi) through the dual form sum mu(s,a) r(s,a).
double exact_performance_dual(const TabularMdp& mdp, const TabularPolicy& policy);

ExactQuantities exact_quantities(const TabularMdp& mdp, const TabularPolicy& policy);

/// Which ratio the generator is applied to.
///  kTargetWeighted:  sum target * phi(base / target). This is the literal
///                    argument order of the definition used for the policy
///                    update (expectation under the *new* policy's mu). Note
///                    that it is the reverse of the common convention.
///  kBaseWeighted:    sum base * phi(target / base). This is the quantity the
///                    variational and Donsker-Varadhan representations
///                    estimate from base-distribution samples; for KL it is
///                    the conventional sum target * log(target / base).
enum class DivergenceOrder { kTargetWeighted, kBaseWeighted };

struct PhiDivergenceOptions {
  DivergenceOrder order = DivergenceOrder::kTargetWeighted;
  bool halve_tv = false;
};

/// Exact phi-divergence between two distributions of equal size (any shape,
/// entries read in storage order). Zero-denominator terms use the perspective
/// limit: numerator * lim phi(t)/t, i.e. +inf for KL and chi^2 (support
/// mismatch) and numerator for TV.
double exact_phi_divergence(const Matrix& target, const Matrix& base, DivergenceKind kind,
                            PhiDivergenceOptions options = {});

/// sum |p - q| (or half of it).
double total_variation(const Matrix& p, const Matrix& q, bool halved = false);

/// Performance difference: lhs = J(pi') - J(pi),
/// rhs = sum_s d^{pi'}(s) sum_a pi'(a|s) A^pi(s, a).
struct PerformanceDifference {
  double lhs = 0.0;
  double rhs = 0.0;
};
PerformanceDifference performance_difference(const TabularMdp& mdp, const TabularPolicy& pi,
                                             const TabularPolicy& pi_new);

/// Surrogate L_pi(pi') = J(pi) + E_{s~d^pi} E_{a~pi'} A^pi(s, a).
double surrogate_objective(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_new);

/// eps^pi = max_s |E_{a~pi'(.|s)} A^pi(s, a)| (expectation under the new policy).
double advantage_bound(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_new);

struct LowerBoundReport {
  double j_old = 0.0;
  double j_new = 0.0;
  double surrogate = 0.0;          // L_pi(pi')
  double epsilon = 0.0;            // eps^pi
  double tv_state = 0.0;           // D_TV(d^pi' || d^pi), un-halved
  double tv_state_action = 0.0;    // D_TV(mu^pi' || mu^pi), un-halved
  double action_tv_bound = 0.0;    // 2 gamma / (1 - gamma) E_{s~d^pi} D_TV(pi'(.|s) || pi(.|s))
  double kl_state_action = 0.0;    // KL(mu^pi' || mu^pi), conventional order
  double pinsker_tv = 0.0;         // halved TV between the mu's
  bool performance_bound_holds = false;  // J' >= L - eps * tv_state
  bool visitation_tv_holds = false;      // tv_state <= tv_state_action
  bool action_bound_holds = false;       // tv_state <= action_tv_bound
  bool pinsker_holds = false;            // pinsker_tv <= sqrt(KL / 2)

  bool bound_holds() const {
    return performance_bound_holds && visitation_tv_holds && action_bound_holds && pinsker_holds;
  }
};

/// Evaluates the chain of inequalities relating J(pi') to the surrogate. A
/// slack of 1e-10 absorbs rounding.
LowerBoundReport lower_bound_check(const TabularMdp& mdp, const TabularPolicy& pi, const TabularPolicy& pi_new);

/// Optimal deterministic policy and its value by exact policy iteration.
struct OptimalSolution {
  TabularPolicy policy;
  Vector value;
  double performance = 0.0;
  int iterations = 0;
};
OptimalSolution policy_iteration(const TabularMdp& mdp, int max_iterations = 1000);

/// Expected undiscounted return of an episode cut after `horizon` steps,
/// starting from rho. Terminal states are absorbing with zero reward, so
/// episodes that end early contribute nothing afterwards.
double expected_episode_return(const TabularMdp& mdp, const TabularPolicy& policy, int horizon);

/// Transition matrix between state-action pairs under `policy`:
/// row (s,a), column (s',a') holds P(s'|s,a) pi(a'|s').
Matrix state_action_transition(const TabularMdp& mdp, const TabularPolicy& policy);

}  // namespace ppodice
