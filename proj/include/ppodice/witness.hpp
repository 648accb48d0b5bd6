#pragma once

// The divergence objectives of dice_losses.hpp evaluated on exact
// expectations over a finite MDP, and their minimization over a tabular
// witness g in R^{S*A}. With B = I - gamma P^{pi'} over state-action pairs and
// c = (1 - gamma) rho pi':
//   variational:  L(g) = sum mu phi*((B g)) - c^T g
//   DV:           L(g) = log sum mu exp(B g) - c^T g
// where mu is the base (behavior) visitation. -min_g L equals
// sum mu phi(mu' / mu).

#include "ppodice/divergence.hpp"
#include "ppodice/oracle.hpp"
#include "ppodice/tabular_mdp.hpp"

namespace ppodice {

struct ExactDiceProblem {
  Vector base;        // mu(s,a) flattened, index s*A + a
  Matrix bellman;     // B = I - gamma P^{pi'}, [SA, SA]
  Vector initial;     // c
  Matrix target;      // mu^{pi'} [S, A], for reference
  double gamma = 0.0;
  int n_states = 0;
  int n_actions = 0;
};

/// Problem for estimating D(mu^{target} || mu^{base}) from base samples.
ExactDiceProblem make_exact_dice_problem(const TabularMdp& mdp, const TabularPolicy& base,
                                         const TabularPolicy& target);

/// Same with an arbitrary sampling distribution for the (s, a) term.
ExactDiceProblem make_exact_dice_problem(const TabularMdp& mdp, const Matrix& base_sa, const TabularPolicy& target);

/// L(g) for g given as an [S, A] table.
double exact_dice_objective(const ExactDiceProblem& problem, const Matrix& g, const DivergenceSpec& spec);

struct WitnessFit {
  Matrix g;  // [S, A]
  double objective = 0.0;
  double estimate = 0.0;  // -objective
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton with backtracking line search, started from g = 0. Stops
/// when the gradient infinity-norm falls below `tolerance`. KL and chi^2 only.
WitnessFit fit_exact_witness(const ExactDiceProblem& problem, const DivergenceSpec& spec, int max_iterations = 200,
                             double tolerance = 1e-11);

}  // namespace ppodice
