#include "ppodice/verify.hpp"

#include "ppodice/environment.hpp"
#include "ppodice/oracle.hpp"
#include "ppodice/witness.hpp"

#include <cmath>
#include <sstream>

namespace ppodice {

namespace {

std::string sci(double d) {
  std::ostringstream o;
  o.precision(3);
  o << std::scientific << d;
  return o.str();
}

double fixed_point_residual(const TabularMdp& mdp, const TabularPolicy& pi) {
  const Visitation v = exact_visitation(mdp, pi);
  const Matrix P = state_action_transition(mdp, pi);
  const int A = mdp.n_actions;
  double worst = 0.0;
  Vector mu(mdp.n_states * A);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < A; ++a) mu(s * A + a) = v.state_action(s, a);
  }
  const Vector flow = P.transpose() * mu;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < A; ++a) {
      const double rhs = (1.0 - mdp.discount) * mdp.initial_dist(s) * pi.probs(s, a) + mdp.discount * flow(s * A + a);
      worst = std::max(worst, std::abs(mu(s * A + a) - rhs));
    }
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> run_verification(unsigned long long seed) {
  std::vector<CheckResult> out;
  Rng rng = make_rng(seed);

  {
    double worst = 0.0;
    for (const char* name : {"chain", "gridworld", "random_mdp"}) {
      const auto env = make_env(name);
      const TabularMdp& mdp = *env->tabular();
      for (int k = 0; k < 3; ++k) {
        worst = std::max(worst, fixed_point_residual(mdp, TabularPolicy::random(mdp.n_states, mdp.n_actions, rng)));
      }
    }
    out.push_back({"visitation fixed point residual < 1e-10", worst < 1e-10, "max residual " + sci(worst)});
  }

  double pdl_worst = 0.0;
  int bound_failures = 0;
  for (int k = 0; k < 100; ++k) {
    const int S = 2 + k % 5, A = 2 + k % 2;
    const TabularMdp mdp = make_random_mdp(S, A, seed * 1000 + k, 0.9);
    const TabularPolicy pi = TabularPolicy::random(S, A, rng);
    const TabularPolicy pn = TabularPolicy::random(S, A, rng);
    const PerformanceDifference pd = performance_difference(mdp, pi, pn);
    pdl_worst = std::max(pdl_worst, std::abs(pd.lhs - pd.rhs));
    if (!lower_bound_check(mdp, pi, pn).bound_holds()) ++bound_failures;
  }
  out.push_back({"performance difference identity (100 triples)", pdl_worst < 1e-8, "max gap " + sci(pdl_worst)});
  out.push_back({"lower-bound inequality chain (100 triples)", bound_failures == 0,
                 std::to_string(bound_failures) + " failures"});

  {
    double worst = 0.0;
    for (DivergenceKind kind : {DivergenceKind::kKL, DivergenceKind::kChiSquared}) {
      for (double t = -2.0; t <= 3.0; t += 0.25) {
        double best = -kInfinity;
        for (double u = 1e-4; u <= 20.0; u += 1e-4) best = std::max(best, t * u - phi(kind, u));
        worst = std::max(worst, std::abs(best - conjugate(kind, t)));
      }
    }
    out.push_back({"conjugates match grid maximization", worst < 1e-4, "max error " + sci(worst)});
  }

  {
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const TabularMdp mdp = make_random_mdp(4, 2, seed * 7 + k, 0.9);
      const TabularPolicy pi = TabularPolicy::random(4, 2, rng);
      const TabularPolicy pn = TabularPolicy::random(4, 2, rng);
      const ExactDiceProblem p = make_exact_dice_problem(mdp, pi, pn);
      const Matrix mu = exact_visitation(mdp, pi).state_action;
      for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice()}) {
        const double truth = exact_phi_divergence(p.target, mu, spec.kind, {DivergenceOrder::kBaseWeighted, false});
        worst = std::max(worst, std::abs(fit_exact_witness(p, spec).estimate - truth));
      }
    }
    out.push_back({"exact witness recovers KL and chi^2", worst < 1e-6, "max error " + sci(worst)});
  }
  return out;
}

}  // namespace ppodice
