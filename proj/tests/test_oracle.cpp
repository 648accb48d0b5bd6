#include "ppodice/oracle.hpp"
#include "ppodice/witness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ppodice;

namespace {

TabularMdp single_state(double reward, double gamma, int actions = 1) {
  TabularMdp m;
  m.n_states = 1;
  m.n_actions = actions;
  m.transition = Matrix::Ones(actions, 1);
  m.reward = Matrix::Constant(1, actions, reward);
  m.initial_dist = Vector::Ones(1);
  m.discount = gamma;
  return m;
}

TabularPolicy table(int S, int A, std::initializer_list<double> values) {
  TabularPolicy p;
  p.probs.resize(S, A);
  auto it = values.begin();
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) p.probs(s, a) = *it++;
  }
  return p;
}

// Distribution of (s_t, a_t) propagated step by step.
Matrix truncated_visitation(const TabularMdp& mdp, const TabularPolicy& pi, int steps) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Vector d = mdp.initial_dist;
  Matrix mu = Matrix::Zero(S, A);
  double w = 1 - mdp.discount;
  for (int t = 0; t <= steps; ++t) {
    Vector next = Vector::Zero(S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double p = d(s) * pi.probs(s, a);
        mu(s, a) += w * p;
        for (int s2 = 0; s2 < S; ++s2) next(s2) += p * mdp.prob(s, a, s2);
      }
    }
    d = next;
    w *= mdp.discount;
  }
  return mu;
}

}  // namespace

TEST(TabularPolicy, Constructors) {
  const TabularPolicy u = TabularPolicy::uniform(3, 4);
  EXPECT_NO_THROW(u.validate());
  EXPECT_DOUBLE_EQ(u.probs(2, 3), 0.25);
  Matrix scores(2, 3);
  scores << 1, 3, 3, 0, -1, -2;
  const TabularPolicy g = TabularPolicy::greedy(scores);
  EXPECT_EQ(g.probs(0, 1), 1.0);  // first index on ties
  EXPECT_EQ(g.probs(1, 0), 1.0);
  Rng rng = make_rng(0);
  const TabularPolicy r = TabularPolicy::random(5, 3, rng);
  EXPECT_NO_THROW(r.validate());
  EXPECT_GE(r.probs.minCoeff(), 0.0);
  TabularPolicy bad = u;
  bad.probs(0, 0) = 0.5;
  EXPECT_THROW(bad.validate(), InputError);
}

TEST(ExactValue, GeometricSeries) {
  const ValueFunctions v = exact_value(single_state(1.0, 0.9), TabularPolicy::uniform(1, 1));
  EXPECT_NEAR(v.value(0), 10.0, 1e-12);
  EXPECT_NEAR(exact_performance(single_state(1.0, 0.9), TabularPolicy::uniform(1, 1)), 1.0, 1e-12);
}

TEST(ExactValue, MyopicCase) {
  const TabularMdp m = make_random_mdp(4, 3, 5, 0.0);
  Rng rng = make_rng(1);
  const TabularPolicy pi = TabularPolicy::random(4, 3, rng);
  const ValueFunctions v = exact_value(m, pi);
  EXPECT_LT((v.qvalue - m.reward).cwiseAbs().maxCoeff(), 1e-14);
  for (int s = 0; s < 4; ++s) EXPECT_NEAR(v.value(s), pi.probs.row(s).dot(m.reward.row(s)), 1e-14);
}

TEST(ExactValue, FlipPowerIteration) {
  Matrix r(2, 2);
  r << 1, 1, 0, 0;
  const TabularMdp m = make_flip_mdp(r, 0.5);
  const TabularPolicy pi = TabularPolicy::uniform(2, 2);
  Vector v = Vector::Zero(2);
  for (int t = 0; t < 200; ++t) {
    Vector next(2);
    for (int s = 0; s < 2; ++s) {
      next(s) = 0;
      for (int a = 0; a < 2; ++a) next(s) += 0.5 * (r(s, a) + 0.5 * (m.prob(s, a, 0) * v(0) + m.prob(s, a, 1) * v(1)));
    }
    v = next;
  }
  const ValueFunctions e = exact_value(m, pi);
  EXPECT_LT((e.value - v).cwiseAbs().maxCoeff(), 1e-10);
  // Frozen: V = (1.5, 0.5) for this instance.
  EXPECT_NEAR(e.value(0), 1.5, 1e-12);
  EXPECT_NEAR(e.value(1), 0.5, 1e-12);
}

TEST(ExactValue, AdvantageAveragesToZero) {
  Rng rng = make_rng(2);
  for (int k = 0; k < 10; ++k) {
    const TabularMdp m = make_random_mdp(5, 3, 100 + k, 0.95);
    const TabularPolicy pi = TabularPolicy::random(5, 3, rng);
    const ValueFunctions v = exact_value(m, pi);
    for (int s = 0; s < 5; ++s) EXPECT_NEAR(pi.probs.row(s).dot(v.advantage.row(s)), 0.0, 1e-9);
    EXPECT_LT(v.residual, 1e-10);
  }
}

TEST(ExactVisitation, MyopicCase) {
  const TabularMdp m = make_random_mdp(3, 2, 9, 0.0);
  Rng rng = make_rng(3);
  const TabularPolicy pi = TabularPolicy::random(3, 2, rng);
  const Visitation v = exact_visitation(m, pi);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(v.state_action(s, a), m.initial_dist(s) * pi.probs(s, a), 1e-15);
  }
}

TEST(ExactVisitation, SingleAbsorbingState) {
  for (double g : {0.0, 0.5, 0.99}) {
    const Visitation v = exact_visitation(single_state(0.0, g, 2), TabularPolicy::uniform(1, 2));
    EXPECT_NEAR(v.state(0), 1.0, 1e-14);
  }
}

TEST(ExactVisitation, MatchesTruncatedSeries) {
  const TabularMdp m = make_chain(3, 0.2, 0.9);
  const TabularPolicy pi = table(3, 2, {0.3, 0.7, 0.6, 0.4, 0.5, 0.5});
  const Visitation v = exact_visitation(m, pi);
  EXPECT_LT((v.state_action - truncated_visitation(m, pi, 500)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ExactVisitation, Invariants) {
  Rng rng = make_rng(4);
  for (int k = 0; k < 10; ++k) {
    const TabularMdp m = make_random_mdp(2 + k % 5, 2 + k % 3, 200 + k, 0.5 + 0.049 * k);
    const TabularPolicy pi = TabularPolicy::random(m.n_states, m.n_actions, rng);
    const Visitation v = exact_visitation(m, pi);
    EXPECT_GE(v.state_action.minCoeff(), 0.0);
    EXPECT_NEAR(v.state.sum(), 1.0, 1e-9);
    EXPECT_NEAR(v.state_action.sum(), 1.0, 1e-9);
    for (int s = 0; s < m.n_states; ++s) {
      for (int a = 0; a < m.n_actions; ++a) EXPECT_NEAR(v.state_action(s, a), v.state(s) * pi.probs(s, a), 1e-9);
    }
  }
}

TEST(ExactPerformance, ConstantReward) {
  TabularMdp m = make_random_mdp(4, 2, 3, 0.9);
  m.reward.setConstant(2.5);
  Rng rng = make_rng(5);
  EXPECT_NEAR(exact_performance(m, TabularPolicy::random(4, 2, rng)), 2.5, 1e-12);
}

TEST(ExactPerformance, PrimalEqualsDual) {
  const TabularMdp m = make_random_mdp(4, 2, 17, 0.9);
  Rng rng = make_rng(6);
  for (int k = 0; k < 5; ++k) {
    const TabularPolicy pi = TabularPolicy::random(4, 2, rng);
    EXPECT_NEAR(exact_performance(m, pi), exact_performance_dual(m, pi), 1e-9);
  }
}

TEST(PhiDivergence, IdenticalIsZero) {
  Matrix p(1, 3);
  p << 0.2, 0.3, 0.5;
  for (DivergenceKind k : {DivergenceKind::kKL, DivergenceKind::kChiSquared, DivergenceKind::kTotalVariation}) {
    EXPECT_NEAR(exact_phi_divergence(p, p, k), 0.0, 1e-15);
  }
}

TEST(PhiDivergence, HandComputedValues) {
  Matrix a(1, 2), b(1, 2);
  a << 1.0, 0.0;
  b << 0.5, 0.5;
  EXPECT_NEAR(exact_phi_divergence(a, b, DivergenceKind::kTotalVariation), 1.0, 1e-15);
  EXPECT_NEAR(exact_phi_divergence(a, b, DivergenceKind::kTotalVariation, {DivergenceOrder::kTargetWeighted, true}),
              0.5, 1e-15);
  EXPECT_NEAR(total_variation(a, b), 1.0, 1e-15);
  EXPECT_NEAR(total_variation(a, b, true), 0.5, 1e-15);

  // chi^2 with target (0.5, 0.5), base (0.25, 0.75):
  // sum target * (base/target - 1)^2 = 0.5 * 0.25 + 0.5 * 0.25 = 0.25.
  Matrix t(1, 2), q(1, 2);
  t << 0.5, 0.5;
  q << 0.25, 0.75;
  EXPECT_NEAR(exact_phi_divergence(t, q, DivergenceKind::kChiSquared), 0.25, 1e-15);
  // Base-weighted: 0.25 * (2 - 1)^2 + 0.75 * (2/3 - 1)^2 = 1/3.
  EXPECT_NEAR(exact_phi_divergence(t, q, DivergenceKind::kChiSquared, {DivergenceOrder::kBaseWeighted}), 1.0 / 3,
              1e-15);
  // Base-weighted KL is the conventional KL(t || q).
  EXPECT_NEAR(exact_phi_divergence(t, q, DivergenceKind::kKL, {DivergenceOrder::kBaseWeighted}),
              0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3), 1e-15);
}

TEST(PhiDivergence, SupportMismatch) {
  Matrix a(1, 2), b(1, 2);
  a << 1.0, 0.0;
  b << 0.5, 0.5;
  EXPECT_TRUE(std::isinf(exact_phi_divergence(b, a, DivergenceKind::kKL, {DivergenceOrder::kBaseWeighted})));
  EXPECT_NEAR(exact_phi_divergence(b, a, DivergenceKind::kTotalVariation, {DivergenceOrder::kBaseWeighted}), 1.0,
              1e-15);
  EXPECT_THROW(exact_phi_divergence(a, Matrix::Ones(1, 3) / 3, DivergenceKind::kKL), InputError);
}

TEST(PerformanceDifference, SamePolicyIsZero) {
  const TabularMdp m = make_random_mdp(4, 2, 1, 0.9);
  Rng rng = make_rng(7);
  const TabularPolicy pi = TabularPolicy::random(4, 2, rng);
  const PerformanceDifference pd = performance_difference(m, pi, pi);
  EXPECT_NEAR(pd.lhs, 0.0, 1e-15);
  EXPECT_NEAR(pd.rhs, 0.0, 1e-12);
}

TEST(PerformanceDifference, SingleStateByHand) {
  // Rewards (1, 3), pi uniform (J = 2), pi' = (0.25, 0.75) (J' = 2.5).
  TabularMdp m = single_state(0.0, 0.8, 2);
  m.reward << 1, 3;
  const TabularPolicy pi = table(1, 2, {0.5, 0.5}), pn = table(1, 2, {0.25, 0.75});
  const PerformanceDifference pd = performance_difference(m, pi, pn);
  EXPECT_NEAR(pd.lhs, 0.5, 1e-12);
  EXPECT_NEAR(pd.rhs, 0.5, 1e-12);
}

TEST(PerformanceDifference, RandomInstances) {
  Rng rng = make_rng(8);
  for (int k = 0; k < 20; ++k) {
    const TabularMdp m = make_random_mdp(5, 3, 300 + k, 0.9);
    const PerformanceDifference pd =
        performance_difference(m, TabularPolicy::random(5, 3, rng), TabularPolicy::random(5, 3, rng));
    EXPECT_NEAR(pd.lhs, pd.rhs, 1e-8);
  }
}

TEST(LowerBound, SamePolicyIsTight) {
  const TabularMdp m = make_random_mdp(4, 2, 2, 0.9);
  Rng rng = make_rng(9);
  const TabularPolicy pi = TabularPolicy::random(4, 2, rng);
  const LowerBoundReport r = lower_bound_check(m, pi, pi);
  EXPECT_NEAR(r.surrogate, r.j_old, 1e-12);
  EXPECT_NEAR(r.tv_state, 0.0, 1e-15);
  EXPECT_NEAR(r.tv_state_action, 0.0, 1e-15);
  EXPECT_NEAR(r.action_tv_bound, 0.0, 1e-15);
  EXPECT_NEAR(surrogate_objective(m, pi, pi), r.j_new, 1e-12);
  EXPECT_TRUE(r.bound_holds());
}

TEST(LowerBound, RandomPairs) {
  const TabularMdp m = make_random_mdp(4, 2, 3, 0.9);
  Rng rng = make_rng(10);
  for (int k = 0; k < 100; ++k) {
    const LowerBoundReport r =
        lower_bound_check(m, TabularPolicy::random(4, 2, rng), TabularPolicy::random(4, 2, rng));
    EXPECT_TRUE(r.bound_holds()) << k;
    EXPECT_LE(r.tv_state, r.tv_state_action + 1e-12);
    EXPECT_GE(r.epsilon, 0.0);
  }
}

TEST(LowerBound, GreedyImprovementOnChain) {
  const TabularMdp m = make_chain(5, 0.1, 0.9);
  const TabularPolicy pi = TabularPolicy::uniform(5, 2);
  const TabularPolicy greedy = TabularPolicy::greedy(exact_value(m, pi).advantage);
  const LowerBoundReport r = lower_bound_check(m, pi, greedy);
  EXPECT_TRUE(r.performance_bound_holds);
  EXPECT_TRUE(r.visitation_tv_holds);
  EXPECT_TRUE(r.action_bound_holds);
  EXPECT_TRUE(r.pinsker_holds);
  EXPECT_GT(r.j_new, r.j_old);
  EXPECT_NEAR(advantage_bound(m, pi, greedy), r.epsilon, 1e-15);
}

TEST(PolicyIteration, ChainOptimumGoesRight) {
  const TabularMdp m = make_chain(5, 0.1, 0.9);
  const OptimalSolution opt = policy_iteration(m);
  for (int s = 0; s < 4; ++s) EXPECT_EQ(opt.policy.probs(s, 1), 1.0);
  Rng rng = make_rng(11);
  for (int k = 0; k < 20; ++k) {
    EXPECT_LE(exact_performance(m, TabularPolicy::random(5, 2, rng)), opt.performance + 1e-12);
  }
}

TEST(EpisodeReturn, DeterministicChain) {
  // No slip: the right-moving policy earns 1 after 4 steps, nothing after.
  const TabularMdp m = make_chain(5, 0.0, 0.9);
  const TabularPolicy right = table(5, 2, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  EXPECT_NEAR(expected_episode_return(m, right, 100), 1.0, 1e-14);
  EXPECT_NEAR(expected_episode_return(m, right, 3), 0.0, 1e-14);
}

TEST(StateActionTransition, RowsAreStochastic) {
  const TabularMdp m = make_random_mdp(3, 2, 4, 0.9);
  Rng rng = make_rng(12);
  const Matrix P = state_action_transition(m, TabularPolicy::random(3, 2, rng));
  EXPECT_EQ(P.rows(), 6);
  EXPECT_LT((P.rowwise().sum() - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExactWitness, RecoversDivergence) {
  Rng rng = make_rng(13);
  for (int k = 0; k < 5; ++k) {
    const TabularMdp m = make_random_mdp(4, 3, 50 + k, 0.9);
    const TabularPolicy base = TabularPolicy::random(4, 3, rng), target = TabularPolicy::random(4, 3, rng);
    const ExactDiceProblem p = make_exact_dice_problem(m, base, target);
    const Matrix mu = exact_visitation(m, base).state_action;
    for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice(), DivergenceSpec::kl_dv()}) {
      const WitnessFit fit = fit_exact_witness(p, spec, 200, 1e-8);
      EXPECT_TRUE(fit.converged) << to_string(spec.representation) << " " << fit.gradient_norm;
      EXPECT_NEAR(fit.estimate, exact_phi_divergence(p.target, mu, spec.kind, {DivergenceOrder::kBaseWeighted}),
                  1e-6);
      EXPECT_NEAR(exact_dice_objective(p, fit.g, spec), fit.objective, 1e-12);
    }
  }
}

TEST(ExactWitness, ZeroWitnessValue) {
  const TabularMdp m = make_random_mdp(3, 2, 1, 0.9);
  const TabularPolicy pi = TabularPolicy::uniform(3, 2);
  const ExactDiceProblem p = make_exact_dice_problem(m, pi, pi);
  EXPECT_NEAR(exact_dice_objective(p, Matrix::Zero(3, 2), DivergenceSpec::kl_dice()), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(exact_dice_objective(p, Matrix::Zero(3, 2), DivergenceSpec::kl_dv()), 0.0, 1e-15);
  EXPECT_NEAR(fit_exact_witness(p, DivergenceSpec::kl_dice()).estimate, 0.0, 1e-10);
}
