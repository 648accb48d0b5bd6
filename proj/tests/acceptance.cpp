// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Every criterion also has a wall-clock
// budget, checked together with its tolerance.
//
// Usage: acceptance [config_dir] [criterion numbers...]

#include "test_support.hpp"

#include "ppodice/config.hpp"
#include "ppodice/dice_regularizer.hpp"
#include "ppodice/grad_check.hpp"
#include "ppodice/oracle.hpp"
#include "ppodice/policy_opt.hpp"
#include "ppodice/rollout.hpp"
#include "ppodice/trainer.hpp"
#include "ppodice/witness.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef PPODICE_CONFIG_DIR
#define PPODICE_CONFIG_DIR "configs"
#endif

using namespace ppodice;

namespace {

// Tolerances.
constexpr double kFixedPointTol = 1e-10;
constexpr double kPdlTol = 1e-8;
constexpr double kExactWitnessTol = 1e-3;
constexpr double kSampledWitnessTol = 0.05;
constexpr double kZeroDivergenceTol = 0.02;
constexpr double kGradCheckTol = 1e-3;
constexpr double kScoreZ = 2.0;
constexpr double kOptimalFraction = 0.95;
constexpr int kSeedsRequired = 8;
constexpr double kDirectionalAlpha = 0.1;
constexpr double kCrashDrop = 0.5;
constexpr double kTabularLearningBudget = 300;  // seconds, chain and gridworld together

// point_mass threshold, computed once from PPO with configs/point_mass.cfg
// (algo = ppo), seeds 0-9, 20 evaluation episodes per seed:
//   initial policies   mean -46.32  (-45.44 -33.86 -51.66 -46.14 -53.24
//                                    -53.98 -39.35 -48.85 -46.81 -43.86)
//   PPO final          mean -4.795  (-5.06 -4.70 -4.38 -5.45 -5.20
//                                    -4.43 -3.30 -5.08 -4.67 -5.68)
// The threshold asks for 80% of PPO's improvement over the initial policy:
//   -46.32 + 0.8 * (-4.795 + 46.32) = -13.10.
constexpr double kPointMassThreshold = -13.10;

std::string config_dir = PPODICE_CONFIG_DIR;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream o;
  o.precision(precision);
  o << v;
  return o.str();
}

std::string sci(double v) {
  std::ostringstream o;
  o.precision(2);
  o << std::scientific << v;
  return o.str();
}

TrainConfig load(const std::string& name, const std::vector<Setting>& overrides = {}) {
  TrainConfig c = load_config(config_dir + "/" + name, overrides);
  c.validate();
  return c;
}

double final_return(const TrainConfig& c, const TrainResult& r) {
  const auto env = make_env(c.env, c.env_params);
  Rng rng = stream_rng(c.seed, Stream::kEvaluation, 1u << 30);
  return evaluate(r.policy, *env, 20, rng).mean;
}

std::pair<double, double> mean_var(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return {m, s / static_cast<double>(x.size() - 1)};
}

// ---------------------------------------------------------------------------
// Oracle checks recomputed here from the definitions.

double visitation_residual(const TabularMdp& mdp, const TabularPolicy& pi) {
  const Matrix mu = exact_visitation(mdp, pi).state_action;
  const int S = mdp.n_states, A = mdp.n_actions;
  double worst = 0.0;
  for (int s2 = 0; s2 < S; ++s2) {
    for (int a2 = 0; a2 < A; ++a2) {
      double inflow = 0.0;
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) inflow += mdp.prob(s, a, s2) * mu(s, a);
      }
      const double rhs = (1 - mdp.discount) * mdp.initial_dist(s2) * pi.probs(s2, a2) +
                         mdp.discount * pi.probs(s2, a2) * inflow;
      worst = std::max(worst, std::abs(mu(s2, a2) - rhs));
    }
  }
  return worst;
}

// J by iterating the Bellman operator to convergence.
Vector iterate_values(const TabularMdp& mdp, const TabularPolicy& pi) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Vector v = Vector::Zero(S);
  for (int it = 0; it < 100000; ++it) {
    Vector next = Vector::Zero(S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double q = mdp.reward(s, a);
        for (int t = 0; t < S; ++t) q += mdp.discount * mdp.prob(s, a, t) * v(t);
        next(s) += pi.probs(s, a) * q;
      }
    }
    const double delta = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (delta < 1e-14) break;
  }
  return v;
}

struct RandomTriple {
  TabularMdp mdp;
  TabularPolicy pi, pn;
};

RandomTriple random_triple(int k, Rng& rng) {
  const int S = 2 + k % 5, A = 2 + k % 2;
  const double gamma = 0.5 + 0.45 * uniform01(rng);
  RandomTriple t{make_random_mdp(S, A, 9000 + k, gamma), TabularPolicy::random(S, A, rng),
                 TabularPolicy::random(S, A, rng)};
  if (k % 3 == 0) t.pn.probs = 0.9 * t.pi.probs + 0.1 * t.pn.probs;  // nearby updates as well
  return t;
}

double divergence_by_definition(const Matrix& target, const Matrix& base, DivergenceKind kind) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    const double q = base.data()[i], p = target.data()[i];
    if (q > 0) d += q * (kind == DivergenceKind::kKL ? (p > 0 ? p / q * std::log(p / q) : 0.0) : (p / q - 1) * (p / q - 1));
  }
  return d;
}

// ---------------------------------------------------------------------------

Outcome c1_fixed_point() {
  Rng rng = make_rng(101);
  double worst = 0.0;
  int checked = 0;
  for (const char* name : {"chain", "gridworld", "random_mdp"}) {
    const auto env = make_env(name);
    const TabularMdp& mdp = *env->tabular();
    const OptimalSolution opt = policy_iteration(mdp);
    std::vector<TabularPolicy> policies{TabularPolicy::uniform(mdp.n_states, mdp.n_actions), opt.policy};
    for (int k = 0; k < 5; ++k) policies.push_back(TabularPolicy::random(mdp.n_states, mdp.n_actions, rng));
    for (const auto& pi : policies) {
      worst = std::max(worst, visitation_residual(mdp, pi));
      ++checked;
    }
  }
  return {worst < kFixedPointTol, std::to_string(checked) + " (mdp, policy) pairs, max residual " + sci(worst)};
}

Outcome c2_performance_difference() {
  Rng rng = make_rng(202);
  double worst = 0.0, worst_independent = 0.0;
  for (int k = 0; k < 100; ++k) {
    const RandomTriple t = random_triple(k, rng);
    const PerformanceDifference pd = performance_difference(t.mdp, t.pi, t.pn);
    worst = std::max(worst, std::abs(pd.lhs - pd.rhs));
    // Both sides again from value iteration and the fixed-point visitation.
    const Vector v = iterate_values(t.mdp, t.pi), vn = iterate_values(t.mdp, t.pn);
    const double g = t.mdp.discount;
    const double lhs = (1 - g) * t.mdp.initial_dist.dot(vn - v);
    const Vector dn = exact_visitation(t.mdp, t.pn).state;
    double rhs = 0.0;
    for (int s = 0; s < t.mdp.n_states; ++s) {
      for (int a = 0; a < t.mdp.n_actions; ++a) {
        double q = t.mdp.reward(s, a);
        for (int s2 = 0; s2 < t.mdp.n_states; ++s2) q += g * t.mdp.prob(s, a, s2) * v(s2);
        rhs += dn(s) * t.pn.probs(s, a) * (q - v(s));
      }
    }
    worst_independent = std::max({worst_independent, std::abs(lhs - rhs), std::abs(lhs - pd.lhs)});
  }
  return {worst < kPdlTol && worst_independent < kPdlTol,
          "100 triples, max gap " + sci(worst) + ", recomputed " + sci(worst_independent)};
}

Outcome c3_inequality_chain() {
  Rng rng = make_rng(202);  // the same triples as criterion 2
  int failures = 0;
  double min_slack = kInfinity;
  constexpr double kSlack = 1e-10;
  for (int k = 0; k < 100; ++k) {
    const RandomTriple t = random_triple(k, rng);
    const LowerBoundReport r = lower_bound_check(t.mdp, t.pi, t.pn);
    const int S = t.mdp.n_states;
    const double g = t.mdp.discount;
    const Visitation v = exact_visitation(t.mdp, t.pi), vn = exact_visitation(t.mdp, t.pn);
    const ValueFunctions val = exact_value(t.mdp, t.pi);
    double eps = 0.0, surrogate = (1 - g) * t.mdp.initial_dist.dot(val.value), action_tv = 0.0;
    for (int s = 0; s < S; ++s) {
      const double e = t.pn.probs.row(s).dot(val.advantage.row(s));
      eps = std::max(eps, std::abs(e));
      surrogate += v.state(s) * e;
      action_tv += v.state(s) * (t.pn.probs.row(s) - t.pi.probs.row(s)).cwiseAbs().sum();
    }
    const double tv_d = (vn.state - v.state).cwiseAbs().sum();
    const double tv_mu = (vn.state_action - v.state_action).cwiseAbs().sum();
    const double kl = divergence_by_definition(v.state_action, vn.state_action, DivergenceKind::kKL);
    const double j_new = (1 - g) * t.mdp.initial_dist.dot(exact_value(t.mdp, t.pn).value);
    const double slacks[] = {j_new - (surrogate - eps * tv_d), tv_mu - tv_d,
                             2 * g / (1 - g) * action_tv - tv_d, std::sqrt(kl / 2) - 0.5 * tv_mu};
    bool ok = r.bound_holds();
    for (double sl : slacks) {
      ok = ok && sl >= -kSlack;
      min_slack = std::min(min_slack, sl);
    }
    if (!ok) ++failures;
  }
  return {failures == 0, "100 triples, " + std::to_string(failures) + " violations, min slack " + sci(min_slack)};
}

Outcome c4_oracle_equivalence() {
  Rng rng = make_rng(3);
  std::ostringstream detail;
  bool ok = true;

  // Exact expectations: tabular witness minimized by Newton's method.
  double exact_worst = 0.0;
  for (int k = 0; k < 6; ++k) {
    const TabularMdp mdp = k == 0   ? make_chain(5, 0.1, 0.9)
                           : k == 1 ? make_gridworld(2, 2, 0.1, 0.9)
                                    : make_random_mdp(k % 2 ? 4 : 5, k % 2 ? 3 : 4, 400 + k, 0.9);
    const TabularPolicy base = TabularPolicy::random(mdp.n_states, mdp.n_actions, rng);
    TabularPolicy target = TabularPolicy::random(mdp.n_states, mdp.n_actions, rng);
    target.probs = 0.5 * target.probs + 0.5 * base.probs;
    const ExactDiceProblem p = make_exact_dice_problem(mdp, base, target);
    const Matrix mu = exact_visitation(mdp, base).state_action, mut = exact_visitation(mdp, target).state_action;
    for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice()}) {
      const double truth = divergence_by_definition(mut, mu, spec.kind);
      exact_worst = std::max(exact_worst, std::abs(fit_exact_witness(p, spec).estimate - truth));
    }
  }
  ok = ok && exact_worst < kExactWitnessTol;
  detail << "exact: max error " << sci(exact_worst);

  // Sampled transitions; tabular g minimizes the sampled loss. The residual
  // uses one s' per row, which biases the estimate when transitions are
  // stochastic (the conjugate is convex in s'), so the chain and gridworld run
  // without slip. Behavior policies are half uniform so every pair is covered.
  constexpr double kGamma = 0.5;
  constexpr int kSamples = 40000;
  double sampled_worst = 0.0;
  int eligible = 0;
  for (int k = 0; k < 5; ++k) {
    const TabularMdp mdp = k == 0   ? make_chain(5, 0.0, kGamma)
                           : k == 1 ? make_gridworld(2, 2, 0.0, kGamma)
                                    : make_random_mdp(4, 3, 30 + k, kGamma);
    TabularPolicy base = TabularPolicy::random(mdp.n_states, mdp.n_actions, rng);
    base.probs = 0.5 * base.probs + 0.5 * TabularPolicy::uniform(mdp.n_states, mdp.n_actions).probs;
    TabularPolicy target = TabularPolicy::random(mdp.n_states, mdp.n_actions, rng);
    target.probs = 0.5 * target.probs + 0.5 * base.probs;
    const Matrix mu = exact_visitation(mdp, base).state_action, mut = exact_visitation(mdp, target).state_action;
    const PolicyParams tp = testing::policy_from_table(target);
    const TransitionSet set = testing::iid_transitions(mdp, mu, kSamples, rng);
    const PolicySamples samples = draw_policy_samples(tp, set, rng);
    for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice()}) {
      const double truth = divergence_by_definition(mut, mu, spec.kind);
      if (truth > 1.0) continue;
      Rng init = make_rng(9);
      DiscriminatorParams g = make_discriminator(Space::discrete(mdp.n_states), Space::discrete(mdp.n_actions), {},
                                                 init, DiscriminatorInput::kJointOneHot);
      const testing::Minimum m =
          testing::fit_discriminator(g, set, samples, tp, kGamma, spec, ResidualMode::kExpected, 300, 1e-5);
      sampled_worst = std::max(sampled_worst, std::abs(-m.value - truth));
      ++eligible;
    }
  }
  ok = ok && eligible >= 8 && sampled_worst <= kSampledWitnessTol;
  detail << "; sampled (n=" << kSamples << ", " << eligible << " cases with truth <= 1): max error "
         << fmt(sampled_worst);
  return {ok, detail.str()};
}

Outcome c5_zero_divergence() {
  Rng rng = make_rng(5);
  double worst = 0.0;
  int cases = 0;
  for (int k = 0; k < 3; ++k) {
    const TabularMdp mdp = k == 0   ? make_chain(5, 0.1, 0.9)
                           : k == 1 ? make_gridworld(2, 2, 0.1, 0.9)
                                    : make_random_mdp(4, 3, 55, 0.9);
    const TabularPolicy pi = TabularPolicy::random(mdp.n_states, mdp.n_actions, rng);
    const Matrix mu = exact_visitation(mdp, pi).state_action;
    const PolicyParams p = testing::policy_from_table(pi);
    const TransitionSet set = testing::iid_transitions(mdp, mu, 10000, rng);
    const PolicySamples samples = draw_policy_samples(p, set, rng);
    for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice(), DivergenceSpec::kl_dv()}) {
      Rng init = make_rng(9);
      DiscriminatorParams g = make_discriminator(Space::discrete(mdp.n_states), Space::discrete(mdp.n_actions), {},
                                                 init, DiscriminatorInput::kJointOneHot);
      testing::fit_discriminator(g, set, samples, p, mdp.discount, spec, ResidualMode::kExpected, 300, 1e-6);
      worst = std::max(worst, std::abs(divergence_estimate(g, set, samples, p, mdp.discount, spec,
                                                           ResidualMode::kExpected)));
      ++cases;
    }
  }
  return {worst <= kZeroDivergenceTol, std::to_string(cases) + " fits (KL dice, chi^2 dice, KL DV), max |estimate| " +
                                           sci(worst)};
}

// Rebuild tape-bound objects from the parameter nodes a gradient check hands in.
BoundMlp bound_mlp(const MlpParams& m, const std::vector<ad::Var>& p, std::size_t offset = 0) {
  BoundMlp b;
  b.params = &m;
  for (int i = 0; i < m.num_layers(); ++i) {
    b.weights.push_back(p[offset + 2 * i]);
    b.biases.push_back(p[offset + 2 * i + 1]);
  }
  return b;
}

BoundPolicy bound_policy(const PolicyParams& pp, const std::vector<ad::Var>& p) {
  BoundPolicy b;
  b.params = &pp;
  b.net = bound_mlp(pp.net, p);
  if (pp.head == HeadKind::kDiagonalGaussian) {
    b.raw_log_std = p.back();
    b.log_std = ad::clip(b.raw_log_std, kLogStdMin, kLogStdMax);
  }
  return b;
}

template <class T>
std::vector<Matrix> values(const T& params) {
  std::vector<Matrix> out;
  for (const Matrix* m : tensors(params)) out.push_back(*m);
  return out;
}

Outcome c6_gradient_checks() {
  Rng rng = make_rng(6);
  const auto env = make_env("point_mass");
  const Space obs = env->observation_space(), act = env->action_space();
  PolicyParams gauss = make_policy(obs, act, {4}, rng, -0.3);
  for (Matrix* m : tensors(gauss.net)) *m = Matrix::Random(m->rows(), m->cols()) * 0.5;
  const MlpParams value = init_mlp({obs.size, 4, 1}, rng);
  DiscriminatorParams g = make_discriminator(obs, act, {4}, rng);
  for (Matrix* m : tensors(g)) *m = Matrix::Random(m->rows(), m->cols()) * 0.5;

  const RolloutBatch batch = collect_rollouts(gauss, *env, 2, 12, 77);
  const TransitionSet set = transitions(batch);
  const PolicySamples samples = draw_policy_samples(gauss, set, rng);
  const int n = batch.size();
  const Vector targets = Vector::Random(n);
  const Vector advantages = Vector::Random(n);
  Vector old_lp = log_prob(gauss, batch.states, batch.actions);
  for (int i = 0; i < n; ++i) old_lp(i) += 0.4 * (uniform01(rng) - 0.5);

  const auto chain = make_env("chain");
  PolicyParams cat = make_policy(chain->observation_space(), chain->action_space(), {4}, rng);
  for (Matrix* m : tensors(cat.net)) *m = Matrix::Random(m->rows(), m->cols()) * 0.5;
  const RolloutBatch cbatch = collect_rollouts(cat, *chain, 2, 12, 78);
  Vector cold_lp = log_prob(cat, cbatch.states, cbatch.actions);
  for (int i = 0; i < n; ++i) cold_lp(i) += 0.4 * (uniform01(rng) - 0.5);

  constexpr double kGamma = 0.9;
  struct Case {
    std::string name;
    LossBuilder loss;
    std::vector<Matrix> params;
  };
  std::vector<Case> cases;
  cases.push_back({"value",
                   [&](ad::Tape&, const std::vector<ad::Var>& p) {
                     return value_loss(bound_mlp(value, p), obs, batch.states, targets);
                   },
                   values(value)});
  cases.push_back({"clipped surrogate (gaussian)",
                   [&](ad::Tape&, const std::vector<ad::Var>& p) {
                     return clipped_surrogate(bound_policy(gauss, p), batch.states, batch.actions, old_lp, advantages,
                                              0.2)
                         .objective;
                   },
                   values(gauss)});
  cases.push_back({"clipped surrogate (categorical)",
                   [&](ad::Tape&, const std::vector<ad::Var>& p) {
                     return clipped_surrogate(bound_policy(cat, p), cbatch.states, cbatch.actions, cold_lp,
                                              advantages, 0.2)
                         .objective;
                   },
                   values(cat)});
  for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice()}) {
    cases.push_back({"discriminator variational loss " + to_string(spec.kind),
                     [&, spec](ad::Tape& tape, const std::vector<ad::Var>& p) {
                       return dice_discriminator_loss(tape, {&g, bound_mlp(g.net, p)}, set, samples, gauss, kGamma,
                                                      spec);
                     },
                     values(g)});
  }
  cases.push_back({"discriminator DV loss",
                   [&](ad::Tape& tape, const std::vector<ad::Var>& p) {
                     return donsker_varadhan_loss(tape, {&g, bound_mlp(g.net, p)}, set, samples, gauss, kGamma);
                   },
                   values(g)});
  for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice(), DivergenceSpec::kl_dv()}) {
    cases.push_back({"reparametrized regularizer " + to_string(spec.kind) + " " + to_string(spec.representation),
                     [&, spec](ad::Tape&, const std::vector<ad::Var>& p) {
                       return regularizer_reparam(bound_policy(gauss, p), g, set, samples, kGamma, spec);
                     },
                     values(gauss)});
  }

  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  for (const Case& c : cases) {
    const GradReport r = grad_check(c.loss, c.params, 1e-5);
    ok = ok && r.ok;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = c.name;
    }
  }
  ok = ok && worst <= kGradCheckTol;
  return {ok, std::to_string(cases.size()) + " losses, max relative error " + sci(worst) + " (" + worst_name + ")"};
}

// Exact regularizer for a tabular witness g and target policy p:
//   R = sum mu F(g - gamma P^p g) - (1 - gamma) rho^T (p . g)
// with F = sum phi* (variational) or log sum exp (DV).
double exact_regularizer(const TabularMdp& mdp, const Matrix& mu, const Matrix& g, const PolicyParams& p,
                         const DivergenceSpec& spec) {
  const TabularPolicy pi = to_tabular(p);
  const int S = mdp.n_states, A = mdp.n_actions;
  const double gm = mdp.discount;
  Vector v(S);
  for (int s = 0; s < S; ++s) v(s) = pi.probs.row(s).dot(g.row(s));
  double first = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double next = 0.0;
      for (int t = 0; t < S; ++t) next += mdp.prob(s, a, t) * v(t);
      const double res = g(s, a) - gm * next;
      first += mu(s, a) * (spec.representation == Representation::kDonskerVaradhan ? std::exp(res)
                                                                                   : conjugate(spec.kind, res));
    }
  }
  if (spec.representation == Representation::kDonskerVaradhan) first = std::log(first);
  return first - (1 - gm) * mdp.initial_dist.dot(v);
}

Outcome c7_score_function() {
  Matrix r(2, 2);
  r << 0, 1, 0.5, 0;
  const TabularMdp mdp = make_flip_mdp(r, 0.9);
  TabularPolicy base, target;
  base.probs.resize(2, 2);
  base.probs << 0.3, 0.7, 0.6, 0.4;
  target.probs.resize(2, 2);
  target.probs << 0.5, 0.5, 0.2, 0.8;
  const Matrix mu = exact_visitation(mdp, base).state_action;
  const PolicyParams p = testing::policy_from_table(target);
  Rng rng = make_rng(1);
  DiscriminatorParams g =
      make_discriminator(Space::discrete(2), Space::discrete(2), {}, rng, DiscriminatorInput::kJointOneHot);
  Matrix table(2, 2);
  table << 0.4, -0.3, 0.8, 0.1;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) g.net.weights[0](s * 2 + a, 0) = table(s, a);
  }
  g.net.biases[0].setZero();

  constexpr int kChunks = 100, kPerChunk = 1000;
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  int coords = 0;
  for (const DivergenceSpec& spec : {DivergenceSpec::kl_dice(), DivergenceSpec::chi2_dice(), DivergenceSpec::kl_dv()}) {
    Matrix fd(2, 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        PolicyParams q = p;
        q.net.weights[0](i, j) += kStep;
        const double up = exact_regularizer(mdp, mu, table, q, spec);
        q.net.weights[0](i, j) -= 2 * kStep;
        const double down = exact_regularizer(mdp, mu, table, q, spec);
        fd(i, j) = (up - down) / (2 * kStep);
      }
    }
    for (bool baseline : {false, true}) {
      Matrix sum = Matrix::Zero(2, 2), sq = Matrix::Zero(2, 2);
      for (int c = 0; c < kChunks; ++c) {
        const TransitionSet set = testing::iid_transitions(mdp, mu, kPerChunk, rng);
        const PolicySamples samples = draw_policy_samples(p, set, rng);
        ad::Tape tape;
        const BoundPolicy b = bind(tape, p);
        tape.backward(regularizer_score(b, g, set, samples, mdp.discount, spec, ResidualMode::kExpected, baseline));
        const Matrix grad = gradients(tape, b).net.weights[0];
        sum += grad;
        sq += grad.cwiseAbs2();
      }
      const Matrix mean = sum / kChunks;
      const Matrix var = (sq - kChunks * mean.cwiseAbs2()) / (kChunks - 1);
      const Matrix se = (var / kChunks).cwiseSqrt();
      for (Eigen::Index k = 0; k < 4; ++k) {
        worst = std::max(worst, std::abs(mean.data()[k] - fd.data()[k]) / se.data()[k]);
        ++coords;
      }
    }
  }
  return {worst <= kScoreZ, std::to_string(coords) + " coordinates at " + std::to_string(kChunks * kPerChunk) +
                                " samples, max |z| " + fmt(worst)};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome c8_lambda_zero() {
  std::ostringstream detail;
  bool ok = true;
  for (const char* name : {"chain.cfg", "point_mass.cfg"}) {
    const std::vector<Setting> shorter{{"iterations", "6"}};
    TrainConfig ppo = load(name, shorter), dice = load(name, shorter);
    ppo.algo = Algo::kPpo;
    dice.reg.lambda_mode = LambdaMode::kFixed;
    dice.reg.fixed_lambda = 0.0;
    const TrainResult a = train(ppo), b = train(dice);
    bool same = !a.failed && !b.failed && a.metrics.size() == b.metrics.size();
    for (std::size_t i = 0; same && i < a.metrics.size(); ++i) {
      const MetricsRow &x = a.metrics[i], &y = b.metrics[i];
      same = x.iteration == y.iteration && x.env_steps == y.env_steps &&
             same_bits(x.mean_episode_return, y.mean_episode_return) && same_bits(x.policy_loss, y.policy_loss) &&
             same_bits(x.value_loss, y.value_loss) && same_bits(x.clip_fraction, y.clip_fraction) &&
             same_bits(x.entropy, y.entropy);
    }
    const auto ta = tensors(a.policy), tb = tensors(b.policy);
    for (std::size_t i = 0; same && i < ta.size(); ++i) same = *ta[i] == *tb[i];
    const auto va = tensors(a.value), vb = tensors(b.value);
    for (std::size_t i = 0; same && i < va.size(); ++i) same = *va[i] == *vb[i];
    ok = ok && same;
    detail << (detail.tellp() ? ", " : "") << ppo.env << (same ? " identical" : " differs");
  }
  return {ok, detail.str() + " (curves and final parameters)"};
}

struct SeedRuns {
  std::vector<double> finals;
  std::vector<double> worst_drops;
  int failures = 0;
};

SeedRuns run_seeds(const std::string& cfg, const std::vector<Setting>& overrides, int seeds,
                   const std::function<void(const TrainConfig&, const TrainResult&)>& inspect = {}) {
  SeedRuns out;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<Setting> o = overrides;
    o.emplace_back("seed", std::to_string(seed));
    const TrainConfig c = load(cfg, o);
    const TrainResult r = train(c);
    if (r.failed) ++out.failures;
    if (inspect) inspect(c, r);
    out.finals.push_back(final_return(c, r));
    // Largest drop below the running maximum, relative to its magnitude.
    double run_max = -kInfinity, worst = 0.0;
    for (const MetricsRow& m : r.metrics) {
      if (!std::isfinite(m.mean_episode_return)) {
        worst = kInfinity;
        break;
      }
      run_max = std::max(run_max, m.mean_episode_return);
      worst = std::max(worst, (run_max - m.mean_episode_return) / std::abs(run_max));
    }
    out.worst_drops.push_back(worst);
  }
  return out;
}

// Point-mass PPO-DICE (KL) runs, shared by criteria 9 and 10a.
const SeedRuns& point_mass_kl_runs() {
  static const SeedRuns runs = run_seeds("point_mass.cfg", {}, 10);
  return runs;
}

Outcome c9_learning() {
  std::ostringstream detail;
  bool ok = true;
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* name : {"chain.cfg", "gridworld.cfg"}) {
    int reached = 0;
    double lowest = kInfinity;
    std::string env;
    run_seeds(name, {}, 10, [&](const TrainConfig& c, const TrainResult& r) {
      const auto e = make_env(c.env, c.env_params);
      const TabularMdp& mdp = *e->tabular();
      const double frac = exact_performance(mdp, to_tabular(r.policy)) / policy_iteration(mdp).performance;
      if (frac >= kOptimalFraction) ++reached;
      lowest = std::min(lowest, frac);
      env = c.env;
    });
    ok = ok && reached >= kSeedsRequired;
    detail << env << " " << reached << "/10 at >= 95% of optimal J (lowest " << fmt(lowest) << "); ";
  }
  const double tabular_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && tabular_s <= kTabularLearningBudget;
  detail << "tabular runs " << fmt(tabular_s) << " s; ";
  const SeedRuns& pm = point_mass_kl_runs();
  const double mean = mean_var(pm.finals).first;
  ok = ok && pm.failures == 0 && mean >= kPointMassThreshold;
  detail << "point_mass mean final " << fmt(mean) << " vs threshold " << fmt(kPointMassThreshold);
  return {ok, detail.str()};
}

// One-sided Welch test of H1: mean(a) > mean(b). Returns the p-value.
double welch_greater(const std::vector<double>& a, const std::vector<double>& b) {
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  const double t = (ma - mb) / std::sqrt(se2);
  const double dof = se2 * se2 / (va * va / (na * na * (na - 1)) + vb * vb / (nb * nb * (nb - 1)));
  return boost::math::cdf(boost::math::complement(boost::math::students_t(dof), t));
}

Outcome c10a_kl_vs_chi2() {
  const SeedRuns& kl = point_mass_kl_runs();
  const SeedRuns chi2 = run_seeds("point_mass.cfg", {{"divergence", "chi2"}}, 10);
  const double p = welch_greater(kl.finals, chi2.finals);
  const bool ok = kl.failures == 0 && chi2.failures == 0 && p < kDirectionalAlpha;
  return {ok, "mean final KL " + fmt(mean_var(kl.finals).first) + ", chi^2 " + fmt(mean_var(chi2.finals).first) +
                  ", one-sided Welch p = " + fmt(p)};
}

Outcome c10b_clip_ablation() {
  const SeedRuns clipped = run_seeds("point_mass_clip_ablation.cfg", {}, 10);
  const SeedRuns unclipped = run_seeds("point_mass_clip_ablation.cfg", {{"clip_action_loss", "false"}}, 10);
  auto crashes = [](const SeedRuns& r) {
    int n = 0;
    for (double d : r.worst_drops) n += d >= kCrashDrop;
    return n + r.failures;
  };
  auto largest = [](const SeedRuns& r) {
    double m = 0.0;
    for (double d : r.worst_drops) m = std::max(m, d);
    return m;
  };
  const int c = crashes(clipped), u = crashes(unclipped);
  return {c == 0 && u >= 1, "seeds with a >= 50% drop: clipped " + std::to_string(c) + "/10 (largest " +
                                fmt(largest(clipped)) + "), unclipped " + std::to_string(u) + "/10 (largest " +
                                fmt(largest(unclipped)) + ")"};
}

struct Criterion {
  std::string id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (std::filesystem::is_directory(a)) {
      config_dir = a;
    } else {
      only.insert(a);
    }
  }
  const std::vector<Criterion> criteria{
      {"1", "visitation fixed point", 1, c1_fixed_point},
      {"2", "performance difference identity", 5, c2_performance_difference},
      {"3", "lower-bound inequality chain", 5, c3_inequality_chain},
      {"4", "divergence oracle equivalence", 60, c4_oracle_equivalence},
      {"5", "zero divergence at pi' = pi", 10, c5_zero_divergence},
      {"6", "gradient checks", 30, c6_gradient_checks},
      {"7", "score-function gradient", 60, c7_score_function},
      {"8", "lambda = 0 reduces to PPO", 600, c8_lambda_zero},
      {"9", "learning smoke tests", 900, c9_learning},
      {"10a", "KL beats chi^2 on point_mass", 900, c10a_kl_vs_chi2},
      {"10b", "clip ablation crashes", 1800, c10b_clip_ablation},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_s;
    const bool passed = o.passed && in_budget;
    if (!passed) ++failed;
    std::cout << (passed ? "PASS" : "FAIL") << " C" << c.id << " " << c.name << ": " << o.detail << " ["
              << fmt(secs, 3) << " s, budget " << c.budget_s << " s" << (in_budget ? "" : ", over budget") << "]"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
