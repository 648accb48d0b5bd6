#pragma once

// Off-policy divergence losses over sampled transitions.
//
// With f = g - gamma P^pi' g, both representations are written in terms of a
// witness g(s, a):
//   variational:  L(g) = mean phi*(g(s,a) - gamma g(s',a')) - (1-gamma) mean g(s1, a1')
//   Donsker-Varadhan (KL only):
//                 L(g) = log mean exp(g(s,a) - gamma g(s',a')) - (1-gamma) mean g(s1, a1')
// The DV form in g-space is derived by the same substitution as the
// variational one; E_{mu'}[f] = (1-gamma) E_{rho,pi'}[g] holds for any f of
// that shape. (s, a, s') come from the behavior distribution, a' and a1' from
// the target policy pi'. -min_g L estimates the divergence of the base-
// weighted order, sum mu phi(mu' / mu).
//
// The next-state term is multiplied by (1 - done), like bootstrapping in GAE.

#include "ppodice/autodiff.hpp"
#include "ppodice/divergence.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/policy.hpp"
#include "ppodice/rollout.hpp"

#include <vector>

namespace ppodice {

/// Transitions seen by the discriminator.
struct TransitionSet {
  Matrix states;       // [n, obs raw]
  Matrix actions;      // [n, action raw]
  Matrix next_states;  // [n, obs raw]
  Vector continues;    // [n], 1 - done
  Matrix initial_states;  // [m, obs raw], one row per initial-state term

  int size() const { return static_cast<int>(states.rows()); }
  int initial_size() const { return static_cast<int>(initial_states.rows()); }
  /// Throws InputError on empty sets or inconsistent row counts.
  void validate() const;
};

/// How many fresh target-policy actions the initial-state term uses.
///  kPerTerm:    one per (j, t) term, i.e. s1 of rollout j is repeated T times.
///  kPerRollout: one per rollout.
enum class InitialActionMode { kPerTerm, kPerRollout };

TransitionSet transitions(const RolloutBatch& batch, InitialActionMode mode = InitialActionMode::kPerTerm);

/// Rows `rows` of `set`. In kPerTerm mode the initial terms of the same rows
/// are kept (the set must have one initial row per transition); otherwise all
/// initial rows are kept.
TransitionSet subset(const TransitionSet& set, const std::vector<int>& rows, InitialActionMode mode);

/// Which next-state value enters the Bellman residual.
///  kSampled:  g(s', a') with one sampled a' ~ pi'(.|s').
///  kExpected: sum_a pi'(a|s') g(s', a); categorical policies only.
enum class ResidualMode { kSampled, kExpected };

std::string to_string(InitialActionMode m);
std::string to_string(ResidualMode m);
InitialActionMode parse_initial_action_mode(const std::string& s);  // term | rollout
ResidualMode parse_residual_mode(const std::string& s);             // sampled | expected

// ---------------------------------------------------------------------------
// Discriminator g_psi(s, a).

///  kConcat:      MLP over [encode(s), encode(a)].
///  kJointOneHot: one-hot of the pair index s * A + a (discrete spaces only);
///                with no hidden layers this is a tabular witness.
enum class DiscriminatorInput { kConcat, kJointOneHot };

struct DiscriminatorParams {
  Space observation;
  Space action;
  DiscriminatorInput input = DiscriminatorInput::kConcat;
  MlpParams net;
};

DiscriminatorParams make_discriminator(const Space& observation, const Space& action, const std::vector<int>& hidden,
                                       Rng& rng, DiscriminatorInput input = DiscriminatorInput::kConcat);

/// Network features for (s, a) rows.
Matrix discriminator_features(const DiscriminatorParams& g, const Matrix& states, const Matrix& actions);

/// g(s, a) per row.
Vector evaluate(const DiscriminatorParams& g, const Matrix& states, const Matrix& actions);

/// Values g(s, a) as an [S, A] table (discrete spaces only).
Matrix discriminator_table(const DiscriminatorParams& g);

struct BoundDiscriminator {
  const DiscriminatorParams* params = nullptr;
  BoundMlp net;
};

BoundDiscriminator bind(ad::Tape& tape, const DiscriminatorParams& g, bool trainable = true);

ad::Var evaluate(const BoundDiscriminator& g, const Matrix& states, const Matrix& actions);
/// Continuous actions given as tape nodes (kConcat only).
ad::Var evaluate(const BoundDiscriminator& g, const Matrix& states, ad::Var actions);

std::vector<Matrix*> tensors(DiscriminatorParams& g);
std::vector<const Matrix*> tensors(const DiscriminatorParams& g);

// ---------------------------------------------------------------------------
// Target-policy samples.

/// Fresh actions a' ~ pi'. For Gaussian heads the standard normal noise is
/// kept so reparametrized losses can rebuild the same actions.
struct PolicySamples {
  Matrix initial_actions;  // [m, action raw]
  Matrix next_actions;     // [n, action raw]
  Matrix initial_noise;    // Gaussian heads only
  Matrix next_noise;
};

PolicySamples draw_policy_samples(const PolicyParams& policy, const TransitionSet& set, Rng& rng);

// ---------------------------------------------------------------------------
// Loss builders.

struct DiceTerms {
  ad::Var initial;   // g(s1, a1'), [m, 1]
  ad::Var residual;  // g(s,a) - gamma (1-done) next, [n, 1]; squashed for TV if requested
};

/// Residual and initial terms with the discriminator on `tape`. `policy`
/// supplies pi'(.|s') for kExpected.
DiceTerms dice_terms(const BoundDiscriminator& g, const TransitionSet& set, const PolicySamples& samples,
                     const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                     ResidualMode mode = ResidualMode::kSampled);

/// Terms with differentiable continuous actions a1' and a' (kConcat
/// discriminators, sampled residuals). Used by the reparametrized policy loss.
DiceTerms dice_terms(const BoundDiscriminator& g, const TransitionSet& set, ad::Var initial_actions,
                     ad::Var next_actions, double gamma, const DivergenceSpec& spec);

/// Objective value from precomputed terms; dispatches on spec.representation.
/// TV without squashing returns a +inf constant when a residual leaves the
/// conjugate's domain.
ad::Var dice_objective(ad::Tape& tape, const DiceTerms& terms, double gamma, const DivergenceSpec& spec);

/// Variational loss; spec.representation must be kVariationalDice.
ad::Var dice_discriminator_loss(ad::Tape& tape, const BoundDiscriminator& g, const TransitionSet& set,
                                const PolicySamples& samples, const PolicyParams& policy, double gamma,
                                const DivergenceSpec& spec, ResidualMode mode = ResidualMode::kSampled);

/// Donsker-Varadhan loss (KL only).
ad::Var donsker_varadhan_loss(ad::Tape& tape, const BoundDiscriminator& g, const TransitionSet& set,
                              const PolicySamples& samples, const PolicyParams& policy, double gamma,
                              ResidualMode mode = ResidualMode::kSampled);

/// Whichever of the two the spec asks for.
ad::Var discriminator_loss(ad::Tape& tape, const BoundDiscriminator& g, const TransitionSet& set,
                           const PolicySamples& samples, const PolicyParams& policy, double gamma,
                           const DivergenceSpec& spec, ResidualMode mode = ResidualMode::kSampled);

/// Plain value of the loss at the current g.
double discriminator_loss_value(const DiscriminatorParams& g, const TransitionSet& set, const PolicySamples& samples,
                                const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                                ResidualMode mode = ResidualMode::kSampled);

/// Negated loss. A lower bound on the divergence when g is suboptimal, so it
/// may be negative.
double divergence_estimate(const DiscriminatorParams& g, const TransitionSet& set, const PolicySamples& samples,
                           const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                           ResidualMode mode = ResidualMode::kSampled);

}  // namespace ppodice
