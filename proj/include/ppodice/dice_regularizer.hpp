#pragma once

#include "ppodice/adam.hpp"
#include "ppodice/dice_losses.hpp"
#include "ppodice/divergence.hpp"
#include "ppodice/policy.hpp"

#include <string>
#include <vector>

namespace ppodice {

enum class LambdaMode { kFixed, kAdaptive };
enum class GradientPath { kAuto, kReparam, kScoreFunction };

struct RegularizerConfig {
  LambdaMode lambda_mode = LambdaMode::kAdaptive;
  double fixed_lambda = 0.0;
  double percentile = 90.0;
  /// Percentile of the signed advantages instead of their absolute values.
  bool signed_percentile = false;
  DivergenceSpec divergence = DivergenceSpec::kl_dv();
  int discriminator_steps = 5;        // K
  double discriminator_lr_mult = 10;  // c_psi
  GradientPath gradient_path = GradientPath::kAuto;
  InitialActionMode initial_action_mode = InitialActionMode::kPerTerm;
  ResidualMode residual_mode = ResidualMode::kSampled;
  /// Score-function path: subtract sum_a pi(a|s) g(s, a) from g before it
  /// multiplies grad log pi (categorical policies).
  bool score_baseline = true;

  /// ConfigError for K < 1, c_psi <= 0, p outside (0, 100], negative fixed lambda
  /// or an invalid divergence spec.
  void validate() const;
};

/// Nearest-rank p-th percentile of |A| (or of A when `signed_percentile`):
/// the ceil(p/100 * n)-th smallest value.
double adaptive_lambda(const Vector& raw_advantages, double p, bool signed_percentile = false);

/// Lambda for this iteration under `config`.
double regularizer_lambda(const RegularizerConfig& config, const Vector& raw_advantages);

struct DiscriminatorLoopResult {
  std::vector<double> losses;  // loss before each step
  double final_loss = 0.0;     // loss after the last step, on the last step's samples
};

/// K gradient steps on the discriminator loss, drawing fresh target-policy
/// actions every step. Throws NumericalError if the loss becomes non-finite.
DiscriminatorLoopResult discriminator_loop(DiscriminatorParams& g, Optimizer& optimizer, const TransitionSet& set,
                                           const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                                           int steps, Rng& rng, ResidualMode mode = ResidualMode::kSampled);

/// Divergence loss L_D(psi, theta) with theta on the tape through
/// reparametrized actions built from the frozen noise in `samples`.
/// The discriminator is held fixed. CapabilityError for categorical heads.
ad::Var regularizer_reparam(const BoundPolicy& policy, const DiscriminatorParams& g, const TransitionSet& set,
                            const PolicySamples& samples, double gamma, const DivergenceSpec& spec);

/// Score-function surrogate whose theta-gradient estimates the gradient of
/// L_D(psi, theta):
///   -[(1-gamma) mean g1 log pi(a1'|s1) + gamma mean w (1-done) g2 log pi(a'|s')]
/// with g1, g2, w constants. w = phi*'(residual) for the variational form and
/// n * softmax(residual) for Donsker-Varadhan (the derivative of log-mean-exp).
/// For squashed TV residuals w includes the tanh chain factor.
///
/// With `baseline` (categorical heads only) g1 and g2 are replaced by
/// g - sum_a pi(a|s) g(s, a) at their states. Since E_{a~pi}[grad log pi] = 0
/// this leaves the expectation unchanged whenever the weight does not depend
/// on the sampled action: always for the initial term, and for the next-state
/// term in kExpected mode. It removes the noise from the level of g, to
/// which the Donsker-Varadhan objective is blind.
ad::Var regularizer_score(const BoundPolicy& policy, const DiscriminatorParams& g, const TransitionSet& set,
                          const PolicySamples& samples, double gamma, const DivergenceSpec& spec,
                          ResidualMode mode = ResidualMode::kSampled, bool baseline = false);

/// clip_objective + lambda * regularizer_reparam(...). Returns clip_objective
/// unchanged when lambda == 0.
ad::Var regularized_policy_loss_reparam(ad::Var clip_objective, const BoundPolicy& policy,
                                        const DiscriminatorParams& g, const TransitionSet& set,
                                        const PolicySamples& samples, double lambda, double gamma,
                                        const DivergenceSpec& spec);

/// clip_objective + lambda * regularizer_score(...). Returns clip_objective
/// unchanged when lambda == 0.
ad::Var regularized_policy_loss_score(ad::Var clip_objective, const BoundPolicy& policy,
                                      const DiscriminatorParams& g, const TransitionSet& set,
                                      const PolicySamples& samples, double lambda, double gamma,
                                      const DivergenceSpec& spec, ResidualMode mode = ResidualMode::kSampled,
                                      bool baseline = false);

/// kAuto resolves to kReparam for Gaussian heads and kScoreFunction for
/// categorical heads; explicit choices are returned as given.
GradientPath choose_gradient_path(HeadKind head, GradientPath requested);

std::string to_string(GradientPath p);
GradientPath parse_gradient_path(const std::string& s);  // auto | reparam | score_function

}  // namespace ppodice
