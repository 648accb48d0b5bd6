#include "ppodice/dice_regularizer.hpp"

#include <algorithm>
#include <cmath>

namespace ppodice {

void RegularizerConfig::validate() const {
  if (discriminator_steps < 1) throw ConfigError("disc_steps must be at least 1");
  if (!(discriminator_lr_mult > 0.0)) throw ConfigError("disc_lr_mult must be positive");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ConfigError("lambda percentile must lie in (0, 100]");
  if (!(fixed_lambda >= 0.0) || !std::isfinite(fixed_lambda)) throw ConfigError("fixed lambda must be >= 0");
  try {
    divergence.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

double adaptive_lambda(const Vector& raw_advantages, double p, bool signed_percentile) {
  if (raw_advantages.size() == 0) throw InputError("adaptive_lambda: empty advantage list");
  if (!(p > 0.0 && p <= 100.0)) throw InputError("adaptive_lambda: percentile must lie in (0, 100]");
  std::vector<double> v(raw_advantages.data(), raw_advantages.data() + raw_advantages.size());
  if (!signed_percentile) {
    for (double& x : v) x = std::abs(x);
  }
  const auto n = static_cast<double>(v.size());
  // Nearest rank, with a small guard so p/100*n that is an integer up to
  // rounding does not move one rank up.
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

double regularizer_lambda(const RegularizerConfig& config, const Vector& raw_advantages) {
  if (config.lambda_mode == LambdaMode::kFixed) return config.fixed_lambda;
  return adaptive_lambda(raw_advantages, config.percentile, config.signed_percentile);
}

DiscriminatorLoopResult discriminator_loop(DiscriminatorParams& g, Optimizer& optimizer, const TransitionSet& set,
                                           const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                                           int steps, Rng& rng, ResidualMode mode) {
  if (steps < 1) throw InputError("discriminator_loop: K must be at least 1");
  DiscriminatorLoopResult result;
  PolicySamples samples;
  for (int k = 0; k < steps; ++k) {
    samples = draw_policy_samples(policy, set, rng);
    ad::Tape tape;
    const BoundDiscriminator bound = bind(tape, g, true);
    const ad::Var loss = discriminator_loss(tape, bound, set, samples, policy, gamma, spec, mode);
    if (!std::isfinite(loss.scalar())) {
      throw NumericalError("discriminator loss became non-finite at inner step " + std::to_string(k) +
                           " (value " + std::to_string(loss.scalar()) + ")");
    }
    result.losses.push_back(loss.scalar());
    tape.backward(loss);
    const MlpParams grad = gradients(tape, bound.net);
    std::vector<Matrix> grads;
    for (const Matrix* t : tensors(grad)) grads.push_back(*t);
    optimizer.step(tensors(g), grads);
  }
  result.final_loss = discriminator_loss_value(g, set, samples, policy, gamma, spec, mode);
  return result;
}

ad::Var regularizer_reparam(const BoundPolicy& policy, const DiscriminatorParams& g, const TransitionSet& set,
                            const PolicySamples& samples, double gamma, const DivergenceSpec& spec) {
  if (policy.params->head != HeadKind::kDiagonalGaussian) {
    throw CapabilityError("reparametrized regularizer needs a Gaussian policy; use the score_function path");
  }
  ad::Tape& tape = *policy.net.weights.front().tape;
  const BoundDiscriminator bound = bind(tape, g, false);
  const ad::Var a1 = reparam_sample(policy, set.initial_states, samples.initial_noise);
  const ad::Var a2 = reparam_sample(policy, set.next_states, samples.next_noise);
  return dice_objective(tape, dice_terms(bound, set, a1, a2, gamma, spec), gamma, spec);
}

ad::Var regularizer_score(const BoundPolicy& policy, const DiscriminatorParams& g, const TransitionSet& set,
                          const PolicySamples& samples, double gamma, const DivergenceSpec& spec, ResidualMode mode,
                          bool baseline) {
  set.validate();
  spec.validate();
  const PolicyParams& params = *policy.params;
  Vector g1 = evaluate(g, set.initial_states, samples.initial_actions);
  Vector g2 = evaluate(g, set.next_states, samples.next_actions);
  const Vector current = evaluate(g, set.states, set.actions);

  const bool categorical = params.head == HeadKind::kCategorical;
  if (mode == ResidualMode::kExpected && !categorical) {
    throw CapabilityError("expected residuals need a categorical policy");
  }
  if (baseline && !categorical) throw CapabilityError("score baseline needs a categorical policy");
  // sum_a pi(a|s) g(s, a) for each row of `states`.
  auto state_mean = [&](const Matrix& states) {
    const Matrix probs = action_probabilities(params, states);
    Vector m = Vector::Zero(states.rows());
    for (int a = 0; a < params.action.size; ++a) {
      m += probs.col(a).cwiseProduct(evaluate(g, states, Matrix::Constant(states.rows(), 1, a)));
    }
    return m;
  };
  Vector next = g2;
  Vector next_mean;
  if (mode == ResidualMode::kExpected || baseline) next_mean = state_mean(set.next_states);
  if (mode == ResidualMode::kExpected) next = next_mean;
  if (baseline) {
    g1 -= state_mean(set.initial_states);
    g2 -= next_mean;
  }
  Vector residual = current - gamma * set.continues.cwiseProduct(next);

  const Eigen::Index n = residual.size();
  Vector w(n);
  if (spec.representation == Representation::kDonskerVaradhan) {
    const double m = residual.maxCoeff();
    const Vector e = (residual.array() - m).exp();
    w = static_cast<double>(n) * e / e.sum();
  } else if (spec.kind == DivergenceKind::kTotalVariation && spec.squash_tv_residual) {
    w = 0.5 * (1.0 - residual.array().tanh().square());
  } else {
    for (Eigen::Index i = 0; i < n; ++i) w(i) = conjugate_derivative(spec.kind, residual(i));
  }
  if (!w.allFinite()) throw NumericalError("score-function weights are non-finite (residual outside the domain)");

  ad::Tape& tape = *policy.net.weights.front().tape;
  const ad::Var lp1 = log_prob(policy, set.initial_states, samples.initial_actions);
  const ad::Var lp2 = log_prob(policy, set.next_states, samples.next_actions);
  const Vector c2 = gamma * w.cwiseProduct(set.continues).cwiseProduct(g2);
  const ad::Var t1 = ad::mean(ad::mul(tape.constant(Matrix((1.0 - gamma) * g1)), lp1));
  const ad::Var t2 = ad::mean(ad::mul(tape.constant(Matrix(c2)), lp2));
  return ad::neg(ad::add(t1, t2));
}

ad::Var regularized_policy_loss_reparam(ad::Var clip_objective, const BoundPolicy& policy,
                                        const DiscriminatorParams& g, const TransitionSet& set,
                                        const PolicySamples& samples, double lambda, double gamma,
                                        const DivergenceSpec& spec) {
  if (policy.params->head != HeadKind::kDiagonalGaussian) {
    throw CapabilityError("reparametrized regularizer needs a Gaussian policy; use the score_function path");
  }
  if (lambda == 0.0) return clip_objective;
  return ad::add(clip_objective, ad::scale(regularizer_reparam(policy, g, set, samples, gamma, spec), lambda));
}

ad::Var regularized_policy_loss_score(ad::Var clip_objective, const BoundPolicy& policy,
                                      const DiscriminatorParams& g, const TransitionSet& set,
                                      const PolicySamples& samples, double lambda, double gamma,
                                      const DivergenceSpec& spec, ResidualMode mode, bool baseline) {
  if (lambda == 0.0) return clip_objective;
  return ad::add(clip_objective,
                 ad::scale(regularizer_score(policy, g, set, samples, gamma, spec, mode, baseline), lambda));
}

GradientPath choose_gradient_path(HeadKind head, GradientPath requested) {
  if (requested != GradientPath::kAuto) return requested;
  return head == HeadKind::kDiagonalGaussian ? GradientPath::kReparam : GradientPath::kScoreFunction;
}

std::string to_string(GradientPath p) {
  switch (p) {
    case GradientPath::kAuto:
      return "auto";
    case GradientPath::kReparam:
      return "reparam";
    case GradientPath::kScoreFunction:
      return "score_function";
  }
  return "auto";
}

GradientPath parse_gradient_path(const std::string& s) {
  if (s == "auto") return GradientPath::kAuto;
  if (s == "reparam") return GradientPath::kReparam;
  if (s == "score_function") return GradientPath::kScoreFunction;
  throw ConfigError("unknown gradient path '" + s + "' (expected auto|reparam|score_function)");
}

}  // namespace ppodice
