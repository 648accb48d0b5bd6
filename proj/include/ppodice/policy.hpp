#pragma once

#include "ppodice/autodiff.hpp"
#include "ppodice/environment.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/oracle.hpp"

#include <vector>

namespace ppodice {

enum class HeadKind { kCategorical, kDiagonalGaussian };

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Stochastic policy: an MLP over encoded observations producing either
/// logits (categorical) or the mean of a diagonal Gaussian whose log-std is a
/// state-independent trainable row, clamped to [-5, 2] when used.
struct PolicyParams {
  HeadKind head = HeadKind::kCategorical;
  Space observation;
  Space action;
  MlpParams net;
  Matrix log_std;  // [1, action_dim]; empty for categorical heads

  int action_dim() const { return action.size; }
  Matrix clamped_log_std() const { return log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }
};

/// Categorical head for discrete action spaces, Gaussian otherwise. Hidden
/// layers use gain 1, the output layer gain 0.01.
PolicyParams make_policy(const Space& observation, const Space& action, const std::vector<int>& hidden, Rng& rng,
                         double initial_log_std = 0.0);

/// Network output for raw observations: logits or Gaussian means, [n, out].
Matrix policy_output(const PolicyParams& policy, const Matrix& states);

/// Action probabilities [n, A] (categorical heads only).
Matrix action_probabilities(const PolicyParams& policy, const Matrix& states);

/// log pi(a|s) per row. Throws InputError for non-finite input or actions
/// outside the support.
Vector log_prob(const PolicyParams& policy, const Matrix& states, const Matrix& actions);

/// Mean entropy over the given states: exact for categorical heads, closed
/// form 0.5 * d * log(2 pi e) + sum log_std for Gaussian heads.
double mean_entropy(const PolicyParams& policy, const Matrix& states);

struct SampledActions {
  Matrix actions;  // raw actions, [n, raw_dim]
  Vector log_probs;
};

/// One action per row of `states`.
SampledActions sample(const PolicyParams& policy, const Matrix& states, Rng& rng);

/// Standard normal noise for `rows` reparametrized samples.
Matrix sample_noise(const PolicyParams& policy, Eigen::Index rows, Rng& rng);

/// mean(s) + exp(log_std) * noise. CapabilityError for categorical heads.
Matrix reparam_sample(const PolicyParams& policy, const Matrix& states, const Matrix& noise);

/// Tabular view of a categorical policy over a discrete observation space.
TabularPolicy to_tabular(const PolicyParams& policy);

/// Tape-bound policy.
struct BoundPolicy {
  const PolicyParams* params = nullptr;
  BoundMlp net;
  ad::Var log_std;  // clamped; only valid for Gaussian heads
  ad::Var raw_log_std;
};

BoundPolicy bind(ad::Tape& tape, const PolicyParams& policy, bool trainable = true);

ad::Var log_prob(const BoundPolicy& policy, const Matrix& states, const Matrix& actions);

/// log pi(a|s) for continuous actions that are themselves tape nodes.
ad::Var log_prob(const BoundPolicy& policy, const Matrix& states, ad::Var actions);

/// Entropy per row, [n, 1].
ad::Var entropy(const BoundPolicy& policy, const Matrix& states);

/// Differentiable action mean + exp(log_std) * noise, [n, d].
/// CapabilityError for categorical heads.
ad::Var reparam_sample(const BoundPolicy& policy, const Matrix& states, const Matrix& noise);

/// Gradients shaped like the policy (log_std grad is zero for categorical).
PolicyParams gradients(const ad::Tape& tape, const BoundPolicy& policy);

std::vector<Matrix*> tensors(PolicyParams& policy);
std::vector<const Matrix*> tensors(const PolicyParams& policy);

}  // namespace ppodice
