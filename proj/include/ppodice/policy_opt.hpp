#pragma once

#include "ppodice/autodiff.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/policy.hpp"
#include "ppodice/rollout.hpp"

#include <cstdint>
#include <vector>

namespace ppodice {

struct ClipConfig {
  double epsilon = 0.2;
  double gae_lambda = 0.95;
  double entropy_coef = 0.0;
  double value_coef = 0.5;

  /// epsilon in (0, 1), gae_lambda in [0, 1], coefficients >= 0. ConfigError otherwise.
  void validate() const;
};

struct AdvantageBatch {
  Vector advantages;      // normalized if `normalized`
  Vector raw_advantages;  // before normalization
  Vector value_targets;   // raw advantage + V(s)
  bool normalized = false;
  double mean = 0.0;
  double std = 1.0;
};

/// Truncated GAE. Per rollout, backwards in t:
///   delta_t = r_t + gamma V(s_{t+1}) (1 - done_t) - V(s_t)
///   A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1},   A_T = delta_T
/// Episodes cut by the horizon cap count as done.
AdvantageBatch gae_advantages(const Vector& rewards, const Vector& values, const Vector& next_values,
                              const std::vector<std::uint8_t>& dones, int M, int T, double gamma, double gae_lambda);

/// Same, evaluating the value network on the batch's states.
AdvantageBatch gae_advantages(const RolloutBatch& batch, const MlpParams& value, const Space& observation,
                              double gamma, double gae_lambda);

/// Zero mean, unit standard deviation (population std, floored at 1e-8).
void normalize_advantages(AdvantageBatch& batch);

/// Value network output V(s) for raw states.
Vector value_predictions(const MlpParams& value, const Space& observation, const Matrix& states);

struct SurrogateTerms {
  ad::Var objective;       // to be maximized
  int excluded = 0;        // samples with |log ratio| > 20
  double clip_fraction = 0.0;  // share of included samples with |ratio - 1| > epsilon
  double mean_ratio = 1.0;
};

inline constexpr double kMaxLogRatio = 20.0;

/// mean over included samples of min(A k, A clip(k, 1-eps, 1+eps)) with
/// k = exp(log pi(a|s) - old_log_prob). With `clip` false the plain
/// importance-weighted surrogate mean(A k) is built instead.
SurrogateTerms clipped_surrogate(const BoundPolicy& policy, const Matrix& states, const Matrix& actions,
                                 const Vector& old_log_probs, const Vector& advantages, double epsilon,
                                 bool clip = true);

/// mean (V(s) - y)^2.
ad::Var value_loss(const BoundMlp& value, const Space& observation, const Matrix& states, const Vector& targets);

/// Mean policy entropy over the states.
ad::Var entropy_bonus(const BoundPolicy& policy, const Matrix& states);

}  // namespace ppodice
