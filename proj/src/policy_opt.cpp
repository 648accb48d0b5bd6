#include "ppodice/policy_opt.hpp"

#include <cmath>

namespace ppodice {

void ClipConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("clip epsilon must lie in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (!(entropy_coef >= 0.0) || !(value_coef >= 0.0)) throw ConfigError("loss coefficients must be nonnegative");
}

AdvantageBatch gae_advantages(const Vector& rewards, const Vector& values, const Vector& next_values,
                              const std::vector<std::uint8_t>& dones, int M, int T, double gamma, double gae_lambda) {
  const Eigen::Index n = static_cast<Eigen::Index>(M) * T;
  if (rewards.size() != n || values.size() != n || next_values.size() != n ||
      static_cast<Eigen::Index>(dones.size()) != n) {
    throw InputError("gae_advantages: inputs must all have M*T entries");
  }
  AdvantageBatch out;
  out.raw_advantages.resize(n);
  for (int j = 0; j < M; ++j) {
    double running = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const Eigen::Index i = static_cast<Eigen::Index>(j) * T + t;
      const double cont = dones[i] ? 0.0 : 1.0;
      const double delta = rewards(i) + gamma * next_values(i) * cont - values(i);
      running = delta + (t == T - 1 ? 0.0 : gamma * gae_lambda * cont * running);
      out.raw_advantages(i) = running;
    }
  }
  if (!out.raw_advantages.allFinite()) throw NumericalError("gae_advantages: non-finite advantage");
  out.advantages = out.raw_advantages;
  out.value_targets = out.raw_advantages + values;
  return out;
}

Vector value_predictions(const MlpParams& value, const Space& observation, const Matrix& states) {
  return forward(value, encode(observation, states)).col(0);
}

AdvantageBatch gae_advantages(const RolloutBatch& batch, const MlpParams& value, const Space& observation,
                              double gamma, double gae_lambda) {
  return gae_advantages(batch.rewards, value_predictions(value, observation, batch.states),
                        value_predictions(value, observation, batch.next_states), batch.dones, batch.M, batch.T,
                        gamma, gae_lambda);
}

void normalize_advantages(AdvantageBatch& batch) {
  const Vector& raw = batch.raw_advantages;
  const double n = static_cast<double>(raw.size());
  if (raw.size() == 0) return;
  batch.mean = raw.mean();
  const double var = (raw.array() - batch.mean).square().sum() / n;
  batch.std = std::max(std::sqrt(var), 1e-8);
  batch.advantages = (raw.array() - batch.mean) / batch.std;
  batch.normalized = true;
}

SurrogateTerms clipped_surrogate(const BoundPolicy& policy, const Matrix& states, const Matrix& actions,
                                 const Vector& old_log_probs, const Vector& advantages, double epsilon, bool clip) {
  const Eigen::Index n = states.rows();
  if (old_log_probs.size() != n || advantages.size() != n) {
    throw InputError("clipped_surrogate: log-probs and advantages must match the sample count");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("clipped_surrogate: epsilon must lie in (0, 1)");
  ad::Tape& tape = *policy.net.weights.front().tape;
  const ad::Var lp = log_prob(policy, states, actions);
  const ad::Var log_ratio_raw = ad::sub(lp, tape.constant(Matrix(old_log_probs)));

  SurrogateTerms out;
  Matrix mask = Matrix::Zero(n, 1);
  const Matrix& lr = log_ratio_raw.value();
  int clipped = 0;
  double ratio_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(lr(i, 0)) || std::abs(lr(i, 0)) > kMaxLogRatio) {
      ++out.excluded;
      continue;
    }
    mask(i, 0) = 1.0;
    const double k = std::exp(lr(i, 0));
    ratio_sum += k;
    if (std::abs(k - 1.0) > epsilon) ++clipped;
  }
  const int included = static_cast<int>(n) - out.excluded;
  out.clip_fraction = included > 0 ? static_cast<double>(clipped) / included : 0.0;
  out.mean_ratio = included > 0 ? ratio_sum / included : 1.0;
  if (included == 0) {
    out.objective = tape.constant(0.0);
    return out;
  }

  // Clipping the log ratio first keeps excluded rows finite; their gradient
  // is removed by the mask.
  const ad::Var ratio = ad::exp(ad::clip(log_ratio_raw, -kMaxLogRatio, kMaxLogRatio));
  const ad::Var adv = tape.constant(Matrix(advantages));
  ad::Var per_sample = ad::mul(adv, ratio);
  if (clip) {
    per_sample = ad::minimum(per_sample, ad::mul(adv, ad::clip(ratio, 1.0 - epsilon, 1.0 + epsilon)));
  }
  per_sample = ad::mul(per_sample, tape.constant(mask));
  out.objective = ad::scale(ad::sum(per_sample), 1.0 / included);
  return out;
}

ad::Var value_loss(const BoundMlp& value, const Space& observation, const Matrix& states, const Vector& targets) {
  if (states.rows() != targets.size()) throw InputError("value_loss: targets must match the sample count");
  ad::Tape& tape = *value.weights.front().tape;
  const ad::Var v = forward(value, tape.constant(encode(observation, states)));
  return ad::mean(ad::square(ad::sub(v, tape.constant(Matrix(targets)))));
}

ad::Var entropy_bonus(const BoundPolicy& policy, const Matrix& states) { return ad::mean(entropy(policy, states)); }

}  // namespace ppodice
