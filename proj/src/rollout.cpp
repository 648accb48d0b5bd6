#include "ppodice/rollout.hpp"

#include <cmath>

namespace ppodice {

namespace {

constexpr std::uint64_t kPolicyStream = 1;
constexpr std::uint64_t kEnvStream = 2;

void check_compatible(const PolicyParams& policy, const Environment& env) {
  const Space obs = env.observation_space();
  const Space act = env.action_space();
  if (obs.kind != policy.observation.kind || obs.size != policy.observation.size ||
      act.kind != policy.action.kind || act.size != policy.action.size) {
    throw InputError("collect_rollouts: policy spaces do not match environment '" + env.name() + "'");
  }
}

}  // namespace

RolloutBatch collect_rollouts(const PolicyParams& policy, const Environment& env, int M, int T, std::uint64_t seed) {
  if (M < 1 || T < 1) throw InputError("collect_rollouts: M and T must be at least 1");
  check_compatible(policy, env);
  const int obs_dim = policy.observation.raw_dim();
  const int act_dim = policy.action.raw_dim();
  const bool categorical = policy.head == HeadKind::kCategorical;

  RolloutBatch b;
  b.M = M;
  b.T = T;
  const int n = M * T;
  b.states.resize(n, obs_dim);
  b.actions.resize(n, act_dim);
  b.rewards.resize(n);
  b.next_states.resize(n, obs_dim);
  b.log_probs.resize(n);
  b.dones.assign(n, 0);
  b.truncated.assign(n, 0);
  b.initial_states.resize(M, obs_dim);

  std::vector<Rng> policy_rng;
  std::vector<Rng> env_rng;
  for (int j = 0; j < M; ++j) {
    policy_rng.emplace_back(derive_seed(seed, kPolicyStream, static_cast<std::uint64_t>(j)));
    env_rng.emplace_back(derive_seed(seed, kEnvStream, static_cast<std::uint64_t>(j)));
  }

  Matrix current(M, obs_dim);
  std::vector<int> episode_len(M, 0);
  std::vector<double> episode_ret(M, 0.0);
  for (int j = 0; j < M; ++j) {
    current.row(j) = env.sample_initial(env_rng[j]).transpose();
    b.initial_states.row(j) = current.row(j);
  }

  const Matrix ls = categorical ? Matrix() : policy.clamped_log_std();
  const double log_norm = categorical ? 0.0 : ls.sum() + 0.5 * act_dim * std::log(2.0 * M_PI);

  for (int t = 0; t < T; ++t) {
    const Matrix out = policy_output(policy, current);
    for (int j = 0; j < M; ++j) {
      const int r = b.row(j, t);
      Vector action(act_dim);
      double lp = 0.0;
      if (categorical) {
        const Eigen::RowVectorXd logits = out.row(j);
        const double mx = logits.maxCoeff();
        const double lse = mx + std::log((logits.array() - mx).exp().sum());
        const Eigen::RowVectorXd p = (logits.array() - lse).exp();
        const int a = sample_discrete(p.data(), static_cast<int>(p.size()), policy_rng[j]);
        action(0) = a;
        lp = logits(a) - lse;
      } else {
        double sq = 0.0;
        for (int k = 0; k < act_dim; ++k) {
          const double z = standard_normal(policy_rng[j]);
          action(k) = out(j, k) + std::exp(ls(0, k)) * z;
          sq += z * z;
        }
        lp = -0.5 * sq - log_norm;
      }

      const Vector state = current.row(j).transpose();
      const StepResult step = env.step(state, action, env_rng[j]);
      if (!step.next_state.allFinite() || !std::isfinite(step.reward)) {
        throw NumericalError("environment '" + env.name() + "' produced a non-finite transition");
      }
      b.states.row(r) = current.row(j);
      b.actions.row(r) = action.transpose();
      b.rewards(r) = step.reward;
      b.next_states.row(r) = step.next_state.transpose();
      b.log_probs(r) = lp;

      ++episode_len[j];
      episode_ret[j] += step.reward;
      const bool capped = episode_len[j] >= env.horizon_cap();
      if (step.done || capped) {
        b.dones[r] = 1;
        b.truncated[r] = step.done ? 0 : 1;
        b.episode_returns.push_back(episode_ret[j]);
        episode_len[j] = 0;
        episode_ret[j] = 0.0;
        current.row(j) = env.sample_initial(env_rng[j]).transpose();
      } else {
        current.row(j) = step.next_state.transpose();
      }
    }
  }
  return b;
}

RolloutBatch collect_rollouts(const PolicyParams& policy, const Environment& env, int M, int T, Rng& rng) {
  return collect_rollouts(policy, env, M, T, rng());
}

}  // namespace ppodice
