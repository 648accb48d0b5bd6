#pragma once

#include "ppodice/environment.hpp"
#include "ppodice/policy.hpp"

#include <cstdint>
#include <vector>

namespace ppodice {

/// M rollouts of exactly T steps each. Sample (j, t) is stored at row j*T + t.
/// When an episode ends inside a rollout, `done` is set on its last step,
/// `next_states` holds the true successor, and the following step starts from a
/// fresh initial state.
struct RolloutBatch {
  int M = 0;
  int T = 0;
  Matrix states;       // [M*T, obs raw dim]
  Matrix actions;      // [M*T, action raw dim]
  Vector rewards;      // [M*T]
  Matrix next_states;  // [M*T, obs raw dim]
  Vector log_probs;    // behavior log pi(a|s)
  std::vector<std::uint8_t> dones;
  /// Episode ended by the horizon cap rather than by the environment.
  std::vector<std::uint8_t> truncated;
  Matrix initial_states;  // [M, obs raw dim], first state of each rollout

  /// Undiscounted returns of episodes that finished inside the batch.
  std::vector<double> episode_returns;

  int size() const { return M * T; }
  int row(int j, int t) const { return j * T + t; }
};

/// Runs M rollouts of T steps. Rollout j draws its randomness from streams
/// derived from (seed, j) only, so the batch is identical whatever the order
/// of evaluation. Rollouts advance in lockstep to batch the policy forward pass.
RolloutBatch collect_rollouts(const PolicyParams& policy, const Environment& env, int M, int T, std::uint64_t seed);

/// Convenience overload drawing the seed from `rng`.
RolloutBatch collect_rollouts(const PolicyParams& policy, const Environment& env, int M, int T, Rng& rng);

}  // namespace ppodice
