#pragma once

#include "ppodice/config.hpp"
#include "ppodice/dice_losses.hpp"
#include "ppodice/environment.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/policy.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ppodice {

struct MetricsRow {
  int iteration = 0;
  long env_steps = 0;
  double mean_episode_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double divergence_estimate = 0.0;  // NaN for plain PPO
  double lambda_used = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double wall_ms = 0.0;  // 0 unless record_wall_time
};

struct TrainResult {
  PolicyParams policy;
  MlpParams value;
  std::optional<DiscriminatorParams> discriminator;
  std::vector<MetricsRow> metrics;
  bool failed = false;
  std::string failure;
};

/// Called after every iteration with the row just produced and the current
/// policy. Returning false stops training early.
using IterationCallback = std::function<bool(const MetricsRow&, const PolicyParams&)>;

/// Runs the training loop: for each iteration collect M rollouts of T steps,
/// compute GAE advantages and value targets, pick lambda from the raw
/// advantages, normalize, then for each of N epochs run K discriminator steps
/// (ppo_dice only) followed by a value step and a policy step per minibatch.
/// Fully deterministic given the config.
///
/// A non-finite loss stops the run: a diagnostic row of NaNs is appended,
/// `failed` is set and, when out_dir is set, the last finite parameters are
/// written there. Output files (metrics.csv, curve.svg, checkpoints) are
/// written when config.out_dir is non-empty.
TrainResult train(const TrainConfig& config, const IterationCallback& callback = {});

struct EvalResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  int episodes = 0;
  bool stderr_undefined = false;  // a single episode; stderr reported as 0
};

/// Undiscounted returns of `episodes` episodes, each cut at the horizon cap.
/// Actions are sampled from the policy, or its mode when `deterministic`.
EvalResult evaluate(const PolicyParams& policy, const Environment& env, int episodes, Rng& rng,
                    bool deterministic = false);

}  // namespace ppodice
