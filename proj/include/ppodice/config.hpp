#pragma once

// Training configuration.
//
// Files are flat `key = value` text. Blank lines and lines starting with '#'
// are ignored. Environment parameters use `env.<name> = value`. A `preset`
// key (mujoco | discrete) is applied before every other key, whatever its
// position, so explicit keys always win. Command-line overrides are applied
// after the file.
//
// Keys (defaults are the mujoco preset):
//   env, env.*, algo (ppo | ppo_dice), seed, iterations, total_steps,
//   num_rollouts (M), horizon (T), epochs (N), minibatches, learning_rate,
//   lr_schedule (constant | linear), gamma, gae_lambda, clip_epsilon,
//   entropy_coef, value_coef, normalize_advantages, clip_action_loss,
//   hidden, activation, initial_log_std, max_grad_norm, adam_epsilon,
//   lambda_mode (fixed:X | adaptive:P), lambda_signed_percentile,
//   divergence (kl | chi2 | tv), representation (dice | dv), tv_squash,
//   disc_steps (K), disc_lr_mult (c_psi), disc_hidden, disc_input
//   (concat | joint_onehot), gradient_path (auto | reparam | score_function),
//   initial_action_mode (term | rollout), residual_mode (sampled | expected),
//   score_baseline (categorical policies only),
//   eval_interval, eval_episodes, out_dir, save_checkpoint, record_wall_time.

#include "ppodice/dice_losses.hpp"
#include "ppodice/dice_regularizer.hpp"
#include "ppodice/environment.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/policy_opt.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ppodice {

enum class Algo { kPpo, kPpoDice };
enum class LrSchedule { kConstant, kLinear };

struct TrainConfig {
  std::string env = "chain";
  EnvParams env_params;
  Algo algo = Algo::kPpoDice;
  std::uint64_t seed = 0;
  int iterations = 0;          // wins over total_steps when > 0
  long total_steps = 1000000;  // iterations = total_steps / (M T) otherwise
  int num_rollouts = 1;        // M
  int horizon = 2048;          // T
  int epochs = 10;             // N
  int minibatches = 4;
  double learning_rate = 3e-4;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  double gamma = 0.99;
  ClipConfig clip;  // epsilon 0.2, gae_lambda 0.95, entropy 0, value 0.5
  bool normalize_advantages = true;
  bool clip_action_loss = true;
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::kTanh;
  double initial_log_std = 0.0;
  double max_grad_norm = 0.5;
  double adam_epsilon = 1e-5;

  RegularizerConfig reg;
  /// Unset means "dv for KL, dice otherwise".
  std::optional<Representation> representation;
  std::vector<int> disc_hidden{64, 64};
  DiscriminatorInput disc_input = DiscriminatorInput::kConcat;

  /// 0: report returns of episodes finished in the batch. Otherwise every
  /// eval_interval-th row reports evaluate() over eval_episodes episodes
  /// replayed from the same seeds each time.
  int eval_interval = 0;
  int eval_episodes = 10;
  std::string out_dir;     // empty: no files
  bool save_checkpoint = true;
  bool record_wall_time = false;

  /// Resolved number of iterations.
  int num_iterations() const;
  /// Divergence spec with the representation default applied.
  DivergenceSpec divergence_spec() const;
  /// Throws ConfigError on any invalid value, including unknown env names.
  void validate() const;
};

using Setting = std::pair<std::string, std::string>;

/// Parses `key = value` lines. ConfigError on malformed lines.
std::vector<Setting> parse_settings(const std::string& text);

/// Applies one key. ConfigError on unknown keys or bad values.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

/// Applies a preset (mujoco | discrete).
void apply_preset(TrainConfig& config, const std::string& name);

/// Builds a config from settings: presets first, then keys in order.
TrainConfig config_from_settings(const std::vector<Setting>& settings);

/// Reads a config file (IoError if unreadable) and applies overrides after it.
TrainConfig load_config(const std::string& path, const std::vector<Setting>& overrides = {});

/// Text form that load_config reads back to an equal config.
std::string to_config_text(const TrainConfig& config);

std::string to_string(Algo a);
Algo parse_algo(const std::string& s);

}  // namespace ppodice
