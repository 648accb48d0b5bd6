#include "ppodice/trainer.hpp"

#include "ppodice/adam.hpp"
#include "ppodice/checkpoint.hpp"
#include "ppodice/dice_regularizer.hpp"
#include "ppodice/policy_opt.hpp"
#include "ppodice/report.hpp"
#include "ppodice/rollout.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

namespace ppodice {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> shuffled(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = std::min(i, static_cast<int>(uniform01(rng) * (i + 1)));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

std::vector<std::vector<int>> split(const std::vector<int>& idx, int parts) {
  std::vector<std::vector<int>> out(parts);
  const int n = static_cast<int>(idx.size());
  const int base = n / parts, extra = n % parts;
  int pos = 0;
  for (int p = 0; p < parts; ++p) {
    const int len = base + (p < extra ? 1 : 0);
    out[p].assign(idx.begin() + pos, idx.begin() + pos + len);
    pos += len;
  }
  return out;
}

Matrix rows_of(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

Vector rows_of(const Vector& v, const std::vector<int>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(rows[k]);
  return out;
}

std::vector<Matrix> copy_grads(const std::vector<const Matrix*>& g) {
  std::vector<Matrix> out;
  out.reserve(g.size());
  for (const Matrix* m : g) out.push_back(*m);
  return out;
}

std::vector<Matrix> negated(const std::vector<const Matrix*>& g) {
  std::vector<Matrix> out;
  out.reserve(g.size());
  for (const Matrix* m : g) out.push_back(-*m);
  return out;
}

void write_outputs(const TrainConfig& config, const TrainResult& result) {
  if (config.out_dir.empty()) return;
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  write_metrics_csv((dir / "metrics.csv").string(), result.metrics);
  write_learning_curve_svg((dir / "curve.svg").string(), result.metrics, config.env + " / " + to_string(config.algo));
  if (config.save_checkpoint) {
    save_policy((dir / "policy.params").string(), result.policy);
    save_mlp((dir / "value.params").string(), result.value);
    if (result.discriminator) save_mlp((dir / "discriminator.params").string(), result.discriminator->net);
  }
}

}  // namespace

EvalResult evaluate(const PolicyParams& policy, const Environment& env, int episodes, Rng& rng, bool deterministic) {
  if (episodes < 1) throw InputError("evaluate: episodes must be at least 1");
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    Vector state = env.sample_initial(rng);
    double total = 0.0;
    for (int t = 0; t < env.horizon_cap(); ++t) {
      const Matrix s = state.transpose();
      Vector action;
      if (deterministic) {
        const Matrix out = policy_output(policy, s);
        action.resize(policy.action.raw_dim());
        if (policy.head == HeadKind::kCategorical) {
          Eigen::Index a = 0;
          out.row(0).maxCoeff(&a);
          action(0) = static_cast<double>(a);
        } else {
          action = out.row(0).transpose();
        }
      } else {
        action = sample(policy, s, rng).actions.row(0).transpose();
      }
      const StepResult step = env.step(state, action, rng);
      total += step.reward;
      if (step.done) break;
      state = step.next_state;
    }
    returns.push_back(total);
  }
  EvalResult r;
  r.episodes = episodes;
  const double n = static_cast<double>(episodes);
  r.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  if (episodes == 1) {
    r.stderr_undefined = true;
    return r;
  }
  double ss = 0.0;
  for (double x : returns) ss += (x - r.mean) * (x - r.mean);
  r.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return r;
}

TrainResult train(const TrainConfig& config, const IterationCallback& callback) {
  config.validate();
  const auto env = make_env(config.env, config.env_params);
  const Space obs = env->observation_space();
  const Space act = env->action_space();
  const bool dice = config.algo == Algo::kPpoDice;
  const DivergenceSpec spec = config.divergence_spec();
  const int iterations = config.num_iterations();
  const int M = config.num_rollouts, T = config.horizon;

  TrainResult result;
  Rng init = stream_rng(config.seed, Stream::kInit);
  result.policy = make_policy(obs, act, config.hidden, init, config.initial_log_std);
  result.policy.net.activation = config.activation;
  std::vector<int> vsizes{obs.encoded_dim()};
  vsizes.insert(vsizes.end(), config.hidden.begin(), config.hidden.end());
  vsizes.push_back(1);
  result.value = init_mlp(vsizes, init, 1.0, 1.0, config.activation);
  if (dice) {
    Rng disc_init = stream_rng(config.seed, Stream::kInit, 1);
    result.discriminator = make_discriminator(obs, act, config.disc_hidden, disc_init, config.disc_input);
    result.discriminator->net.activation = config.activation;
  }

  AdamConfig acfg;
  acfg.learning_rate = config.learning_rate;
  acfg.epsilon = config.adam_epsilon;
  acfg.max_grad_norm = config.max_grad_norm;
  Adam policy_opt(acfg), value_opt(acfg);
  AdamConfig dcfg = acfg;
  dcfg.learning_rate = config.learning_rate * config.reg.discriminator_lr_mult;
  Adam disc_opt(dcfg);
  const GradientPath path = choose_gradient_path(result.policy.head, config.reg.gradient_path);

  PolicyParams last_good_policy = result.policy;
  MlpParams last_good_value = result.value;
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < iterations; ++it) {
    MetricsRow row;
    row.iteration = it + 1;
    row.env_steps = static_cast<long>(it + 1) * M * T;
    try {
      if (config.lr_schedule == LrSchedule::kLinear) {
        const double frac = 1.0 - static_cast<double>(it) / iterations;
        policy_opt.set_learning_rate(config.learning_rate * frac);
        value_opt.set_learning_rate(config.learning_rate * frac);
        disc_opt.set_learning_rate(dcfg.learning_rate * frac);
      }
      const RolloutBatch batch =
          collect_rollouts(result.policy, *env, M, T, derive_seed(config.seed, static_cast<std::uint64_t>(Stream::kRollout), it));
      AdvantageBatch adv = gae_advantages(batch, result.value, obs, config.gamma, config.clip.gae_lambda);
      const double lambda = dice ? regularizer_lambda(config.reg, adv.raw_advantages) : 0.0;
      if (config.normalize_advantages) normalize_advantages(adv);
      row.lambda_used = lambda;

      TransitionSet set;
      if (dice) set = transitions(batch, config.reg.initial_action_mode);

      Rng shuffle_rng = stream_rng(config.seed, Stream::kShuffle, it);
      Rng disc_rng = stream_rng(config.seed, Stream::kDiscriminator, it);
      Rng reg_rng = stream_rng(config.seed, Stream::kRegularizer, it);

      double divergence = kNaN;
      for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (dice) {
          const DiscriminatorLoopResult d =
              discriminator_loop(*result.discriminator, disc_opt, set, result.policy, config.gamma, spec,
                                 config.reg.discriminator_steps, disc_rng, config.reg.residual_mode);
          divergence = -d.final_loss;
        }
        double policy_loss = 0.0, value_loss_sum = 0.0, clip_frac = 0.0;
        const auto parts = split(shuffled(batch.size(), shuffle_rng), config.minibatches);
        for (const auto& rows : parts) {
          const Matrix states = rows_of(batch.states, rows);
          const Matrix actions = rows_of(batch.actions, rows);

          {
            ad::Tape tape;
            const BoundMlp v = bind(tape, result.value, true);
            const ad::Var loss =
                ad::scale(value_loss(v, obs, states, rows_of(adv.value_targets, rows)), config.clip.value_coef);
            if (!std::isfinite(loss.scalar())) throw NumericalError("value loss is non-finite");
            tape.backward(loss);
            value_opt.step(tensors(result.value), copy_grads(tensors(gradients(tape, v))));
            value_loss_sum += loss.scalar();
          }

          {
            ad::Tape tape;
            const BoundPolicy p = bind(tape, result.policy, true);
            const SurrogateTerms surr =
                clipped_surrogate(p, states, actions, rows_of(batch.log_probs, rows), rows_of(adv.advantages, rows),
                                  config.clip.epsilon, config.clip_action_loss);
            ad::Var objective = surr.objective;
            if (config.clip.entropy_coef > 0.0) {
              objective = ad::add(objective, ad::scale(entropy_bonus(p, states), config.clip.entropy_coef));
            }
            if (dice && lambda != 0.0) {
              const TransitionSet sub = subset(set, rows, config.reg.initial_action_mode);
              const PolicySamples samples = draw_policy_samples(result.policy, sub, reg_rng);
              if (path == GradientPath::kReparam) {
                objective = regularized_policy_loss_reparam(objective, p, *result.discriminator, sub, samples,
                                                            lambda, config.gamma, spec);
              } else {
                objective = regularized_policy_loss_score(objective, p, *result.discriminator, sub, samples, lambda,
                                                          config.gamma, spec, config.reg.residual_mode,
                                                          config.reg.score_baseline &&
                                                              result.policy.head == HeadKind::kCategorical);
              }
            }
            if (!std::isfinite(objective.scalar())) throw NumericalError("policy objective is non-finite");
            tape.backward(objective);
            const PolicyParams g = gradients(tape, p);
            policy_opt.step(tensors(result.policy), negated(tensors(g)));
            policy_loss += -objective.scalar();
            clip_frac += surr.clip_fraction;
          }
        }
        const double k = static_cast<double>(parts.size());
        row.policy_loss = policy_loss / k;
        row.value_loss = value_loss_sum / k;
        row.clip_fraction = clip_frac / k;
      }
      row.divergence_estimate = divergence;
      row.entropy = mean_entropy(result.policy, batch.states);

      if (config.eval_interval > 0 && (it + 1) % config.eval_interval == 0) {
        // Same episode seeds at every evaluation, so successive points differ only through the policy.
        Rng eval_rng = stream_rng(config.seed, Stream::kEvaluation);
        row.mean_episode_return = evaluate(result.policy, *env, config.eval_episodes, eval_rng).mean;
      } else if (!batch.episode_returns.empty()) {
        row.mean_episode_return = std::accumulate(batch.episode_returns.begin(), batch.episode_returns.end(), 0.0) /
                                  static_cast<double>(batch.episode_returns.size());
      } else {
        row.mean_episode_return = kNaN;
      }
      for (const Matrix* t : tensors(result.policy)) {
        if (!t->allFinite()) throw NumericalError("policy parameters became non-finite");
      }
      for (const Matrix* t : tensors(result.value)) {
        if (!t->allFinite()) throw NumericalError("value parameters became non-finite");
      }
    } catch (const NumericalError& e) {
      MetricsRow diag;
      diag.iteration = it + 1;
      diag.env_steps = row.env_steps;
      diag.mean_episode_return = diag.policy_loss = diag.value_loss = diag.divergence_estimate = kNaN;
      diag.lambda_used = row.lambda_used;
      diag.clip_fraction = diag.entropy = kNaN;
      result.metrics.push_back(diag);
      result.failed = true;
      result.failure = "iteration " + std::to_string(it + 1) + ": " + e.what();
      result.policy = last_good_policy;
      result.value = last_good_value;
      break;
    }
    if (config.record_wall_time) {
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    result.metrics.push_back(row);
    last_good_policy = result.policy;
    last_good_value = result.value;
    if (callback && !callback(row, result.policy)) break;
  }
  write_outputs(config, result);
  return result;
}

}  // namespace ppodice
