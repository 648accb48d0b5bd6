#pragma once

#include "ppodice/common.hpp"
#include "ppodice/tabular_mdp.hpp"

#include <map>
#include <memory>
#include <string>

namespace ppodice {

/// Observation or action space. Discrete spaces hold integer indices stored as
/// a single double; box spaces hold `size` reals, with optional bounds.
struct Space {
  enum class Kind { kDiscrete, kBox };
  Kind kind = Kind::kDiscrete;
  int size = 0;  // number of elements (discrete) or dimension (box)
  double low = -kInfinity;
  double high = kInfinity;

  static Space discrete(int n) { return {Kind::kDiscrete, n, 0.0, static_cast<double>(n - 1)}; }
  static Space box(int dim, double lo = -kInfinity, double hi = kInfinity) {
    return {Kind::kBox, dim, lo, hi};
  }

  bool is_discrete() const { return kind == Kind::kDiscrete; }
  /// Width of a raw element as stored in batches (1 for discrete).
  int raw_dim() const { return is_discrete() ? 1 : size; }
  /// Width after feature encoding (one-hot for discrete).
  int encoded_dim() const { return size; }
};

/// Encode raw rows (one element per row) into network features: one-hot for
/// discrete spaces, identity for box spaces.
Matrix encode(const Space& space, const Matrix& raw);

struct StepResult {
  Vector next_state;
  double reward = 0.0;
  bool done = false;
};

/// Simulator interface. Environments are immutable; the episode state is
/// passed in explicitly so every call is a pure function of its inputs and
/// the random generator.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual Space observation_space() const = 0;
  virtual Space action_space() const = 0;
  virtual Vector sample_initial(Rng& rng) const = 0;

  /// Throws InputError for an invalid action index or non-finite action.
  virtual StepResult step(const Vector& state, const Vector& action, Rng& rng) const = 0;

  /// Episodes are cut after this many steps (reported as done).
  virtual int horizon_cap() const = 0;

  /// Underlying finite MDP, or nullptr for continuous environments.
  virtual const TabularMdp* tabular() const { return nullptr; }
};

/// Simulator over a TabularMdp.
class TabularEnv final : public Environment {
 public:
  TabularEnv(std::string name, TabularMdp mdp, int horizon_cap);

  std::string name() const override { return name_; }
  Space observation_space() const override { return Space::discrete(mdp_.n_states); }
  Space action_space() const override { return Space::discrete(mdp_.n_actions); }
  Vector sample_initial(Rng& rng) const override;
  StepResult step(const Vector& state, const Vector& action, Rng& rng) const override;
  int horizon_cap() const override { return horizon_cap_; }
  const TabularMdp* tabular() const override { return &mdp_; }

  const TabularMdp& mdp() const { return mdp_; }

 private:
  std::string name_;
  TabularMdp mdp_;
  int horizon_cap_;
};

/// Continuous-state environment with bounded continuous actions. Actions are
/// clipped to [-1, 1] per coordinate before the dynamics are applied.
class ContinuousEnv : public Environment {
 public:
  ContinuousEnv(int state_dim, int action_dim, int horizon_cap)
      : state_dim_(state_dim), action_dim_(action_dim), horizon_cap_(horizon_cap) {}

  Space observation_space() const override { return Space::box(state_dim_); }
  Space action_space() const override { return Space::box(action_dim_, -1.0, 1.0); }
  int horizon_cap() const override { return horizon_cap_; }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

 protected:
  Vector checked_action(const Vector& state, const Vector& action) const;

 private:
  int state_dim_;
  int action_dim_;
  int horizon_cap_;
};

/// 2-D point mass: x' = x + dt * clip(a, -1, 1), reward -|x|^2 on the current
/// state. Initial state uniform on [-1, 1]^2. Never terminates before the cap.
class PointMassEnv final : public ContinuousEnv {
 public:
  PointMassEnv(double dt, int horizon_cap) : ContinuousEnv(2, 2, horizon_cap), dt_(dt) {}

  std::string name() const override { return "point_mass"; }
  Vector sample_initial(Rng& rng) const override;
  StepResult step(const Vector& state, const Vector& action, Rng& rng) const override;

  double dt() const { return dt_; }

 private:
  double dt_;
};

/// Cart-pole analog. State (x, x_dot, theta, theta_dot); the scalar action is
/// clipped to [-1, 1] and scaled to a force of 10 N. Explicit Euler step with
/// tau = 0.02 s using
///   temp      = (F + m_p l theta_dot^2 sin theta) / (m_c + m_p)
///   theta_acc = (g sin theta - cos theta temp) /
///               (l (4/3 - m_p cos^2 theta / (m_c + m_p)))
///   x_acc     = temp - m_p l theta_acc cos theta / (m_c + m_p)
/// with g = 9.8, m_c = 1, m_p = 0.1, l = 0.5. Reward 1 per step; the episode
/// terminates when |x| > 2.4 or |theta| > 12 degrees.
class CartPoleEnv final : public ContinuousEnv {
 public:
  explicit CartPoleEnv(int horizon_cap) : ContinuousEnv(4, 1, horizon_cap) {}

  std::string name() const override { return "cartpole_analog"; }
  Vector sample_initial(Rng& rng) const override;
  StepResult step(const Vector& state, const Vector& action, Rng& rng) const override;
};

using EnvParams = std::map<std::string, double>;

/// Build a named environment. Known names: chain, gridworld, random_mdp,
/// point_mass, cartpole_analog. Unknown names or parameters raise ConfigError.
///
/// Parameters (defaults in brackets):
///   chain:      n [5], slip [0.1], gamma [0.99], horizon [100]
///   gridworld:  width [4], height [4], slip [0], gamma [0.99], horizon [100]
///   random_mdp: states [4], actions [2], seed [0], gamma [0.9], horizon [100]
///   point_mass: dt [0.1], horizon [50]
///   cartpole_analog: horizon [200]
std::unique_ptr<Environment> make_env(const std::string& name, const EnvParams& params = {});

}  // namespace ppodice
