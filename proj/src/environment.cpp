#include "ppodice/environment.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace ppodice {

namespace {

int checked_index(double raw, int n, const char* what) {
  if (!std::isfinite(raw) || raw != std::floor(raw) || raw < 0 || raw >= n) {
    std::ostringstream err;
    err << "invalid " << what << " index " << raw << " (expected integer in [0, " << n << "))";
    throw InputError(err.str());
  }
  return static_cast<int>(raw);
}

double param(const EnvParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void reject_unknown(const std::string& env, const EnvParams& p, const std::set<std::string>& known) {
  for (const auto& [k, v] : p) {
    if (!known.count(k)) throw ConfigError("env '" + env + "': unknown parameter '" + k + "'");
  }
}

int positive_int(const EnvParams& p, const std::string& key, double fallback) {
  const double v = param(p, key, fallback);
  if (v < 1 || v != std::floor(v)) throw ConfigError("env parameter '" + key + "' must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

Matrix encode(const Space& space, const Matrix& raw) {
  if (!space.is_discrete()) {
    if (raw.cols() != space.size) throw InputError("encode: box element has wrong dimension");
    return raw;
  }
  if (raw.cols() != 1) throw InputError("encode: discrete elements must be a single column");
  Matrix out = Matrix::Zero(raw.rows(), space.size);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    out(i, checked_index(raw(i, 0), space.size, "discrete")) = 1.0;
  }
  return out;
}

TabularEnv::TabularEnv(std::string name, TabularMdp mdp, int horizon_cap)
    : name_(std::move(name)), mdp_(std::move(mdp)), horizon_cap_(horizon_cap) {
  mdp_.validate();
  if (horizon_cap_ < 1) throw InputError("horizon cap must be positive");
}

Vector TabularEnv::sample_initial(Rng& rng) const {
  Vector s(1);
  s(0) = sample_discrete(mdp_.initial_dist.data(), mdp_.n_states, rng);
  return s;
}

StepResult TabularEnv::step(const Vector& state, const Vector& action, Rng& rng) const {
  if (state.size() != 1 || action.size() != 1) throw InputError("tabular step: expected scalar state and action");
  const int s = checked_index(state(0), mdp_.n_states, "state");
  const int a = checked_index(action(0), mdp_.n_actions, "action");
  StepResult out;
  out.reward = mdp_.reward(s, a);
  out.done = mdp_.is_terminal(s);
  // Row-major copy of the transition row for sampling.
  const Eigen::RowVectorXd row = mdp_.transition.row(mdp_.index(s, a));
  out.next_state.resize(1);
  out.next_state(0) = sample_discrete(row.data(), mdp_.n_states, rng);
  return out;
}

Vector ContinuousEnv::checked_action(const Vector& state, const Vector& action) const {
  if (state.size() != state_dim_ || !state.allFinite()) throw InputError("continuous step: invalid state");
  if (action.size() != action_dim_) throw InputError("continuous step: action has wrong dimension");
  if (!action.allFinite()) throw InputError("continuous step: non-finite action");
  return action.cwiseMax(-1.0).cwiseMin(1.0);
}

Vector PointMassEnv::sample_initial(Rng& rng) const {
  Vector s(2);
  for (int i = 0; i < 2; ++i) s(i) = 2.0 * uniform01(rng) - 1.0;
  return s;
}

StepResult PointMassEnv::step(const Vector& state, const Vector& action, Rng& /*rng*/) const {
  const Vector a = checked_action(state, action);
  StepResult out;
  out.reward = -state.squaredNorm();
  out.next_state = state + dt_ * a;
  out.done = false;
  return out;
}

Vector CartPoleEnv::sample_initial(Rng& rng) const {
  Vector s(4);
  for (int i = 0; i < 4; ++i) s(i) = 0.1 * uniform01(rng) - 0.05;
  return s;
}

StepResult CartPoleEnv::step(const Vector& state, const Vector& action, Rng& /*rng*/) const {
  constexpr double kGravity = 9.8;
  constexpr double kCartMass = 1.0;
  constexpr double kPoleMass = 0.1;
  constexpr double kTotalMass = kCartMass + kPoleMass;
  constexpr double kHalfLength = 0.5;
  constexpr double kForceScale = 10.0;
  constexpr double kTau = 0.02;
  constexpr double kThetaLimit = 12.0 * 2.0 * M_PI / 360.0;
  constexpr double kXLimit = 2.4;

  const Vector a = checked_action(state, action);
  const double x = state(0), x_dot = state(1), theta = state(2), theta_dot = state(3);
  const double force = kForceScale * a(0);
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + kPoleMass * kHalfLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                           (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMass * kHalfLength * theta_acc * cos_t / kTotalMass;

  StepResult out;
  out.next_state.resize(4);
  out.next_state << x + kTau * x_dot, x_dot + kTau * x_acc, theta + kTau * theta_dot,
      theta_dot + kTau * theta_acc;
  out.reward = 1.0;
  out.done = std::abs(out.next_state(0)) > kXLimit || std::abs(out.next_state(2)) > kThetaLimit;
  return out;
}

namespace {

std::unique_ptr<Environment> build_env(const std::string& name, const EnvParams& params) {
  if (name == "chain") {
    reject_unknown(name, params, {"n", "slip", "gamma", "horizon"});
    auto mdp = make_chain(positive_int(params, "n", 5), param(params, "slip", 0.1), param(params, "gamma", 0.99));
    return std::make_unique<TabularEnv>(name, std::move(mdp), positive_int(params, "horizon", 100));
  }
  if (name == "gridworld") {
    reject_unknown(name, params, {"width", "height", "slip", "gamma", "horizon"});
    auto mdp = make_gridworld(positive_int(params, "width", 4), positive_int(params, "height", 4),
                              param(params, "slip", 0.0), param(params, "gamma", 0.99));
    return std::make_unique<TabularEnv>(name, std::move(mdp), positive_int(params, "horizon", 100));
  }
  if (name == "random_mdp") {
    reject_unknown(name, params, {"states", "actions", "seed", "gamma", "horizon"});
    const double seed = param(params, "seed", 0.0);
    if (seed < 0 || seed != std::floor(seed)) throw ConfigError("random_mdp: seed must be a nonnegative integer");
    auto mdp = make_random_mdp(positive_int(params, "states", 4), positive_int(params, "actions", 2),
                               static_cast<std::uint64_t>(seed), param(params, "gamma", 0.9));
    return std::make_unique<TabularEnv>(name, std::move(mdp), positive_int(params, "horizon", 100));
  }
  if (name == "point_mass") {
    reject_unknown(name, params, {"dt", "horizon", "gamma"});
    const double dt = param(params, "dt", 0.1);
    if (!(dt > 0.0)) throw ConfigError("point_mass: dt must be positive");
    return std::make_unique<PointMassEnv>(dt, positive_int(params, "horizon", 50));
  }
  if (name == "cartpole_analog") {
    reject_unknown(name, params, {"horizon", "gamma"});
    return std::make_unique<CartPoleEnv>(positive_int(params, "horizon", 200));
  }
  throw ConfigError("unknown environment '" + name + "'");
}

}  // namespace

std::unique_ptr<Environment> make_env(const std::string& name, const EnvParams& params) {
  try {
    return build_env(name, params);
  } catch (const InputError& e) {
    throw ConfigError(std::string("env '") + name + "': " + e.what());
  }
}

}  // namespace ppodice
