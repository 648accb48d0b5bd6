#include "ppodice/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ppodice {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
  return static_cast<long>(d);
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<int> to_sizes(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (v.empty() || v == "none") return out;
  std::istringstream in(v);
  std::string part;
  while (std::getline(in, part, ',')) {
    const int n = to_int(key, trim(part));
    if (n < 1) throw ConfigError("'" + key + "': layer sizes must be positive");
    out.push_back(n);
  }
  return out;
}

std::string sizes_text(const std::vector<int>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string num(double d) {
  std::ostringstream o;
  o << std::setprecision(17) << d;
  return o.str();
}

template <typename F>
auto rethrow_as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  } catch (const CapabilityError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::string to_string(Algo a) { return a == Algo::kPpo ? "ppo" : "ppo_dice"; }

Algo parse_algo(const std::string& s) {
  if (s == "ppo") return Algo::kPpo;
  if (s == "ppo_dice") return Algo::kPpoDice;
  throw ConfigError("unknown algo '" + s + "' (expected ppo|ppo_dice)");
}

int TrainConfig::num_iterations() const {
  if (iterations > 0) return iterations;
  const long per = static_cast<long>(num_rollouts) * horizon;
  return per > 0 ? static_cast<int>(total_steps / per) : 0;
}

DivergenceSpec TrainConfig::divergence_spec() const {
  DivergenceSpec spec = reg.divergence;
  spec.representation = representation.value_or(spec.kind == DivergenceKind::kKL ? Representation::kDonskerVaradhan
                                                                                   : Representation::kVariationalDice);
  return spec;
}

void TrainConfig::validate() const {
  rethrow_as_config([&] { return make_env(env, env_params); });
  if (num_rollouts < 1 || horizon < 1) throw ConfigError("num_rollouts and horizon must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (minibatches < 1 || minibatches > num_rollouts * horizon) {
    throw ConfigError("minibatches must lie in [1, num_rollouts * horizon]");
  }
  if (num_iterations() < 1) throw ConfigError("training needs at least one iteration (check total_steps)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  clip.validate();
  if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm must be >= 0");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (eval_interval < 0 || eval_episodes < 1) throw ConfigError("eval_interval >= 0 and eval_episodes >= 1 required");
  RegularizerConfig r = reg;
  r.divergence = divergence_spec();
  r.validate();
  const auto e = make_env(env, env_params);
  if (disc_input == DiscriminatorInput::kJointOneHot &&
      (!e->observation_space().is_discrete() || !e->action_space().is_discrete())) {
    throw ConfigError("disc_input=joint_onehot needs a tabular environment");
  }
  if (reg.residual_mode == ResidualMode::kExpected && !e->action_space().is_discrete()) {
    throw ConfigError("residual_mode=expected needs discrete actions");
  }
  if (algo == Algo::kPpoDice && !e->action_space().is_discrete() &&
      choose_gradient_path(HeadKind::kDiagonalGaussian, reg.gradient_path) == GradientPath::kReparam &&
      disc_input != DiscriminatorInput::kConcat) {
    throw ConfigError("the reparametrized path needs a concat discriminator");
  }
  if (algo == Algo::kPpoDice && e->action_space().is_discrete() && reg.gradient_path == GradientPath::kReparam) {
    throw ConfigError("gradient_path=reparam is not available for discrete actions; use score_function or auto");
  }
}

std::vector<Setting> parse_settings(const std::string& text) {
  std::vector<Setting> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return out;
}

void apply_preset(TrainConfig& c, const std::string& name) {
  if (name == "mujoco") {
    c.learning_rate = 3e-4;
    c.clip.epsilon = 0.2;
    c.epochs = 10;
    c.minibatches = 4;
    c.gamma = 0.99;
    c.clip.gae_lambda = 0.95;
    c.clip.entropy_coef = 0.0;
    c.clip.value_coef = 0.5;
    c.num_rollouts = 1;
    c.horizon = 2048;
  } else if (name == "discrete") {
    c.learning_rate = 2.5e-4;
    c.clip.epsilon = 0.1;
    c.epochs = 4;
    c.minibatches = 4;
    c.gamma = 0.99;
    c.clip.gae_lambda = 0.95;
    c.clip.entropy_coef = 0.01;
    c.clip.value_coef = 0.5;
    c.num_rollouts = 8;
    c.horizon = 128;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected mujoco|discrete)");
  }
}

void apply_setting(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key.rfind("env.", 0) == 0) {
    const std::string p = key.substr(4);
    if (p.empty()) throw ConfigError("empty environment parameter name");
    c.env_params[p] = to_double(key, v);
    return;
  }
  if (key == "preset") return apply_preset(c, v);
  if (key == "env") {
    c.env = v;
  } else if (key == "algo") {
    c.algo = parse_algo(v);
  } else if (key == "seed") {
    const long s = to_long(key, v);
    if (s < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "iterations") {
    c.iterations = to_int(key, v);
  } else if (key == "total_steps") {
    c.total_steps = to_long(key, v);
  } else if (key == "num_rollouts") {
    c.num_rollouts = to_int(key, v);
  } else if (key == "horizon") {
    c.horizon = to_int(key, v);
  } else if (key == "epochs") {
    c.epochs = to_int(key, v);
  } else if (key == "minibatches") {
    c.minibatches = to_int(key, v);
  } else if (key == "learning_rate") {
    c.learning_rate = to_double(key, v);
  } else if (key == "lr_schedule") {
    if (v == "constant") {
      c.lr_schedule = LrSchedule::kConstant;
    } else if (v == "linear") {
      c.lr_schedule = LrSchedule::kLinear;
    } else {
      throw ConfigError("lr_schedule: expected constant|linear, got '" + v + "'");
    }
  } else if (key == "gamma") {
    c.gamma = to_double(key, v);
  } else if (key == "gae_lambda") {
    c.clip.gae_lambda = to_double(key, v);
  } else if (key == "clip_epsilon") {
    c.clip.epsilon = to_double(key, v);
  } else if (key == "entropy_coef") {
    c.clip.entropy_coef = to_double(key, v);
  } else if (key == "value_coef") {
    c.clip.value_coef = to_double(key, v);
  } else if (key == "normalize_advantages") {
    c.normalize_advantages = to_bool(key, v);
  } else if (key == "clip_action_loss") {
    c.clip_action_loss = to_bool(key, v);
  } else if (key == "hidden") {
    c.hidden = to_sizes(key, v);
  } else if (key == "activation") {
    c.activation = rethrow_as_config([&] { return parse_activation(v); });
  } else if (key == "initial_log_std") {
    c.initial_log_std = to_double(key, v);
  } else if (key == "max_grad_norm") {
    c.max_grad_norm = to_double(key, v);
  } else if (key == "adam_epsilon") {
    c.adam_epsilon = to_double(key, v);
  } else if (key == "lambda_mode") {
    const auto colon = v.find(':');
    const std::string mode = v.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : v.substr(colon + 1);
    if (mode == "fixed") {
      if (arg.empty()) throw ConfigError("lambda_mode fixed needs a value, e.g. fixed:0.5");
      c.reg.lambda_mode = LambdaMode::kFixed;
      c.reg.fixed_lambda = to_double(key, arg);
    } else if (mode == "adaptive") {
      c.reg.lambda_mode = LambdaMode::kAdaptive;
      c.reg.percentile = arg.empty() ? 90.0 : to_double(key, arg);
    } else {
      throw ConfigError("lambda_mode: expected fixed:X or adaptive:P, got '" + v + "'");
    }
  } else if (key == "lambda_signed_percentile") {
    c.reg.signed_percentile = to_bool(key, v);
  } else if (key == "divergence") {
    c.reg.divergence.kind = parse_divergence_kind(v);
  } else if (key == "representation") {
    c.representation = parse_representation(v);
  } else if (key == "tv_squash") {
    c.reg.divergence.squash_tv_residual = to_bool(key, v);
  } else if (key == "disc_steps") {
    c.reg.discriminator_steps = to_int(key, v);
  } else if (key == "disc_lr_mult") {
    c.reg.discriminator_lr_mult = to_double(key, v);
  } else if (key == "disc_hidden") {
    c.disc_hidden = to_sizes(key, v);
  } else if (key == "disc_input") {
    if (v == "concat") {
      c.disc_input = DiscriminatorInput::kConcat;
    } else if (v == "joint_onehot") {
      c.disc_input = DiscriminatorInput::kJointOneHot;
    } else {
      throw ConfigError("disc_input: expected concat|joint_onehot, got '" + v + "'");
    }
  } else if (key == "gradient_path") {
    c.reg.gradient_path = parse_gradient_path(v);
  } else if (key == "initial_action_mode") {
    c.reg.initial_action_mode = parse_initial_action_mode(v);
  } else if (key == "residual_mode") {
    c.reg.residual_mode = parse_residual_mode(v);
  } else if (key == "score_baseline") {
    c.reg.score_baseline = to_bool(key, v);
  } else if (key == "eval_interval") {
    c.eval_interval = to_int(key, v);
  } else if (key == "eval_episodes") {
    c.eval_episodes = to_int(key, v);
  } else if (key == "out_dir") {
    c.out_dir = v;
  } else if (key == "save_checkpoint") {
    c.save_checkpoint = to_bool(key, v);
  } else if (key == "record_wall_time") {
    c.record_wall_time = to_bool(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

TrainConfig config_from_settings(const std::vector<Setting>& settings) {
  TrainConfig c;
  for (const auto& [k, v] : settings) {
    if (k == "preset") apply_preset(c, v);
  }
  for (const auto& [k, v] : settings) {
    if (k != "preset") apply_setting(c, k, v);
  }
  return c;
}

TrainConfig load_config(const std::string& path, const std::vector<Setting>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<Setting> settings = parse_settings(ss.str());
  settings.insert(settings.end(), overrides.begin(), overrides.end());
  return config_from_settings(settings);
}

std::string to_config_text(const TrainConfig& c) {
  std::ostringstream o;
  o << "env = " << c.env << "\n";
  for (const auto& [k, v] : c.env_params) o << "env." << k << " = " << num(v) << "\n";
  o << "algo = " << to_string(c.algo) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "iterations = " << c.iterations << "\n";
  o << "total_steps = " << c.total_steps << "\n";
  o << "num_rollouts = " << c.num_rollouts << "\n";
  o << "horizon = " << c.horizon << "\n";
  o << "epochs = " << c.epochs << "\n";
  o << "minibatches = " << c.minibatches << "\n";
  o << "learning_rate = " << num(c.learning_rate) << "\n";
  o << "lr_schedule = " << (c.lr_schedule == LrSchedule::kConstant ? "constant" : "linear") << "\n";
  o << "gamma = " << num(c.gamma) << "\n";
  o << "gae_lambda = " << num(c.clip.gae_lambda) << "\n";
  o << "clip_epsilon = " << num(c.clip.epsilon) << "\n";
  o << "entropy_coef = " << num(c.clip.entropy_coef) << "\n";
  o << "value_coef = " << num(c.clip.value_coef) << "\n";
  o << "normalize_advantages = " << (c.normalize_advantages ? "true" : "false") << "\n";
  o << "clip_action_loss = " << (c.clip_action_loss ? "true" : "false") << "\n";
  o << "hidden = " << sizes_text(c.hidden) << "\n";
  o << "activation = " << to_string(c.activation) << "\n";
  o << "initial_log_std = " << num(c.initial_log_std) << "\n";
  o << "max_grad_norm = " << num(c.max_grad_norm) << "\n";
  o << "adam_epsilon = " << num(c.adam_epsilon) << "\n";
  if (c.reg.lambda_mode == LambdaMode::kFixed) {
    o << "lambda_mode = fixed:" << num(c.reg.fixed_lambda) << "\n";
  } else {
    o << "lambda_mode = adaptive:" << num(c.reg.percentile) << "\n";
  }
  o << "lambda_signed_percentile = " << (c.reg.signed_percentile ? "true" : "false") << "\n";
  o << "divergence = " << to_string(c.reg.divergence.kind) << "\n";
  if (c.representation) o << "representation = " << to_string(*c.representation) << "\n";
  o << "tv_squash = " << (c.reg.divergence.squash_tv_residual ? "true" : "false") << "\n";
  o << "disc_steps = " << c.reg.discriminator_steps << "\n";
  o << "disc_lr_mult = " << num(c.reg.discriminator_lr_mult) << "\n";
  o << "disc_hidden = " << sizes_text(c.disc_hidden) << "\n";
  o << "disc_input = " << (c.disc_input == DiscriminatorInput::kConcat ? "concat" : "joint_onehot") << "\n";
  o << "gradient_path = " << to_string(c.reg.gradient_path) << "\n";
  o << "initial_action_mode = " << to_string(c.reg.initial_action_mode) << "\n";
  o << "residual_mode = " << to_string(c.reg.residual_mode) << "\n";
  o << "score_baseline = " << (c.reg.score_baseline ? "true" : "false") << "\n";
  o << "eval_interval = " << c.eval_interval << "\n";
  o << "eval_episodes = " << c.eval_episodes << "\n";
  if (!c.out_dir.empty()) o << "out_dir = " << c.out_dir << "\n";
  o << "save_checkpoint = " << (c.save_checkpoint ? "true" : "false") << "\n";
  o << "record_wall_time = " << (c.record_wall_time ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace ppodice
