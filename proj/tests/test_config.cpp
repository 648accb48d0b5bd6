#include "ppodice/config.hpp"
#include "ppodice/report.hpp"
#include "ppodice/suite.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ppodice;

TEST(Config, ParseSettingsSkipsCommentsAndTrims) {
  const auto s = parse_settings("# comment\n\n  env = gridworld  \nalgo=ppo\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], Setting("env", "gridworld"));
  EXPECT_EQ(s[1], Setting("algo", "ppo"));
  EXPECT_THROW(parse_settings("no equals sign\n"), ConfigError);
}

TEST(Config, DefaultsAreMujocoPreset) {
  const TrainConfig c;
  EXPECT_EQ(c.learning_rate, 3e-4);
  EXPECT_EQ(c.clip.epsilon, 0.2);
  EXPECT_EQ(c.epochs, 10);
  EXPECT_EQ(c.horizon, 2048);
  EXPECT_EQ(c.num_rollouts, 1);
  EXPECT_EQ(c.gamma, 0.99);
  EXPECT_EQ(c.reg.percentile, 90.0);
  EXPECT_EQ(c.divergence_spec().representation, Representation::kDonskerVaradhan);
}

TEST(Config, PresetAppliesBeforeOtherKeys) {
  const TrainConfig c = config_from_settings({{"learning_rate", "0.01"}, {"preset", "discrete"}});
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.clip.epsilon, 0.1);
  EXPECT_EQ(c.epochs, 4);
  EXPECT_EQ(c.num_rollouts, 8);
  EXPECT_EQ(c.horizon, 128);
  EXPECT_EQ(c.clip.entropy_coef, 0.01);
  TrainConfig d;
  EXPECT_THROW(apply_preset(d, "atari"), ConfigError);
}

TEST(Config, KeysAndLambdaModes) {
  TrainConfig c;
  apply_setting(c, "lambda_mode", "fixed:0.5");
  EXPECT_EQ(c.reg.lambda_mode, LambdaMode::kFixed);
  EXPECT_EQ(c.reg.fixed_lambda, 0.5);
  apply_setting(c, "lambda_mode", "adaptive:75");
  EXPECT_EQ(c.reg.lambda_mode, LambdaMode::kAdaptive);
  EXPECT_EQ(c.reg.percentile, 75.0);
  apply_setting(c, "hidden", "16,8");
  EXPECT_EQ(c.hidden, (std::vector<int>{16, 8}));
  apply_setting(c, "env.slip", "0.3");
  EXPECT_EQ(c.env_params.at("slip"), 0.3);
  apply_setting(c, "divergence", "chi2");
  EXPECT_EQ(c.divergence_spec().representation, Representation::kVariationalDice);
  apply_setting(c, "iterations", "7");
  EXPECT_EQ(c.num_iterations(), 7);
}

TEST(Config, IterationsFromTotalSteps) {
  TrainConfig c;
  c.total_steps = 10000;
  c.num_rollouts = 2;
  c.horizon = 1000;
  EXPECT_EQ(c.num_iterations(), 5);
}

TEST(Config, BadValuesAreConfigErrors) {
  TrainConfig c;
  EXPECT_THROW(apply_setting(c, "no_such_key", "1"), ConfigError);
  EXPECT_THROW(apply_setting(c, "iterations", "1.5"), ConfigError);
  EXPECT_THROW(apply_setting(c, "learning_rate", "fast"), ConfigError);
  EXPECT_THROW(apply_setting(c, "normalize_advantages", "maybe"), ConfigError);
  EXPECT_THROW(apply_setting(c, "hidden", "4,0"), ConfigError);
  EXPECT_THROW(apply_setting(c, "algo", "trpo"), ConfigError);
  EXPECT_THROW(apply_setting(c, "seed", "-1"), ConfigError);

  auto invalid = [](std::vector<Setting> s) { EXPECT_THROW(config_from_settings(s).validate(), ConfigError); };
  invalid({{"env", "cartpole"}});
  invalid({{"gamma", "1"}});
  invalid({{"iterations", "1"}, {"epochs", "0"}});
  invalid({{"env", "point_mass"}, {"iterations", "1"}, {"residual_mode", "expected"}});
  invalid({{"env", "point_mass"}, {"iterations", "1"}, {"disc_input", "joint_onehot"}});
  invalid({{"env", "chain"}, {"iterations", "1"}, {"gradient_path", "reparam"}});
  invalid({{"iterations", "1"}, {"divergence", "chi2"}, {"representation", "dv"}});
  invalid({{"env", "chain"}, {"env.slip", "2"}, {"iterations", "1"}});
  EXPECT_NO_THROW(config_from_settings({{"env", "chain"}, {"iterations", "1"}}).validate());
}

TEST(Config, TextRoundTrip) {
  TrainConfig c = config_from_settings({{"preset", "discrete"},
                                        {"env", "gridworld"},
                                        {"env.slip", "0.05"},
                                        {"algo", "ppo"},
                                        {"seed", "12"},
                                        {"iterations", "3"},
                                        {"learning_rate", "0.0012345678901234567"},
                                        {"lambda_mode", "fixed:0.25"},
                                        {"hidden", "7,3"},
                                        {"divergence", "tv"},
                                        {"residual_mode", "expected"}});
  const std::string text = to_config_text(c);
  const std::string path = (std::filesystem::temp_directory_path() / "ppodice_roundtrip.cfg").string();
  write_text_file(path, text);
  const TrainConfig d = load_config(path);
  EXPECT_EQ(to_config_text(d), text);
  EXPECT_EQ(d.learning_rate, c.learning_rate);
  EXPECT_EQ(d.env_params, c.env_params);
  EXPECT_EQ(d.algo, Algo::kPpo);

  const TrainConfig e = load_config(path, {{"seed", "99"}});
  EXPECT_EQ(e.seed, 99u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), IoError);
}

TEST(Suite, ParseGridAndPerEnvKeys) {
  const SuiteConfig s = parse_suite(
      "suite.envs = chain, gridworld\n"
      "suite.algos = ppo\n"
      "suite.seeds = 3\n"
      "suite.eval_episodes = 5\n"
      "iterations = 2\n"
      "env:gridworld.iterations = 4\n");
  EXPECT_EQ(s.envs, (std::vector<std::string>{"chain", "gridworld"}));
  EXPECT_EQ(s.algos, (std::vector<Algo>{Algo::kPpo}));
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(s.eval_episodes, 5);
  EXPECT_EQ(s.run_config("chain", Algo::kPpo, 1).num_iterations(), 2);
  const TrainConfig g = s.run_config("gridworld", Algo::kPpo, 2);
  EXPECT_EQ(g.num_iterations(), 4);
  EXPECT_EQ(g.seed, 2u);
  EXPECT_EQ(g.env, "gridworld");

  EXPECT_EQ(parse_suite("suite.envs = chain\nsuite.seeds = 4, 9\n").seeds, (std::vector<std::uint64_t>{4, 9}));
  EXPECT_THROW(parse_suite("suite.envs = chain\nsuite.colour = red\n"), ConfigError);
  EXPECT_THROW(parse_suite("suite.seeds = 2\n").validate(), ConfigError);
}

TEST(Algo, Parsing) {
  EXPECT_EQ(parse_algo(to_string(Algo::kPpoDice)), Algo::kPpoDice);
  EXPECT_EQ(parse_algo("ppo"), Algo::kPpo);
}
