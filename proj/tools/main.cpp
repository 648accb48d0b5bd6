// ppodice command-line entry point.
//
//   ppodice train --config PATH [--seed N] [--algo ppo|ppo_dice] [--env NAME]
//                 [--out DIR] [--lambda-mode fixed:X|adaptive:P]
//                 [--divergence kl|chi2|tv] [--representation dice|dv]
//                 [--no-clip] [--set key=value ...]
//   ppodice suite --config PATH [--out DIR]
//   ppodice verify [--seed N]
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include "ppodice/common.hpp"
#include "ppodice/config.hpp"
#include "ppodice/suite.hpp"
#include "ppodice/trainer.hpp"
#include "ppodice/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace ppodice;

constexpr int kRunFailure = 1;
constexpr int kConfigFailure = 2;

std::vector<Setting> split_overrides(const std::vector<std::string>& raw) {
  std::vector<Setting> out;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPO with a DICE-estimated visitation divergence penalty"};
  app.require_subcommand(1);

  std::string train_config, seed, algo, env, out, lambda_mode, divergence, representation;
  bool no_clip = false;
  std::vector<std::string> sets;
  auto* train_cmd = app.add_subcommand("train", "train one policy");
  train_cmd->add_option("--config", train_config, "config file")->required();
  train_cmd->add_option("--seed", seed, "random seed");
  train_cmd->add_option("--algo", algo, "ppo | ppo_dice");
  train_cmd->add_option("--env", env, "environment name");
  train_cmd->add_option("--out", out, "output directory");
  train_cmd->add_option("--lambda-mode", lambda_mode, "fixed:X | adaptive:P");
  train_cmd->add_option("--divergence", divergence, "kl | chi2 | tv");
  train_cmd->add_option("--representation", representation, "dice | dv");
  train_cmd->add_flag("--no-clip", no_clip, "drop the ratio clipping from the policy loss");
  train_cmd->add_option("--set", sets, "extra key=value overrides");

  std::string suite_config, suite_out;
  auto* suite_cmd = app.add_subcommand("suite", "run an env x algo x seed grid");
  suite_cmd->add_option("--config", suite_config, "suite file")->required();
  suite_cmd->add_option("--out", suite_out, "output directory");

  unsigned long long verify_seed = 0;
  auto* verify_cmd = app.add_subcommand("verify", "run the exact oracle checks");
  verify_cmd->add_option("--seed", verify_seed, "seed for random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (*train_cmd) {
      std::vector<Setting> overrides;
      if (!seed.empty()) overrides.emplace_back("seed", seed);
      if (!algo.empty()) overrides.emplace_back("algo", algo);
      if (!env.empty()) overrides.emplace_back("env", env);
      if (!out.empty()) overrides.emplace_back("out_dir", out);
      if (!lambda_mode.empty()) overrides.emplace_back("lambda_mode", lambda_mode);
      if (!divergence.empty()) overrides.emplace_back("divergence", divergence);
      if (!representation.empty()) overrides.emplace_back("representation", representation);
      if (no_clip) overrides.emplace_back("clip_action_loss", "false");
      for (auto& s : split_overrides(sets)) overrides.push_back(std::move(s));

      const TrainConfig config = load_config(train_config, overrides);
      config.validate();
      const TrainResult r = train(config, [](const MetricsRow& row, const PolicyParams&) {
        std::cout << "iter " << row.iteration << " steps " << row.env_steps << " return " << row.mean_episode_return
                  << " lambda " << row.lambda_used << " div " << row.divergence_estimate << "\n";
        return true;
      });
      if (r.failed) {
        std::cerr << "run failed: " << r.failure << "\n";
        return kRunFailure;
      }
      return 0;
    }
    if (*suite_cmd) {
      SuiteConfig suite = load_suite(suite_config);
      if (!suite_out.empty()) suite.out_dir = suite_out;
      const SuiteReport report = run_suite(suite);
      std::cout << report.markdown;
      for (const auto& c : report.cells) {
        for (const auto& f : c.failures) std::cerr << c.env << "/" << to_string(c.algo) << " " << f << "\n";
      }
      return 0;
    }
    if (*verify_cmd) {
      bool ok = true;
      for (const CheckResult& c : run_verification(verify_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        ok = ok && c.passed;
      }
      return ok ? 0 : kRunFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return train_cmd->parsed() || suite_cmd->parsed() ? kConfigFailure : kRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return 0;
}
