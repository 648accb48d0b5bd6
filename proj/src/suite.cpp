#include "ppodice/suite.hpp"

#include "ppodice/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace ppodice {

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto b = part.find_first_not_of(' ');
    const auto e = part.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

std::string fmt(double d) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(4) << d;
  return o.str();
}

}  // namespace

TrainConfig SuiteConfig::run_config(const std::string& env, Algo algo, std::uint64_t seed) const {
  std::vector<Setting> settings = shared;
  settings.emplace_back("env", env);
  for (const auto& [name, s] : per_env) {
    if (name == env) settings.push_back(s);
  }
  TrainConfig c = config_from_settings(settings);
  c.algo = algo;
  c.seed = seed;
  c.out_dir.clear();
  return c;
}

void SuiteConfig::validate() const {
  if (envs.empty()) throw ConfigError("suite.envs is empty");
  if (algos.empty()) throw ConfigError("suite.algos is empty");
  if (seeds.empty()) throw ConfigError("suite.seeds is empty");
  if (eval_episodes < 1) throw ConfigError("suite.eval_episodes must be at least 1");
  for (const auto& e : envs) {
    for (Algo a : algos) run_config(e, a, seeds.front()).validate();
  }
}

SuiteConfig parse_suite(const std::string& text) {
  SuiteConfig s;
  for (const auto& [k, v] : parse_settings(text)) {
    if (k == "suite.envs") {
      s.envs = split_list(v);
    } else if (k == "suite.algos") {
      s.algos.clear();
      for (const auto& a : split_list(v)) s.algos.push_back(parse_algo(a));
    } else if (k == "suite.seeds") {
      s.seeds.clear();
      const auto parts = split_list(v);
      try {
        if (parts.size() == 1 && v.find(',') == std::string::npos) {
          const long n = std::stol(parts[0]);
          if (n < 1) throw ConfigError("suite.seeds must be positive");
          for (long i = 0; i < n; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
        } else {
          for (const auto& p : parts) s.seeds.push_back(std::stoull(p));
        }
      } catch (const std::logic_error&) {
        throw ConfigError("suite.seeds: expected a count or a list of integers, got '" + v + "'");
      }
    } else if (k == "suite.eval_episodes") {
      try {
        s.eval_episodes = std::stoi(v);
      } catch (const std::logic_error&) {
        throw ConfigError("suite.eval_episodes: expected an integer");
      }
    } else if (k.rfind("suite.", 0) == 0) {
      throw ConfigError("unknown suite key '" + k + "'");
    } else if (k.rfind("env:", 0) == 0) {
      const auto dot = k.find('.');
      if (dot == std::string::npos) throw ConfigError("per-env key '" + k + "' needs the form env:<name>.<key>");
      s.per_env.emplace_back(k.substr(4, dot - 4), Setting{k.substr(dot + 1), v});
    } else if (k == "out_dir") {
      s.out_dir = v;
    } else {
      s.shared.emplace_back(k, v);
    }
  }
  return s;
}

SuiteConfig load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read suite file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_suite(ss.str());
}

std::pair<double, double> mean_stderr(const std::vector<double>& values) {
  if (values.empty()) return {std::nan(""), 0.0};
  double m = 0.0;
  for (double x : values) m += x;
  const double n = static_cast<double>(values.size());
  m /= n;
  if (values.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

void finalize_report(SuiteReport& report) {
  for (auto& c : report.cells) {
    std::tie(c.mean, c.stderr_) = mean_stderr(c.final_returns);
    c.bold = false;
  }
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    SuiteCell& a = report.cells[i];
    if (a.final_returns.empty()) continue;
    bool best = true;
    int others = 0;
    for (const SuiteCell& b : report.cells) {
      if (&b == &a || b.env != a.env) continue;
      ++others;
      if (b.final_returns.empty()) continue;
      const double margin = 2.0 * std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
      if (!(a.mean - b.mean > margin)) best = false;
    }
    a.bold = best && others > 0;
  }

  std::ostringstream md, csv;
  md << "| env | algo | final return (mean \xc2\xb1 stderr) | seeds | failures |\n";
  md << "|---|---|---|---|---|\n";
  csv << "env,algo,mean,stderr,seeds,failures\n";
  for (const SuiteCell& c : report.cells) {
    std::string cell = c.final_returns.empty() ? "n/a" : fmt(c.mean) + " \xc2\xb1 " + fmt(c.stderr_);
    if (c.bold) cell = "**" + cell + "**";
    md << "| " << c.env << " | " << to_string(c.algo) << " | " << cell << " | " << c.final_returns.size() << " | "
       << c.failures.size() << " |\n";
    csv << c.env << "," << to_string(c.algo) << "," << std::setprecision(17) << c.mean << "," << c.stderr_ << ","
        << c.final_returns.size() << "," << c.failures.size() << "\n";
  }
  report.markdown = md.str();
  report.csv = csv.str();
}

SuiteReport run_suite(const SuiteConfig& suite) {
  suite.validate();
  SuiteReport report;
  for (const auto& env_name : suite.envs) {
    std::vector<AggregateCurve> curves;
    std::vector<std::string> labels;
    for (Algo algo : suite.algos) {
      SuiteCell cell;
      cell.env = env_name;
      cell.algo = algo;
      std::vector<std::vector<MetricsRow>> runs;
      for (std::uint64_t seed : suite.seeds) {
        TrainConfig cfg = suite.run_config(env_name, algo, seed);
        if (!suite.out_dir.empty()) {
          cfg.out_dir = (std::filesystem::path(suite.out_dir) / env_name / to_string(algo) /
                         ("seed_" + std::to_string(seed)))
                            .string();
        }
        try {
          const TrainResult r = train(cfg);
          if (r.failed) {
            cell.failures.push_back("seed " + std::to_string(seed) + ": " + r.failure);
            continue;
          }
          const auto env = make_env(cfg.env, cfg.env_params);
          Rng eval_rng = stream_rng(seed, Stream::kEvaluation, 1u << 30);
          cell.final_returns.push_back(evaluate(r.policy, *env, suite.eval_episodes, eval_rng).mean);
          runs.push_back(r.metrics);
        } catch (const std::exception& e) {
          cell.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
        }
      }
      curves.push_back(aggregate_curves(runs));
      labels.push_back(to_string(algo));
      report.cells.push_back(std::move(cell));
    }
    if (!suite.out_dir.empty()) {
      write_aggregate_svg((std::filesystem::path(suite.out_dir) / (env_name + "_aggregate.svg")).string(), curves,
                          labels, env_name);
    }
  }
  finalize_report(report);
  if (!suite.out_dir.empty()) {
    write_text_file((std::filesystem::path(suite.out_dir) / "report.md").string(), report.markdown);
    write_text_file((std::filesystem::path(suite.out_dir) / "report.csv").string(), report.csv);
  }
  return report;
}

}  // namespace ppodice
