#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oorl/config.hpp"
#include "oorl/error.hpp"
#include "oorl/experiment.hpp"

namespace {

struct TrainArgs {
  std::string algo, env, config_file, out;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  std::vector<std::string> sets;
  bool force = false;
};

int run_train(const TrainArgs& a) {
  using namespace oorl;
  std::vector<Partial> layers;
  if (!a.config_file.empty()) layers.push_back(load_file(a.config_file));
  Partial cli;
  for (const std::string& s : a.sets) cli.push_back(parse_assignment(s));
  cli.emplace_back("experiment.seed", a.seed);
  cli.emplace_back("experiment.total_steps", a.steps);
  cli.emplace_back("experiment.out_dir", a.out);
  layers.push_back(std::move(cli));
  const ConfigTree config = merge(ConfigTree::defaults(a.algo, a.env), layers);

  const TrainSummary s = train(config, a.force);
  std::cout << "trained " << config.algo_id() << " on " << config.env_id() << " for "
            << s.steps << " steps (" << s.episodes << " episodes)";
  if (!s.evals.empty()) {
    std::cout << ", final eval mean return " << format_double(s.evals.back().mean_return);
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-oriented deep RL: train, evaluate and summarize runs"};
  app.require_subcommand(1);

  TrainArgs t;
  auto* train_cmd = app.add_subcommand("train", "Train an agent and write run artifacts");
  train_cmd->add_option("--algo", t.algo, "dqn, ddpg, td3, sac, ppo or drnd")->required();
  train_cmd->add_option("--env", t.env, "cartpole or pendulum")->required();
  train_cmd->add_option("--seed", t.seed, "Root seed")->required();
  train_cmd->add_option("--steps", t.steps, "Environment steps")->required();
  train_cmd->add_option("--config", t.config_file, "JSON file of overrides");
  train_cmd->add_option("--set", t.sets, "Override key=value (repeatable)");
  train_cmd->add_option("--out", t.out, "Run directory")->required();
  train_cmd->add_flag("--force", t.force, "Overwrite a completed run");

  std::string checkpoint;
  std::size_t episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint deterministically");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--episodes", episodes, "Episodes")->required();
  eval_cmd->add_option("--seed", eval_seed, "Seed of the first reset")->required();

  std::vector<std::string> dirs;
  auto* report_cmd = app.add_subcommand("report", "Aggregate eval logs across runs as CSV");
  report_cmd->add_option("dirs", dirs, "Run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train_cmd) return run_train(t);
    if (*eval_cmd) {
      std::cout << oorl::to_json_string(oorl::evaluate(checkpoint, episodes, eval_seed)) << "\n";
      return 0;
    }
    std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
    const oorl::ReportResult r = oorl::report(paths);
    std::cout << r.csv;
    for (const std::string& e : r.errors) std::cerr << "error: " << e << "\n";
    return r.errors.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
