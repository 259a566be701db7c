#pragma once

// Training and evaluation loops, run artifacts, checkpoints and reporting.
//
// Random streams derived from experiment.seed (see derive_seed):
//   0 training env, 1 network init, 2 replay/minibatch sampling,
//   3 act-time exploration, 4 update-time noise, 5 evaluation env,
//   6 algorithm extensions (DRND bonus).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oorl/agent.hpp"
#include "oorl/config.hpp"
#include "oorl/env.hpp"

namespace oorl {

inline constexpr std::uint64_t kTrainEnvStream = 0;
inline constexpr std::uint64_t kEvalEnvStream = 5;
inline constexpr int kCheckpointVersion = 1;

struct TrainHooks {
  // After every update.
  std::function<void(std::int64_t step, const LossReport& report)> on_learn;
  // After every evaluation; returning true ends training early.
  std::function<bool(std::int64_t step, double mean_return)> on_eval;
};

struct EvalPoint {
  std::int64_t step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::vector<double> returns;
};

struct TrainSummary {
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
  std::vector<EvalPoint> evals;
  bool stopped_early = false;
};

// Runs a full experiment into config's out_dir. Throws IoError if the
// directory holds a completed run and force is false.
TrainSummary train(const ConfigTree& config, bool force = false, const TrainHooks& hooks = {});

// Deterministic-policy returns; the first reset uses seed.
std::vector<double> run_episodes(Agent& agent, Env& env, std::size_t episodes,
                                 std::uint64_t seed);

Json checkpoint_json(const ConfigTree& config, const Agent& agent);
void save_checkpoint(const std::filesystem::path& path, const ConfigTree& config,
                     const Agent& agent);

struct LoadedCheckpoint {
  ConfigTree config;
  std::unique_ptr<Agent> agent;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

struct EvalResult {
  double mean_return = 0.0;
  std::vector<double> returns;
};
EvalResult evaluate(const std::filesystem::path& checkpoint, std::size_t episodes,
                    std::uint64_t seed);
// {"mean_return": ..., "returns": [...]} at full precision.
std::string to_json_string(const EvalResult& result);

struct ReportResult {
  std::string csv;
  // One "dir: reason" line per run directory that could not be read.
  std::vector<std::string> errors;
};
// CSV columns kind,env,algo,step,mean,std,n. "final" rows aggregate each
// run's last evaluation per (env, algo); "curve" rows aggregate per step.
// std is the population standard deviation across runs.
ReportResult report(const std::vector<std::filesystem::path>& run_dirs);

// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace oorl
