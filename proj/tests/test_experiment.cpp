#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "oorl/error.hpp"
#include "oorl/algorithms.hpp"
#include "oorl/experiment.hpp"

using namespace oorl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "oorl_experiment_tests" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ConfigTree quick(const std::string& algo, const std::string& env, const fs::path& out,
                 std::int64_t steps = 400) {
  Partial p{{"experiment.total_steps", steps},
            {"experiment.eval_every", 200},
            {"experiment.eval_episodes", 1},
            {"experiment.seed", 3},
            {"experiment.out_dir", out.string()},
            {"nets.critic_hidden", Json::array({8})}};
  if (algo != "dqn") p.push_back({"nets.actor_hidden", Json::array({8})});
  if (algo == "ppo") {
    p.push_back({"algo.rollout_length", 64});
    p.push_back({"algo.minibatches", 4});
    p.push_back({"algo.epochs", 2});
  } else {
    p.push_back({"algo.warmup_steps", 50});
    p.push_back({"algo.batch_size", 16});
  }
  if (algo == "drnd") p.push_back({"algo.bonus_hidden", Json::array({8})});
  return merge(ConfigTree::defaults(algo, env), {p});
}

void write_eval_log(const fs::path& dir, const std::string& algo, const std::string& env,
                    const std::string& rows) {
  fs::create_directories(dir);
  Json cfg = ConfigTree::defaults(algo, env).json();
  std::ofstream(dir / "config.json") << cfg.dump();
  std::ofstream(dir / "eval_log.csv") << "step,mean_return,std_return,episodes\n" << rows;
}

}  // namespace

TEST_CASE("zero steps writes config and empty logs") {
  const fs::path dir = scratch("zero");
  const ConfigTree c = quick("sac", "pendulum", dir, 0);
  const TrainSummary s = train(c);
  CHECK(s.steps == 0);
  CHECK(s.episodes == 0);
  CHECK(ConfigTree::from_json(Json::parse(slurp(dir / "config.json"))) == c);
  CHECK(slurp(dir / "train_log.csv") ==
        "step,episode,ep_return,ep_length,loss_actor,loss_critic,loss_alpha,alpha,wall_s\n");
  CHECK(slurp(dir / "eval_log.csv") == "step,mean_return,std_return,episodes\n");
  CHECK(fs::exists(dir / "checkpoint_final.json"));
}

TEST_CASE("train refuses to overwrite a completed run unless forced") {
  const fs::path dir = scratch("force");
  const ConfigTree c = quick("dqn", "cartpole", dir, 200);
  train(c);
  CHECK(fs::exists(dir / "checkpoint_200.json"));
  CHECK_THROWS_AS(train(c), IoError);
  const ConfigTree shorter = merge(c, {{{"experiment.total_steps", 100}}});
  CHECK_NOTHROW(train(shorter, true));
  CHECK_FALSE(fs::exists(dir / "checkpoint_200.json"));
}

TEST_CASE("identical configs give byte-identical train logs for every algorithm") {
  for (const auto& [algo, env] : std::vector<std::pair<std::string, std::string>>{
           {"dqn", "cartpole"}, {"ppo", "cartpole"}, {"ppo", "pendulum"}, {"ddpg", "pendulum"},
           {"td3", "pendulum"}, {"sac", "pendulum"}, {"drnd", "pendulum"}}) {
    CAPTURE(algo);
    const fs::path a = scratch(algo + env + "_a"), b = scratch(algo + env + "_b");
    const TrainSummary sa = train(quick(algo, env, a));
    train(quick(algo, env, b));
    const std::string log = slurp(a / "train_log.csv");
    CHECK(log == slurp(b / "train_log.csv"));
    CHECK(slurp(a / "eval_log.csv") == slurp(b / "eval_log.csv"));
    CHECK(sa.evals.size() == 2);

    // Steps strictly increase and every row has nine fields.
    std::istringstream lines(log);
    std::string line;
    std::getline(lines, line);
    long previous = 0;
    while (std::getline(lines, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == 8);
      const long step = std::stol(line.substr(0, line.find(',')));
      CHECK(step > previous);
      previous = step;
    }
  }
}

TEST_CASE("hooks see updates and can stop training") {
  const fs::path dir = scratch("hooks");
  std::int64_t learns = 0;
  TrainHooks hooks;
  hooks.on_learn = [&](std::int64_t, const LossReport& r) {
    ++learns;
    CHECK(r.count("loss_critic") == 1);
  };
  hooks.on_eval = [](std::int64_t step, double) { return step >= 200; };
  const TrainSummary s = train(quick("td3", "pendulum", dir, 1000), false, hooks);
  CHECK(s.stopped_early);
  CHECK(s.steps == 200);
  CHECK(learns == 151);  // global steps 50..200
  CHECK(fs::exists(dir / "checkpoint_final.json"));
}

TEST_CASE("checkpoint round-trip evaluates like the live agent") {
  const fs::path dir = scratch("roundtrip");
  const ConfigTree c = quick("sac", "pendulum", dir, 200);
  train(c);
  LoadedCheckpoint live = load_checkpoint(dir / "checkpoint_final.json");
  auto env = make_env("pendulum");
  const auto expected = run_episodes(*live.agent, *env, 2, 99);
  const EvalResult r = evaluate(dir / "checkpoint_final.json", 2, 99);
  CHECK(r.returns == expected);
  CHECK(evaluate(dir / "checkpoint_final.json", 2, 99).returns == r.returns);

  const fs::path copy = dir / "resaved.json";
  save_checkpoint(copy, live.config, *live.agent);
  CHECK(slurp(copy) == slurp(dir / "checkpoint_final.json"));

  const EvalResult one = evaluate(dir / "checkpoint_final.json", 1, 5);
  REQUIRE(one.returns.size() == 1);
  CHECK(one.mean_return == one.returns[0]);
  CHECK(to_json_string(one) == "{\"mean_return\": " + format_double(one.mean_return) +
                                   ", \"returns\": [" + format_double(one.returns[0]) + "]}");
}

TEST_CASE("corrupt and incompatible checkpoints are rejected") {
  const fs::path dir = scratch("corrupt");
  fs::create_directories(dir);
  std::ofstream(dir / "garbage.json") << "{\"version\": 1, \"params\"";
  CHECK_THROWS_AS(evaluate(dir / "garbage.json", 1, 0), IoError);
  std::ofstream(dir / "future.json") << "{\"version\": 2}";
  CHECK_THROWS_AS(evaluate(dir / "future.json", 1, 0), IoError);
  CHECK_THROWS_AS(evaluate(dir / "absent.json", 1, 0), IoError);

  const ConfigTree c = ConfigTree::defaults("dqn", "cartpole");
  auto env = make_env("cartpole");
  auto agent = make_agent(c, env->observation_space(), env->action_space());
  Json j = checkpoint_json(c, *agent);
  j["params"].erase("critic.0.layer0.weight");
  std::ofstream(dir / "partial.json") << j.dump();
  CHECK_THROWS_AS(evaluate(dir / "partial.json", 1, 0), IoError);
}

TEST_CASE("untrained DQN scores far below 100 on cartpole") {
  const fs::path dir = scratch("untrained");
  fs::create_directories(dir);
  const ConfigTree c = ConfigTree::defaults("dqn", "cartpole");
  auto env = make_env("cartpole");
  auto agent = make_agent(c, env->observation_space(), env->action_space());
  save_checkpoint(dir / "ckpt.json", c, *agent);
  CHECK(evaluate(dir / "ckpt.json", 10, 1).mean_return < 100.0);
}

TEST_CASE("report aggregates runs") {
  const fs::path root = scratch("report");
  write_eval_log(root / "a", "sac", "pendulum", "100,-1000,1,10\n200,-500,1,10\n");
  write_eval_log(root / "b", "sac", "pendulum", "100,-800,1,10\n200,-300,1,10\n");
  write_eval_log(root / "c", "sac", "pendulum", "100,-600,1,10\n200,-100,1,10\n");
  write_eval_log(root / "d", "dqn", "cartpole", "50,20,0,10\n");

  const ReportResult r = report({root / "a", root / "b", root / "c", root / "d"});
  CHECK(r.errors.empty());
  // Final returns -500, -300, -100: mean -300, population std sqrt(80000/3).
  const double sd = std::sqrt(80000.0 / 3.0);
  const std::string expected =
      "kind,env,algo,step,mean,std,n\n"
      "final,cartpole,dqn,50,20,0,1\n"
      "curve,cartpole,dqn,50,20,0,1\n"
      "final,pendulum,sac,200,-300," + format_double(sd) + ",3\n"
      "curve,pendulum,sac,100,-800," + format_double(sd) + ",3\n"
      "curve,pendulum,sac,200,-300," + format_double(sd) + ",3\n";
  CHECK(r.csv == expected);

  const ReportResult same = report({root / "a", root / "a", root / "a"});
  CHECK(same.csv.find("final,pendulum,sac,200,-500,0,3\n") != std::string::npos);
}

TEST_CASE("report lists unreadable runs and keeps the rest") {
  const fs::path root = scratch("report_bad");
  write_eval_log(root / "good", "td3", "pendulum", "10,-5,0,1\n");
  write_eval_log(root / "ragged", "td3", "pendulum", "10,-5,0\n");
  write_eval_log(root / "backwards", "td3", "pendulum", "20,-5,0,1\n10,-4,0,1\n");
  write_eval_log(root / "empty", "td3", "pendulum", "");
  fs::create_directories(root / "nothing");
  const ReportResult r =
      report({root / "good", root / "ragged", root / "backwards", root / "empty", root / "nothing"});
  CHECK(r.errors.size() == 4);
  CHECK(r.csv == "kind,env,algo,step,mean,std,n\nfinal,pendulum,td3,10,-5,0,1\ncurve,pendulum,td3,10,-5,0,1\n");
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -1e-300, 123456789.125, 0.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(20.0) == "20");
}
