#include "oorl/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "oorl/algorithms.hpp"
#include "oorl/error.hpp"

namespace oorl {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir / "checkpoint_final.json")) {
    if (!force) {
      throw IoError(dir.string() + " already contains a completed run (use force to overwrite)");
    }
  }
  fs::create_directories(dir);
  if (force) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("checkpoint_", 0) == 0 && entry.path().extension() == ".json") {
        fs::remove(entry.path());
      }
    }
  }
}

const char* const kTrainHeader =
    "step,episode,ep_return,ep_length,loss_actor,loss_critic,loss_alpha,alpha,wall_s\n";
const char* const kEvalHeader = "step,mean_return,std_return,episodes\n";

std::string report_field(const LossReport& r, const char* key) {
  const auto it = r.find(key);
  return it == r.end() ? "" : format_double(it->second);
}

}  // namespace

std::vector<double> run_episodes(Agent& agent, Env& env, std::size_t episodes,
                                 std::uint64_t seed) {
  std::vector<double> returns;
  for (std::size_t e = 0; e < episodes; ++e) {
    Observation obs = e == 0 ? env.reset(seed) : env.reset();
    double total = 0.0;
    while (true) {
      const StepResult r = env.step(agent.act(obs, ActMode::kDeterministic));
      total += r.reward;
      if (r.terminated || r.truncated) break;
      obs = r.observation;
    }
    returns.push_back(total);
  }
  return returns;
}

TrainSummary train(const ConfigTree& config, bool force, const TrainHooks& hooks) {
  config.validate();
  const ExperimentConfig exp = config.experiment();
  const fs::path dir(exp.out_dir);
  prepare_out_dir(dir, force);
  write_text(dir / "config.json", config.dump() + "\n");

  std::ofstream train_log(dir / "train_log.csv", std::ios::binary);
  std::ofstream eval_log(dir / "eval_log.csv", std::ios::binary);
  if (!train_log || !eval_log) throw IoError("cannot create logs in " + dir.string());
  train_log << kTrainHeader;
  eval_log << kEvalHeader;

  auto env = make_env(exp.env_id);
  auto eval_env = make_env(exp.env_id);
  auto agent = make_agent(config, env->observation_space(), env->action_space());
  const auto start = std::chrono::steady_clock::now();

  TrainSummary summary;
  LossReport last_report;
  Observation obs = env->reset(derive_seed(exp.seed, kTrainEnvStream));
  double ep_return = 0.0;
  std::int64_t ep_length = 0;

  for (std::int64_t step = 1; step <= exp.total_steps; ++step) {
    const Action action = agent->act(obs, ActMode::kStochastic);
    const StepResult r = env->step(action);
    agent->store({obs, action, r.reward, r.observation, r.terminated, r.truncated});
    ep_return += r.reward;
    ++ep_length;
    summary.steps = step;

    if (auto report = agent->learn()) {
      last_report = *report;
      if (hooks.on_learn) hooks.on_learn(step, last_report);
    }

    if (r.terminated || r.truncated) {
      std::string wall;
      if (exp.wall_clock) {
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(3);
        os << el.count();
        wall = os.str();
      }
      train_log << step << ',' << summary.episodes << ',' << format_double(ep_return) << ','
                << ep_length << ',' << report_field(last_report, "loss_actor") << ','
                << report_field(last_report, "loss_critic") << ','
                << report_field(last_report, "loss_alpha") << ','
                << report_field(last_report, "alpha") << ',' << wall << '\n';
      ++summary.episodes;
      ep_return = 0.0;
      ep_length = 0;
      obs = env->reset();
    } else {
      obs = r.observation;
    }

    if (step % exp.eval_every == 0) {
      EvalPoint point;
      point.step = step;
      point.returns = run_episodes(*agent, *eval_env, static_cast<std::size_t>(exp.eval_episodes),
                                   derive_seed(exp.seed, kEvalEnvStream));
      point.mean_return = mean_of(point.returns);
      point.std_return = population_std(point.returns);
      eval_log << step << ',' << format_double(point.mean_return) << ','
               << format_double(point.std_return) << ',' << point.returns.size() << '\n';
      eval_log.flush();
      train_log.flush();
      save_checkpoint(dir / ("checkpoint_" + std::to_string(step) + ".json"), config, *agent);
      summary.evals.push_back(point);
      if (hooks.on_eval && hooks.on_eval(step, point.mean_return)) {
        summary.stopped_early = true;
        break;
      }
    }
  }
  train_log.close();
  eval_log.close();
  if (!train_log || !eval_log) throw IoError("failed writing logs in " + dir.string());
  save_checkpoint(dir / "checkpoint_final.json", config, *agent);
  return summary;
}

Json checkpoint_json(const ConfigTree& config, const Agent& agent) {
  Json params = Json::object();
  for (const auto& [name, arr] : agent.state_dict()) {
    params[name] = {{"shape", arr.shape}, {"values", arr.values}};
  }
  return {{"version", kCheckpointVersion},
          {"algo_id", agent.algo_id()},
          {"config", config.json()},
          {"params", params}};
}

void save_checkpoint(const fs::path& path, const ConfigTree& config, const Agent& agent) {
  const fs::path tmp = path.string() + ".tmp";
  write_text(tmp, checkpoint_json(config, agent).dump() + "\n");
  fs::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("version")) {
      throw IoError("checkpoint " + path.string() + " has no version tag");
    }
    if (j["version"] != kCheckpointVersion) {
      throw IoError("checkpoint " + path.string() + " has unsupported version " +
                    j["version"].dump());
    }
    ConfigTree config = ConfigTree::from_json(j.at("config"));
    if (j.at("algo_id") != config.algo_id()) {
      throw IoError("checkpoint algo_id does not match its config");
    }
    StateDict state;
    for (const auto& [name, entry] : j.at("params").items()) {
      state[name] = {entry.at("shape").get<std::vector<std::size_t>>(),
                     entry.at("values").get<std::vector<double>>()};
    }
    auto env = make_env(config.env_id());
    auto agent = make_agent(config, env->observation_space(), env->action_space());
    agent->load_state_dict(state);
    return {std::move(config), std::move(agent)};
  } catch (const Json::exception& e) {
    throw IoError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

EvalResult evaluate(const fs::path& checkpoint, std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw ConfigError("episodes must be >= 1");
  LoadedCheckpoint loaded = load_checkpoint(checkpoint);
  auto env = make_env(loaded.config.env_id());
  EvalResult result;
  result.returns = run_episodes(*loaded.agent, *env, episodes, seed);
  result.mean_return = mean_of(result.returns);
  return result;
}

std::string to_json_string(const EvalResult& result) {
  std::string out = "{\"mean_return\": " + format_double(result.mean_return) + ", \"returns\": [";
  for (std::size_t i = 0; i < result.returns.size(); ++i) {
    if (i) out += ", ";
    out += format_double(result.returns[i]);
  }
  return out + "]}";
}

namespace {

struct RunLog {
  std::string env, algo;
  std::vector<std::pair<std::int64_t, double>> points;  // step, mean_return
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

RunLog read_run(const fs::path& dir) {
  RunLog run;
  std::ifstream cfg(dir / "config.json");
  if (!cfg) throw IoError("missing config.json");
  try {
    const Json j = Json::parse(cfg);
    run.env = j.at("experiment").at("env_id").get<std::string>();
    run.algo = j.at("experiment").at("algo_id").get<std::string>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("unreadable config.json: ") + e.what());
  }
  std::ifstream in(dir / "eval_log.csv");
  if (!in) throw IoError("missing eval_log.csv");
  std::string line;
  if (!std::getline(in, line) || line + "\n" != kEvalHeader) {
    throw IoError("eval_log.csv has an unexpected header");
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const auto step = fields.size() == 4 ? parse_number<std::int64_t>(fields[0]) : std::nullopt;
    const auto mean = fields.size() == 4 ? parse_number<double>(fields[1]) : std::nullopt;
    if (!step || !mean) throw IoError("eval_log.csv row " + std::to_string(row) + " is malformed");
    if (!run.points.empty() && *step <= run.points.back().first) {
      throw IoError("eval_log.csv steps are not strictly increasing at row " +
                    std::to_string(row));
    }
    run.points.emplace_back(*step, *mean);
  }
  if (run.points.empty()) throw IoError("eval_log.csv has no evaluation rows");
  return run;
}

std::string row(const std::string& kind, const std::string& env, const std::string& algo,
                 const std::string& step, const std::vector<double>& values) {
  return kind + ',' + env + ',' + algo + ',' + step + ',' + format_double(mean_of(values)) +
         ',' + format_double(population_std(values)) + ',' + std::to_string(values.size()) +
         '\n';
}

}  // namespace

ReportResult report(const std::vector<fs::path>& run_dirs) {
  ReportResult result;
  std::map<std::pair<std::string, std::string>, std::vector<RunLog>> groups;
  for (const fs::path& dir : run_dirs) {
    try {
      RunLog run = read_run(dir);
      groups[{run.env, run.algo}].push_back(std::move(run));
    } catch (const Error& e) {
      result.errors.push_back(dir.string() + ": " + e.what());
    }
  }
  result.csv = "kind,env,algo,step,mean,std,n\n";
  for (const auto& [key, runs] : groups) {
    const auto& [env, algo] = key;
    std::vector<double> finals;
    std::optional<std::int64_t> final_step = runs.front().points.back().first;
    for (const RunLog& r : runs) {
      finals.push_back(r.points.back().second);
      if (r.points.back().first != final_step) final_step.reset();
    }
    result.csv += row("final", env, algo, final_step ? std::to_string(*final_step) : "", finals);
    std::map<std::int64_t, std::vector<double>> curve;
    for (const RunLog& r : runs) {
      for (const auto& [step, mean] : r.points) curve[step].push_back(mean);
    }
    for (const auto& [step, values] : curve) {
      result.csv += row("curve", env, algo, std::to_string(step), values);
    }
  }
  return result;
}

}  // namespace oorl
