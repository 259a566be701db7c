#include "oorl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "oorl/env.hpp"
#include "oorl/error.hpp"

namespace oorl {

namespace {

const std::vector<std::string> kAlgos{"dqn", "ddpg", "td3", "sac", "ppo", "drnd"};

bool discrete_env(const std::string& env_id) { return env_id == "cartpole"; }

bool compatible(const std::string& algo, const std::string& env) {
  if (algo == "ppo") return true;
  if (algo == "dqn") return discrete_env(env);
  return !discrete_env(env);
}

Json off_policy_common() {
  return {{"gamma", 0.99},          {"batch_size", 256},     {"warmup_steps", 1000},
          {"update_every", 1},      {"buffer_capacity", 100000}};
}

Json algo_defaults(const std::string& algo) {
  Json a = off_policy_common();
  if (algo == "dqn") {
    a.update({{"lr", 3e-4},
              {"epsilon_start", 1.0},
              {"epsilon_end", 0.05},
              {"epsilon_decay_steps", 10000},
              {"target_update_period", 1000}});
    return a;
  }
  if (algo == "ppo") {
    return {{"gamma", 0.99},         {"lr_actor", 3e-4},      {"lr_critic", 3e-4},
            {"gae_lambda", 0.95},    {"clip_ratio", 0.2},     {"entropy_coef", 0.0},
            {"max_grad_norm", 0.5},  {"rollout_length", 2048}, {"epochs", 10},
            {"minibatches", 32}};
  }
  a.update({{"tau", 0.005}, {"lr_actor", 3e-4}, {"lr_critic", 3e-4}});
  if (algo == "ddpg" || algo == "td3") {
    a.update({{"exploration_noise", 0.1}});
    if (algo == "ddpg") {
      a.update({{"ensemble_size", 1}, {"reduce", "mean"}});
    } else {
      a.update({{"ensemble_size", 2},
                {"reduce", "min"},
                {"target_noise", 0.2},
                {"noise_clip", 0.5},
                {"policy_delay", 2}});
    }
    return a;
  }
  a.update({{"lr_alpha", 3e-4}, {"initial_alpha", 1.0}, {"ensemble_size", 2}, {"reduce", "min"}});
  if (algo == "drnd") {
    a.update({{"lambda_actor", 1.0},
              {"lambda_critic", 1.0},
              {"bonus_members", 3},
              {"bonus_feature_dim", 32},
              {"bonus_hidden", {64, 64}},
              {"lr_bonus", 3e-4}});
  }
  return a;
}

Json nets_defaults(const std::string& algo) {
  if (algo == "dqn") return {{"critic_hidden", {128, 128}}, {"activation", "relu"}};
  if (algo == "ppo") {
    return {{"actor_hidden", {64, 64}}, {"critic_hidden", {64, 64}}, {"activation", "tanh"}};
  }
  return {{"actor_hidden", {256, 256}}, {"critic_hidden", {256, 256}}, {"activation", "relu"}};
}

std::int64_t default_steps(const std::string& algo) {
  if (algo == "dqn") return 200000;
  if (algo == "ppo") return 300000;
  return 30000;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() ||
      key.find('.', dot + 1) != std::string::npos) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  return {key.substr(0, dot), key.substr(dot + 1)};
}

// Every key that some algorithm accepts.
const std::set<std::string>& all_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> out;
    for (const std::string& algo : kAlgos) {
      const std::string env = algo == "dqn" || algo == "ppo" ? "cartpole" : "pendulum";
      for (const auto& [k, v] : flatten(ConfigTree::defaults(algo, env).json())) out.insert(k);
    }
    return out;
  }();
  return keys;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "' " + what);
}

}  // namespace

const std::vector<std::string>& algorithm_ids() { return kAlgos; }

bool is_known_algo(const std::string& algo_id) {
  return std::find(kAlgos.begin(), kAlgos.end(), algo_id) != kAlgos.end();
}

ConfigTree ConfigTree::defaults(const std::string& algo_id, const std::string& env_id) {
  if (!is_known_algo(algo_id)) throw ConfigError("unknown algorithm '" + algo_id + "'");
  if (!is_known_env(env_id)) throw ConfigError("unknown environment '" + env_id + "'");
  if (!compatible(algo_id, env_id)) {
    throw ConfigError("algorithm '" + algo_id + "' does not support environment '" + env_id +
                      "'");
  }
  ConfigTree t;
  t.algo_id_ = algo_id;
  t.env_id_ = env_id;
  t.data_ = {{"experiment",
              {{"env_id", env_id},
               {"algo_id", algo_id},
               {"seed", std::uint64_t{0}},
               {"total_steps", default_steps(algo_id)},
               {"eval_every", 2000},
               {"eval_episodes", 10},
               {"out_dir", "runs/" + algo_id + "_" + env_id},
               {"wall_clock", false}}},
             {"algo", algo_defaults(algo_id)},
             {"nets", nets_defaults(algo_id)}};
  t.validate();
  return t;
}

ConfigTree ConfigTree::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("experiment") || !j["experiment"].is_object()) {
    throw ConfigError("config must be an object with an 'experiment' section");
  }
  const Json& e = j["experiment"];
  if (!e.contains("algo_id") || !e["algo_id"].is_string() || !e.contains("env_id") ||
      !e["env_id"].is_string()) {
    throw ConfigError("config must name experiment.algo_id and experiment.env_id");
  }
  ConfigTree t = defaults(e["algo_id"].get<std::string>(), e["env_id"].get<std::string>());
  const Partial given = flatten(j);
  std::set<std::string> seen;
  for (const auto& [k, v] : given) {
    t.set(k, v);
    seen.insert(k);
  }
  for (const auto& [k, v] : flatten(t.data_)) {
    if (!seen.count(k)) fail(k, "is missing");
  }
  t.validate();
  return t;
}

bool ConfigTree::has(const std::string& key) const {
  const auto dot = key.find('.');
  if (dot == std::string::npos) return false;
  const std::string section = key.substr(0, dot), leaf = key.substr(dot + 1);
  return data_.contains(section) && data_[section].contains(leaf);
}

const Json& ConfigTree::at(const std::string& key) const {
  if (!has(key)) throw ConfigError("unknown config key '" + key + "'");
  const auto [section, leaf] = split_key(key);
  return data_.at(section).at(leaf);
}

double ConfigTree::get_double(const std::string& key) const { return at(key).get<double>(); }
std::int64_t ConfigTree::get_int(const std::string& key) const {
  return at(key).get<std::int64_t>();
}
std::string ConfigTree::get_string(const std::string& key) const {
  return at(key).get<std::string>();
}
bool ConfigTree::get_bool(const std::string& key) const { return at(key).get<bool>(); }
std::vector<std::size_t> ConfigTree::get_sizes(const std::string& key) const {
  return at(key).get<std::vector<std::size_t>>();
}

ExperimentConfig ConfigTree::experiment() const {
  ExperimentConfig e;
  e.env_id = get_string("experiment.env_id");
  e.algo_id = get_string("experiment.algo_id");
  e.seed = at("experiment.seed").get<std::uint64_t>();
  e.total_steps = get_int("experiment.total_steps");
  e.eval_every = get_int("experiment.eval_every");
  e.eval_episodes = get_int("experiment.eval_episodes");
  e.out_dir = get_string("experiment.out_dir");
  e.wall_clock = get_bool("experiment.wall_clock");
  return e;
}

void ConfigTree::set(const std::string& key, const Json& value) {
  if (!has(key)) {
    if (all_keys().count(key)) fail(key, "does not apply to algorithm '" + algo_id_ + "'");
    throw ConfigError("unknown config key '" + key + "'");
  }
  const auto [section, leaf] = split_key(key);
  Json& slot = data_[section][leaf];
  if (slot.is_number_float()) {
    if (!value.is_number()) fail(key, "expects a number");
    const double d = value.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    slot = d;
  } else if (slot.is_number_unsigned()) {
    if (value.is_number_unsigned()) {
      slot = value.get<std::uint64_t>();
    } else if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
      slot = static_cast<std::uint64_t>(value.get<std::int64_t>());
    } else {
      fail(key, "expects a non-negative integer");
    }
  } else if (slot.is_number_integer()) {
    if (value.is_number_integer()) {
      slot = value.get<std::int64_t>();
    } else if (value.is_number_float() && std::nearbyint(value.get<double>()) ==
                                              value.get<double>()) {
      slot = static_cast<std::int64_t>(value.get<double>());
    } else {
      fail(key, "expects an integer");
    }
  } else if (slot.is_boolean()) {
    if (!value.is_boolean()) fail(key, "expects true or false");
    slot = value;
  } else if (slot.is_string()) {
    if (!value.is_string()) fail(key, "expects a string");
    if ((key == "experiment.algo_id" || key == "experiment.env_id") && slot != value) {
      fail(key, "cannot be changed by an override (currently '" + slot.get<std::string>() +
                    "')");
    }
    slot = value;
  } else if (slot.is_array()) {
    if (!value.is_array()) fail(key, "expects a list of layer widths");
    for (const Json& w : value) {
      if (!w.is_number_integer() || w.get<std::int64_t>() < 1) {
        fail(key, "expects positive integer layer widths");
      }
    }
    slot = value;
  }
}

void ConfigTree::validate() const {
  auto need = [&](const std::string& key, bool ok, const std::string& what) {
    if (!ok) fail(key, what);
  };
  auto check_int = [&](const std::string& key, std::int64_t lo) {
    if (has(key)) need(key, get_int(key) >= lo, "must be >= " + std::to_string(lo));
  };
  auto check_positive = [&](const std::string& key) {
    if (has(key)) need(key, get_double(key) > 0.0, "must be positive");
  };
  auto check_unit = [&](const std::string& key, bool open_low, bool open_high) {
    if (!has(key)) return;
    const double v = get_double(key);
    need(key, (open_low ? v > 0.0 : v >= 0.0) && (open_high ? v < 1.0 : v <= 1.0),
         std::string("must lie in ") + (open_low ? "(0" : "[0") + ", 1" +
             (open_high ? ")" : "]"));
  };

  need("experiment.seed", at("experiment.seed").is_number_unsigned(),
       "must be a non-negative integer");
  check_int("experiment.total_steps", 0);
  check_int("experiment.eval_every", 1);
  check_int("experiment.eval_episodes", 1);
  need("experiment.out_dir", !get_string("experiment.out_dir").empty(), "must not be empty");

  check_unit("algo.gamma", true, false);
  check_unit("algo.tau", false, false);
  for (const char* k : {"algo.lr", "algo.lr_actor", "algo.lr_critic", "algo.lr_alpha",
                        "algo.lr_bonus", "algo.initial_alpha", "algo.max_grad_norm"}) {
    check_positive(k);
  }
  for (const char* k : {"algo.batch_size", "algo.update_every", "algo.buffer_capacity",
                        "algo.ensemble_size", "algo.target_update_period", "algo.policy_delay",
                        "algo.rollout_length", "algo.epochs", "algo.minibatches",
                        "algo.bonus_members", "algo.bonus_feature_dim"}) {
    check_int(k, 1);
  }
  check_int("algo.warmup_steps", 0);
  check_int("algo.epsilon_decay_steps", 0);
  check_unit("algo.epsilon_start", false, false);
  check_unit("algo.epsilon_end", false, false);
  check_unit("algo.clip_ratio", true, true);
  check_unit("algo.gae_lambda", false, false);
  for (const char* k : {"algo.exploration_noise", "algo.target_noise", "algo.noise_clip",
                        "algo.entropy_coef"}) {
    if (has(k)) need(k, get_double(k) >= 0.0, "must be >= 0");
  }
  if (algo_id_ == "td3") check_int("algo.ensemble_size", 2);
  if (has("algo.reduce")) {
    const std::string r = get_string("algo.reduce");
    need("algo.reduce", r == "min" || r == "mean", "must be 'min' or 'mean'");
  }
  if (has("algo.minibatches")) {
    need("algo.minibatches", get_int("algo.minibatches") <= get_int("algo.rollout_length"),
         "must not exceed algo.rollout_length");
  }
  const std::string act = get_string("nets.activation");
  need("nets.activation", act == "relu" || act == "tanh", "must be 'relu' or 'tanh'");
}

Partial flatten(const Json& j) {
  Partial out;
  if (!j.is_object()) throw ConfigError("config overrides must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      for (const auto& [sub, leaf] : flatten(v)) out.emplace_back(k + "." + sub, leaf);
    } else {
      out.emplace_back(k, v);
    }
  }
  return out;
}

Partial load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  Partial p = flatten(j);
  for (const auto& [k, v] : p) {
    if (!all_keys().count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  return p;
}

std::pair<std::string, Json> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + text + "'");
  }
  const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

ConfigTree merge(const ConfigTree& base, const std::vector<Partial>& overrides) {
  ConfigTree out = base;
  for (const Partial& p : overrides) {
    for (const auto& [k, v] : p) out.set(k, v);
  }
  out.validate();
  return out;
}

}  // namespace oorl
