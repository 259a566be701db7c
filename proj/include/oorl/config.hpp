#pragma once

// Layered experiment configuration: defaults(algo, env) < file < command line.
// A tree has three sections (experiment, algo, nets) addressed with dotted
// keys such as "algo.gamma". The algo and nets key sets depend on the
// algorithm.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace oorl {

using Json = nlohmann::json;

// Ordered dotted-key assignments; later entries win.
using Partial = std::vector<std::pair<std::string, Json>>;

struct ExperimentConfig {
  std::string env_id;
  std::string algo_id;
  std::uint64_t seed = 0;
  std::int64_t total_steps = 0;
  std::int64_t eval_every = 2000;
  std::int64_t eval_episodes = 10;
  std::string out_dir;
  // Record wall-clock seconds in train_log.csv (breaks byte-identical logs).
  bool wall_clock = false;
};

const std::vector<std::string>& algorithm_ids();
bool is_known_algo(const std::string& algo_id);

class ConfigTree {
 public:
  // Fully populated, validated defaults for a known, compatible pair.
  static ConfigTree defaults(const std::string& algo_id, const std::string& env_id);
  // Parses a complete tree (e.g. a written config.json) and validates it.
  static ConfigTree from_json(const Json& j);

  const Json& json() const { return data_; }
  std::string dump() const { return data_.dump(2); }

  bool has(const std::string& key) const;
  const Json& at(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;

  ExperimentConfig experiment() const;
  const std::string& algo_id() const { return algo_id_; }
  const std::string& env_id() const { return env_id_; }

  bool operator==(const ConfigTree& other) const { return data_ == other.data_; }

  // Sets one leaf, coercing integers into real-valued fields. Throws
  // ConfigError naming the key when it is unknown or the type differs.
  // Does not validate value ranges.
  void set(const std::string& key, const Json& value);
  // Range and compatibility checks; throws ConfigError.
  void validate() const;

 private:
  ConfigTree() = default;
  Json data_;
  std::string algo_id_, env_id_;
};

// Flattens nested objects into dotted keys. Arrays are leaves.
Partial flatten(const Json& j);
// Parses a JSON object file; every key must exist for at least one algorithm.
Partial load_file(const std::filesystem::path& path);
// "key=value" with the value parsed as JSON when possible, else as a string.
std::pair<std::string, Json> parse_assignment(const std::string& text);
// Applies partials in order and re-validates. Keys must exist in base;
// experiment.algo_id / env_id may only be restated with their current value.
ConfigTree merge(const ConfigTree& base, const std::vector<Partial>& overrides);

}  // namespace oorl
