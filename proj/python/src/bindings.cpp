#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oorl/algorithms.hpp"
#include "oorl/config.hpp"
#include "oorl/error.hpp"
#include "oorl/experiment.hpp"

namespace py = pybind11;
using namespace oorl;

namespace {

py::dict space_dict(const Space& s) {
  py::dict d;
  d["discrete"] = s.is_discrete();
  if (s.is_discrete()) {
    d["n"] = s.n();
  } else {
    d["low"] = s.low();
    d["high"] = s.high();
  }
  return d;
}

std::string resolve_config(const std::string& algo, const std::string& env,
                           const std::vector<std::string>& layers) {
  std::vector<Partial> partials;
  for (const std::string& text : layers) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("overrides are not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("overrides must be a JSON object");
    partials.push_back(flatten(j));
  }
  return merge(ConfigTree::defaults(algo, env), partials).dump();
}

py::dict train_py(const std::string& config_json, bool force,
                  std::function<void(std::int64_t, const LossReport&)> on_learn,
                  std::function<bool(std::int64_t, double)> on_eval) {
  const ConfigTree config = ConfigTree::from_json(Json::parse(config_json));
  TrainHooks hooks{std::move(on_learn), std::move(on_eval)};
  const TrainSummary s = train(config, force, hooks);
  py::list evals;
  for (const EvalPoint& e : s.evals) {
    py::dict d;
    d["step"] = e.step;
    d["mean_return"] = e.mean_return;
    d["std_return"] = e.std_return;
    d["returns"] = e.returns;
    evals.append(d);
  }
  py::dict out;
  out["steps"] = s.steps;
  out["episodes"] = s.episodes;
  out["evals"] = evals;
  out["stopped_early"] = s.stopped_early;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the oorl reinforcement learning library";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<GraphError>(m, "GraphError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<EnvError>(m, "EnvError", base.ptr());
  py::register_exception<KeyError>(m, "KeyError", PyExc_KeyError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("algorithm_ids", &algorithm_ids);
  m.def("resolve_config", &resolve_config, py::arg("algo"), py::arg("env"),
        py::arg("layers") = std::vector<std::string>{},
        "Defaults for (algo, env) with JSON override layers applied in order.");
  m.def("load_config_file", [](const std::filesystem::path& p) {
    Json j = Json::object();
    for (const auto& [key, value] : load_file(p)) j[key] = value;
    return j.dump();
  });
  m.def("train", &train_py, py::arg("config_json"), py::arg("force") = false,
        py::arg("on_learn") = nullptr, py::arg("on_eval") = nullptr);
  m.def(
      "evaluate",
      [](const std::filesystem::path& p, std::size_t episodes, std::uint64_t seed) {
        const EvalResult r = evaluate(p, episodes, seed);
        return py::make_tuple(r.mean_return, r.returns);
      },
      py::arg("checkpoint"), py::arg("episodes"), py::arg("seed"));
  m.def(
      "report",
      [](const std::vector<std::filesystem::path>& dirs) {
        const ReportResult r = report(dirs);
        return py::make_tuple(r.csv, r.errors);
      },
      py::arg("dirs"));

  py::class_<Env>(m, "Env")
      .def_property_readonly("id", &Env::id)
      .def_property_readonly("observation_space",
                             [](const Env& e) { return space_dict(e.observation_space()); })
      .def_property_readonly("action_space",
                             [](const Env& e) { return space_dict(e.action_space()); })
      .def("reset", &Env::reset, py::arg("seed") = std::nullopt)
      .def("step", [](Env& e, const Action& a) {
        const StepResult r = e.step(a);
        return py::make_tuple(r.observation, r.reward, r.terminated, r.truncated);
      });
  m.def("make_env", &make_env, py::arg("env_id"), py::arg("max_steps") = std::nullopt);

  py::class_<Agent, std::shared_ptr<Agent>>(m, "Agent")
      .def_property_readonly("algo_id", &Agent::algo_id)
      .def_property_readonly("update_count", &Agent::update_count)
      .def(
          "act",
          [](Agent& a, const Observation& s, bool deterministic) {
            return a.act(s, deterministic ? ActMode::kDeterministic : ActMode::kStochastic);
          },
          py::arg("state"), py::arg("deterministic") = true);
  m.def("load_checkpoint", [](const std::filesystem::path& p) {
    LoadedCheckpoint c = load_checkpoint(p);
    return py::make_tuple(c.config.dump(), std::shared_ptr<Agent>(std::move(c.agent)));
  });
}
