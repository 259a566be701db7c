"""Object-oriented deep reinforcement learning with a native core."""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    EnvError,
    Error,
    GraphError,
    IoError,
    KeyError,
    NumericError,
    ShapeError,
    algorithm_ids,
    make_env,
)

__all__ = [
    "ConfigError", "EnvError", "Error", "GraphError", "IoError", "KeyError",
    "NumericError", "ShapeError", "algorithm_ids", "config", "evaluate",
    "load_checkpoint", "make_env", "report", "train",
]


def config(algo, env, *overrides, file=None):
    """Resolved config dict: defaults, then an optional JSON file, then each
    overrides mapping in order. Keys may be nested or dotted."""
    layers = []
    if file is not None:
        layers.append(_core.load_config_file(os.fspath(file)))
    layers.extend(json.dumps(o) for o in overrides)
    return json.loads(_core.resolve_config(algo, env, layers))


def train(cfg, force=False, on_learn=None, on_eval=None):
    """Run an experiment into cfg["experiment"]["out_dir"].

    on_learn(step, report) sees every update; on_eval(step, mean_return)
    may return True to stop early."""
    if on_eval is not None:
        user_eval = on_eval
        on_eval = lambda step, ret: bool(user_eval(step, ret))
    return _core.train(json.dumps(cfg), force, on_learn, on_eval)


def evaluate(checkpoint, episodes, seed):
    mean, returns = _core.evaluate(os.fspath(checkpoint), episodes, seed)
    return {"mean_return": mean, "returns": returns}


def report(dirs):
    """(csv_text, errors) aggregated over run directories."""
    return _core.report([os.fspath(d) for d in dirs])


def load_checkpoint(path):
    """(config dict, agent) restored from a checkpoint file."""
    text, agent = _core.load_checkpoint(os.fspath(path))
    return json.loads(text), agent
