import math

import pytest

import oorl


def small(algo, env, out, steps=300):
    overrides = {
        "experiment": {"total_steps": steps, "eval_every": 150, "eval_episodes": 1,
                       "seed": 2, "out_dir": str(out)},
        "nets.critic_hidden": [8],
    }
    if algo != "dqn":
        overrides["nets.actor_hidden"] = [8]
    if algo == "ppo":
        overrides["algo"] = {"rollout_length": 64, "minibatches": 4, "epochs": 2}
    else:
        overrides["algo"] = {"warmup_steps": 50, "batch_size": 16}
    return oorl.config(algo, env, overrides)


def test_algorithm_ids():
    assert sorted(oorl.algorithm_ids()) == ["ddpg", "dqn", "drnd", "ppo", "sac", "td3"]


def test_config_layers_and_errors(tmp_path):
    cfg = oorl.config("sac", "pendulum", {"algo.gamma": 0.9}, {"algo": {"gamma": 0.95}})
    assert cfg["algo"]["gamma"] == 0.95
    path = tmp_path / "over.json"
    path.write_text('{"algo.tau": 0.01}')
    assert oorl.config("td3", "pendulum", file=path)["algo"]["tau"] == 0.01
    with pytest.raises(oorl.ConfigError, match="algo.gama"):
        oorl.config("sac", "pendulum", {"algo.gama": 0.9})
    with pytest.raises(ValueError):
        oorl.config("dqn", "pendulum")


def test_env_contract():
    env = oorl.make_env("pendulum")
    assert env.id == "pendulum"
    # Agents see the rescaled box; torque limits live behind the wrapper.
    assert env.action_space == {"discrete": False, "low": [-1.0], "high": [1.0]}
    first = env.reset(seed=4)
    assert env.reset(seed=4) == first
    for t in range(200):
        obs, reward, terminated, truncated = env.step([0.0])
        assert reward <= 0.0 and not terminated
    assert truncated
    cart = oorl.make_env("cartpole")
    assert cart.action_space == {"discrete": True, "n": 2}
    with pytest.raises(oorl.Error):
        oorl.make_env("mountaincar")


def test_train_evaluate_report(tmp_path):
    learns = []
    summary = oorl.train(small("sac", "pendulum", tmp_path / "run"),
                         on_learn=lambda step, rep: learns.append(rep["loss_critic"]))
    assert summary["steps"] == 300
    assert len(summary["evals"]) == 2
    assert len(learns) == 251 and all(math.isfinite(x) for x in learns)

    ckpt = tmp_path / "run" / "checkpoint_final.json"
    result = oorl.evaluate(ckpt, 2, 7)
    assert result == oorl.evaluate(ckpt, 2, 7)
    assert result["mean_return"] == pytest.approx(sum(result["returns"]) / 2)

    cfg, agent = oorl.load_checkpoint(ckpt)
    assert cfg["experiment"]["algo_id"] == agent.algo_id == "sac"
    action = agent.act([1.0, 0.0, 0.0])
    assert len(action) == 1 and -1.0 <= action[0] <= 1.0

    csv, errors = oorl.report([tmp_path / "run", tmp_path / "missing"])
    assert csv.splitlines()[0] == "kind,env,algo,step,mean,std,n"
    assert len(errors) == 1

    with pytest.raises(oorl.IoError):
        oorl.train(small("sac", "pendulum", tmp_path / "run"))


def test_early_stop_and_determinism(tmp_path):
    summary = oorl.train(small("ppo", "cartpole", tmp_path / "a", 600),
                         on_eval=lambda step, ret: step >= 300)
    assert summary["stopped_early"] and summary["steps"] == 300
    oorl.train(small("dqn", "cartpole", tmp_path / "b"))
    oorl.train(small("dqn", "cartpole", tmp_path / "c"))
    log_b = (tmp_path / "b" / "train_log.csv").read_bytes()
    assert log_b == (tmp_path / "c" / "train_log.csv").read_bytes()
