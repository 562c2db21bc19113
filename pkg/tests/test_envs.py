import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erc.envs import ENV_IDS, describe, env_reset, env_step, make
from erc.envs import physics

from _oracles import energy_pump_torque


@pytest.mark.parametrize("env_id", ENV_IDS)
def test_reset_is_deterministic(env_id):
    a = make(env_id)
    b = make(env_id)
    assert np.array_equal(a.reset(123), b.reset(123))
    assert a.steps == 0
    assert not np.array_equal(a.reset(1), b.reset(2))


@pytest.mark.parametrize("env_id", ENV_IDS)
def test_step_is_deterministic(env_id):
    env = make(env_id)
    env.reset(5)
    snap = env.get_state()
    rng = np.random.default_rng(0)
    actions = rng.uniform(-1, 1, size=(20, env.spec.act_dim))
    first = [env.step(a) for a in actions]
    env.set_state(snap)
    second = [env.step(a) for a in actions]
    for r1, r2 in zip(first, second):
        assert np.array_equal(r1.obs, r2.obs) and r1.reward == r2.reward and r1.done == r2.done


def test_pendulum_reset_bounds():
    env = make("pendulum")
    c = physics.PENDULUM
    states = np.array([(env.reset(s), env.state)[1] for s in range(10_000)])
    assert np.all(np.abs(states[:, 0]) <= c["reset_theta"])
    assert np.all(np.abs(states[:, 1]) <= c["reset_speed"])
    # the noise actually spans its documented range
    assert states[:, 0].min() < -0.99 * c["reset_theta"] and states[:, 0].max() > 0.99 * c["reset_theta"]


def test_double_pendulum_reset_bounds():
    env = make("double-pendulum")
    n = physics.DOUBLE_PENDULUM["reset_noise"]
    for s in range(2000):
        env.reset(s)
        assert np.all(np.abs(env.state) <= n)


def test_pendulum_reward_examples():
    env = make("pendulum")
    env.reset(0)
    env.set_state(([0.0, 0.0], 0))
    assert env.step([0.0]).reward == 0.0
    env.set_state(([math.pi, 0.0], 0))
    r = env.step([0.0]).reward
    assert r == pytest.approx(-math.pi**2, abs=1e-12)
    assert -math.pi**2 == pytest.approx(-9.8696, abs=1e-4)


def test_pendulum_action_is_clipped():
    env = make("pendulum")
    env.reset(0)
    env.set_state(([math.pi, 0.0], 0))
    r = env.step([50.0]).reward
    assert r == pytest.approx(-(math.pi**2 + 0.001 * 4.0), abs=1e-12)


@pytest.mark.parametrize("theta0", [0.5, 1.5, 2.5, math.pi - 0.01])
def test_pendulum_energy_conserved(theta0):
    env = make("pendulum")
    env.reset(0)
    env.set_state(([theta0, 0.0], 0))
    e0 = env.energy()
    for _ in range(200):
        res = env.step([0.0])
        assert not res.done or res.truncated
    assert abs(env.energy() - e0) <= 0.01 * e0


def test_pendulum_truncates_without_terminal():
    env = make("pendulum")
    env.reset(0)
    for i in range(200):
        res = env.step([0.0])
        assert res.done == (i == 199)
    assert res.truncated and not res.terminal


def test_double_pendulum_tilt_is_terminal():
    env = make("double-pendulum")
    env.reset(0)
    env.set_state((np.array([0.0, 0.45, 0.45, 0.0, 0.0, 0.0]), 0))
    res = env.step([0.0])
    assert res.done and res.terminal and not res.truncated


def test_double_pendulum_cart_limit_is_terminal():
    env = make("double-pendulum")
    env.reset(0)
    env.set_state((np.array([2.45, 0.0, 0.0, 0.0, 0.0, 0.0]), 0))
    assert env.step([0.0]).terminal


def test_double_pendulum_zero_policy_falls_quickly():
    env = make("double-pendulum")
    lengths = []
    for seed in range(1000):
        env.reset(seed)
        n = 0
        while True:
            n += 1
            if env.step([0.0]).done:
                break
        lengths.append(n)
    assert np.mean(np.array(lengths) < 100) > 0.99


def test_double_pendulum_reward_example():
    env = make("double-pendulum")
    env.reset(0)
    assert env.step([0.5]).reward == pytest.approx(1.0 - 0.01 * 0.25, abs=1e-12)


def test_double_pendulum_upright_at_rest_is_equilibrium():
    env = make("double-pendulum")
    env.reset(0)
    env.set_state((np.zeros(6), 0))
    res = env.step([0.0])
    assert np.allclose(env.state, 0.0)
    assert np.allclose(res.obs, [0, 0, 0, 1, 0, 0, 1, 0])


def test_reacher_reward_is_negative_distance():
    env = make("reacher2d")
    env.reset(3)
    fx, fy = env.fingertip()
    tx, ty = env.state[4:]
    res = env.step([0.0, 0.0])
    # reward is computed on the pre-step state
    assert res.reward == pytest.approx(-math.hypot(fx - tx, fy - ty), abs=1e-12)
    assert not res.done


def test_reacher_observation_layout():
    env = make("reacher2d")
    obs = env.reset(0)
    q1, q2 = env.state[:2]
    fx, fy = env.fingertip()
    assert obs[:4] == pytest.approx([math.sin(q1), math.cos(q1), math.sin(q2), math.cos(q2)])
    assert obs[6:8] == pytest.approx(env.state[4:])
    assert obs[8:] == pytest.approx([fx - env.state[4], fy - env.state[5]])


@settings(max_examples=15, deadline=None)
@given(env_id=st.sampled_from(ENV_IDS), seed=st.integers(0, 10_000), scale=st.floats(0.5, 20.0))
def test_observations_bounded(env_id, seed, scale):
    env = make(env_id)
    obs = env.reset(seed)
    rng = np.random.default_rng(seed)
    trig = {"pendulum": [0, 1], "double-pendulum": [2, 3, 5, 6], "reacher2d": [0, 1, 2, 3]}[env_id]
    speed = {"pendulum": ([2], physics.PENDULUM["max_speed"]),
             "double-pendulum": ([4, 7], physics.DOUBLE_PENDULUM["max_joint_speed"]),
             "reacher2d": ([4, 5], physics.REACHER2D["max_joint_speed"])}[env_id]
    for _ in range(100):
        res = env.step(rng.normal(size=env.spec.act_dim) * scale)
        assert np.all(np.isfinite(res.obs))
        assert np.all(np.abs(res.obs[trig]) <= 1.0)
        assert np.all(np.abs(res.obs[speed[0]]) <= speed[1])
        if res.done:
            break


def test_non_finite_action_rejected():
    env = make("pendulum")
    env.reset(0)
    with pytest.raises(ValueError):
        env.step([np.nan])


def test_non_finite_state_aborts():
    env = make("double-pendulum")
    env.reset(0)
    env.set_state((np.array([0.0, np.nan, 0.0, 0.0, 0.0, 0.0]), 0))
    res = env.step([0.0])
    assert res.aborted and res.done


def test_functional_api_and_describe():
    env, obs = env_reset("reacher2d", 0)
    assert obs.shape == (10,)
    assert env_step(env, [0.1, -0.1]).obs.shape == (10,)
    text = describe("double-pendulum")
    assert "tilt_limit = 0.4" in text and "obs_dim: 8" in text
    with pytest.raises(ValueError):
        make("cheetah")


def _pendulum_return(policy, seed):
    env = make("pendulum")
    env.reset(seed)
    total, done = 0.0, False
    while not done:
        th, thd = env.state
        res = env.step([policy(th, thd)])
        total += res.reward
        done = res.done
    return total


def test_swing_up_threshold_is_attainable_and_non_trivial():
    # a hand-built energy-pumping controller clears -200, doing nothing does not
    pumped = [_pendulum_return(energy_pump_torque, s) for s in range(40)]
    idle = [_pendulum_return(lambda th, thd: 0.0, s) for s in range(40)]
    assert np.median(pumped) >= -200
    assert np.median(idle) < -200
