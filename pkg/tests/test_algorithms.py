import math

import numpy as np
import pytest

from erc.algorithms import (
    A2cConfig,
    A2cNets,
    SacConfig,
    SacNets,
    a2c_erc_update,
    a2c_policy_loss,
    a2c_update,
    a2c_value_loss,
    ppo_clip_policy_loss,
    sac_actor_loss,
    sac_critic_loss,
    sac_update,
    td_error,
)
from erc.harness.trainer import make_rngs
from erc.nn import mlp_init

import _gradcases
from _oracles import random_batch


def test_td_error_examples():
    assert td_error(0.0, False, 0.0, 0.0) == 0.0
    assert td_error(1.0, True, 0.0, 123.0) == 1.0
    assert td_error(1.0, False, 5.0, 10.0, 0.99) == pytest.approx(5.9, abs=1e-12)


def test_value_and_policy_loss_examples():
    assert a2c_value_loss(0.0) == 0.0
    assert a2c_value_loss(2.0) == 2.0
    assert a2c_policy_loss(0.0, -3.0) == 0.0
    assert a2c_policy_loss(1.0, -0.9189) == pytest.approx(0.9189, abs=1e-12)
    # value loss is minimized when V(s) equals the bootstrapped target
    target = 1.0 + 0.99 * 2.0
    vs = np.linspace(0, 6, 601)
    assert vs[np.argmin(a2c_value_loss(td_error(1.0, False, vs, 2.0)))] == pytest.approx(target, abs=0.01)


@pytest.mark.parametrize("name", sorted(_gradcases.CASES))
def test_loss_gradients_match_finite_differences(name):
    analytic, numeric = _gradcases.CASES[name](123)
    assert np.linalg.norm(numeric) > 0
    assert _gradcases.rel_err(analytic, numeric) < 1e-4


def test_ppo_on_policy_point_equals_unclipped():
    delta = np.array([0.7, -1.3])
    loss, grad = ppo_clip_policy_loss(np.zeros(2), np.zeros(2), delta)
    assert loss == pytest.approx(-np.mean(delta), abs=1e-15)
    assert np.allclose(grad, -delta / 2)


@pytest.mark.parametrize("rho,delta", [(2.0, 1.0), (0.5, -1.0), (1.5, 0.3), (0.3, -2.0)])
def test_ppo_clipped_branch_has_zero_gradient(rho, delta):
    loss, grad = ppo_clip_policy_loss([math.log(rho)], [0.0], [delta])
    assert grad[0] == 0.0
    assert loss == pytest.approx(-np.clip(rho, 0.8, 1.2) * delta)


@pytest.mark.parametrize("rho,delta", [(2.0, -1.0), (0.5, 1.0)])
def test_ppo_unclipped_side_keeps_gradient(rho, delta):
    _, grad = ppo_clip_policy_loss([math.log(rho)], [0.0], [delta])
    assert grad[0] == pytest.approx(-rho * delta)


def _const_critic(nets, k, value):
    p = nets.q[k].params
    p.values[:] = 0.0
    p.biases[-1][:] = value


def _const_target(nets, k, value):
    p = nets.q_target[k]
    p.values[:] = 0.0
    p.biases[-1][:] = value


def _sac_nets(alpha=0.2, hidden=(8, 8), seed=0, obs=3, act=1):
    return SacNets(obs, act, SacConfig(alpha=alpha, hidden=hidden), make_rngs(seed))


def test_sac_critic_example():
    nets = _sac_nets(alpha=0.0)
    nets.config.gamma = 0.0
    for k in range(2):
        _const_critic(nets, k, 0.0)
    batch = random_batch(np.random.default_rng(0), 5, 3, 1)
    batch.r[:] = 1.0
    loss, _, _ = sac_critic_loss(nets, batch, np.zeros((5, 1)))
    assert loss == pytest.approx(1.0, abs=1e-12)


def test_sac_critic_uses_min_of_targets_and_respects_done():
    nets = _sac_nets(alpha=0.0)
    for k in range(2):
        _const_critic(nets, k, 0.0)
    _const_target(nets, 0, 3.0)
    _const_target(nets, 1, -2.0)
    batch = random_batch(np.random.default_rng(0), 4, 3, 1)
    batch.r[:] = 0.0
    batch.done[:] = [0, 0, 1, 1]
    _, grads, _ = sac_critic_loss(nets, batch, np.zeros((4, 1)))
    # grad = -(y - Q)/n with Q = 0 -> y = -n * grad
    y = -4 * grads[0]
    assert np.allclose(y, [0.99 * -2.0, 0.99 * -2.0, 0.0, 0.0])


def test_sac_actor_constant_critic_gives_no_q_gradient():
    nets = _sac_nets(alpha=0.0)
    for k in range(2):
        _const_critic(nets, k, 5.0)
    batch = random_batch(np.random.default_rng(1), 6, 3, 1)
    _, g, _ = sac_actor_loss(nets, batch, np.random.default_rng(2).normal(size=(6, 1)))
    assert not g.any()


def _entropy_after_training(alpha):
    nets = _sac_nets(alpha=alpha, seed=3)
    for k in range(2):
        nets.q[k].params.values[:] = mlp_init(nets.q[k].spec, 11).values
    rng = np.random.default_rng(4)
    batch = random_batch(rng, 64, 3, 1)
    from erc.nn import adam_step

    for _ in range(200):
        _, g, _ = sac_actor_loss(nets, batch, rng.normal(size=(64, 1)))
        adam_step(nets.policy_opt, nets.policy.params, g)
    out, _, _ = nets.policy.forward(batch.s)
    return float(np.mean(out.log_std))


def test_larger_alpha_gives_higher_entropy_on_fixed_critic():
    ents = [_entropy_after_training(a) for a in (0.0, 0.2, 1.0)]
    assert ents[0] < ents[1] < ents[2]


def _a2c_pair(seed, obs=3, act=1, **kw):
    kw.setdefault("hidden", (16, 16))
    erc = A2cNets(obs, act, A2cConfig(eta_c=0.0, eta_m=0.0, use_discriminator=False, **kw), make_rngs(seed))
    plain = A2cNets(obs, act, A2cConfig(eta_c=0.0, eta_m=0.0, use_discriminator=False, **kw), make_rngs(seed))
    return erc, plain


@pytest.mark.parametrize("policy_loss", ["a2c", "ppo"])
def test_erc_with_tricks_off_is_bit_identical_to_plain(policy_loss):
    erc, plain = _a2c_pair(0, policy_loss=policy_loss)
    rng = np.random.default_rng(0)
    mining_rng = np.random.default_rng(1)
    for _ in range(20):
        batch = random_batch(rng, 32, 3, 1)
        a2c_erc_update(erc, batch, mining_rng)
        a2c_update(plain, batch)
        assert np.array_equal(erc.policy.params.values, plain.policy.params.values)
        assert np.array_equal(erc.value.params.values, plain.value.params.values)
        assert np.array_equal(erc.value_target.values, plain.value_target.values)


def test_all_masked_leaves_value_unchanged():
    nets = A2cNets(3, 1, A2cConfig(hidden=(8,), eta_m=50.0), make_rngs(0))
    rng = np.random.default_rng(0)
    batch = random_batch(rng, 16, 3, 1)
    # log_b far above log pi: d ~ 0, mining drops everything
    batch.log_b = nets.log_prob(batch.s, batch.a) + 40.0
    v_before = nets.value.params.values.copy()
    m = a2c_erc_update(nets, batch, np.random.default_rng(1))
    assert np.array_equal(nets.value.params.values, v_before)
    assert m["keep_fraction"] == 0.0
    assert nets.stats.all_masked == 1


def test_metrics_keep_fraction_matches_mask():
    nets = A2cNets(3, 1, A2cConfig(hidden=(8,)), make_rngs(0))
    batch = random_batch(np.random.default_rng(0), 64, 3, 1)
    m = a2c_erc_update(nets, batch, np.random.default_rng(5))
    # replay the same mask draw: the mining stream is the only consumer
    from erc.tricks import mining_mask

    assert 0.0 <= m["keep_fraction"] <= 1.0
    assert m["omega_mean"] >= 0 and m["I_term"] >= 0
    assert m["keep_fraction"] * 64 == pytest.approx(round(m["keep_fraction"] * 64))


def test_stored_log_b_reproduced_by_unchanged_policy():
    nets = A2cNets(3, 2, A2cConfig(hidden=(8,)), make_rngs(0))
    rng = np.random.default_rng(0)
    s = rng.normal(size=3)
    a, log_b = nets.act(s, rng)
    assert abs(float(nets.log_prob(s, a)) - log_b) < 1e-12


def test_sac_update_runs_and_stays_finite():
    nets = _sac_nets(alpha=0.2)
    nets.config.auto_alpha = True
    rng = np.random.default_rng(0)
    for _ in range(5):
        batch = random_batch(rng, 32, 3, 1)
        batch.a = np.tanh(batch.a)
        m = sac_update(nets, batch, rng)
        assert all(np.isfinite(m[k]) for k in ("loss_pi", "loss_v", "policy_entropy"))
    assert nets.alpha != 0.2
