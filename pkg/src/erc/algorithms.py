"""A2C (with the ERC tricks), clipped-PPO and SAC update rules.

Each loss has a plain function returning the loss together with the
gradient w.r.t. the quantity it is differentiated in (log pi, V(s), Q(s, a)
...), and the agents chain those through the networks by hand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import (
    PolicyOutput,
    gauss_entropy,
    gauss_log_prob,
    gauss_log_prob_grad,
    gauss_rsample,
    gauss_sample,
    head_grad,
    policy_head,
    squash_correction_grad,
    tanh_squash,
)
from .nn import AdamState, MlpSpec, ParameterSet, adam_step, mlp_backward, mlp_forward, mlp_init, soft_update
from .replay import Batch
from .tricks import (
    Discriminator,
    PiGainState,
    counteraction_loss,
    counteraction_loss_grad,
    density_ratio,
    density_ratio_grad,
    mining_mask,
    mining_prob,
    pi_gain_update,
)


# ---------------------------------------------------------------- losses


def td_error(r, done, v_s, vbar_snext, gamma: float = 0.99):
    return np.asarray(r) + gamma * (1.0 - np.asarray(done, dtype=np.float64)) * np.asarray(vbar_snext) - np.asarray(v_s)


def a2c_value_loss(delta):
    """0.5 * delta**2 per sample; its gradient w.r.t. V(s) is -delta."""
    delta = np.asarray(delta, dtype=np.float64)
    return 0.5 * delta * delta


def a2c_policy_loss(delta_hat, log_pi):
    """-delta_hat * log_pi per sample; delta_hat is treated as a constant."""
    return -np.asarray(delta_hat) * np.asarray(log_pi)


def ppo_clip_policy_loss(log_pi, log_b, delta_hat, eps: float = 0.2) -> tuple[float, np.ndarray]:
    """Batch-mean clipped surrogate and its gradient w.r.t. each log_pi."""
    log_pi = np.asarray(log_pi, dtype=np.float64)
    delta_hat = np.asarray(delta_hat, dtype=np.float64)
    rho = np.exp(log_pi - np.asarray(log_b, dtype=np.float64))
    per_sample, grad = ppo_clip_terms(rho, delta_hat, eps)
    n = max(log_pi.size, 1)
    return float(np.mean(per_sample)), grad / n


def ppo_clip_terms(rho, delta_hat, eps: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample clipped surrogate loss and d(loss)/d(log_pi)."""
    unclipped = rho * delta_hat
    clipped = np.clip(rho, 1.0 - eps, 1.0 + eps) * delta_hat
    use_unclipped = unclipped <= clipped
    per_sample = -np.where(use_unclipped, unclipped, clipped)
    # d rho / d log_pi = rho; a selected clipped branch is flat in rho
    grad = np.where(use_unclipped, -unclipped, 0.0)
    return per_sample, grad


# ---------------------------------------------------------------- policy


class GaussianPolicy:
    """MLP producing (mean, log-std) of a diagonal Gaussian."""

    def __init__(self, obs_dim: int, act_dim: int, seed, hidden=(100, 100), activation="tanh"):
        self.act_dim = act_dim
        self.spec = MlpSpec(obs_dim, 2 * act_dim, tuple(hidden), activation, "linear")
        self.params = mlp_init(self.spec, seed)

    def forward(self, s, params: ParameterSet | None = None):
        raw, cache = mlp_forward(self.params if params is None else params, s)
        out, inside = policy_head(raw, self.act_dim)
        return out, inside, cache

    def backward(self, cache, d_mean, d_log_std, inside) -> np.ndarray:
        grads, _ = mlp_backward(self.params, cache, head_grad(d_mean, d_log_std, inside))
        return grads


class ValueNet:
    def __init__(self, in_dim: int, seed, hidden=(100, 100), activation="tanh"):
        self.spec = MlpSpec(in_dim, 1, tuple(hidden), activation, "linear")
        self.params = mlp_init(self.spec, seed)

    def __call__(self, x, params: ParameterSet | None = None) -> np.ndarray:
        out, _ = mlp_forward(self.params if params is None else params, x)
        return out[..., 0]

    def forward(self, x):
        out, cache = mlp_forward(self.params, x)
        return out[..., 0], cache

    def backward(self, cache, g) -> tuple[np.ndarray, np.ndarray]:
        return mlp_backward(self.params, cache, np.asarray(g)[..., None])


# ---------------------------------------------------------------- A2C


@dataclass
class A2cConfig:
    gamma: float = 0.99
    tau: float = 0.1
    lr: float = 1e-3
    eta_c: float = 0.5
    eta_m: float = 2.0
    use_discriminator: bool = True
    mask_value_loss: bool = True
    # "a2c" uses -delta * log pi, "ppo" the clipped surrogate
    policy_loss: str = "a2c"
    ppo_clip: float = 0.2
    # masked losses are averaged over the kept samples ("kept") or over the
    # whole minibatch with dropped samples contributing zero ("batch")
    mask_normalizer: str = "batch"
    hidden: tuple[int, ...] = (100, 100)
    activation: str = "tanh"


@dataclass
class A2cStats:
    skipped_steps: int = 0
    all_masked: int = 0
    disc_above_half: int = 0
    disc_samples: int = 0


class A2cNets:
    """Policy, value, target value, discriminator and PI gain for one run."""

    def __init__(self, obs_dim: int, act_dim: int, config: A2cConfig, rngs: dict[str, np.random.Generator]):
        if not 0.0 <= config.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        self.config = config
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        h, act = config.hidden, config.activation
        self.policy = GaussianPolicy(obs_dim, act_dim, rngs["init_policy"], h, act)
        self.policy_target = self.policy.params.copy()
        self.value = ValueNet(obs_dim, rngs["init_value"], h, act)
        self.value_target = self.value.params.copy()
        self.disc = Discriminator(obs_dim, rngs["init_disc"], h, config.lr, act)
        self.gain = PiGainState(config.eta_c)
        self.policy_opt = AdamState.for_params(self.policy.params, config.lr)
        self.value_opt = AdamState.for_params(self.value.params, config.lr)
        self.stats = A2cStats()

    @property
    def tricks_enabled(self) -> bool:
        c = self.config
        return c.use_discriminator and (c.eta_c > 0.0 or c.eta_m > 0.0)

    def act(self, s, rng: np.random.Generator, deterministic: bool = False):
        out, _, _ = self.policy.forward(s)
        if deterministic:
            return out.mean, float(gauss_log_prob(out, out.mean))
        sample = gauss_sample(out, rng)
        return sample.action, float(sample.log_prob)

    def log_prob(self, s, a):
        out, _, _ = self.policy.forward(s)
        return gauss_log_prob(out, a)


def _masked_mean(x, mask, total):
    return float(np.sum(x * mask) / total)


def a2c_update(nets: A2cNets, batch: Batch) -> dict:
    """Plain A2C step on a replayed minibatch, without any ERC machinery."""
    c = nets.config
    n = len(batch)
    out, inside, pcache = nets.policy.forward(batch.s)
    log_pi = gauss_log_prob(out, batch.a)
    v_s, vcache = nets.value.forward(batch.s)
    vbar = nets.value(batch.s_next, nets.value_target)
    delta = td_error(batch.r, batch.done, v_s, vbar, c.gamma)
    loss_v = float(np.sum(a2c_value_loss(delta)) / n)
    if c.policy_loss == "ppo":
        rho = np.exp(log_pi - batch.log_b)
        per, g_logpi = ppo_clip_terms(rho, delta, c.ppo_clip)
        loss_pi = float(np.sum(per) / n)
        g_logpi = g_logpi / n
    else:
        loss_pi = float(np.sum(a2c_policy_loss(delta, log_pi)) / n)
        g_logpi = -delta / n
    if not (np.isfinite(loss_v) and np.isfinite(loss_pi)):
        nets.stats.skipped_steps += 1
        return _a2c_metrics(nets, out, loss_pi, loss_v, np.nan, None, None, None, None)
    dmu, dls = gauss_log_prob_grad(out, batch.a)
    gp = nets.policy.backward(pcache, g_logpi[:, None] * dmu, g_logpi[:, None] * dls, inside)
    gv, _ = nets.value.backward(vcache, -delta / n)
    _apply(nets, gp, gv)
    return _a2c_metrics(nets, out, loss_pi, loss_v, np.nan, None, None, None, None)


def a2c_erc_update(nets: A2cNets, batch: Batch, mining_rng: np.random.Generator) -> dict:
    """A2C (or PPO-clip) step with counteraction and mining on one minibatch.

    Order: density ratio, discriminator step on the full batch, mining masks,
    PI gain and counteraction on the full batch, then the masked actor-critic
    losses plus the counteraction term.  The discriminator outputs used for
    mining and counteraction come from the same forward pass as its step.
    """
    c = nets.config
    n = len(batch)
    out, inside, pcache = nets.policy.forward(batch.s)
    log_pi = gauss_log_prob(out, batch.a)
    d = density_ratio(log_pi, batch.log_b)

    if c.use_discriminator:
        D_s, dcache = nets.disc.forward(batch.s)
        loss_D = nets.disc.step(dcache, D_s, d)
        nets.stats.disc_above_half += int(np.sum(D_s > 0.5))
        nets.stats.disc_samples += n
    else:
        D_s = np.full(n, 0.5)
        loss_D = np.nan

    p = mining_prob(d, D_s, c.eta_m)
    M = mining_mask(p, mining_rng)
    omega = pi_gain_update(nets.gain, d)

    terms = erc_objective(nets, batch, M, omega, D_s, (out, inside, pcache, log_pi))
    if terms.all_masked:
        nets.stats.all_masked += 1
    diag = (d, D_s, omega, p, M)
    loss_pi = terms.loss_pi + terms.loss_c
    if not (np.isfinite(loss_pi) and np.isfinite(terms.loss_v)):
        nets.stats.skipped_steps += 1
        return _a2c_metrics(nets, out, loss_pi, terms.loss_v, loss_D, *diag)
    _apply(nets, terms.policy_grad, terms.value_grad)
    return _a2c_metrics(nets, out, loss_pi, terms.loss_v, loss_D, *diag)


@dataclass
class ErcTerms:
    loss_pi: float
    loss_c: float
    loss_v: float
    policy_grad: np.ndarray
    # None when every sample feeding the value loss was masked out
    value_grad: np.ndarray | None
    all_masked: bool


def erc_objective(nets: A2cNets, batch: Batch, M, omega, D_s, policy_fwd=None) -> ErcTerms:
    """Losses and parameter gradients of one ERC step for fixed masks and gains.

    The policy objective is the masked mean of the A2C (or clipped PPO) loss
    plus the counteraction loss over the whole batch; the value objective is
    the (optionally masked) mean of 0.5 * delta**2.  ``M``, ``omega`` and
    ``D_s`` are constants here, exactly as in the update.
    """
    c = nets.config
    n = len(batch)
    if policy_fwd is None:
        out, inside, pcache = nets.policy.forward(batch.s)
        log_pi = gauss_log_prob(out, batch.a)
    else:
        out, inside, pcache, log_pi = policy_fwd
    d = density_ratio(log_pi, batch.log_b)
    d_grad = density_ratio_grad(log_pi, batch.log_b)
    loss_c = counteraction_loss(omega, d, D_s)
    g_c = counteraction_loss_grad(omega, D_s, d_grad)

    v_s, vcache = nets.value.forward(batch.s)
    vbar = nets.value(batch.s_next, nets.value_target)
    delta = td_error(batch.r, batch.done, v_s, vbar, c.gamma)
    Mv = M if c.mask_value_loss else np.ones(n)
    kept = float(np.sum(M))
    kept_v = float(np.sum(Mv))
    norm = kept if c.mask_normalizer == "kept" else float(n)
    norm_v = kept_v if c.mask_normalizer == "kept" else float(n)

    if kept > 0:
        if c.policy_loss == "ppo":
            rho = np.exp(log_pi - batch.log_b)
            per, g_pi = ppo_clip_terms(rho, delta, c.ppo_clip)
            loss_pi = _masked_mean(per, M, norm)
            g_logpi = g_pi * M / norm
        else:
            loss_pi = _masked_mean(a2c_policy_loss(delta, log_pi), M, norm)
            g_logpi = -delta * M / norm
    else:
        loss_pi = 0.0
        g_logpi = np.zeros(n)
    g_logpi = g_logpi + g_c
    loss_v = _masked_mean(a2c_value_loss(delta), Mv, norm_v) if kept_v > 0 else 0.0

    dmu, dls = gauss_log_prob_grad(out, batch.a)
    gp = nets.policy.backward(pcache, g_logpi[:, None] * dmu, g_logpi[:, None] * dls, inside)
    gv = None
    if kept_v > 0:
        gv, _ = nets.value.backward(vcache, -delta * Mv / norm_v)
    return ErcTerms(loss_pi, loss_c, loss_v, gp, gv, kept == 0)


def _apply(nets: A2cNets, gp, gv):
    if not adam_step(nets.policy_opt, nets.policy.params, gp):
        nets.stats.skipped_steps += 1
    if gv is not None and not adam_step(nets.value_opt, nets.value.params, gv):
        nets.stats.skipped_steps += 1
    soft_update(nets.value_target, nets.value.params, nets.config.tau)
    # kept in sync for parity with the reference setup; no loss reads it
    soft_update(nets.policy_target, nets.policy.params, nets.config.tau)


def _a2c_metrics(nets, out, loss_pi, loss_v, loss_D, d, D_s, omega, p, M=None) -> dict:
    m = {
        "loss_pi": float(loss_pi),
        "loss_v": float(loss_v),
        "loss_D": float(loss_D),
        "policy_entropy": float(np.mean(gauss_entropy(out))),
        "I_term": float(nets.gain.I),
    }
    if d is None:
        m.update(d_mean=0.5, D_mean=np.nan, omega_mean=0.0, pM_mean=0.0, keep_fraction=1.0)
    else:
        m.update(
            d_mean=float(np.mean(d)),
            D_mean=float(np.mean(D_s)) if nets.config.use_discriminator else np.nan,
            omega_mean=float(np.mean(omega)),
            pM_mean=float(np.mean(p)),
            keep_fraction=float(np.sum(M) / M.size),
        )
    return m


# ---------------------------------------------------------------- SAC


@dataclass
class SacConfig:
    gamma: float = 0.99
    tau: float = 0.1
    lr: float = 1e-3
    alpha: float = 0.2
    auto_alpha: bool = False
    target_entropy: float | None = None
    hidden: tuple[int, ...] = (100, 100)
    activation: str = "tanh"


@dataclass
class SacStats:
    skipped_steps: int = 0


class SacNets:
    def __init__(self, obs_dim: int, act_dim: int, config: SacConfig, rngs: dict[str, np.random.Generator]):
        self.config = config
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        h, act = config.hidden, config.activation
        self.policy = GaussianPolicy(obs_dim, act_dim, rngs["init_policy"], h, act)
        self.q = [ValueNet(obs_dim + act_dim, rngs["init_value"], h, act) for _ in range(2)]
        self.q_target = [q.params.copy() for q in self.q]
        self.policy_opt = AdamState.for_params(self.policy.params, config.lr)
        self.q_opt = [AdamState.for_params(q.params, config.lr) for q in self.q]
        self.log_alpha = np.array([np.log(config.alpha)]) if config.alpha > 0 else np.array([-np.inf])
        self.alpha_opt = AdamState.for_params(self.log_alpha, config.lr)
        self.target_entropy = (
            -float(act_dim) if config.target_entropy is None else float(config.target_entropy)
        )
        self.stats = SacStats()

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def act(self, s, rng: np.random.Generator, deterministic: bool = False):
        out, _, _ = self.policy.forward(s)
        if deterministic:
            a, lp = tanh_squash(out.mean, gauss_log_prob(out, out.mean))
            return a, float(lp)
        sample = gauss_sample(out, rng)
        a, lp = tanh_squash(sample.action, sample.log_prob)
        return a, float(lp)


def _squashed_rsample(out: PolicyOutput, z):
    u, dls_u = gauss_rsample(out, z)
    log_prob_pre = np.sum(-0.5 * np.log(2 * np.pi) - out.log_std - 0.5 * np.asarray(z) ** 2, axis=-1)
    a, log_prob = tanh_squash(u, log_prob_pre)
    return u, dls_u, a, log_prob


def sac_critic_loss(nets: SacNets, batch: Batch, z_next) -> tuple[float, list[np.ndarray], list]:
    """Twin soft-Q regression loss, its gradients w.r.t. each Q(s, a), and caches.

    ``z_next`` is the standard-normal noise for the fresh action at s'.
    """
    c = nets.config
    n = len(batch)
    out_n, _, _ = nets.policy.forward(batch.s_next)
    _, _, a_next, logp_next = _squashed_rsample(out_n, z_next)
    sa_next = np.concatenate([batch.s_next, a_next], axis=1)
    qbar = np.minimum(nets.q[0](sa_next, nets.q_target[0]), nets.q[1](sa_next, nets.q_target[1]))
    y = batch.r + c.gamma * (1.0 - batch.done) * (qbar - nets.alpha * logp_next)
    sa = np.concatenate([batch.s, batch.a], axis=1)
    loss = 0.0
    grads, caches = [], []
    for q in nets.q:
        qv, cache = q.forward(sa)
        err = y - qv
        loss += float(np.sum(0.5 * err * err) / n)
        grads.append(-err / n)
        caches.append(cache)
    return loss, grads, caches


def sac_actor_loss(nets: SacNets, batch: Batch, z) -> tuple[float, np.ndarray, np.ndarray]:
    """mean(alpha * log pi(a~|s) - min_k Q_k(s, a~)) with a~ reparameterized.

    Returns (loss, policy parameter gradient, log pi of the sampled actions).
    """
    n = len(batch)
    alpha = nets.alpha
    out, inside, pcache = nets.policy.forward(batch.s)
    z = np.asarray(z, dtype=np.float64)
    u, dls_u, a, logp = _squashed_rsample(out, z)
    sa = np.concatenate([batch.s, a], axis=1)
    q_vals, q_caches = zip(*(q.forward(sa) for q in nets.q))
    pick_first = q_vals[0] <= q_vals[1]
    qmin = np.where(pick_first, q_vals[0], q_vals[1])
    loss = float(np.mean(alpha * logp - qmin))
    # d(-Q_min)/da via the selected critic's input gradient
    g_sa = np.zeros((n, sa.shape[1]))
    for k, sel in enumerate((pick_first, ~pick_first)):
        _, g_in = nets.q[k].backward(q_caches[k], -sel.astype(np.float64) / n)
        g_sa += g_in
    g_a = g_sa[:, nets.obs_dim:]
    g_u = g_a * (1.0 - a * a)
    # alpha * log pi term; z is held fixed so the Gaussian part only sees log_std
    corr = squash_correction_grad(u)
    g_u = g_u + (alpha / n) * corr
    d_mean = g_u
    d_ls = g_u * dls_u - alpha / n
    grads = nets.policy.backward(pcache, d_mean, d_ls, inside)
    return loss, grads, logp


def sac_update(nets: SacNets, batch: Batch, rng: np.random.Generator) -> dict:
    c = nets.config
    n = len(batch)
    z_next = rng.standard_normal((n, nets.act_dim))
    z = rng.standard_normal((n, nets.act_dim))
    loss_q, q_grads, q_caches = sac_critic_loss(nets, batch, z_next)
    if not np.isfinite(loss_q):
        nets.stats.skipped_steps += 1
    else:
        for q, opt, g, cache in zip(nets.q, nets.q_opt, q_grads, q_caches):
            gp, _ = q.backward(cache, g)
            if not adam_step(opt, q.params, gp):
                nets.stats.skipped_steps += 1
    loss_pi, gp, logp = sac_actor_loss(nets, batch, z)
    if not np.isfinite(loss_pi) or not adam_step(nets.policy_opt, nets.policy.params, gp):
        nets.stats.skipped_steps += 1
    if c.auto_alpha:
        g_alpha = np.array([-np.mean(logp + nets.target_entropy)])
        adam_step(nets.alpha_opt, nets.log_alpha, g_alpha)
    for qt, q in zip(nets.q_target, nets.q):
        soft_update(qt, q.params, c.tau)
    out, _, _ = nets.policy.forward(batch.s)
    return {
        "loss_pi": loss_pi,
        "loss_v": loss_q,
        "loss_D": np.nan,
        "policy_entropy": float(np.mean(gauss_entropy(out))),
        "I_term": 0.0,
        "d_mean": np.nan,
        "D_mean": np.nan,
        "omega_mean": 0.0,
        "pM_mean": 0.0,
        "keep_fraction": 1.0,
        "alpha": nets.alpha,
    }
