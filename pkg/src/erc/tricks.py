"""Experience discriminator, counteraction and mining.

These decide how much a replayed transition can be trusted by an on-policy
update: ``d`` compares the current policy density of the stored action with
the density it had when it was collected, ``D(s)`` learns a state-only
estimate of ``d``, counteraction pulls the policy back toward the behavior
policy with a PI-scheduled gain, and mining randomly drops transitions that
look too off-policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import AdamState, MlpSpec, ParameterSet, adam_step, mlp_backward, mlp_forward, mlp_init, sigmoid

D_CLAMP = 1e-6


def density_ratio(log_pi, log_b):
    """d = min(0.5, sigmoid(log_pi - log_b))."""
    x = np.asarray(log_pi, dtype=np.float64) - np.asarray(log_b, dtype=np.float64)
    d = np.minimum(0.5, sigmoid(np.atleast_1d(x)).reshape(x.shape))
    return float(d) if d.ndim == 0 else d


def density_ratio_grad(log_pi, log_b):
    """d(d)/d(log_pi); zero wherever the 0.5 clamp is active."""
    x = np.asarray(log_pi, dtype=np.float64) - np.asarray(log_b, dtype=np.float64)
    s = sigmoid(np.atleast_1d(x)).reshape(x.shape)
    g = np.where(s < 0.5, s * (1.0 - s), 0.0)
    return float(g) if g.ndim == 0 else g


def clamp_disc(D):
    return np.clip(D, D_CLAMP, 1.0 - D_CLAMP)


def discriminator_loss(D_s, d_hat):
    """Mean Bernoulli negative log-likelihood of D with target d_hat."""
    D = clamp_disc(np.asarray(D_s, dtype=np.float64))
    d = np.asarray(d_hat, dtype=np.float64)
    return float(np.mean(-d * np.log(D) - (1.0 - d) * np.log(1.0 - D)))


def discriminator_loss_grad(D_s, d_hat):
    """Gradient of discriminator_loss w.r.t. each D_s (zero where clamped)."""
    D_raw = np.asarray(D_s, dtype=np.float64)
    D = clamp_disc(D_raw)
    d = np.asarray(d_hat, dtype=np.float64)
    n = max(D.size, 1)
    g = (-d / D + (1.0 - d) / (1.0 - D)) / n
    return np.where(D == D_raw, g, 0.0)


@dataclass
class PiGainState:
    eta_c: float = 0.5
    I: float = 0.0

    def __post_init__(self):
        if self.eta_c < 0:
            raise ValueError("eta_c must be non-negative")


def pi_gain_update(state: PiGainState, d_hat_batch) -> np.ndarray:
    """Update the integral term in place and return the per-sample gains omega."""
    d_hat = np.asarray(d_hat_batch, dtype=np.float64)
    if d_hat.size == 0:
        raise ValueError("pi_gain_update needs a non-empty batch")
    P = state.eta_c * (1.0 - 2.0 * d_hat)
    state.I = max(0.0, 0.5 * state.I + float(np.mean(P)))
    return np.maximum(0.0, P + state.I)


def disc_logit_gain(D_s):
    """ln D - ln(1 - D) on the clamped discriminator output."""
    D = clamp_disc(np.asarray(D_s, dtype=np.float64))
    return np.log(D) - np.log(1.0 - D)


def counteraction_loss(omega, d, D_s) -> float:
    """mean(omega * d * (ln D - ln(1 - D))); only d carries a gradient."""
    return float(np.mean(np.asarray(omega) * np.asarray(d) * disc_logit_gain(D_s)))


def counteraction_loss_grad(omega, D_s, d_grad) -> np.ndarray:
    """Gradient of counteraction_loss w.r.t. each log_pi.

    ``d_grad`` is density_ratio_grad at the same points.
    """
    omega = np.asarray(omega, dtype=np.float64)
    return omega * disc_logit_gain(D_s) * np.asarray(d_grad) / max(omega.size, 1)


def mining_prob(d_hat, D_hat, eta_m: float):
    """Drop probability 2 * max(0, 0.5 - min(d, D) ** eta_m)."""
    m = np.minimum(np.asarray(d_hat, dtype=np.float64), np.asarray(D_hat, dtype=np.float64))
    p = 2.0 * np.maximum(0.0, 0.5 - m**eta_m)
    return float(p) if p.ndim == 0 else p


def mining_mask(p, rng: np.random.Generator) -> np.ndarray:
    """Keep (1) a sample iff p <= eps with eps ~ U(0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    eps = rng.random(p.shape)
    return (p <= eps).astype(np.float64)


class Discriminator:
    """State-only sigmoid network D(s) in (0, 1), trained toward d."""

    def __init__(self, obs_dim: int, seed, hidden=(100, 100), lr: float = 1e-3,
                 activation: str = "tanh"):
        self.spec = MlpSpec(obs_dim, 1, tuple(hidden), activation, "sigmoid")
        self.params = mlp_init(self.spec, seed)
        self.opt = AdamState.for_params(self.params, lr)

    def __call__(self, s) -> np.ndarray:
        out, _ = mlp_forward(self.params, s)
        return out[..., 0]

    def forward(self, s):
        out, cache = mlp_forward(self.params, s)
        return out[..., 0], cache

    def step(self, cache, D_s, d_hat) -> float:
        """One Adam step on the discriminator loss from a cached forward pass."""
        loss = discriminator_loss(D_s, d_hat)
        g = discriminator_loss_grad(D_s, d_hat)
        grads, _ = mlp_backward(self.params, cache, g[:, None])
        adam_step(self.opt, self.params, grads)
        return loss

    def train_step(self, s, d_hat) -> float:
        D_s, cache = self.forward(s)
        return self.step(cache, D_s, d_hat)

    @property
    def parameters(self) -> ParameterSet:
        return self.params
