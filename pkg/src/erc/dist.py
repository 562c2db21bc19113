"""Diagonal Gaussian policy head.

All functions accept either single vectors (shape ``(A,)``) or batches
(shape ``(N, A)``); reductions run over the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
SQUASH_EPS = 1e-6


@dataclass
class PolicyOutput:
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.log_std = np.clip(np.asarray(self.log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)


@dataclass
class ActionSample:
    action: np.ndarray
    log_prob: np.ndarray | float


def policy_head(raw: np.ndarray, act_dim: int) -> tuple[PolicyOutput, np.ndarray]:
    """Split raw network output into (mean, clamped log-std).

    Also returns the mask of log-std entries inside the clamp, which is the
    derivative of the clamp and is needed to backpropagate into the raw
    output.
    """
    raw = np.asarray(raw, dtype=np.float64)
    mean = raw[..., :act_dim]
    raw_ls = raw[..., act_dim:]
    inside = (raw_ls >= LOG_STD_MIN) & (raw_ls <= LOG_STD_MAX)
    return PolicyOutput(mean, raw_ls), inside.astype(np.float64)


def head_grad(d_mean: np.ndarray, d_log_std: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Pack (mean, log-std) gradients back into the raw output layout."""
    return np.concatenate([d_mean, d_log_std * inside], axis=-1)


def gauss_log_prob(out: PolicyOutput, a) -> np.ndarray | float:
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-1:] != out.mean.shape[-1:]:
        raise ValueError(f"action dim {a.shape} does not match policy dim {out.mean.shape}")
    z = (a - out.mean) * np.exp(-out.log_std)
    return np.sum(-HALF_LOG_2PI - out.log_std - 0.5 * z * z, axis=-1)


def gauss_log_prob_grad(out: PolicyOutput, a) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of gauss_log_prob w.r.t. (mean, log_std) with the action held fixed."""
    z = (np.asarray(a, dtype=np.float64) - out.mean) * np.exp(-out.log_std)
    return z * np.exp(-out.log_std), z * z - 1.0


def gauss_sample(out: PolicyOutput, rng: np.random.Generator) -> ActionSample:
    z = rng.standard_normal(out.mean.shape)
    action = out.mean + out.std * z
    return ActionSample(action, gauss_log_prob(out, action))


def gauss_rsample(out: PolicyOutput, z) -> tuple[np.ndarray, np.ndarray]:
    """Reparameterized sample ``mean + std * z``.

    Returns the action and its elementwise derivative w.r.t. log_std
    (the derivative w.r.t. mean is the identity).
    """
    z = np.asarray(z, dtype=np.float64)
    scaled = out.std * z
    return out.mean + scaled, scaled


def tanh_squash(action_pre, log_prob_pre):
    """Map an unbounded sample into (-1, 1)^d and correct its log-density."""
    u = np.asarray(action_pre, dtype=np.float64)
    a = np.tanh(u)
    log_prob = log_prob_pre - np.sum(np.log(1.0 - a * a + SQUASH_EPS), axis=-1)
    return a, log_prob


def squash_correction_grad(u) -> np.ndarray:
    """d/du of -sum(log(1 - tanh(u)^2 + eps)), elementwise."""
    t = np.tanh(np.asarray(u, dtype=np.float64))
    one_m = 1.0 - t * t
    return 2.0 * t * one_m / (one_m + SQUASH_EPS)


def gauss_entropy(out: PolicyOutput) -> np.ndarray | float:
    return np.sum(0.5 * (1.0 + np.log(2.0 * np.pi)) + out.log_std, axis=-1)
