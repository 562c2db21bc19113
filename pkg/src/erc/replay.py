"""FIFO experience replay with behavior log-likelihoods."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_CAPACITY = 102400
DEFAULT_BATCH = 256


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    r: float
    done: bool
    # log-density of `a` under the policy that produced it, at action time
    log_b: float

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.s))
            and np.all(np.isfinite(self.a))
            and np.all(np.isfinite(self.s_next))
            and math.isfinite(self.r)
            and math.isfinite(self.log_b)
        )


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    r: np.ndarray
    done: np.ndarray
    log_b: np.ndarray

    def __len__(self):
        return self.r.shape[0]


class ReplayBuffer:
    """Ring buffer; once full, every push overwrites the oldest transition."""

    def __init__(self, obs_dim: int, act_dim: int, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.s_next = np.zeros((capacity, obs_dim))
        self.r = np.zeros(capacity)
        self.done = np.zeros(capacity)
        self.log_b = np.zeros(capacity)
        self.head = 0
        self.count = 0

    def __len__(self):
        return self.count

    def push(self, t: Transition) -> None:
        if not t.is_finite():
            raise ValueError(f"refusing to store non-finite transition: {t}")
        i = self.head
        self.s[i] = t.s
        self.a[i] = t.a
        self.s_next[i] = t.s_next
        self.r[i] = t.r
        self.done[i] = float(t.done)
        self.log_b[i] = t.log_b
        self.head = (i + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)

    def _logical_to_physical(self, idx):
        return (self.head - self.count + np.asarray(idx)) % self.capacity

    def __getitem__(self, i: int) -> Transition:
        """The i-th oldest retained transition."""
        if not -self.count <= i < self.count:
            raise IndexError(i)
        j = int(self._logical_to_physical(i % self.count))
        return Transition(self.s[j].copy(), self.a[j].copy(), self.s_next[j].copy(),
                          float(self.r[j]), bool(self.done[j]), float(self.log_b[j]))

    def __iter__(self):
        for i in range(self.count):
            yield self[i]

    def gather(self, idx) -> Batch:
        j = np.asarray(idx)
        return Batch(self.s[j], self.a[j], self.s_next[j], self.r[j], self.done[j], self.log_b[j])

    def sample_uniform(self, n: int, rng: np.random.Generator) -> Batch:
        """n i.i.d. uniform draws with replacement over the stored items."""
        if self.count == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        return self.gather(rng.integers(0, self.count, size=n))


def replay_schedule(count: int, batch_size: int = DEFAULT_BATCH) -> int:
    """Minibatches to replay at an episode end: half the buffer, in batches.

    Returns 0 until the buffer holds at least one batch.
    """
    if count < batch_size:
        return 0
    return max(1, math.floor(count / 2 / batch_size + 0.5))
