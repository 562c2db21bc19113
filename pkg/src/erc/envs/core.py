from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import physics


@dataclass(frozen=True)
class EnvSpec:
    id: str
    obs_dim: int
    act_dim: int
    act_low: tuple[float, ...]
    act_high: tuple[float, ...]
    max_steps: int
    dt: float

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not all(math.isfinite(v) for v in (*self.act_low, *self.act_high)):
            raise ValueError("action bounds must be finite")


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    # terminal condition or step limit
    done: bool
    # True when done only because of the step limit
    truncated: bool
    # physics produced a non-finite state; the episode was cut short
    aborted: bool = False

    @property
    def terminal(self) -> bool:
        return self.done and not self.truncated


def _wrap(theta: float) -> float:
    return (theta + math.pi) % (2.0 * math.pi) - math.pi


def _clip(v: float, lim: float) -> float:
    return lim if v > lim else (-lim if v < -lim else v)


class Env:
    spec: EnvSpec
    constants: dict

    def __init__(self):
        self.state = np.zeros(0)
        self.steps = 0
        self.rng = np.random.default_rng(0)

    def reset(self, seed) -> np.ndarray:
        self.rng = np.random.default_rng(seed)
        self.steps = 0
        self.state = self._initial_state()
        return self.observe()

    def step(self, action) -> StepResult:
        a = np.asarray(action, dtype=np.float64).reshape(self.spec.act_dim)
        if not np.all(np.isfinite(a)):
            raise ValueError(f"non-finite action {a}")
        a = np.clip(a, self.spec.act_low, self.spec.act_high)
        reward = self._reward(a)
        self._integrate(a)
        self.steps += 1
        if not np.all(np.isfinite(self.state)):
            return StepResult(np.zeros(self.spec.obs_dim), float(reward), True, False, aborted=True)
        terminal = self._terminal()
        if terminal:
            reward = self._terminal_reward(a, reward)
        truncated = (not terminal) and self.steps >= self.spec.max_steps
        return StepResult(self.observe(), float(reward), terminal or truncated, truncated)

    def get_state(self):
        return self.state.copy(), self.steps

    def set_state(self, snapshot):
        state, steps = snapshot
        self.state = np.array(state, dtype=np.float64)
        self.steps = int(steps)

    def _terminal(self) -> bool:
        return False

    def _terminal_reward(self, a, reward):
        return reward

    def describe(self) -> str:
        lines = [f"{k}: {v}" for k, v in self.spec.__dict__.items()]
        lines.append("physics:")
        lines += [f"  {k} = {v}" for k, v in self.constants.items()]
        return "\n".join(lines)


class Pendulum(Env):
    """Torque-limited swing-up; state (theta, theta_dot) with theta=0 upright."""

    constants = physics.PENDULUM

    def __init__(self):
        super().__init__()
        c = self.constants
        self.spec = EnvSpec("pendulum", 3, 1, (-c["max_torque"],), (c["max_torque"],), c["max_steps"], c["dt"])

    def _initial_state(self):
        c = self.constants
        return np.array([
            self.rng.uniform(-c["reset_theta"], c["reset_theta"]),
            self.rng.uniform(-c["reset_speed"], c["reset_speed"]),
        ])

    def observe(self):
        th, thd = self.state
        return np.array([math.cos(th), math.sin(th), thd])

    def _reward(self, a):
        th, thd = self.state
        u = float(a[0])
        return -(_wrap(th) ** 2 + 0.1 * thd**2 + 0.001 * u**2)

    def _integrate(self, a):
        c = self.constants
        th, thd = float(self.state[0]), float(self.state[1])
        u = float(a[0])
        h = c["dt"] / c["substeps"]
        k_g = 3.0 * c["g"] / (2.0 * c["length"])
        k_u = 3.0 / (c["mass"] * c["length"] ** 2)
        for _ in range(c["substeps"]):
            thd = _clip(thd + (k_g * math.sin(th) + k_u * u) * h, c["max_speed"])
            th = th + thd * h
        self.state = np.array([th, thd])

    def energy(self) -> float:
        """Mechanical energy per unit inertia, zero at the bottom at rest."""
        c = self.constants
        th, thd = self.state
        return 0.5 * thd**2 + 3.0 * c["g"] / (2.0 * c["length"]) * (math.cos(th) + 1.0)


class DoublePendulum(Env):
    """Cart with two stacked passive links; balance them upright by pushing the cart.

    State: (x, theta1, theta2, x_dot, theta1_dot, theta2_dot) with absolute
    link angles.
    """

    constants = physics.DOUBLE_PENDULUM

    def __init__(self):
        super().__init__()
        c = self.constants
        self.spec = EnvSpec("double-pendulum", 8, 1, (-1.0,), (1.0,), c["max_steps"], c["dt"])

    def _initial_state(self):
        n = self.constants["reset_noise"]
        return self.rng.uniform(-n, n, size=6)

    def observe(self):
        x, t1, t2, xd, t1d, t2d = self.state
        return np.array([x, xd, math.sin(t1), math.cos(t1), t1d, math.sin(t2), math.cos(t2), t2d])

    def _reward(self, a):
        return 1.0 - self.constants["action_cost"] * float(a[0]) ** 2

    def _terminal(self):
        c = self.constants
        x, t1, t2 = self.state[:3]
        lim = c["tilt_limit"]
        return abs(_wrap(t1)) > lim or abs(_wrap(t2)) > lim or abs(x) > c["x_limit"]

    def accelerations(self, state, force):
        c = self.constants
        x, t1, t2, xd, t1d, t2d = state
        m1, m2, mc = c["mass1"], c["mass2"], c["cart_mass"]
        l1, l2, g = c["length1"], c["length2"], c["g"]
        s1, c1 = math.sin(t1), math.cos(t1)
        s2, c2 = math.sin(t2), math.cos(t2)
        s12, c12 = math.sin(t1 - t2), math.cos(t1 - t2)
        M = np.array([
            [mc + m1 + m2, (m1 + m2) * l1 * c1, m2 * l2 * c2],
            [(m1 + m2) * l1 * c1, (m1 + m2) * l1 * l1, m2 * l1 * l2 * c12],
            [m2 * l2 * c2, m2 * l1 * l2 * c12, m2 * l2 * l2],
        ])
        b = c["joint_damping"]
        f = np.array([
            force - c["cart_friction"] * xd + (m1 + m2) * l1 * s1 * t1d**2 + m2 * l2 * s2 * t2d**2,
            (m1 + m2) * g * l1 * s1 - m2 * l1 * l2 * s12 * t2d**2 - b * t1d + b * (t2d - t1d),
            m2 * g * l2 * s2 + m2 * l1 * l2 * s12 * t1d**2 - b * (t2d - t1d),
        ])
        return np.linalg.solve(M, f)

    def _integrate(self, a):
        c = self.constants
        force = c["force_scale"] * float(a[0])
        h = c["dt"] / c["substeps"]
        s = self.state.copy()
        lims = (c["max_cart_speed"], c["max_joint_speed"], c["max_joint_speed"])
        for _ in range(c["substeps"]):
            acc = self.accelerations(s, force)
            for i in range(3):
                s[3 + i] = _clip(s[3 + i] + acc[i] * h, lims[i])
            s[:3] += s[3:] * h
        self.state = s


class Reacher2d(Env):
    """Planar two-link arm steering its fingertip onto a random target.

    State: (q1, q2, q1_dot, q2_dot, target_x, target_y); q2 is relative to
    the first link.
    """

    constants = physics.REACHER2D

    def __init__(self):
        super().__init__()
        c = self.constants
        self.spec = EnvSpec("reacher2d", 10, 2, (-1.0, -1.0), (1.0, 1.0), c["max_steps"], c["dt"])

    def _initial_state(self):
        c = self.constants
        q = self.rng.uniform(-c["reset_angle"], c["reset_angle"], size=2)
        qd = self.rng.uniform(-c["reset_speed"], c["reset_speed"], size=2)
        r = c["target_radius"] * math.sqrt(self.rng.uniform())
        phi = self.rng.uniform(-math.pi, math.pi)
        return np.array([q[0], q[1], qd[0], qd[1], r * math.cos(phi), r * math.sin(phi)])

    def fingertip(self, state=None):
        c = self.constants
        q1, q2 = (self.state if state is None else state)[:2]
        return (
            c["length1"] * math.cos(q1) + c["length2"] * math.cos(q1 + q2),
            c["length1"] * math.sin(q1) + c["length2"] * math.sin(q1 + q2),
        )

    def observe(self):
        q1, q2, q1d, q2d, tx, ty = self.state
        fx, fy = self.fingertip()
        return np.array([math.sin(q1), math.cos(q1), math.sin(q2), math.cos(q2), q1d, q2d,
                         tx, ty, fx - tx, fy - ty])

    def _reward(self, a):
        fx, fy = self.fingertip()
        tx, ty = self.state[4:]
        return -math.hypot(fx - tx, fy - ty) - self.constants["action_cost"] * float(a @ a)

    def _integrate(self, a):
        c = self.constants
        m1, m2, l1, l2 = c["mass1"], c["mass2"], c["length1"], c["length2"]
        b = c["joint_damping"]
        tau = c["torque_scale"] * a
        h = c["dt"] / c["substeps"]
        q1, q2, q1d, q2d = (float(v) for v in self.state[:4])
        lim = c["max_joint_speed"]
        for _ in range(c["substeps"]):
            cq2, sq2 = math.cos(q2), math.sin(q2)
            m11 = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * cq2
            m12 = m2 * l2 * l2 + m2 * l1 * l2 * cq2
            m22 = m2 * l2 * l2
            hh = m2 * l1 * l2 * sq2
            f1 = tau[0] - b * q1d + hh * (2.0 * q1d * q2d + q2d * q2d)
            f2 = tau[1] - b * q2d - hh * q1d * q1d
            det = m11 * m22 - m12 * m12
            q1dd = (m22 * f1 - m12 * f2) / det
            q2dd = (m11 * f2 - m12 * f1) / det
            q1d = _clip(q1d + q1dd * h, lim)
            q2d = _clip(q2d + q2dd * h, lim)
            q1 += q1d * h
            q2 += q2d * h
        self.state = np.array([q1, q2, q1d, q2d, self.state[4], self.state[5]])


_REGISTRY = {"pendulum": Pendulum, "double-pendulum": DoublePendulum, "reacher2d": Reacher2d}
ENV_IDS = tuple(_REGISTRY)


def make(env_id: str) -> Env:
    try:
        return _REGISTRY[env_id]()
    except KeyError:
        raise ValueError(f"unknown environment {env_id!r}; choose from {', '.join(ENV_IDS)}") from None


def env_reset(env_id: str, seed) -> tuple[Env, np.ndarray]:
    env = make(env_id)
    return env, env.reset(seed)


def env_step(env: Env, action) -> StepResult:
    return env.step(action)


def describe(env_id: str) -> str:
    return make(env_id).describe()
