"""Trainer configuration and its flat ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields

from ..envs import ENV_IDS

ALGOS = ("a2c-erc", "a2c", "sac", "ppo-erc")


@dataclass
class TrainerConfig:
    algo: str = "a2c-erc"
    env: str = "double-pendulum"
    eta_c: float = 0.5
    eta_m: float = 2.0
    seed: int = 0
    total_env_steps: int = 150_000
    eval_every: int = 20
    eval_episodes: int = 10
    gamma: float = 0.99
    tau: float = 0.1
    lr: float = 1e-3
    buffer: int = 102_400
    batch: int = 256
    alpha: float = 0.2
    auto_alpha: bool = False
    ppo_clip: float = 0.2
    mask_value_loss: bool = True
    mask_normalizer: str = "batch"
    hidden: tuple[int, ...] = (100, 100)
    activation: str = "tanh"
    out_dir: str = ""

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self):
        problems = []
        if self.algo not in ALGOS:
            problems.append(f"algo must be one of {ALGOS}")
        if self.env not in ENV_IDS:
            problems.append(f"env must be one of {ENV_IDS}")
        if self.eta_c < 0 or self.eta_m < 0:
            problems.append("eta_c and eta_m must be >= 0")
        if self.total_env_steps < 0:
            problems.append("total_env_steps must be >= 0")
        if self.eval_every < 1:
            problems.append("eval_every must be >= 1")
        if self.eval_episodes < 1:
            problems.append("eval_episodes must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            problems.append("gamma must lie in [0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            problems.append("tau must lie in [0, 1]")
        if self.lr <= 0:
            problems.append("lr must be > 0")
        if self.buffer < 1 or self.batch < 1:
            problems.append("buffer and batch must be >= 1")
        if self.alpha < 0:
            problems.append("alpha must be >= 0")
        if not 0.0 < self.ppo_clip < 1.0:
            problems.append("ppo_clip must lie in (0, 1)")
        if self.mask_normalizer not in ("kept", "batch"):
            problems.append("mask_normalizer must be kept or batch")
        if not self.hidden or any(h < 1 for h in self.hidden):
            problems.append("hidden must list positive layer sizes")
        if self.activation not in ("tanh", "relu"):
            problems.append("activation must be tanh or relu")
        if problems:
            raise ValueError("invalid config: " + "; ".join(problems))

    def replace(self, **changes) -> TrainerConfig:
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> TrainerConfig:
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            values[key] = parse_value(key, value, types[key])
        return cls(**values)

    @classmethod
    def load(cls, path) -> TrainerConfig:
        with open(path) as fh:
            return cls.from_text(fh.read())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_value(key: str, value: str, type_name):
    t = type_name if isinstance(type_name, str) else getattr(type_name, "__name__", str(type_name))
    try:
        if t == "bool":
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        if t == "int":
            return int(value)
        if t == "float":
            return float(value)
        if t.startswith("tuple"):
            return tuple(int(x) for x in value.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"bad value for {key}: {value!r}") from None
    return value
