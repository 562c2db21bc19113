"""Native continuous-control tasks: pendulum, double-pendulum, reacher2d."""

from .core import ENV_IDS, Env, EnvSpec, StepResult, describe, env_reset, env_step, make

__all__ = ["ENV_IDS", "Env", "EnvSpec", "StepResult", "describe", "env_reset", "env_step", "make"]
