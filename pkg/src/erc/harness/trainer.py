"""Seeded training loop: collect one episode, then replay from the buffer.

Randomness: every consumer draws from its own PCG64 stream derived from
``SeedSequence(seed, spawn_key=(k,))`` where ``k`` is the consumer's index
in ``STREAMS``.  Adding a consumer at the end never perturbs the others.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from ..algorithms import A2cConfig, A2cNets, SacConfig, SacNets, a2c_erc_update, a2c_update, sac_update
from ..envs import make
from ..replay import ReplayBuffer, Transition, replay_schedule
from .checkpoint import save_checkpoint
from .config import TrainerConfig
from .runlog import RunLog

log = logging.getLogger(__name__)

STREAMS = ("init_policy", "init_value", "init_disc", "env", "act", "buffer", "mining", "update", "eval")

METRIC_KEYS = ("d_mean", "D_mean", "omega_mean", "I_term", "pM_mean", "keep_fraction",
               "loss_pi", "loss_v", "loss_D", "policy_entropy")

# metric values reported by algorithms that do not run the ERC tricks
DISABLED_METRICS = dict(d_mean=0.5, D_mean=math.nan, omega_mean=0.0, I_term=0.0, pM_mean=0.0,
                        keep_fraction=1.0)


class Diverged(RuntimeError):
    pass


def make_rngs(seed: int) -> dict[str, np.random.Generator]:
    return {
        name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
        for k, name in enumerate(STREAMS)
    }


@dataclass
class Agent:
    """An algorithm's networks plus the update function the loop calls."""

    algo: str
    nets: A2cNets | SacNets
    # policy actions live in [-1, 1]; this maps them onto the env bounds
    act_low: np.ndarray
    act_high: np.ndarray

    def act(self, obs, rng, deterministic=False):
        return self.nets.act(obs, rng, deterministic)

    def to_env(self, a):
        return self.act_low + (np.asarray(a) + 1.0) * 0.5 * (self.act_high - self.act_low)

    def update(self, batch, rngs) -> dict:
        if self.algo == "sac":
            return sac_update(self.nets, batch, rngs["update"])
        if self.algo == "a2c":
            return a2c_update(self.nets, batch)
        return a2c_erc_update(self.nets, batch, rngs["mining"])

    @property
    def skipped_steps(self) -> int:
        return self.nets.stats.skipped_steps

    def parameters(self):
        n = self.nets
        if isinstance(n, SacNets):
            return [n.policy.params, *(q.params for q in n.q), *n.q_target]
        return [n.policy.params, n.value.params, n.value_target, n.disc.params]

    def finite(self) -> bool:
        return all(np.all(np.isfinite(p.values)) for p in self.parameters())


def build_agent(cfg: TrainerConfig, rngs) -> Agent:
    spec = make(cfg.env).spec
    if cfg.algo == "sac":
        sc = SacConfig(gamma=cfg.gamma, tau=cfg.tau, lr=cfg.lr, alpha=cfg.alpha,
                       auto_alpha=cfg.auto_alpha, hidden=cfg.hidden, activation=cfg.activation)
        nets = SacNets(spec.obs_dim, spec.act_dim, sc, rngs)
    else:
        erc = cfg.algo in ("a2c-erc", "ppo-erc")
        eta_c = cfg.eta_c if erc else 0.0
        eta_m = cfg.eta_m if erc else 0.0
        ac = A2cConfig(
            gamma=cfg.gamma, tau=cfg.tau, lr=cfg.lr, eta_c=eta_c, eta_m=eta_m,
            use_discriminator=eta_c > 0.0 or eta_m > 0.0,
            mask_value_loss=cfg.mask_value_loss, mask_normalizer=cfg.mask_normalizer,
            policy_loss="ppo" if cfg.algo == "ppo-erc" else "a2c",
            ppo_clip=cfg.ppo_clip, hidden=cfg.hidden, activation=cfg.activation,
        )
        nets = A2cNets(spec.obs_dim, spec.act_dim, ac, rngs)
    return Agent(cfg.algo, nets, np.array(spec.act_low), np.array(spec.act_high))


def eval_seeds(seed: int, episodes: int) -> list[int]:
    """Reset seeds for evaluation, drawn from the dedicated eval stream."""
    rng = make_rngs(seed)["eval"]
    return [int(x) for x in rng.integers(0, 2**63 - 1, size=episodes)]


def evaluate(agent: Agent, env_id: str, episodes: int, seed: int) -> tuple[float, float]:
    """Mean and std of the return with deterministic (mean) actions."""
    if episodes < 1:
        raise ValueError("evaluation needs at least one episode")
    env = make(env_id)
    returns = []
    for s in eval_seeds(seed, episodes):
        obs = env.reset(s)
        total = 0.0
        while True:
            a, _ = agent.act(obs, None, deterministic=True)
            res = env.step(agent.to_env(a))
            total += res.reward
            obs = res.obs
            if res.done:
                break
        returns.append(total)
    return float(np.mean(returns)), float(np.std(returns))


def train(cfg: TrainerConfig, csv_path=None, progress: bool = False, checkpoint_path=None) -> RunLog:
    """Run one training job and return its log; the CSV is written on exit.

    With ``checkpoint_path`` the final networks and optimizer state are
    saved as a bundle (skipped for diverged runs).

    A run whose parameters become non-finite halts with status "diverged";
    the partial log is still written.
    """
    rngs = make_rngs(cfg.seed)
    env = make(cfg.env)
    agent = build_agent(cfg, rngs)
    buf = ReplayBuffer(env.spec.obs_dim, env.spec.act_dim, cfg.buffer)
    runlog = RunLog()
    disabled = cfg.algo in ("a2c", "sac")
    step = 0
    episode = 0
    try:
        while step < cfg.total_env_steps:
            obs = env.reset(int(rngs["env"].integers(0, 2**63 - 1)))
            ep_return = 0.0
            while True:
                a, log_b = agent.act(obs, rngs["act"])
                res = env.step(agent.to_env(a))
                step += 1
                if res.aborted:
                    log.warning("episode %d aborted: non-finite physics state", episode)
                    break
                buf.push(Transition(obs, a, res.obs, res.reward, res.terminal, log_b))
                ep_return += res.reward
                obs = res.obs
                if res.done or step >= cfg.total_env_steps:
                    break
            episode += 1

            sums = dict.fromkeys(METRIC_KEYS, 0.0)
            n_mb = replay_schedule(len(buf), cfg.batch)
            for _ in range(n_mb):
                m = agent.update(buf.sample_uniform(cfg.batch, rngs["buffer"]), rngs)
                for k in METRIC_KEYS:
                    sums[k] += m[k]
            if not agent.finite():
                runlog.status = "diverged"
                raise Diverged(f"non-finite parameters after episode {episode}")

            row = {"env_step": step, "episode": episode, "train_return": ep_return,
                   "skipped_steps": agent.skipped_steps}
            if n_mb:
                row.update({k: v / n_mb for k, v in sums.items()})
            if disabled:
                row.update(DISABLED_METRICS)
            last = step >= cfg.total_env_steps
            if episode % cfg.eval_every == 0 or last:
                row["eval_return"], _ = evaluate(agent, cfg.env, cfg.eval_episodes, cfg.seed)
                runlog.final_eval = row["eval_return"]
            runlog.append(row)
            if progress and (episode % cfg.eval_every == 0 or last):
                log.info("step %d episode %d train %.1f eval %s", step, episode, ep_return,
                         row.get("eval_return"))
    except Diverged as exc:
        log.error("%s", exc)
    finally:
        if csv_path is not None:
            runlog.write(csv_path)
    if checkpoint_path is not None and runlog.status == "ok":
        save_checkpoint(agent.nets, cfg, checkpoint_path)
    return runlog


def default_out_dir() -> str:
    return os.environ.get("ERC_OUT_DIR", "runs")
