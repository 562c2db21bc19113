"""Vanilla / C-only / M-only / C+M ablation with saturation diagnostics.

For each environment prints, per condition, the median final evaluation
return and the seed-averaged mean of omega and p(M) over the final 20% of
training, then writes SVGs of both diagnostics.
"""

import argparse
import statistics
from pathlib import Path

import numpy as np

from erc.harness.cache import cached_train
from erc.harness.config import TrainerConfig
from erc.harness.experiments import CONDITIONS, condition_config, tail_mean
from erc.harness.plot import emit_plot

STEPS = {"double-pendulum": 150_000, "reacher2d": 100_000}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--envs", default="double-pendulum,reacher2d")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--conditions", default=",".join(CONDITIONS))
    p.add_argument("--cache", default="results/cache")
    p.add_argument("--out", default="results/ablation")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for env in args.envs.split(","):
        base = TrainerConfig(algo="a2c-erc", env=env, total_env_steps=STEPS[env])
        paths = []
        for cond in args.conditions.split(","):
            finals, om, pm = [], [], []
            for seed in range(args.seeds):
                log, path = cached_train(condition_config(base, cond).replace(seed=seed), args.cache)
                # one group per condition in the plots
                link = out / f"{env}_{cond}_seed{seed}.csv"
                link.write_bytes(path.read_bytes())
                paths.append(link)
                finals.append(log.final_eval)
                om.append(tail_mean(log.column("omega_mean")))
                pm.append(tail_mean(log.column("pM_mean")))
            print(f"{env}\t{cond}\treturn={statistics.median(finals):.1f}\t"
                  f"omega_tail={np.mean(om):.3f}\tpM_tail={np.mean(pm):.3f}", flush=True)
        for column in ("omega_mean", "pM_mean", "eval_return"):
            emit_plot(paths, column, out / f"{env}_{column}.svg", title=env)


if __name__ == "__main__":
    main()
