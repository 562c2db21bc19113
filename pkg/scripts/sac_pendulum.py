"""SAC baseline on pendulum swing-up: median final evaluation return over seeds."""

import argparse
import statistics
from pathlib import Path

from erc.harness.cache import cached_train
from erc.harness.config import TrainerConfig
from erc.harness.plot import emit_plot


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--cache", default="results/cache")
    p.add_argument("--out", default="results/sac")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    finals, paths = [], []
    for seed in range(args.seeds):
        log, path = cached_train(TrainerConfig(algo="sac", env="pendulum", seed=seed, total_env_steps=args.steps),
                                 args.cache)
        finals.append(log.final_eval)
        paths.append(path)
        print(f"sac\tseed={seed}\tfinal_eval_return={log.final_eval:.1f}\tstatus={log.status}", flush=True)
    print(f"sac\tmedian={statistics.median(finals):.1f}")
    emit_plot(paths, "eval_return", out / "eval_return.svg", title="pendulum")


if __name__ == "__main__":
    main()
