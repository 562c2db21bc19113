"""Learning curves of a2c-erc against plain a2c with replay on double-pendulum.

Prints the median final evaluation return per algorithm and writes an SVG of
the evaluation curves.  Finished runs are reused from the cache directory.
"""

import argparse
import statistics
from pathlib import Path

from erc.harness.cache import cached_train
from erc.harness.config import TrainerConfig
from erc.harness.plot import emit_plot


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--steps", type=int, default=150_000)
    p.add_argument("--cache", default="results/cache")
    p.add_argument("--out", default="results/fig3")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for algo, eta_c, eta_m in (("a2c-erc", 0.5, 2.0), ("a2c", 0.0, 0.0)):
        finals = []
        for seed in range(args.seeds):
            cfg = TrainerConfig(algo=algo, env="double-pendulum", eta_c=eta_c, eta_m=eta_m, seed=seed,
                                total_env_steps=args.steps)
            log, path = cached_train(cfg, args.cache)
            finals.append(log.final_eval)
            paths.append(path)
            print(f"{algo}\tseed={seed}\tfinal_eval_return={log.final_eval:.1f}\tstatus={log.status}", flush=True)
        print(f"{algo}\tmedian={statistics.median(finals):.1f}", flush=True)
    emit_plot(paths, "eval_return", out / "eval_return.svg", title="double-pendulum")


if __name__ == "__main__":
    main()
