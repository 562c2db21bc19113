"""Grid search of (eta_c, eta_m) on double-pendulum.

Defaults to the 5 x 5 grid {0.1, 0.5, 1, 5, 10}^2 with one seed and a
shortened budget; every cell is an independent training run.
"""

import argparse

from erc.harness.config import TrainerConfig
from erc.harness.experiments import grid_search

LEVELS = "0.1,0.5,1,5,10"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eta-c", default=LEVELS)
    p.add_argument("--eta-m", default=LEVELS)
    p.add_argument("--seeds", default="0")
    p.add_argument("--steps", type=int, default=50_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/grid")
    args = p.parse_args()
    floats = lambda s: [float(x) for x in s.split(",")]  # noqa: E731
    base = TrainerConfig(algo="a2c-erc", env="double-pendulum", total_env_steps=args.steps)
    rows = grid_search(base, floats(args.eta_c), floats(args.eta_m), [int(s) for s in args.seeds.split(",")],
                       args.out, workers=args.workers)
    for r in rows:
        print(f"eta_c={r['eta_c']:g}\teta_m={r['eta_m']:g}\tseed={r['seed']}\t"
              f"final_eval_return={r['final_eval_return']:.1f}\t{r['status']}")


if __name__ == "__main__":
    main()
