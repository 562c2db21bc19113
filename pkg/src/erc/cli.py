"""Command-line entry point: ``python -m erc <command> ...``.

Exit status: 0 on success, 1 when a run diverged, 2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .envs import ENV_IDS, describe
from .harness.config import ALGOS, TrainerConfig
from .harness.experiments import ablation, grid_search
from .harness.plot import emit_plot
from .harness.trainer import default_out_dir, train

EXIT_OK, EXIT_DIVERGED, EXIT_BAD_INPUT = 0, 1, 2


class BadInput(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="erc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one run and write its CSV")
    t.add_argument("--config", help="key = value config file")
    t.add_argument("--algo", choices=ALGOS)
    t.add_argument("--env", choices=ENV_IDS)
    t.add_argument("--eta-c", type=float)
    t.add_argument("--eta-m", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--steps", type=int, help="total environment steps")
    t.add_argument("--out", help="output directory")

    g = sub.add_parser("grid", help="grid search over (eta_c, eta_m)")
    g.add_argument("--config")
    g.add_argument("--eta-c", type=_floats, required=True)
    g.add_argument("--eta-m", type=_floats, required=True)
    g.add_argument("--seeds", type=_ints, required=True)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out")

    a = sub.add_parser("ablate", help="vanilla / C / M / C+M matrix")
    a.add_argument("--config")
    a.add_argument("--seeds", type=_ints, required=True)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--out")

    pl = sub.add_parser("plot", help="SVG learning curves from run CSVs")
    pl.add_argument("--column", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("csv", nargs="+")

    e = sub.add_parser("envs", help="environment information")
    esub = e.add_subparsers(dest="envs_command", required=True)
    d = esub.add_parser("describe", help="print spec and physics constants")
    d.add_argument("id")
    return p


def load_config(path) -> TrainerConfig:
    if path is None:
        return TrainerConfig()
    try:
        return TrainerConfig.load(path)
    except OSError as exc:
        raise BadInput(f"cannot read config: {exc}") from None


def _out_dir(args, cfg: TrainerConfig, leaf: str) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.out_dir:
        return Path(cfg.out_dir)
    return Path(default_out_dir()) / leaf


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    overrides = {k: v for k, v in dict(algo=args.algo, env=args.env, eta_c=args.eta_c, eta_m=args.eta_m,
                                      seed=args.seed, total_env_steps=args.steps).items() if v is not None}
    cfg = cfg.replace(**overrides)
    name = f"{cfg.algo}_{cfg.env}_seed{cfg.seed}"
    out = _out_dir(args, cfg, name)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / f"{name}.cfg")
    runlog = train(cfg, csv_path=out / f"{name}.csv", progress=args.verbose, checkpoint_path=out / f"{name}.ckpt")
    print(f"{out / (name + '.csv')}\tstatus={runlog.status}\tfinal_eval_return={runlog.final_eval!r}")
    return EXIT_DIVERGED if runlog.status == "diverged" else EXIT_OK


def cmd_grid(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg, "grid")
    rows = grid_search(cfg, args.eta_c, args.eta_m, args.seeds, out, workers=args.workers)
    print(out / "grid.csv")
    return EXIT_DIVERGED if any(r["status"] == "diverged" for r in rows) else EXIT_OK


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg, "ablation")
    summary = ablation(cfg, args.seeds, out, workers=args.workers)
    for r in summary:
        print(f"{r['condition']}\treturn={r['final_eval_return']:.2f}\tomega={r['omega_tail']:.4f}\tpM={r['pM_tail']:.4f}")
    return EXIT_OK


def cmd_plot(args) -> int:
    for p in args.csv:
        if not Path(p).is_file():
            raise BadInput(f"no such CSV: {p}")
    emit_plot(args.csv, args.column, args.out)
    print(args.out)
    return EXIT_OK


def cmd_envs(args) -> int:
    if args.id not in ENV_IDS:
        raise BadInput(f"unknown env {args.id!r}; choose from {', '.join(ENV_IDS)}")
    print(describe(args.id))
    return EXIT_OK


COMMANDS = dict(train=cmd_train, grid=cmd_grid, ablate=cmd_ablate, plot=cmd_plot, envs=cmd_envs)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (BadInput, ValueError, KeyError) as exc:
        print(f"erc: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
