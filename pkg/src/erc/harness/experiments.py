"""Grid search over (eta_c, eta_m) and the four-way ablation of the tricks."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import TrainerConfig
from .runlog import RunLog, read_runlog
from .trainer import train

log = logging.getLogger(__name__)

GRID_VERSION_LINE = "# erc-grid v1"
ABLATION_VERSION_LINE = "# erc-ablation v1"

CONDITIONS = ("vanilla", "c", "m", "cm")


def _run_one(job: tuple[TrainerConfig, str]) -> tuple[float, str, str]:
    cfg, csv_path = job
    try:
        runlog = train(cfg, csv_path=csv_path)
    except Exception as exc:  # one failed run must not sink the sweep
        log.exception("run failed: %s", csv_path)
        return math.nan, "error", f"{type(exc).__name__}: {exc}"
    return runlog.final_eval, runlog.status, ""


def run_jobs(jobs, workers: int = 1):
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def grid_search(base: TrainerConfig, eta_c_list, eta_m_list, seeds, out_dir, workers: int = 1) -> list[dict]:
    """Train and evaluate every (eta_c, eta_m, seed); write ``grid.csv``.

    Rows come back sorted by (eta_c, eta_m, seed).
    """
    if not eta_c_list or not eta_m_list or not seeds:
        raise ValueError("grid_search needs non-empty eta_c, eta_m and seed lists")
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    keys = sorted({(float(c), float(m), int(s)) for c in eta_c_list for m in eta_m_list for s in seeds})
    jobs = [
        (base.replace(eta_c=c, eta_m=m, seed=s), str(out / "runs" / f"ec{c:g}_em{m:g}_seed{s}.csv"))
        for c, m, s in keys
    ]
    results = run_jobs(jobs, workers)
    rows = [
        {"eta_c": c, "eta_m": m, "seed": s, "final_eval_return": ret, "status": status, "error": err}
        for (c, m, s), (ret, status, err) in zip(keys, results)
    ]
    write_table(out / "grid.csv", GRID_VERSION_LINE, rows)
    return rows


def condition_config(base: TrainerConfig, condition: str) -> TrainerConfig:
    """Switch the tricks on or off by zeroing their gains."""
    eta_c = base.eta_c if condition in ("c", "cm") else 0.0
    eta_m = base.eta_m if condition in ("m", "cm") else 0.0
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    return base.replace(eta_c=eta_c, eta_m=eta_m)


def tail_mean(values, fraction: float = 0.2) -> float:
    """Mean of the finite values in the final ``fraction`` of a sequence."""
    vals = list(values)
    if not vals:
        return math.nan
    k = max(1, math.ceil(len(vals) * fraction))
    tail = np.array(vals[-k:], dtype=float)
    tail = tail[np.isfinite(tail)]
    return float(tail.mean()) if tail.size else math.nan


def summarize(runlog: RunLog) -> dict:
    return {
        "final_eval_return": runlog.final_eval,
        "omega_tail": tail_mean(runlog.column("omega_mean")),
        "pM_tail": tail_mean(runlog.column("pM_mean")),
        "keep_tail": tail_mean(runlog.column("keep_fraction")),
    }


def ablation(base: TrainerConfig, seeds, out_dir, workers: int = 1) -> list[dict]:
    """Run vanilla / C-only / M-only / C+M for every seed.

    Writes one run CSV per (condition, seed), ``ablation.csv`` with one row
    per run and ``summary.csv`` with per-condition means over seeds.
    """
    if base.algo not in ("a2c-erc", "ppo-erc"):
        raise ValueError("ablation needs an algorithm that runs the tricks (a2c-erc or ppo-erc)")
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    keys = [(cond, int(s)) for cond in CONDITIONS for s in seeds]
    paths = [str(out / "runs" / f"{cond}_seed{s}.csv") for cond, s in keys]
    jobs = [(condition_config(base, cond).replace(seed=s), p) for (cond, s), p in zip(keys, paths)]
    results = run_jobs(jobs, workers)
    rows = []
    for (cond, s), path, (ret, status, err) in zip(keys, paths, results):
        row = {"condition": cond, "seed": s, "status": status}
        if os.path.exists(path) and status != "error":
            row.update(summarize(read_runlog(path)))
            row["final_eval_return"] = ret
        else:
            row.update(final_eval_return=math.nan, omega_tail=math.nan, pM_tail=math.nan, keep_tail=math.nan)
        rows.append(row)
    write_table(out / "ablation.csv", ABLATION_VERSION_LINE, rows)
    summary = []
    for cond in CONDITIONS:
        sub = [r for r in rows if r["condition"] == cond]
        summary.append({
            "condition": cond,
            "n_seeds": len(sub),
            **{k: _nanmean([r[k] for r in sub])
               for k in ("final_eval_return", "omega_tail", "pM_tail", "keep_tail")},
            "median_final_eval_return": _nanmedian([r["final_eval_return"] for r in sub]),
        })
    write_table(out / "summary.csv", ABLATION_VERSION_LINE, summary)
    return summary


def _nanmean(xs):
    a = np.array(xs, dtype=float)
    a = a[np.isfinite(a)]
    return float(a.mean()) if a.size else math.nan


def _nanmedian(xs):
    a = np.array(xs, dtype=float)
    a = a[np.isfinite(a)]
    return float(np.median(a)) if a.size else math.nan


def write_table(path, version_line: str, rows: list[dict]):
    with open(path, "w", newline="") as fh:
        fh.write(version_line + "\n")
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
