"""Per-episode training log and its versioned CSV format."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

SCHEMA_VERSION = 1
VERSION_LINE = f"# erc-runlog v{SCHEMA_VERSION}"

COLUMNS = (
    "env_step",
    "episode",
    "train_return",
    "eval_return",
    "d_mean",
    "D_mean",
    "omega_mean",
    "I_term",
    "pM_mean",
    "keep_fraction",
    "loss_pi",
    "loss_v",
    "loss_D",
    "policy_entropy",
    "skipped_steps",
)


@dataclass
class RunLog:
    rows: list[dict] = field(default_factory=list)
    status: str = "ok"
    final_eval: float = math.nan

    def append(self, row: dict):
        if self.rows and row["env_step"] <= self.rows[-1]["env_step"]:
            raise ValueError("env_step must be strictly increasing")
        self.rows.append({c: row.get(c, math.nan) for c in COLUMNS})

    def column(self, name: str) -> list[float]:
        if name not in COLUMNS:
            raise KeyError(f"unknown column {name!r}; available: {', '.join(COLUMNS)}")
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(VERSION_LINE + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Read any versioned CSV written by this package: (columns, rows of floats)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# erc-"):
            raise ValueError(f"{path}: missing schema version line")
        version = first.rsplit("v", 1)[-1]
        if version != str(SCHEMA_VERSION):
            raise ValueError(f"{path}: unsupported schema version {version!r}")
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: missing header")
        rows = []
        for rec in reader:
            rows.append({k: _parse(v) for k, v in zip(header, rec)})
        return header, rows


def _parse(v: str):
    if v == "":
        return math.nan
    try:
        return float(v)
    except ValueError:
        return v


def read_runlog(path) -> RunLog:
    header, rows = read_csv(path)
    if tuple(header) != COLUMNS:
        raise ValueError(f"{path}: not a run log (columns {header})")
    log = RunLog()
    for r in rows:
        for k in ("env_step", "episode", "skipped_steps"):
            if isinstance(r[k], float) and math.isfinite(r[k]):
                r[k] = int(r[k])
        log.rows.append(r)
    return log
