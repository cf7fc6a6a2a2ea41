"""Result records and their CSV / JSON-sidecar serialisation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION
from .runner import SweepOutcome

CSV_COLUMNS = ("sweep_value", "metric", "mean", "stderr", "trials", "pulse", "mode", "seed", "config_hash")
MIN_ERRORS = 100


@dataclass(frozen=True)
class ResultRecord:
    sweep_value: float
    metric: str          # "ber" or "nmse"
    mean: float
    stderr: float
    trials: int
    pulse: str
    mode: str
    seed: int
    config_hash: str
    errors: int = -1     # bit errors behind a BER point, -1 for NMSE

    def __post_init__(self):
        if self.metric not in ("ber", "nmse"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "ber" and not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"BER {self.mean} outside [0, 1]")
        if self.metric == "nmse" and not self.mean >= 0.0:
            raise ValueError(f"NMSE {self.mean} is negative or NaN")
        if self.trials < 1:
            raise ValueError("a record needs at least one trial")

    @property
    def flagged(self) -> bool:
        """BER estimate resting on fewer than ``MIN_ERRORS`` bit errors."""
        return self.metric == "ber" and self.errors < MIN_ERRORS

    def row(self) -> list[str]:
        return [repr(float(self.sweep_value)), self.metric, repr(float(self.mean)), repr(float(self.stderr)),
                str(self.trials), self.pulse, self.mode, str(self.seed), self.config_hash]


def _stderr(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(np.std(v, ddof=1) / np.sqrt(v.size))


def records_from_outcome(out: SweepOutcome, metric: str) -> list[ResultRecord]:
    cfg = out.cfg
    h = cfg.hash()
    records = []
    for (pulse, mode, index), acc in sorted(out.stats.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1])):
        value = out.point_value(index)
        if metric == "ber":
            records.append(ResultRecord(value, "ber", acc.errors / acc.bits, _stderr(acc.ber), len(acc.ber),
                                        pulse, mode, cfg.seed, h, acc.errors))
        elif acc.nmse:
            records.append(ResultRecord(value, "nmse", float(np.mean(acc.nmse)), _stderr(acc.nmse),
                                        len(acc.nmse), pulse, mode, cfg.seed, h))
    return records


def write_csv(records, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.row())
    return path


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_sidecar(records, path: str | Path, config: dict, failures=(), extra: dict | None = None) -> Path:
    """JSON next to the CSV: config, per-point error counts and flags."""
    path = Path(path)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "records": [dict(asdict(r), flagged=r.flagged) for r in records],
        "flagged": [f"{r.pulse}/{r.mode}@{r.sweep_value:g}" for r in records if r.flagged],
        "numerical_failures": list(failures),
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
