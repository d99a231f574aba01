"""Run serialisation, cross-seed summaries and mode comparison tables."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dfc import RunReport
from .field import export_components
from .grid import write_matrix_csv
from .metrics import RUN_COLUMNS, IterationRecord
from .uav import write_traces_csv


SUMMARY_METRICS = ("M_requested", "M_traced", "learning_error", "mae", "mae_db", "span_ratio",
                   "kappa", "delta", "cost_cumulative")


class PartialComparison(UserWarning):
    """The two runs' cost ranges do not overlap."""


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def write_run_csv(records: list[IterationRecord], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUN_COLUMNS)
        for rec in records:
            w.writerow(rec.row())


def read_run_csv(path) -> list[dict]:
    """Rows of a run CSV with numeric columns parsed; ``levels`` becomes a list."""
    rows = []
    with open(Path(path), newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for k, v in raw.items():
                if k == "levels":
                    row[k] = [float(x) for x in v.split(";") if x]
                elif k in ("iteration", "M_requested", "M_traced", "kappa"):
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


def summary_dict(report: RunReport) -> dict:
    last = report.records[-1] if report.records else None
    return {
        "mode": report.config.mode,
        "seed": report.config.seed,
        "iterations": len(report.records),
        "converged": report.converged,
        "termination": report.termination,
        "final": {
            "mae": last.mae if last else None,
            "mae_db": last.mae_db if last else None,
            "span_ratio": last.span_ratio if last else None,
            "learning_error": last.learning_error if last else None,
            "cost": last.cost_cumulative if last else 0.0,
            "M_requested": last.M_requested if last else None,
        },
        "initial_estimate_mae": float(np.mean(np.abs(report.truth.values
                                                     - report.initial_estimate.values))),
        "notes": list(report.notes),
    }


def write_run(report: RunReport, directory) -> Path:
    """Write every artefact of one run into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_run_csv(report.records, d / "run.csv")
    write_traces_csv(report.traces, d / "traces.csv")
    write_matrix_csv(report.final_estimate, d / "estimate.csv")
    write_matrix_csv(report.initial_estimate, d / "initial_estimate.csv")
    write_matrix_csv(report.truth, d / "truth.csv")
    write_matrix_csv(report.error_map(), d / "error_map.csv")
    export_components(report.field, d / "field.json")
    (d / "summary.json").write_text(json.dumps(summary_dict(report), indent=2) + "\n")
    return d


def _curve(run) -> tuple[np.ndarray, np.ndarray]:
    """``(cost, mae_db)`` arrays from a RunReport, records, or parsed CSV rows."""
    recs = run.records if isinstance(run, RunReport) else run
    cost, db = [], []
    for r in recs:
        c = r["cost_cumulative"] if isinstance(r, dict) else r.cost_cumulative
        m = r["mae_db"] if isinstance(r, dict) else r.mae_db
        cost.append(c)
        db.append(m)
    return np.asarray(cost, dtype=float), np.asarray(db, dtype=float)


def cost_at_target(run, target_db: float) -> float | None:
    """Cumulative cost at which the run first reaches ``target_db``.

    Linear between consecutive iterations on the MAE-dB versus cost curve;
    ``None`` when the target is never reached.
    """
    cost, db = _curve(run)
    for k in range(len(db)):
        if db[k] <= target_db:
            if k == 0 or not math.isfinite(db[k]):
                return float(cost[k])
            f = (db[k - 1] - target_db) / (db[k - 1] - db[k])
            return float(cost[k - 1] + f * (cost[k] - cost[k - 1]))
    return None


def _interp_on(cost: np.ndarray, db: np.ndarray, axis: np.ndarray) -> np.ndarray:
    # equal costs (an iteration that flew nothing) keep the latest value
    keep = np.append(np.diff(cost) > 0, True)
    return np.interp(axis, cost[keep], db[keep], left=np.nan, right=np.nan)


@dataclass
class Comparison:
    cost: np.ndarray
    mae_db_a: np.ndarray
    mae_db_b: np.ndarray
    targets: dict = field(default_factory=dict)  # target dB -> (cost_a, cost_b)
    partial: bool = False

    @property
    def difference(self) -> np.ndarray:
        """``a - b`` in dB; negative where ``a`` is better."""
        return self.mae_db_a - self.mae_db_b

    def rows(self, label_a: str = "a", label_b: str = "b"):
        yield ["cost", f"mae_db_{label_a}", f"mae_db_{label_b}", "difference"]
        for c, a, b, d in zip(self.cost, self.mae_db_a, self.mae_db_b, self.difference):
            yield [_fmt(c), _fmt(a), _fmt(b), _fmt(d)]


def compare(run_a, run_b, targets=(), n_points: int = 50) -> Comparison:
    """Align two runs' MAE-dB curves on a shared cost axis.

    The axis spans the overlap of the two runs' cost ranges. When they do
    not overlap the table covers the union, with NaN where a run has no
    data, and a :class:`PartialComparison` warning is issued. ``targets``
    are MAE-dB values for which the cost to first reach them is reported
    (``None`` = unreached).
    """
    ca, da = _curve(run_a)
    cb, db = _curve(run_b)
    if len(ca) == 0 or len(cb) == 0:
        raise ValueError("both runs need at least one iteration")
    lo, hi = max(ca[0], cb[0]), min(ca[-1], cb[-1])
    partial = not lo <= hi
    if partial:
        warnings.warn("cost ranges do not overlap; comparison is partial", PartialComparison,
                      stacklevel=2)
        lo, hi = min(ca[0], cb[0]), max(ca[-1], cb[-1])
    axis = np.linspace(lo, hi, n_points) if hi > lo else np.array([lo])
    table = Comparison(axis, _interp_on(ca, da, axis), _interp_on(cb, db, axis), partial=partial)
    for t in targets:
        table.targets[float(t)] = (cost_at_target(run_a, t), cost_at_target(run_b, t))
    return table


def lowest_common_mae_db(run_a, run_b) -> float:
    """The best MAE-dB that both runs achieve."""
    return max(float(np.min(_curve(run_a)[1])), float(np.min(_curve(run_b)[1])))


def summarize(runs: dict[str, list], path) -> None:
    """Per-mode, per-iteration mean/min/max across seeds.

    ``runs`` maps a mode name to a list of parsed run CSVs (or records).
    Iterations that only some seeds reached are aggregated over those seeds;
    ``n_runs`` says how many.
    """
    header = ["mode", "iteration", "n_runs"]
    for m in SUMMARY_METRICS:
        header += [f"{m}_mean", f"{m}_min", f"{m}_max"]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for mode, rows_per_seed in runs.items():
            longest = max((len(r) for r in rows_per_seed), default=0)
            for k in range(longest):
                at_k = [r[k] for r in rows_per_seed if len(r) > k]
                out = [mode, k + 1, len(at_k)]
                for m in SUMMARY_METRICS:
                    vals = np.array([_get(r, m) for r in at_k], dtype=float)
                    out += [_fmt(vals.mean()), _fmt(vals.min()), _fmt(vals.max())]
                w.writerow(out)


def _get(row, name):
    if isinstance(row, dict):
        return row[name]
    return getattr(row, name)
