"""Evaluation quantities: learning error, MAE, span ratio, error maps and cost."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFieldError
from .grid import GridEstimate

RUN_COLUMNS = ("iteration", "M_requested", "M_traced", "learning_error", "mae", "mae_db",
               "span_ratio", "kappa", "delta", "cost_increment", "cost_cumulative", "levels")


@dataclass
class IterationRecord:
    n: int
    M_requested: int
    M_traced: int
    learning_error: float
    mae: float
    mae_db: float
    span_ratio: float
    kappa: int
    delta: float
    cost_increment: float
    cost_cumulative: float
    levels: list = field(default_factory=list)

    def row(self) -> list[str]:
        """Values in :data:`RUN_COLUMNS` order, formatted for CSV output."""
        return [str(self.n), str(self.M_requested), str(self.M_traced),
                _fmt(self.learning_error), _fmt(self.mae), _fmt(self.mae_db),
                _fmt(self.span_ratio), str(self.kappa), _fmt(self.delta),
                _fmt(self.cost_increment), _fmt(self.cost_cumulative),
                ";".join(_fmt(v) for v in self.levels)]


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _mean_abs_diff(a: GridEstimate, b: GridEstimate) -> float:
    a.same_grid(b)
    return float(np.mean(np.abs(a.values - b.values)))


def learning_error(est_n: GridEstimate, est_prev: GridEstimate) -> float:
    """Mean absolute change between consecutive estimates."""
    return _mean_abs_diff(est_n, est_prev)


def mae(truth: GridEstimate, est: GridEstimate) -> float:
    return _mean_abs_diff(truth, est)


def mae_db(e: float) -> float:
    """``20 log10(e)``; ``-inf`` for a perfect estimate."""
    if e < 0:
        raise ValueError(f"MAE cannot be negative, got {e}")
    if e == 0:
        return -math.inf
    return 20.0 * math.log10(e)


def span_ratio(est: GridEstimate, truth: GridEstimate) -> float:
    if not truth.span > 0:
        raise DegenerateFieldError("true field has zero span")
    return est.span / truth.span


def local_error_map(truth: GridEstimate, est: GridEstimate) -> GridEstimate:
    truth.same_grid(est)
    return GridEstimate(truth.spec, np.abs(truth.values - est.values))


def total_cost(traces) -> float:
    """Total paced contour length; ferry legs between pieces are not counted."""
    return float(sum(t.path_length for t in traces))
