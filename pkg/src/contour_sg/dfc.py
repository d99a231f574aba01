"""Data fusion center: the iterative survey / trace / refit loop.

In ``dual-sg`` mode two stochastic-gradient recursions driven by the
learning error adapt the run: one grows the level increment ``kappa``, the
other rescales the redundancy threshold ``delta`` under which a new level
is considered a repeat of one already flown. ``baseline`` mode grows the
level count by one per iteration and flies every level.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .contour import extract_contours, pick_start_points
from .errors import ConfigError, DegenerateFieldError
from .field import Area, FieldConfig, ScalarField, generate_field
from .grid import GridEstimate, GridSpec
from .interp import evaluate_grid, fit
from .levels import DEFAULT_BINS, LevelCountReduced, estimate_pdf, lloyd_max_levels
from .metrics import IterationRecord
from .uav import TraceParams, TracedContour, initial_survey, locate_crossing, trace_contour

log = logging.getLogger(__name__)

MODES = ("dual-sg", "baseline")


class SGDegenerate(UserWarning):
    """Both learning errors are zero, so the SG gradient is undefined."""


def update_kappa(kappa_prev: int, err2: float, err1: float) -> int:
    """Next level increment from the two most recent learning errors.

    ``err2`` is the older error, ``err1`` the newer one. The increment is
    ``kappa_prev + ceil(1 + 2|err2 - err1| / |err2 + err1|)``; if both
    errors are zero it falls back to ``kappa_prev + 1``.
    """
    denom = abs(err2 + err1)
    if denom == 0:
        warnings.warn("both learning errors are zero; kappa grows by 1", SGDegenerate,
                      stacklevel=2)
        return int(kappa_prev) + 1
    return int(kappa_prev) + math.ceil(1.0 + 2.0 * abs(err2 - err1) / denom)


def update_delta(delta_prev: float, err2: float, err1: float) -> float:
    """Next redundancy threshold: ``delta_prev * |1 - 2 (err2 - err1) / (err2 + err1)|``."""
    denom = err2 + err1
    if denom == 0:
        warnings.warn("both learning errors are zero; delta unchanged", SGDegenerate,
                      stacklevel=2)
        return float(delta_prev)
    return float(delta_prev) * abs(1.0 - 2.0 * (err2 - err1) / denom)


def eliminate_redundant(new_levels, past_levels, delta: float) -> np.ndarray:
    """Keep new levels farther than ``delta`` (in signal value) from every past level."""
    if delta < 0:
        raise ConfigError(f"delta must be non-negative, got {delta}")
    new = np.asarray(new_levels, dtype=float)
    past = np.asarray(past_levels, dtype=float)
    if past.size == 0 or new.size == 0:
        return new.copy()
    gap = np.min(np.abs(new[:, None] - past[None, :]), axis=1)
    return new[gap > delta]


@dataclass(frozen=True)
class Thresholds:
    error_threshold: float = 0.5
    span_window: float = 0.02
    max_iterations: int = 20


def check_convergence(records: list[IterationRecord], thresholds: Thresholds = Thresholds()) -> bool:
    """Learning error below threshold and span ratio settled, both at the latest iteration."""
    if len(records) < 2:
        return False
    last, prev = records[-1], records[-2]
    return (last.learning_error < thresholds.error_threshold
            and abs(last.span_ratio - prev.span_ratio) < thresholds.span_window)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "dual-sg"
    initial_M: int = 3
    initial_kappa: int = 1
    initial_delta: float | None = None  # None: span of the first estimate / (4 M)
    thresholds: Thresholds = Thresholds()
    trace: TraceParams = TraceParams()
    P: int = 101
    Q: int = 101
    field: FieldConfig = FieldConfig()
    survey_spacing: float = 2.0
    node_cap: int = 4000
    n_bins: int = DEFAULT_BINS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.initial_M < 1 or self.initial_kappa < 1:
            raise ConfigError("initial M and kappa must be at least 1")
        if self.initial_delta is not None and self.initial_delta < 0:
            raise ConfigError("initial delta must be non-negative")
        if self.thresholds.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.node_cap < 3:
            raise ConfigError("node_cap must be at least 3")

    @property
    def seed(self) -> int:
        return self.field.rng_seed

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, field=replace(self.field, rng_seed=int(seed)))

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.P, self.Q, Area(self.field.width, self.field.height))


@dataclass
class RunReport:
    config: RunConfig
    field: ScalarField
    truth: GridEstimate
    initial_estimate: GridEstimate
    final_estimate: GridEstimate
    records: list[IterationRecord] = field(default_factory=list)
    traces: list[tuple[int, TracedContour]] = field(default_factory=list)
    converged: bool = False
    termination: str = ""
    notes: list[str] = field(default_factory=list)

    def error_map(self) -> GridEstimate:
        return metrics.local_error_map(self.truth, self.final_estimate)

    def iterations_to_error(self, threshold: float) -> int | None:
        """First iteration whose learning error is below ``threshold``."""
        for rec in self.records:
            if rec.learning_error < threshold:
                return rec.n
        return None


def thin_samples(survey: np.ndarray, traces: list[np.ndarray], cap: int) -> np.ndarray:
    """Survey samples plus trace samples, thinned uniformly along traces to ``cap`` rows.

    Survey points are always kept. Each trace keeps the same fraction of its
    reports, evenly spaced along it with both ends retained.
    """
    traces = [t for t in traces if len(t)]
    n_trace = sum(len(t) for t in traces)
    budget = cap - len(survey)
    if n_trace <= budget or not traces:
        return np.vstack([survey, *traces]) if traces else survey.copy()
    budget = max(budget, 0)
    frac = budget / n_trace
    while True:
        counts = [min(len(t), max(1, int(frac * len(t)))) for t in traces]
        if sum(counts) <= budget or frac <= 0:
            break
        frac *= 0.99
    kept = []
    for t, k in zip(traces, counts):
        idx = np.unique(np.round(np.linspace(0, len(t) - 1, k)).astype(int))
        kept.append(t[idx])
    return np.vstack([survey, *kept])


def _fit_grid(samples: np.ndarray, spec: GridSpec) -> GridEstimate:
    return evaluate_grid(fit(samples), spec)


def _fly_level(f, level: float, estimate: GridEstimate, params: TraceParams, notes: list,
               iteration: int) -> TracedContour | None:
    """Assign one start per estimated piece at ``level`` and pace what the UAV finds."""
    pieces = extract_contours(estimate, level)
    result = TracedContour(float(level))
    for start in pick_start_points(pieces, estimate):
        found = locate_crossing(f, level, start, params)
        if found is None:
            notes.append(f"iter {iteration}: no crossing of level {level:.6g} near "
                         f"({start[0]:.3f}, {start[1]:.3f}); piece dropped")
            continue
        if any(np.min(np.hypot(*(p - found).T)) < 2 * params.step for p in result.pieces):
            notes.append(f"iter {iteration}: level {level:.6g} start ({start[0]:.3f}, "
                         f"{start[1]:.3f}) lands on an already paced piece; skipped")
            continue
        tc = trace_contour(f, level, found, params)
        if tc.status[0] in ("flat", "corrector", "max_steps"):
            notes.append(f"iter {iteration}: level {level:.6g} trace ended early "
                         f"({tc.status[0]})")
        result.extend(tc)
    return result if result.pieces else None


def _batch(pdf, M: int, notes: list, iteration: int) -> np.ndarray:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LevelCountReduced)
        levels = lloyd_max_levels(pdf, M)
    for w in caught:
        notes.append(f"iter {iteration}: {w.message}")
    return levels


def run(config: RunConfig) -> RunReport:
    """Run the full monitoring loop for one field realisation."""
    f = generate_field(config.field)
    spec = config.grid_spec()
    truth = GridEstimate.from_field(f, spec)
    survey = np.array([(s.x, s.y, s.value) for s in initial_survey(f, config.survey_spacing)])
    est_prev = _fit_grid(survey, spec)
    if not est_prev.span > 0:
        raise DegenerateFieldError("initial estimate has zero span")
    report = RunReport(config, f, truth, est_prev, est_prev)
    dual = config.mode == "dual-sg"

    M = config.initial_M
    kappa = config.initial_kappa
    delta = (config.initial_delta if config.initial_delta is not None
             else est_prev.span / (4 * config.initial_M))
    past_levels: list[float] = []
    trace_samples: list[np.ndarray] = []
    errors: list[float] = []
    cost = 0.0

    for n in range(1, config.thresholds.max_iterations + 1):
        if n >= 2:
            if not dual:
                kappa = 1
            elif n == 2:
                kappa += 1
                report.notes.append("iter 2: single learning error available; "
                                    "kappa += 1, delta kept")
            else:
                if errors[-2] + errors[-1] == 0:
                    report.notes.append(f"iter {n}: both learning errors zero; SG step skipped")
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", SGDegenerate)
                    kappa = update_kappa(kappa, errors[-2], errors[-1])
                    delta = update_delta(delta, errors[-2], errors[-1])
            M += kappa

        if not est_prev.span > 0:
            raise DegenerateFieldError(f"estimate before iteration {n} has zero span")
        pdf = estimate_pdf(est_prev, config.n_bins)
        # A batch that flies nothing yields no new estimate and hence no
        # learning error; in dual-SG mode the batch keeps growing by kappa
        # until something is paced or the level resolution is exhausted.
        while True:
            levels = _batch(pdf, M, report.notes, n)
            assigned = eliminate_redundant(levels, past_levels, delta) if dual else levels
            flown = [(float(lv), _fly_level(f, float(lv), est_prev, config.trace,
                                            report.notes, n)) for lv in assigned]
            flown = [(lv, tc) for lv, tc in flown if tc is not None]
            past_levels.extend(float(v) for v in assigned)
            if flown or not dual:
                break
            if assigned.size:
                report.notes.append(f"iter {n}: none of {assigned.size} assigned levels "
                                    f"found on the true field; M += {kappa}")
            else:
                report.notes.append(f"iter {n}: all {len(levels)} levels of M={M} within "
                                    f"delta={delta:.6g} of past levels; M += {kappa}")
            if M >= pdf.n_populated:
                break
            M += kappa
        if dual and not flown:
            report.termination = "levels_exhausted"
            report.notes.append(f"iter {n}: no new level can be paced at the finest "
                                f"resolution; stopping")
            break

        cost_inc = 0.0
        for level, tc in flown:
            report.traces.append((n, tc))
            trace_samples.extend(s for s in (np.column_stack([r, v]) for r, v in
                                             zip(tc.reported, tc.values)) if len(s))
            cost_inc += tc.path_length
        traced_levels = [lv for lv, _ in flown]
        cost += cost_inc

        samples = thin_samples(survey, trace_samples, config.node_cap)
        est = _fit_grid(samples, spec)
        err = metrics.learning_error(est, est_prev)
        errors.append(err)
        e = metrics.mae(truth, est)
        report.records.append(IterationRecord(
            n=n, M_requested=M, M_traced=len(traced_levels), learning_error=err, mae=e,
            mae_db=metrics.mae_db(e), span_ratio=metrics.span_ratio(est, truth), kappa=kappa,
            delta=delta, cost_increment=cost_inc, cost_cumulative=cost,
            levels=[float(v) for v in assigned]))
        log.info("%s seed=%d iter=%d M=%d traced=%d err=%.4g mae=%.4g cost=%.1f",
                 config.mode, config.seed, n, M, len(traced_levels), err, e, cost)
        est_prev = est
        report.final_estimate = est
        # an iteration that flew nothing leaves the estimate unchanged, so its
        # zero learning error says nothing about convergence
        if traced_levels and check_convergence(report.records, config.thresholds):
            report.converged = True
            report.termination = "converged"
            break
    else:
        report.termination = "max_iterations"
    return report
