"""Simulated UAV: diagonal survey, crossing search and iso-contour pacing.

Fields are anything exposing ``area``, ``eval(x, y)`` and
``gradient(x, y)``; observations are exact (noise-free).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .interp import SamplePoint

#: Gradient magnitude below which a point is treated as a flat spot.
FLAT_GRAD = 1e-9
_MAX_NEWTON = 30
_MAX_BISECT = 200

#: Eight probe directions, counter-clockwise from +x.
DIRECTIONS = np.array([(math.cos(k * math.pi / 4), math.sin(k * math.pi / 4)) for k in range(8)])


@dataclass(frozen=True)
class TraceParams:
    step: float = 0.5
    trace_tol: float = 1e-3
    search_radius: float = 10.0
    max_steps: int = 10000
    report_spacing: float = 1.0

    def __post_init__(self):
        for name in ("step", "trace_tol", "search_radius", "max_steps", "report_spacing"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.report_spacing < self.step:
            raise ConfigError("report_spacing must be at least the step length")


@dataclass
class TracedContour:
    """What a UAV reports for one assigned level.

    ``pieces`` holds the full flown polylines, ``reported`` the coordinates
    actually sent to the DFC (spaced ``report_spacing`` apart in arc length)
    and ``values`` the field strength observed at each reported point.
    """

    level: float
    pieces: list = dc_field(default_factory=list)
    reported: list = dc_field(default_factory=list)
    values: list = dc_field(default_factory=list)
    closed: list = dc_field(default_factory=list)
    status: list = dc_field(default_factory=list)

    @property
    def path_length(self) -> float:
        return float(sum(_polyline_length(p) for p in self.pieces))

    @property
    def sample_count(self) -> int:
        return int(sum(len(r) for r in self.reported))

    def samples(self) -> np.ndarray:
        """Reported observations as an ``(n, 3)`` array of ``x, y, value``."""
        if not self.reported:
            return np.empty((0, 3))
        return np.vstack([np.column_stack([r, v]) for r, v in zip(self.reported, self.values)])

    def extend(self, other: "TracedContour") -> None:
        for name in ("pieces", "reported", "values", "closed", "status"):
            getattr(self, name).extend(getattr(other, name))


def _polyline_length(pts: np.ndarray) -> float:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


def _value_grad(field, p):
    if hasattr(field, "value_and_gradient"):
        return field.value_and_gradient(p[0], p[1])
    return field.eval(p[0], p[1]), np.asarray(field.gradient(p[0], p[1]), dtype=float)


def initial_survey(field, spacing: float) -> list[SamplePoint]:
    """Sample the field along both main diagonals of its area.

    Each diagonal is cut into equal legs no longer than ``spacing``, with
    both endpoints included. Points shared by the two routes are reported
    twice.
    """
    if not spacing > 0:
        raise ConfigError(f"survey spacing must be positive, got {spacing}")
    w, h = field.area.width, field.area.height
    n = int(math.ceil(math.hypot(w, h) / spacing - 1e-9)) + 1
    t = np.linspace(0.0, 1.0, n)
    out = []
    for (x0, y0), (x1, y1) in (((0.0, 0.0), (w, h)), ((0.0, h), (w, 0.0))):
        for ti in t:
            x, y = x0 + ti * (x1 - x0), y0 + ti * (y1 - y0)
            out.append(SamplePoint(float(x), float(y), field.eval(x, y)))
    return out


def _bisect(field, level, a, b, fa, tol):
    """Shrink segment ``a``-``b`` (opposite signs of ``g - level``) to a crossing."""
    for _ in range(_MAX_BISECT):
        m = (a + b) / 2
        fm = field.eval(m[0], m[1]) - level
        if abs(fm) <= tol:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return None


def locate_crossing(field, level: float, guess, params: TraceParams = TraceParams()):
    """Find a point of the true ``level`` contour near ``guess``.

    Probes outward along eight rays in ``step`` increments, up to
    ``search_radius``. The nearest sign change of ``g - level`` is
    bisected to within ``trace_tol``. Returns ``None`` if no ray finds one.
    """
    area = field.area
    g0 = np.asarray(guess, dtype=float)
    f0 = field.eval(g0[0], g0[1]) - level
    if abs(f0) <= params.trace_tol:
        return g0
    n_probe = int(math.ceil(params.search_radius / params.step - 1e-9))
    best = None
    for d in DIRECTIONS:
        prev, fprev = g0, f0
        for m in range(1, n_probe + 1):
            r = min(m * params.step, params.search_radius)
            p = g0 + r * d
            if not area.contains(p[0], p[1]):
                break
            fp = field.eval(p[0], p[1]) - level
            if abs(fp) <= params.trace_tol or (fp > 0) != (fprev > 0):
                if best is None or r < best[0]:
                    best = (r, prev, p, fprev, fp)
                break
            prev, fprev = p, fp
    if best is None:
        return None
    _, a, b, fa, fb = best
    if abs(fb) <= params.trace_tol:
        return b
    return _bisect(field, level, a, b, fa, params.trace_tol)


def _correct(field, p, level, tol):
    """Newton steps along the gradient back onto the level set."""
    for _ in range(_MAX_NEWTON):
        v, g = _value_grad(field, p)
        r = v - level
        if abs(r) <= tol:
            return p, "ok"
        gg = float(g @ g)
        if gg < FLAT_GRAD ** 2:
            return p, "flat"
        p = p - r * g / gg
    return p, "corrector"


def _boundary_exit(field, level, p, q, tol):
    """Point where the contour leaves the area between inside ``p`` and outside ``q``."""
    area = field.area
    d = q - p
    s_hit, axis, bound = np.inf, None, None
    for k, (lo, hi) in enumerate(((0.0, area.width), (0.0, area.height))):
        if d[k] > 0 and q[k] > hi:
            s, b = (hi - p[k]) / d[k], hi
        elif d[k] < 0 and q[k] < lo:
            s, b = (lo - p[k]) / d[k], lo
        else:
            continue
        if s < s_hit:
            s_hit, axis, bound = s, k, b
    if axis is None:
        return None
    b0 = p + s_hit * d
    free = 1 - axis
    top = area.height if free == 1 else area.width
    x = b0.copy()
    x[axis] = bound
    for _ in range(_MAX_NEWTON):
        v, g = _value_grad(field, x)
        r = v - level
        if abs(r) <= tol:
            if np.hypot(*(x - b0)) <= np.hypot(*d):
                return x
            return None
        if abs(g[free]) < FLAT_GRAD:
            return None
        x[free] = min(max(x[free] - r / g[free], 0.0), top)
    return None


def _march(field, level, start, params, sign, detect_loop):
    area = field.area
    pts = [start]
    p = start
    for n in range(1, params.max_steps + 1):
        _, g = _value_grad(field, p)
        gn = math.hypot(g[0], g[1])
        if gn < FLAT_GRAD:
            return pts, "flat"
        tangent = sign * np.array([-g[1], g[0]]) / gn
        q, status = _correct(field, p + params.step * tangent, level, params.trace_tol)
        if status != "ok":
            return pts, status
        if not area.contains(q[0], q[1]):
            b = _boundary_exit(field, level, p, q, params.trace_tol)
            if b is not None:
                pts.append(b)
            return pts, "exit"
        pts.append(q)
        if detect_loop and n >= 3 and math.hypot(*(q - start)) < params.step:
            pts.append(start.copy())
            return pts, "closed"
        p = q
    return pts, "max_steps"


def _report(path: np.ndarray, spacing: float, closed: bool) -> np.ndarray:
    """Subsample a flown path every ``spacing`` of arc length, keeping both ends."""
    if closed:
        path = path[:-1]
    if len(path) <= 2:
        return path.copy()
    seg = np.hypot(*np.diff(path, axis=0).T)
    keep = [0]
    acc = 0.0
    for k, s in enumerate(seg, start=1):
        acc += s
        if acc >= spacing:
            keep.append(k)
            acc = 0.0
    if keep[-1] != len(path) - 1:
        keep.append(len(path) - 1)
    return path[keep]


def trace_contour(field, level: float, start, params: TraceParams = TraceParams()) -> TracedContour:
    """Pace the ``level`` contour of the true field from ``start``.

    The UAV marches along the gradient rotated by +90 degrees, correcting
    each predicted point back onto the level set. A loop closes when the
    UAV returns within one step of ``start`` after at least three steps.
    If it leaves the area instead, it returns to ``start`` (free, since
    ferry legs are not costed) and paces the other direction, so an open
    piece is covered boundary to boundary.

    ``status`` records ``closed``, ``open``, ``max_steps``, ``flat`` or
    ``corrector``; the last two mark partial traces.
    """
    start = np.asarray(start, dtype=float)
    v0 = field.eval(start[0], start[1])
    if abs(v0 - level) > params.trace_tol:
        raise ValueError(f"start is off the contour: g={v0}, level={level}")
    fwd, why = _march(field, level, start, params, +1.0, detect_loop=True)
    if why == "exit":
        back, why_back = _march(field, level, start, params, -1.0, detect_loop=False)
        path = np.array(back[::-1] + fwd[1:])
        why = "open" if why_back == "exit" else why_back
    else:
        path = np.array(fwd)
    closed = why == "closed"
    reported = _report(path, params.report_spacing, closed)
    values = np.array([field.eval(x, y) for x, y in reported])
    return TracedContour(float(level), [path], [reported], [values], [closed], [why])


def write_traces_csv(rows, path) -> None:
    """Write ``(iteration, TracedContour)`` pairs as ``iteration,level,piece_id,x,y``."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "level", "piece_id", "x", "y"])
        for iteration, tc in rows:
            for pid, piece in enumerate(tc.reported):
                for x, y in piece:
                    w.writerow([iteration, f"{tc.level:.12g}", pid, f"{x:.12g}", f"{y:.12g}"])
