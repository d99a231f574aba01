"""Lloyd-Max contour levels from the empirical distribution of an estimate.

The histogram is treated as a piecewise-constant density, so every
centroid and cell mass is an exact closed-form integral; no quadrature is
involved.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateFieldError
from .grid import GridEstimate

DEFAULT_BINS = 256
DEFAULT_MAX_ITER = 200
#: Default convergence tolerance as a fraction of the signal range.
DEFAULT_REL_TOL = 1e-6


class LevelCountReduced(UserWarning):
    """Requested more levels than the distribution has populated bins."""


@dataclass(frozen=True)
class EmpiricalPdf:
    edges: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if edges.ndim != 1 or len(edges) != len(probs) + 1:
            raise ValueError("need len(edges) == len(probs) + 1")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("bin probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "probs", probs)
        # running integrals of f, x f and x^2 f at the edges
        lo, hi = edges[:-1], edges[1:]
        object.__setattr__(self, "_cf", np.concatenate([[0.0], np.cumsum(probs)]))
        object.__setattr__(self, "_cg", np.concatenate([[0.0], np.cumsum(probs * (lo + hi) / 2)]))
        object.__setattr__(self, "_ch", np.concatenate(
            [[0.0], np.cumsum(probs * (lo * lo + lo * hi + hi * hi) / 3)]))

    @property
    def lo(self) -> float:
        return float(self.edges[0])

    @property
    def hi(self) -> float:
        return float(self.edges[-1])

    @property
    def n_populated(self) -> int:
        return int(np.count_nonzero(self.probs))

    def mean(self) -> float:
        return float(self._cg[-1])

    def _moments(self, t: np.ndarray):
        """Integrals of ``f``, ``x f`` and ``x^2 f`` from the lower edge up to ``t``."""
        t = np.clip(np.asarray(t, dtype=float), self.lo, self.hi)
        k = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.probs) - 1)
        e = self.edges[k]
        d = self.probs[k] / (self.edges[k + 1] - e)
        m0 = self._cf[k] + d * (t - e)
        m1 = self._cg[k] + d * (t * t - e * e) / 2
        m2 = self._ch[k] + d * (t ** 3 - e ** 3) / 3
        return m0, m1, m2

    def quantile(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        k = np.clip(np.searchsorted(self._cf, q, side="left") - 1, 0, len(self.probs) - 1)
        p = self.probs[k]
        frac = np.divide(q - self._cf[k], p, out=np.zeros_like(q), where=p > 0)
        return self.edges[k] + np.clip(frac, 0.0, 1.0) * (self.edges[k + 1] - self.edges[k])


@dataclass(frozen=True)
class LloydMaxResult:
    levels: np.ndarray
    boundaries: np.ndarray  # interior decision thresholds, len(levels) - 1
    iterations: int
    converged: bool
    M_requested: int
    mse_history: list = field(default_factory=list)

    @property
    def reduced(self) -> bool:
        return len(self.levels) < self.M_requested


@dataclass(frozen=True)
class LevelBatch:
    iteration: int
    M_requested: int
    levels: np.ndarray
    retained: np.ndarray


def estimate_pdf(estimate: GridEstimate, n_bins: int = DEFAULT_BINS) -> EmpiricalPdf:
    """Normalised histogram of the grid values over their own range."""
    if n_bins < 2:
        raise ConfigError(f"n_bins must be at least 2, got {n_bins}")
    lo, hi = estimate.vmin, estimate.vmax
    if not hi > lo:
        raise DegenerateFieldError(f"estimate is constant ({lo}); no distribution to quantise")
    counts, edges = np.histogram(estimate.values, bins=n_bins, range=(lo, hi))
    return EmpiricalPdf(edges, counts / counts.sum())


def centroids(pdf: EmpiricalPdf, boundaries: np.ndarray) -> np.ndarray:
    """Conditional mean of each cell; empty cells get their midpoint."""
    cuts = np.concatenate([[pdf.lo], boundaries, [pdf.hi]])
    m0, m1, _ = pdf._moments(cuts)
    mass = np.diff(m0)
    first = np.diff(m1)
    mid = (cuts[:-1] + cuts[1:]) / 2
    out = mid.copy()
    nz = mass > 0
    out[nz] = first[nz] / mass[nz]
    return np.clip(out, cuts[:-1], cuts[1:])


def quantization_mse(pdf: EmpiricalPdf, levels: np.ndarray, boundaries: np.ndarray) -> float:
    """Mean squared error of quantising ``pdf`` with the given cells and levels."""
    cuts = np.concatenate([[pdf.lo], boundaries, [pdf.hi]])
    m0, m1, m2 = (np.diff(m) for m in pdf._moments(cuts))
    levels = np.asarray(levels, dtype=float)
    return float(np.sum(m2 - 2 * levels * m1 + levels * levels * m0))


def lloyd_max(pdf: EmpiricalPdf, M: int, tol: float | None = None,
              max_iter: int = DEFAULT_MAX_ITER) -> LloydMaxResult:
    """Iterate centroid and midpoint updates to a Lloyd-Max quantiser.

    Cells start as equal-probability quantiles. Iteration stops once no
    level moves by ``tol`` or more (default ``1e-6`` of the pdf's range).
    If ``M`` exceeds the number of populated bins it is reduced to that
    number and a :class:`LevelCountReduced` warning is issued.
    """
    if M < 1:
        raise ConfigError(f"M must be at least 1, got {M}")
    if tol is None:
        tol = DEFAULT_REL_TOL * (pdf.hi - pdf.lo)
    M_used = min(M, pdf.n_populated)
    if M_used < M:
        warnings.warn(f"requested {M} levels but only {M_used} bins are populated; "
                      f"using {M_used}", LevelCountReduced, stacklevel=2)

    boundaries = pdf.quantile(np.arange(1, M_used) / M_used)
    levels = centroids(pdf, boundaries)
    history = [quantization_mse(pdf, levels, boundaries)]
    converged = M_used == 1
    it = 0
    while not converged and it < max_iter:
        it += 1
        boundaries = (levels[:-1] + levels[1:]) / 2
        new = centroids(pdf, boundaries)
        history.append(quantization_mse(pdf, new, boundaries))
        converged = float(np.max(np.abs(new - levels))) < tol
        levels = new
    boundaries = (levels[:-1] + levels[1:]) / 2
    if np.any(np.diff(levels) <= 0):
        raise RuntimeError(f"Lloyd-Max produced non-increasing levels: {levels}")
    return LloydMaxResult(levels, boundaries, it, converged, M, history)


def lloyd_max_levels(pdf: EmpiricalPdf, M: int, tol: float | None = None,
                     max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    return lloyd_max(pdf, M, tol, max_iter).levels
