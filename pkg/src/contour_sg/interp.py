"""Biharmonic spline interpolation of scattered samples.

The interpolant is a sum of Green's functions of the biharmonic operator,
``phi(r) = r**2 * (ln r - 1)``, centred on the sample nodes, plus an affine
trend ``a0 + a1*x + a2*y``. Weights satisfy the usual side conditions
(orthogonal to the affine terms), which makes the surface independent of
the coordinate scaling used internally.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import xlogy

from .errors import InsufficientDataError, NumericalError
from .grid import GridEstimate, GridSpec

#: Samples closer than this (field units) are merged into one node.
MERGE_RADIUS = 1e-6
RIDGE = 1e-10
_CHUNK = 1 << 21


@dataclass(frozen=True)
class SamplePoint:
    x: float
    y: float
    value: float


def green(r2: np.ndarray) -> np.ndarray:
    """Biharmonic Green's function evaluated from squared distances."""
    r2 = np.asarray(r2, dtype=float)
    # r^2 (ln r - 1) = 0.5 r^2 ln r^2 - r^2; xlogy gives 0 at r = 0
    return 0.5 * xlogy(r2, r2) - r2


def _as_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        arr = np.asarray(samples, dtype=float)
    else:
        arr = np.array([(s.x, s.y, s.value) for s in samples], dtype=float)
    return arr.reshape(-1, 3)


def merge_duplicates(arr: np.ndarray, radius: float = MERGE_RADIUS) -> np.ndarray:
    """Merge samples within ``radius`` of each other, averaging their values.

    The result is sorted lexicographically by ``(x, y)`` so downstream
    systems do not depend on input order.
    """
    if len(arr) == 0:
        return arr
    pairs = cKDTree(arr[:, :2]).query_pairs(radius, output_type="ndarray")
    if len(pairs):
        n = len(arr)
        adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        n_groups, labels = connected_components(adj, directed=False)
        counts = np.bincount(labels, minlength=n_groups)
        merged = np.column_stack([np.bincount(labels, arr[:, k], n_groups) / counts
                                  for k in range(3)])
    else:
        merged = arr.copy()
    order = np.lexsort((merged[:, 2], merged[:, 1], merged[:, 0]))
    return merged[order]


@dataclass(frozen=True)
class InterpModel:
    """A fitted biharmonic spline; call it like a function of ``(x, y)``."""

    nodes: np.ndarray  # (n, 2), field units
    values: np.ndarray  # (n,)
    weights: np.ndarray  # (n,)
    trend: np.ndarray  # (3,) affine coefficients in scaled coordinates
    offset: np.ndarray  # (2,)
    scale: float

    def _scaled(self, x, y):
        return (np.asarray(x, dtype=float) - self.offset[0]) / self.scale, \
               (np.asarray(y, dtype=float) - self.offset[1]) / self.scale

    def __call__(self, x, y) -> np.ndarray:
        xs, ys = self._scaled(x, y)
        shape = np.broadcast(xs, ys).shape
        px = np.broadcast_to(xs, shape).ravel()
        py = np.broadcast_to(ys, shape).ravel()
        nx = (self.nodes[:, 0] - self.offset[0]) / self.scale
        ny = (self.nodes[:, 1] - self.offset[1]) / self.scale
        out = self.trend[0] + self.trend[1] * px + self.trend[2] * py
        step = max(1, _CHUNK // max(1, len(nx)))
        for lo in range(0, len(px), step):
            hi = lo + step
            r2 = (px[lo:hi, None] - nx[None, :]) ** 2 + (py[lo:hi, None] - ny[None, :]) ** 2
            out[lo:hi] += green(r2) @ self.weights
        return out.reshape(shape)


def fit(samples, ridge: float = RIDGE) -> InterpModel:
    """Fit a biharmonic spline through scattered samples.

    Parameters
    ----------
    samples : sequence of SamplePoint or array of shape (n, 3)
        Columns ``x, y, value``.
    ridge : float
        Diagonal regularisation relative to the mean kernel magnitude.

    Raises
    ------
    InsufficientDataError
        Fewer than 3 unique samples, or all samples collinear.
    NumericalError
        The system is singular even after regularisation.
    """
    arr = merge_duplicates(_as_array(samples))
    n = len(arr)
    if n < 3:
        raise InsufficientDataError(f"need at least 3 unique samples, got {n}")
    xy = arr[:, :2]
    offset = xy.mean(axis=0)
    scale = float(np.max(np.ptp(xy, axis=0)))
    if scale == 0.0:
        raise InsufficientDataError("all samples coincide")
    s = (xy - offset) / scale
    poly = np.column_stack([np.ones(n), s])
    if np.linalg.matrix_rank(poly) < 3:
        raise InsufficientDataError("samples are collinear; affine trend is undetermined")

    r2 = (s[:, None, 0] - s[None, :, 0]) ** 2 + (s[:, None, 1] - s[None, :, 1]) ** 2
    K = green(r2)
    del r2
    lam = ridge * float(np.mean(np.abs(K)))
    K[np.diag_indices(n)] += lam
    A = np.zeros((n + 3, n + 3))
    A[:n, :n] = K
    del K
    A[:n, n:] = poly
    A[n:, :n] = poly.T
    rhs = np.concatenate([arr[:, 2], np.zeros(3)])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            sol = scipy.linalg.solve(A, rhs, assume_a="sym", overwrite_a=True,
                                     overwrite_b=True, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"biharmonic system is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise NumericalError("biharmonic solve produced non-finite weights")
    return InterpModel(nodes=xy.copy(), values=arr[:, 2].copy(), weights=sol[:n],
                       trend=sol[n:], offset=offset, scale=scale)


def evaluate_grid(model: InterpModel, spec: GridSpec) -> GridEstimate:
    X, Y = spec.mesh()
    return GridEstimate(spec, model(X, Y))
