"""Regular P x Q grids over the monitored area and values sampled on them."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError
from .field import Area


@dataclass(frozen=True)
class GridSpec:
    """``P`` nodes along x by ``Q`` nodes along y, corners on the area corners."""

    P: int = 101
    Q: int = 101
    area: Area = Area()

    def __post_init__(self):
        if self.P < 2 or self.Q < 2:
            raise ConfigError(f"grid needs at least 2x2 nodes, got {self.P}x{self.Q}")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(0.0, self.area.width, self.P)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(0.0, self.area.height, self.Q)

    @property
    def dx(self) -> float:
        return self.area.width / (self.P - 1)

    @property
    def dy(self) -> float:
        return self.area.height / (self.Q - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape ``(P, Q)``; ``[i, j]`` is ``(x_i, y_j)``."""
        return np.meshgrid(self.xs, self.ys, indexing="ij")


@dataclass(frozen=True)
class GridEstimate:
    """Scalar values on a :class:`GridSpec`; ``values[i, j]`` sits at ``(x_i, y_j)``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.spec.P, self.spec.Q):
            raise ShapeError(f"values shape {values.shape} does not match grid "
                             f"{self.spec.P}x{self.spec.Q}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def vmin(self) -> float:
        return float(self.values.min())

    @property
    def vmax(self) -> float:
        return float(self.values.max())

    @property
    def span(self) -> float:
        return self.vmax - self.vmin

    @classmethod
    def from_field(cls, field, spec: GridSpec) -> "GridEstimate":
        """Sample a field (anything with ``eval_many`` or ``eval``) at the grid nodes."""
        X, Y = spec.mesh()
        if hasattr(field, "eval_many"):
            values = field.eval_many(X, Y)
        else:
            values = np.vectorize(field.eval)(X, Y)
        return cls(spec, values)

    def bilinear(self, x: float, y: float) -> float:
        """Bilinear interpolation of the grid values at ``(x, y)``."""
        s = self.spec
        fi = np.clip(x / s.dx, 0.0, s.P - 1)
        fj = np.clip(y / s.dy, 0.0, s.Q - 1)
        i = min(int(fi), s.P - 2)
        j = min(int(fj), s.Q - 2)
        u, v = fi - i, fj - j
        g = self.values
        return float((1 - u) * (1 - v) * g[i, j] + u * (1 - v) * g[i + 1, j]
                     + (1 - u) * v * g[i, j + 1] + u * v * g[i + 1, j + 1])

    def same_grid(self, other: "GridEstimate") -> None:
        if self.spec != other.spec:
            raise ShapeError(f"grid mismatch: {self.spec} vs {other.spec}")


def write_matrix_csv(grid: GridEstimate, path) -> None:
    """Headerless CSV, one row per x index (``P`` rows, ``Q`` columns)."""
    np.savetxt(Path(path), grid.values, delimiter=",", fmt="%.12g")


def read_matrix_csv(path, area: Area = Area()) -> GridEstimate:
    values = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    return GridEstimate(GridSpec(values.shape[0], values.shape[1], area), values)
