"""Synthetic ground-truth fields built from superposed 2-D Gaussians."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError

#: Probe resolution used when rescaling amplitudes to ``target_max``.
PROBE_RESOLUTION = 512


class Field(Protocol):
    """Anything the UAV can fly over: a value and a gradient at a point."""

    area: "Area"

    def eval(self, x: float, y: float) -> float: ...

    def gradient(self, x: float, y: float) -> np.ndarray: ...


@dataclass(frozen=True)
class Area:
    """Axis-aligned rectangle ``[0, width] x [0, height]``."""

    width: float = 100.0
    height: float = 100.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"area must have positive extent, got {self.width}x{self.height}")

    def contains(self, x: float, y: float, tol: float = 0.0) -> bool:
        return -tol <= x <= self.width + tol and -tol <= y <= self.height + tol

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))


@dataclass(frozen=True)
class GaussianComponent:
    center: tuple[float, float]
    amplitude: float
    sigma: float

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigError(f"amplitude must be positive, got {self.amplitude}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class FieldConfig:
    n1: int = 10
    n2: int = 10
    sigma1: float = 10.0
    sigma2: float = 15.0
    width: float = 100.0
    height: float = 100.0
    target_max: float = 100.0
    rng_seed: int = 0

    def validate(self) -> None:
        if self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 < 1:
            raise ConfigError(f"component counts must be non-negative with at least one "
                              f"component, got n1={self.n1}, n2={self.n2}")
        if self.n1 > 0 and not self.sigma1 > 0:
            raise ConfigError(f"sigma1 must be positive, got {self.sigma1}")
        if self.n2 > 0 and not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.target_max > 0:
            raise ConfigError(f"target_max must be positive, got {self.target_max}")
        Area(self.width, self.height)


@dataclass(frozen=True)
class ScalarField:
    """Sum of isotropic Gaussians; immutable once built.

    Component parameters are also cached as flat arrays so that evaluation
    is vectorised over components.
    """

    components: tuple[GaussianComponent, ...]
    area: Area = dc_field(default_factory=Area)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        centers = np.array([c.center for c in comps], dtype=float).reshape(-1, 2)
        object.__setattr__(self, "_cx", centers[:, 0].copy())
        object.__setattr__(self, "_cy", centers[:, 1].copy())
        object.__setattr__(self, "_amp", np.array([c.amplitude for c in comps], dtype=float))
        object.__setattr__(self, "_inv2s2",
                           np.array([0.5 / c.sigma ** 2 for c in comps], dtype=float))

    def eval(self, x: float, y: float) -> float:
        dx = x - self._cx
        dy = y - self._cy
        return float(np.sum(self._amp * np.exp(-(dx * dx + dy * dy) * self._inv2s2)))

    def gradient(self, x: float, y: float) -> np.ndarray:
        dx = x - self._cx
        dy = y - self._cy
        w = self._amp * np.exp(-(dx * dx + dy * dy) * self._inv2s2) * (-2.0 * self._inv2s2)
        return np.array([np.sum(w * dx), np.sum(w * dy)])

    def value_and_gradient(self, x: float, y: float) -> tuple[float, np.ndarray]:
        dx = x - self._cx
        dy = y - self._cy
        e = self._amp * np.exp(-(dx * dx + dy * dy) * self._inv2s2)
        w = e * (-2.0 * self._inv2s2)
        return float(np.sum(e)), np.array([np.sum(w * dx), np.sum(w * dy)])

    def eval_many(self, xs, ys) -> np.ndarray:
        """Evaluate on broadcastable coordinate arrays."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        out = np.zeros(np.broadcast(xs, ys).shape)
        for cx, cy, a, k in zip(self._cx, self._cy, self._amp, self._inv2s2):
            out += a * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) * k)
        return out

    def scaled(self, factor: float) -> "ScalarField":
        comps = tuple(GaussianComponent(c.center, c.amplitude * factor, c.sigma)
                      for c in self.components)
        return ScalarField(comps, self.area)

    def to_dict(self) -> dict:
        return {
            "area": {"width": self.area.width, "height": self.area.height},
            "components": [
                {"cx": c.center[0], "cy": c.center[1], "amplitude": c.amplitude, "sigma": c.sigma}
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalarField":
        comps = tuple(GaussianComponent((d["cx"], d["cy"]), d["amplitude"], d["sigma"])
                      for d in data["components"])
        return cls(comps, Area(**data["area"]))


def probe_max(f: ScalarField, resolution: int = PROBE_RESOLUTION) -> float:
    """Maximum of ``f`` over the area.

    A probe grid locates the peak; a bounded local search from the best
    probe nodes then removes the grid's discretisation bias, so a single
    Gaussian gets exactly ``target_max`` at its center.
    """
    xs = np.linspace(0.0, f.area.width, resolution)
    ys = np.linspace(0.0, f.area.height, resolution)
    grid = f.eval_many(xs[:, None], ys[None, :])
    best = float(grid.max())
    bounds = [(0.0, f.area.width), (0.0, f.area.height)]
    for flat in np.argsort(grid, axis=None)[::-1][:3]:
        i, j = np.unravel_index(flat, grid.shape)
        res = minimize(lambda p: -f.eval(p[0], p[1]), x0=[xs[i], ys[j]],
                       jac=lambda p: -f.gradient(p[0], p[1]),
                       method="L-BFGS-B", bounds=bounds,
                       options={"ftol": 1e-15, "gtol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def generate_field(config: FieldConfig) -> ScalarField:
    """Draw a random Gaussian-superposition field.

    Centers are uniform inside the area and raw amplitudes uniform in
    ``(0, 1]``; every amplitude is then multiplied by one common factor so
    that the field maximum over the area (see :func:`probe_max`) equals
    ``config.target_max``.
    """
    config.validate()
    area = Area(config.width, config.height)
    rng = np.random.default_rng(config.rng_seed)
    comps = []
    for count, sigma in ((config.n1, config.sigma1), (config.n2, config.sigma2)):
        if count == 0:
            continue
        cx = rng.uniform(0.0, area.width, count)
        cy = rng.uniform(0.0, area.height, count)
        # 1 - U[0,1) lies in (0, 1]
        amp = 1.0 - rng.random(count)
        comps.extend(GaussianComponent((float(x), float(y)), float(a), float(sigma))
                     for x, y, a in zip(cx, cy, amp))
    raw = ScalarField(tuple(comps), area)
    return raw.scaled(config.target_max / probe_max(raw))


def export_components(f: ScalarField, path) -> None:
    Path(path).write_text(json.dumps(f.to_dict(), indent=2) + "\n")


def load_components(path) -> ScalarField:
    return ScalarField.from_dict(json.loads(Path(path).read_text()))
