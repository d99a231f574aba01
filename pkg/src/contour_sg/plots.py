"""Static SVG figures rendered from a finished output directory's CSVs.

Nothing here touches the simulation; matplotlib is only imported when a
figure is actually drawn.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .grid import read_matrix_csv
from .report import read_run_csv

log = logging.getLogger(__name__)

_STYLE = {"dual-sg": dict(color="tab:blue", marker="o"),
          "baseline": dict(color="tab:orange", marker="s")}

# (file stem, x column, y column, x label, y label, modes)
LINE_FIGURES = (
    ("mae_db_vs_M", "M_requested", "mae_db", "number of contour levels M", "MAE (dB)", None),
    ("learning_error_vs_M", "M_requested", "learning_error", "number of contour levels M",
     "learning error", None),
    ("span_ratio_vs_iteration", "iteration", "span_ratio", "iteration", "span ratio", None),
    ("cost_vs_M", "M_requested", "cost_cumulative", "number of contour levels M",
     "total flying distance", None),
    ("mae_db_vs_cost", "cost_cumulative", "mae_db", "total flying distance", "MAE (dB)", None),
    ("delta_vs_iteration", "iteration", "delta", "iteration", "redundancy threshold delta",
     ("dual-sg",)),
)


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    # fixed metadata keeps the SVGs reproducible
    matplotlib.rcParams["svg.hashsalt"] = "contour-sg"
    return plt


def collect_runs(out_dir) -> dict[str, dict[int, list[dict]]]:
    """``{mode: {seed: rows}}`` for every ``<mode>/seed_<n>/run.csv`` under ``out_dir``."""
    runs: dict[str, dict[int, list[dict]]] = {}
    for path in sorted(Path(out_dir).glob("*/seed_*/run.csv")):
        mode = path.parent.parent.name
        seed = int(path.parent.name.split("_", 1)[1])
        runs.setdefault(mode, {})[seed] = read_run_csv(path)
    return runs


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def line_figure(runs, stem, xcol, ycol, xlabel, ylabel, modes, out: Path) -> Path | None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    drew = False
    for mode, by_seed in runs.items():
        if modes is not None and mode not in modes:
            continue
        style = _STYLE.get(mode, {})
        for k, (seed, rows) in enumerate(sorted(by_seed.items())):
            x = np.array([r[xcol] for r in rows], dtype=float)
            y = np.array([r[ycol] for r in rows], dtype=float)
            ok = np.isfinite(y)
            ax.plot(x[ok], y[ok], alpha=0.85 if len(by_seed) == 1 else 0.45, lw=1.2,
                    markersize=3, label=mode if k == 0 else None, **style)
            drew = True
    if not drew:
        plt.close(fig)
        return None
    if ycol == "span_ratio":
        ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend()
    path = _save(fig, out / f"{stem}.svg")
    plt.close(fig)
    return path


def error_heatmap(matrix_csv, out_path: Path, title: str = "") -> Path:
    plt = _pyplot()
    m = read_matrix_csv(matrix_csv).values
    fig, ax = plt.subplots(figsize=(5, 4.2))
    # rows are x, columns y: transpose so x runs horizontally
    im = ax.imshow(m.T, origin="lower", cmap="viridis", aspect="equal")
    fig.colorbar(im, ax=ax, label="absolute error")
    ax.set_xlabel("x index")
    ax.set_ylabel("y index")
    if title:
        ax.set_title(title)
    path = _save(fig, out_path)
    plt.close(fig)
    return path


def render_all(out_dir, plot_dir=None) -> list[Path]:
    """Draw every figure for the runs found under ``out_dir``."""
    out_dir = Path(out_dir)
    plot_dir = Path(plot_dir) if plot_dir else out_dir / "plots"
    plot_dir.mkdir(parents=True, exist_ok=True)
    runs = collect_runs(out_dir)
    written = []
    for spec in LINE_FIGURES:
        p = line_figure(runs, *spec, plot_dir)
        if p is not None:
            written.append(p)
    for mode, by_seed in runs.items():
        seed = min(by_seed)
        src = out_dir / mode / f"seed_{seed}" / "error_map.csv"
        if src.exists():
            written.append(error_heatmap(src, plot_dir / f"error_map_{mode}_seed_{seed}.svg",
                                         f"{mode}, seed {seed}"))
    log.info("wrote %d figures to %s", len(written), plot_dir)
    return written
