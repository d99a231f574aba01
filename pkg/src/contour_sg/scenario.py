"""Scenario files: sectioned key-value configuration for batches of runs."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .dfc import MODES, RunConfig, Thresholds
from .errors import ConfigError
from .field import FieldConfig
from .uav import TraceParams

ALL_MODES = MODES + ("both",)
_SEED_RANGE = re.compile(r"(\d+)-(\d+)")
_SECTIONS = {"scenario", "field", "grid", "run", "trace"}


@dataclass(frozen=True)
class Scenario:
    name: str
    run: RunConfig
    seeds: tuple[int, ...]
    modes: tuple[str, ...]
    out: Path

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seed list is empty")

    def config_for(self, mode: str, seed: int) -> RunConfig:
        return replace(self.run, mode=mode).with_seed(seed)


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,10"``."""
    seeds: list[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        m = _SEED_RANGE.fullmatch(part)
        if m:
            lo, hi = int(m[1]), int(m[2])
            if hi < lo:
                raise ConfigError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        elif part.isdigit():
            seeds.append(int(part))
        else:
            raise ConfigError(f"bad seed specification {part!r}")
    if not seeds:
        raise ConfigError("seed list is empty")
    return tuple(seeds)


def modes_for(mode: str) -> tuple[str, ...]:
    if mode not in ALL_MODES:
        raise ConfigError(f"mode must be one of {ALL_MODES}, got {mode!r}")
    return MODES if mode == "both" else (mode,)


def resolve_path(path) -> Path:
    """``path`` itself, or the packaged scenario of the same name if ``path`` is a bare name."""
    p = Path(path)
    if p.is_file() or p.parent != Path("."):
        return p
    packaged = resources.files("contour_sg") / p.name
    if packaged.is_file():
        return Path(str(packaged))
    return p


def default_path() -> Path:
    return resolve_path("default.cfg")


def load_scenario(path) -> Scenario:
    """Parse a scenario file; any problem surfaces as :class:`ConfigError`."""
    p = resolve_path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(p) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {p}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario {p}: {exc}") from exc
    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections in {p}: {sorted(unknown)}")
    try:
        return _build(cp, p)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid value in {p}: {exc}") from exc


def _build(cp: configparser.ConfigParser, p: Path) -> Scenario:
    def sec(name):
        return cp[name] if cp.has_section(name) else {}

    s, fs, gs, rs, ts = (sec(n) for n in ("scenario", "field", "grid", "run", "trace"))
    d_field, d_run, d_trace, d_thr = FieldConfig(), RunConfig(), TraceParams(), Thresholds()

    field_cfg = FieldConfig(
        n1=int(fs.get("n1", d_field.n1)), n2=int(fs.get("n2", d_field.n2)),
        sigma1=float(fs.get("sigma1", d_field.sigma1)),
        sigma2=float(fs.get("sigma2", d_field.sigma2)),
        width=float(fs.get("width", d_field.width)),
        height=float(fs.get("height", d_field.height)),
        target_max=float(fs.get("target_max", d_field.target_max)))
    field_cfg.validate()

    trace = TraceParams(
        step=float(ts.get("step", d_trace.step)),
        trace_tol=float(ts.get("trace_tol", d_trace.trace_tol)),
        search_radius=float(ts.get("search_radius", d_trace.search_radius)),
        max_steps=int(ts.get("max_steps", d_trace.max_steps)),
        report_spacing=float(ts.get("report_spacing", d_trace.report_spacing)))

    thresholds = Thresholds(
        error_threshold=float(rs.get("error_threshold", d_thr.error_threshold)),
        span_window=float(rs.get("span_window", d_thr.span_window)),
        max_iterations=int(rs.get("max_iterations", d_thr.max_iterations)))

    raw_delta = str(rs.get("initial_delta", "auto")).strip().lower()
    modes = modes_for(str(s.get("mode", "both")).strip())
    run_cfg = RunConfig(
        mode=modes[0],
        initial_M=int(rs.get("initial_m", d_run.initial_M)),
        initial_kappa=int(rs.get("initial_kappa", d_run.initial_kappa)),
        initial_delta=None if raw_delta in ("", "auto") else float(raw_delta),
        thresholds=thresholds, trace=trace,
        P=int(gs.get("p", d_run.P)), Q=int(gs.get("q", d_run.Q)),
        field=field_cfg,
        survey_spacing=float(rs.get("survey_spacing", d_run.survey_spacing)),
        node_cap=int(rs.get("node_cap", d_run.node_cap)),
        n_bins=int(rs.get("n_bins", d_run.n_bins)))
    run_cfg.grid_spec()

    if "seeds" in s:
        seeds = parse_seeds(s["seeds"])
    else:
        base = int(s.get("base_seed", 0))
        reps = int(s.get("repetitions", 1))
        if reps < 1:
            raise ConfigError(f"repetitions must be at least 1, got {reps}")
        seeds = tuple(range(base, base + reps))

    return Scenario(name=str(s.get("name", p.stem)), run=run_cfg, seeds=seeds, modes=modes,
                    out=Path(s.get("out", f"runs/{p.stem}")))
