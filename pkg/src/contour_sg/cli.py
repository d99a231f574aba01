"""Command-line front end.

    contour-sg run --scenario default.cfg --mode both --seeds 0-9 --out runs/x --emit-plots
    contour-sg plot runs/x

Exit codes: 0 success, 1 a run failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import report as rpt
from .dfc import run
from .errors import ConfigError
from .scenario import ALL_MODES, Scenario, load_scenario, modes_for, parse_seeds

log = logging.getLogger("contour_sg")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

FINAL_COLUMNS = ("mode", "seed", "iterations", "converged", "termination", "final_mae",
                 "final_mae_db", "final_span_ratio", "final_cost", "iterations_to_error")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contour-sg",
                                description="Simulated UAV contour-tracing field monitoring.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write CSVs (and optionally figures)")
    r.add_argument("--scenario", default="default.cfg",
                   help="scenario file; a bare name also finds packaged scenarios")
    r.add_argument("--mode", choices=ALL_MODES, help="override the scenario's mode")
    seeds = r.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="single seed")
    seeds.add_argument("--seeds", help="seed list, e.g. 0-9 or 1,4,7")
    r.add_argument("--out", type=Path, help="output directory")
    r.add_argument("--max-iters", type=int, help="override max_iterations")
    r.add_argument("--emit-plots", action="store_true", help="render SVG figures from the CSVs")
    r.add_argument("--target-db", type=float, action="append", default=[],
                   help="extra MAE-dB target for cost-at-target (repeatable)")
    r.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")

    pl = sub.add_parser("plot", help="render SVG figures from an existing output directory")
    pl.add_argument("out", type=Path)
    return p


def _apply_overrides(sc: Scenario, args) -> Scenario:
    run_cfg, seeds, modes, out = sc.run, sc.seeds, sc.modes, sc.out
    if args.mode:
        modes = modes_for(args.mode)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        seeds = (args.seed,)
    elif args.seeds:
        seeds = parse_seeds(args.seeds)
    if args.max_iters is not None:
        if args.max_iters < 1:
            raise ConfigError("--max-iters must be at least 1")
        run_cfg = replace(run_cfg, thresholds=replace(run_cfg.thresholds,
                                                      max_iterations=args.max_iters))
    if args.out is not None:
        out = args.out
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return replace(sc, run=run_cfg, seeds=seeds, modes=modes, out=out)


def _one(job):
    """Run one (mode, seed) and write its directory; returns a summary row or an error."""
    cfg, directory = job
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run(cfg)
        rpt.write_run(result, directory)
    except Exception as exc:  # reported, turned into exit status 1
        return cfg.mode, cfg.seed, None, f"{type(exc).__name__}: {exc}"
    return cfg.mode, cfg.seed, result, None


def _final_row(mode, seed, result, threshold) -> list:
    s = rpt.summary_dict(result)
    fin = s["final"]
    return [mode, seed, s["iterations"], int(s["converged"]), s["termination"],
            rpt._fmt(fin["mae"]), rpt._fmt(fin["mae_db"]), rpt._fmt(fin["span_ratio"]),
            rpt._fmt(fin["cost"]), rpt._fmt(result.iterations_to_error(threshold))]


def _write_comparisons(results, seeds, out: Path, targets) -> None:
    a, b = "dual-sg", "baseline"
    with open(out / "comparison.csv", "w", newline="") as fc, \
            open(out / "cost_at_target.csv", "w", newline="") as ft:
        wc, wt = csv.writer(fc), csv.writer(ft)
        wc.writerow(["seed", "cost", f"mae_db_{a}", f"mae_db_{b}", "difference"])
        wt.writerow(["seed", "target", "target_mae_db", f"cost_{a}", f"cost_{b}"])
        for seed in seeds:
            ra, rb = results.get((a, seed)), results.get((b, seed))
            if ra is None or rb is None or not ra.records or not rb.records:
                continue
            common = rpt.lowest_common_mae_db(ra, rb)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", rpt.PartialComparison)
                table = rpt.compare(ra, rb, targets=(common, *targets))
            if caught:
                log.warning("seed %d: %s", seed, caught[0].message)
            for row in list(table.rows())[1:]:
                wc.writerow([seed, *row])
            for k, (t, (ca, cb)) in enumerate(table.targets.items()):
                wt.writerow([seed, "lowest_common" if k == 0 else "configured", rpt._fmt(t),
                             rpt._fmt(ca), rpt._fmt(cb)])


def run_scenario(sc: Scenario, emit_plots: bool = False, targets=(), jobs: int = 1) -> int:
    out = Path(sc.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / ".write-test").touch()
        (out / ".write-test").unlink()
    except OSError as exc:
        log.error("output directory %s is not writable: %s", out, exc)
        return EXIT_USAGE

    jobs_list = [(sc.config_for(mode, seed), out / mode / f"seed_{seed}")
                 for mode in sc.modes for seed in sc.seeds]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_one, jobs_list))
    else:
        outcomes = [_one(j) for j in jobs_list]

    status = EXIT_OK
    results = {}
    for mode, seed, result, err in outcomes:
        if err is not None:
            log.error("%s seed %d failed: %s", mode, seed, err)
            status = EXIT_RUNTIME
        else:
            results[(mode, seed)] = result
            log.info("%s seed %d: %d iterations, %s", mode, seed, len(result.records),
                     result.termination)

    thr = sc.run.thresholds.error_threshold
    with open(out / "final.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FINAL_COLUMNS)
        for (mode, seed), result in results.items():
            w.writerow(_final_row(mode, seed, result, thr))
    rpt.summarize({mode: [results[(mode, s)].records for s in sc.seeds if (mode, s) in results]
                   for mode in sc.modes}, out / "summary.csv")
    if len(sc.modes) == 2:
        _write_comparisons(results, sc.seeds, out, targets)

    if emit_plots:
        try:
            from .plots import render_all
            render_all(out)
        except ImportError as exc:
            log.error("plotting needs matplotlib: %s", exc)
            status = status or EXIT_RUNTIME
    return status


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "plot":
        if not args.out.is_dir():
            log.error("no such output directory: %s", args.out)
            return EXIT_USAGE
        from .plots import render_all
        for path in render_all(args.out):
            print(path)
        return EXIT_OK

    try:
        sc = _apply_overrides(load_scenario(args.scenario), args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    return run_scenario(sc, args.emit_plots, args.target_db, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
