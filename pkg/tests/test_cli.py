import filecmp
import subprocess
import sys

import pytest

from contour_sg import cli
from contour_sg.errors import ConfigError
from contour_sg.scenario import default_path, load_scenario, parse_seeds

FAST = """
[scenario]
name = fast
mode = both
seeds = 0-1
[field]
n1 = 3
n2 = 3
[grid]
p = 41
q = 41
[run]
max_iterations = 3
"""


@pytest.fixture
def fast_cfg(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(FAST)
    return p


def test_default_scenario_matches_setup():
    sc = load_scenario("default.cfg")
    f = sc.run.field
    assert (f.width, f.height, f.sigma1, f.sigma2) == (100, 100, 10, 15)
    assert (sc.run.initial_M, sc.run.P, sc.run.Q) == (3, 101, 101)
    assert len(sc.seeds) >= 10 and sc.modes == ("dual-sg", "baseline")
    assert default_path().is_file()


def test_parse_seeds():
    assert parse_seeds("0-2,7") == (0, 1, 2, 7)
    for bad in ("", "a", "5-2", "-1"):
        with pytest.raises(ConfigError):
            parse_seeds(bad)


@pytest.mark.parametrize("body", ["[field]\nsigma1 = -1\n", "[grid]\np = 1\n", "[bogus]\nx=1\n",
                                  "[run]\ninitial_m = three\n", "not a config"])
def test_bad_config_exit_2(tmp_path, body):
    p = tmp_path / "bad.cfg"
    p.write_text(body)
    assert cli.main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 2


def test_missing_scenario_exit_2(tmp_path):
    assert cli.main(["run", "--scenario", str(tmp_path / "none.cfg")]) == 2


def test_usage_errors_exit_2(tmp_path):
    assert cli.main(["run", "--mode", "nonsense"]) == 2
    assert cli.main([]) == 2
    assert cli.main(["run", "--seed", "1", "--seeds", "1-2"]) == 2
    assert cli.main(["run", "--max-iters", "0", "--out", str(tmp_path)]) == 2


def test_run_failure_exit_1(tmp_path, monkeypatch):
    def boom(cfg):
        raise RuntimeError("simulated failure")
    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["run", "--mode", "baseline", "--seed", "0", "--out", str(tmp_path)]) == 1


def test_both_modes_outputs(fast_cfg, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", "--scenario", str(fast_cfg), "--out", str(out), "--emit-plots",
                     "--target-db", "-10"]) == 0
    for mode in ("dual-sg", "baseline"):
        for seed in (0, 1):
            d = out / mode / f"seed_{seed}"
            for name in ("run.csv", "traces.csv", "estimate.csv", "error_map.csv",
                         "summary.json", "field.json"):
                assert (d / name).is_file()
    header = (out / "comparison.csv").read_text().splitlines()[0]
    assert header == "seed,cost,mae_db_dual-sg,mae_db_baseline,difference"
    targets = (out / "cost_at_target.csv").read_text().splitlines()
    assert len(targets) == 1 + 2 * 2
    assert (out / "summary.csv").is_file() and (out / "final.csv").is_file()
    svgs = {p.name for p in (out / "plots").glob("*.svg")}
    assert {"mae_db_vs_M.svg", "learning_error_vs_M.svg", "span_ratio_vs_iteration.svg",
            "cost_vs_M.svg", "mae_db_vs_cost.svg", "delta_vs_iteration.svg"} <= svgs
    assert any(s.startswith("error_map_") for s in svgs)
    # figures can be redrawn from the CSVs alone
    assert cli.main(["plot", str(out)]) == 0


def test_seed_override_and_determinism(fast_cfg, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        rc = subprocess.run([sys.executable, "-m", "contour_sg.cli", "run", "--scenario",
                             str(fast_cfg), "--mode", "dual-sg", "--seed", "7", "--out", str(out)],
                            capture_output=True, text=True)
        assert rc.returncode == 0, rc.stderr
        outs.append(out)
    assert [p.name for p in (outs[0] / "dual-sg").iterdir()] == ["seed_7"]
    a = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    assert a == sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*.csv"))
    for rel in a:
        assert filecmp.cmp(outs[0] / rel, outs[1] / rel, shallow=False), rel


def test_plot_missing_dir(tmp_path):
    assert cli.main(["plot", str(tmp_path / "nope")]) == 2
