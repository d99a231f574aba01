import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contour_sg.dfc import (RunConfig, SGDegenerate, Thresholds, check_convergence,
                            eliminate_redundant, run, thin_samples, update_delta, update_kappa)
from contour_sg.errors import ConfigError
from contour_sg.field import FieldConfig
from contour_sg.metrics import IterationRecord, mae_db


def small(mode="dual-sg", seed=0, iters=4):
    return RunConfig(mode=mode, P=51, Q=51, field=FieldConfig(n1=4, n2=4, rng_seed=seed),
                     thresholds=Thresholds(max_iterations=iters))


@pytest.fixture(scope="module")
def runs():
    return {mode: run(small(mode)) for mode in ("dual-sg", "baseline")}


@pytest.mark.parametrize("k,e2,e1,out", [(1, 0.7, 0.7, 2), (2, 2, 1, 4), (3, 3, 1, 5)])
def test_kappa_examples(k, e2, e1, out):
    assert update_kappa(k, e2, e1) == out


@pytest.mark.parametrize("e2,e1,factor", [(1.3, 1.3, 1), (3, 1, 0), (1, 3, 2)])
def test_delta_examples(e2, e1, factor):
    assert update_delta(2.5, e2, e1) == 2.5 * factor


def test_zero_errors_flagged():
    with pytest.warns(SGDegenerate):
        assert update_kappa(4, 0.0, 0.0) == 5
    with pytest.warns(SGDegenerate):
        assert update_delta(1.5, 0.0, 0.0) == 1.5


@given(st.integers(1, 50), st.floats(0, 1e3), st.floats(0, 1e3))
def test_kappa_grows_by_at_least_one(k, e2, e1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SGDegenerate)
        assert update_kappa(k, e2, e1) >= k + 1
        assert update_delta(1.0, e2, e1) >= 0


def test_eliminate_examples():
    assert list(eliminate_redundant([10, 50, 90], [48], 5)) == [10, 90]
    assert list(eliminate_redundant([10, 50], [], 5)) == [10, 50]
    assert list(eliminate_redundant([10, 50, 90], [50], 0)) == [10, 90]
    with pytest.raises(ConfigError):
        eliminate_redundant([1], [1], -1)


@given(st.lists(st.floats(0, 100), max_size=20), st.lists(st.floats(0, 100), max_size=20),
       st.floats(0, 30))
def test_eliminate_property(new, past, delta):
    kept = eliminate_redundant(new, past, delta)
    for lv in kept:
        assert all(abs(lv - p) > delta for p in past)
    dropped = [v for v in new if v not in set(kept)]
    for lv in dropped:
        assert any(abs(lv - p) <= delta for p in past)


def rec(err, spr):
    return IterationRecord(1, 3, 3, err, 1.0, 0.0, spr, 1, 1.0, 0.0, 0.0)


def test_convergence_rule():
    t = Thresholds()
    assert not check_convergence([rec(0.1, 1.0)], t)
    assert not check_convergence([rec(1, 0.8), rec(0.1, 0.9)], t)
    assert not check_convergence([rec(1, 0.99), rec(0.6, 1.0)], t)
    assert check_convergence([rec(1, 0.99), rec(0.1, 1.0)], t)
    assert check_convergence([rec(0.0, 1.0), rec(0.0, 1.0)], t)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(mode="other")
    with pytest.raises(ConfigError):
        RunConfig(initial_M=0)
    with pytest.raises(ConfigError):
        RunConfig(thresholds=Thresholds(max_iterations=0))


def test_thin_samples():
    survey = np.zeros((10, 3))
    traces = [np.column_stack([np.arange(n), np.zeros(n), np.ones(n)]).astype(float)
              for n in (100, 50, 7)]
    assert len(thin_samples(survey, traces, 1000)) == 167
    out = thin_samples(survey, traces, 60)
    assert len(out) <= 60
    assert np.array_equal(out[:10], survey)
    # ends of each trace survive thinning
    assert {0.0, 99.0, 49.0, 6.0} <= set(out[10:, 0])


def test_first_iteration_uses_three_levels(runs):
    for r in runs.values():
        assert r.records[0].M_requested == 3


def test_baseline_grows_by_one(runs):
    Ms = [r.M_requested for r in runs["baseline"].records]
    assert Ms == list(range(3, 3 + len(Ms)))
    assert all(r.kappa == 1 for r in runs["baseline"].records)


def test_dual_kappa_increases(runs):
    ks = [r.kappa for r in runs["dual-sg"].records]
    assert all(b >= a + 1 for a, b in zip(ks, ks[1:]))


def test_assigned_levels_avoid_past(runs):
    recs = runs["dual-sg"].records
    for k, r in enumerate(recs):
        past = [lv for q in recs[:k] for lv in q.levels]
        for lv in r.levels:
            assert all(abs(lv - p) > r.delta for p in past)


def test_record_invariants(runs):
    for r in runs.values():
        costs = [q.cost_cumulative for q in r.records]
        assert all(b >= a for a, b in zip(costs, costs[1:]))
        for q in r.records:
            assert abs(q.mae_db - mae_db(q.mae)) < 1e-12
            assert q.cost_increment >= 0
        assert r.termination in ("converged", "max_iterations", "levels_exhausted")
        assert r.converged == (r.termination == "converged")
        assert sum(tc.path_length for _, tc in r.traces) == pytest.approx(costs[-1])


def test_error_map_and_iterations_to_error(runs):
    r = runs["dual-sg"]
    assert np.mean(r.error_map().values) == pytest.approx(r.records[-1].mae)
    n = r.iterations_to_error(math.inf)
    assert n == 1 and r.iterations_to_error(-1.0) is None


def test_deterministic(runs):
    again = run(small("dual-sg"))
    a, b = runs["dual-sg"], again
    assert [q.row() for q in a.records] == [q.row() for q in b.records]
    assert np.array_equal(a.final_estimate.values, b.final_estimate.values)


def test_max_iterations_respected():
    r = run(replace(small("baseline", seed=2), thresholds=Thresholds(max_iterations=1)))
    assert len(r.records) == 1
    assert r.termination == "max_iterations" and not r.converged


def test_identical_estimates_converge():
    # a huge error threshold and span window make
    # the second iteration converge immediately
    r = run(replace(small("baseline", seed=1),
                    thresholds=Thresholds(error_threshold=1e9, span_window=1e9)))
    assert r.converged and len(r.records) == 2
