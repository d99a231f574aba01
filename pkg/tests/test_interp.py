import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import RBFInterpolator

from contour_sg.errors import InsufficientDataError
from contour_sg.field import FieldConfig, generate_field
from contour_sg.grid import GridEstimate, GridSpec
from contour_sg.interp import SamplePoint, evaluate_grid, fit, green, merge_duplicates


def random_samples(n, seed, field=None):
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0, 100, (n, 2))
    f = field or generate_field(FieldConfig(rng_seed=seed))
    return np.column_stack([xy, f.eval_many(xy[:, 0], xy[:, 1])]), f


def gaussian_field_rms(seed=0, n=200):
    samples, f = random_samples(n, seed)
    spec = GridSpec(101, 101)
    est = evaluate_grid(fit(samples), spec)
    truth = GridEstimate.from_field(f, spec)
    rms = float(np.sqrt(np.mean((est.values - truth.values) ** 2)))
    return rms, truth.span


def test_green_kernel():
    # r^2 (ln r - 1) at r = e is 0, at r = 1 is -1, and 0 at r = 0
    r = np.array([0.0, 1.0, np.e])
    assert np.allclose(green(r ** 2), [0.0, -1.0, 0.0], atol=1e-15)


def test_reproduces_training_samples():
    samples, _ = random_samples(300, 1)
    model = fit(samples)
    assert np.max(np.abs(model(samples[:, 0], samples[:, 1]) - samples[:, 2])) < 1e-6


def test_constant_samples_give_constant():
    rng = np.random.default_rng(2)
    pts = np.column_stack([rng.uniform(0, 100, (40, 2)), np.full(40, 7.25)])
    est = evaluate_grid(fit(pts), GridSpec(21, 21))
    assert np.max(np.abs(est.values - 7.25)) < 1e-6
    assert est.vmin == pytest.approx(7.25, abs=1e-6) and est.vmax == pytest.approx(7.25, abs=1e-6)


def test_affine_data_is_reproduced_exactly():
    rng = np.random.default_rng(3)
    xy = rng.uniform(0, 100, (30, 2))
    pts = np.column_stack([xy, 2 * xy[:, 0] - 0.5 * xy[:, 1] + 4])
    X, Y = GridSpec(11, 11).mesh()
    assert np.allclose(fit(pts)(X, Y), 2 * X - 0.5 * Y + 4, atol=1e-6)


def test_held_out_rms_below_five_percent():
    rms, span = gaussian_field_rms()
    assert rms < 0.05 * span


def test_matches_independent_thin_plate_solver():
    # r^2 (ln r - 1) differs from scipy's r^2 ln r by a multiple of r^2, which
    # the side conditions annihilate, so both solvers define the same spline
    samples, _ = random_samples(150, 4)
    ref = RBFInterpolator(samples[:, :2], samples[:, 2], kernel="thin_plate_spline", degree=1)
    X, Y = GridSpec(41, 41).mesh()
    ours = fit(samples)(X, Y)
    theirs = ref(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    assert np.max(np.abs(ours - theirs)) < 1e-6 * np.ptp(samples[:, 2])


def test_grid_at_training_point():
    spec = GridSpec(11, 11)
    X, Y = spec.mesh()
    rng = np.random.default_rng(5)
    pts = np.column_stack([X.ravel(), Y.ravel(), rng.normal(size=X.size)])[::3]
    est = evaluate_grid(fit(pts), spec)
    for x, y, v in pts:
        i, j = int(round(x / spec.dx)), int(round(y / spec.dy))
        assert abs(est.values[i, j] - v) < 1e-6


def test_two_by_two_grid():
    samples, _ = random_samples(20, 6)
    est = evaluate_grid(fit(samples), GridSpec(2, 2))
    assert est.values.shape == (2, 2) and np.all(np.isfinite(est.values))


def test_sample_point_input():
    pts = [SamplePoint(0, 0, 1), SamplePoint(10, 0, 2), SamplePoint(0, 10, 3),
           SamplePoint(10, 10, 5)]
    m = fit(pts)
    assert m(10.0, 10.0) == pytest.approx(5.0, abs=1e-9)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit(np.array([[0, 0, 1], [1, 1, 2]], dtype=float))
    # near-duplicates merge down below three unique points
    with pytest.raises(InsufficientDataError):
        fit(np.array([[0, 0, 1], [1e-9, 0, 1], [5, 5, 2]], dtype=float))
    with pytest.raises(InsufficientDataError):
        fit(np.array([[0, 0, 1], [1, 1, 2], [2, 2, 3], [3, 3, 4]], dtype=float))


def test_merge_duplicates_averages():
    arr = np.array([[1.0, 1.0, 2.0], [1.0 + 1e-8, 1.0, 4.0], [5.0, 5.0, 1.0]])
    out = merge_duplicates(arr)
    assert len(out) == 2
    assert out[0, 2] == pytest.approx(3.0)


def test_added_on_surface_sample_changes_little():
    samples, _ = random_samples(120, 7)
    model = fit(samples)
    x, y = 42.0, 57.0
    more = np.vstack([samples, [x, y, float(model(x, y))]])
    X, Y = GridSpec(31, 31).mesh()
    assert np.max(np.abs(fit(more)(X, Y) - model(X, Y))) < 1e-6


@given(st.integers(0, 10_000))
def test_permutation_invariance(seed):
    samples, _ = random_samples(60, seed % 7)
    perm = np.random.default_rng(seed).permutation(len(samples))
    X, Y = GridSpec(21, 21).mesh()
    assert np.max(np.abs(fit(samples)(X, Y) - fit(samples[perm])(X, Y))) < 1e-9
