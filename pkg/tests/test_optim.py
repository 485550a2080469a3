"""Tests for the bound-constrained maximizer."""

import itertools

import numpy as np
import pytest

from betamix import optim
from betamix.optim import Bounds4, maximize


def wide_bounds():
    return Bounds4(np.full(4, 1e-3), np.full(4, 50.0))


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds4(np.array([1.0, 1, 1, 1]), np.array([1.0, 2, 2, 2]))
    with pytest.raises(ValueError):
        Bounds4(np.zeros(3), np.ones(3))


def test_start_at_optimum_stays_put():
    f = lambda v: -float(((v - 2.0) ** 2).sum())
    rep = maximize(f, np.array([2.0, 2, 2, 2]), wide_bounds())
    assert rep.converged
    np.testing.assert_allclose(rep.argmax, [2, 2, 2, 2], atol=1e-9)
    assert rep.value == pytest.approx(0.0, abs=1e-12)


def test_monotone_objective_pins_to_upper_bound():
    f = lambda v: float(v.sum())
    rep = maximize(f, np.array([1.0, 1, 1, 1]), wide_bounds())
    assert rep.converged
    np.testing.assert_allclose(rep.argmax, [50, 50, 50, 50], atol=1e-9)


def test_quadratic_interior_optimum():
    f = lambda v: -float(((v - 10.0) ** 2).sum())
    rep = maximize(f, np.array([1.0, 1, 1, 1]), wide_bounds())
    assert rep.converged
    np.testing.assert_allclose(rep.argmax, [10, 10, 10, 10], atol=1e-4)
    # coarse grid-search oracle: no grid point beats the reported value
    grid = np.linspace(1e-3, 50, 12)
    best_grid = max(f(np.array(v)) for v in itertools.product(grid, repeat=4))
    assert rep.value >= best_grid - 1e-9


def test_never_degrades_start():
    rng = np.random.default_rng(4)
    for _ in range(20):
        center = rng.uniform(-5, 55, 4)
        scale = rng.uniform(0.1, 5.0, 4)

        def f(v):
            return -float((scale * (v - center) ** 2).sum()) + float(
                np.sin(v).sum())

        start = rng.uniform(0.5, 40.0, 4)
        rep = maximize(f, start, wide_bounds(), max_iters=40)
        assert rep.value >= f(start) - 1e-9


def test_value_nondecreasing_in_iteration_budget():
    f = lambda v: -float((v[0] - 7) ** 2 + 3 * (v[1] - 3) ** 2
                         + (v[2] - 0.5) ** 4 + abs(v[3] - 20) ** 1.5)
    start = np.array([1.0, 1, 1, 1])
    vals = []
    for iters in range(1, 12):
        vals.append(maximize(f, start, wide_bounds(), max_iters=iters).value)
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_every_evaluation_is_feasible():
    seen = []
    bounds = Bounds4(np.array([0.5, 0.5, 0.5, 0.5]), np.array([3.0, 3, 3, 3]))

    def f(v):
        seen.append(v.copy())
        return -float(((v - 10.0) ** 2).sum())   # pushes against the bound

    rep = maximize(f, np.array([1.0, 1, 1, 1]), bounds)
    assert len(seen) > 4
    for v in seen:
        assert np.all(v >= bounds.lower - 1e-15)
        assert np.all(v <= bounds.upper + 1e-15)
    np.testing.assert_allclose(rep.argmax, [3, 3, 3, 3], atol=1e-6)


def test_nonfinite_values_rejected_not_propagated():
    def f(v):
        if v[0] > 5.0:
            return float("nan")
        return -float(((v - np.array([4.0, 2, 2, 2])) ** 2).sum())

    start = np.array([3.0, 2, 2, 2])
    rep = maximize(f, start, wide_bounds(), max_iters=60)
    assert np.isfinite(rep.value)
    assert rep.value >= f(start) - 1e-9
    np.testing.assert_allclose(rep.argmax, [4, 2, 2, 2], atol=1e-3)


def test_nonconvergence_reported():
    # one iteration cannot polish a quartic bowl to 1e-6 gradient accuracy
    f = lambda v: -float(((v - 10.0) ** 2).sum())
    rep = maximize(f, np.array([1.0, 1, 1, 1]), wide_bounds(), max_iters=1)
    assert not rep.converged
    assert rep.iterations == 1


def test_fd_gradient_matches_independent_central_difference():
    rng = np.random.default_rng(9)
    bounds = wide_bounds()

    def f(v):
        return float(np.sin(v).sum() - 0.1 * (v ** 2).sum() + v[0] * v[2])

    for _ in range(25):
        v = rng.uniform(1.0, 40.0, 4)
        got = optim.fd_gradient(f, v, bounds)
        want = np.empty(4)
        h = 1e-5
        for j in range(4):
            hi = v.copy(); hi[j] += h
            lo = v.copy(); lo[j] -= h
            want[j] = (f(hi) - f(lo)) / (2 * h)
        np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-8)


def test_batch_objective_path_matches_scalar_path():
    f = lambda v: -float(((v - 6.0) ** 2).sum()) + float(v[1] * 0.3)
    fb = lambda vs: np.array([f(v) for v in vs])
    start = np.array([2.0, 9, 4, 1])
    a = maximize(f, start, wide_bounds())
    b = maximize(f, start, wide_bounds(), batch_objective=fb)
    np.testing.assert_array_equal(a.argmax, b.argmax)
    assert a.value == b.value
    assert a.iterations == b.iterations
