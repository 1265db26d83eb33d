import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from nomamec.errors import MaxIters, NoBracket
from nomamec.numerics import (
    ConvergenceReport,
    EllipsoidConfig,
    bcd2,
    bisect,
    ellipsoid_max,
    grid_min,
    stationary_exp,
)

# --- bisect ---------------------------------------------------------------


def test_bisect_examples():
    assert bisect(lambda x: x * x - 2, 0.0, 2.0, 1e-10) == pytest.approx(math.sqrt(2), abs=1e-10)
    assert bisect(lambda x: x, -1.0, 1.0, 1e-12) == 0.0
    assert bisect(lambda x: x - 3, 0.0, 1.0, 1e-12, monotone=True) == 1.0
    assert bisect(lambda x: x + 3, 0.0, 1.0, 1e-12, monotone=True) == 0.0


def test_bisect_no_bracket():
    with pytest.raises(NoBracket):
        bisect(lambda x: x - 3, 0.0, 1.0, 1e-12)
    with pytest.raises(ValueError):
        bisect(lambda x: x, 1.0, 1.0, 1e-12)


@given(root=st.floats(-0.999, 0.999), tol=st.floats(1e-12, 1e-2))
def test_bisect_iteration_bound(root, tol):
    calls = []

    def f(x):
        calls.append(x)
        return x - root

    x = bisect(f, -1.0, 1.0, tol)
    assert abs(x - root) <= tol
    assert len(calls) - 2 <= math.ceil(math.log2(2.0 / tol))


# --- ellipsoid ------------------------------------------------------------


def test_ellipsoid_separable_quadratic():
    def g(lam):
        v = -((lam[0] - 2) ** 2) - (lam[1] - 1) ** 2 - lam[2] ** 2
        return v, np.array([-2 * (lam[0] - 2), -2 * (lam[1] - 1), -2 * lam[2]])

    lam, rep = ellipsoid_max(g, EllipsoidConfig([1, 1, 1], 10.0, tol=1e-10))
    assert rep.converged
    assert lam == pytest.approx([2, 1, 0], abs=1e-4)


def test_ellipsoid_boundary_optimum():
    def g(lam):
        return -lam[0] - (lam[1] - 1) ** 2 - (lam[2] - 1) ** 2, np.array(
            [-1.0, -2 * (lam[1] - 1), -2 * (lam[2] - 1)]
        )

    lam, rep = ellipsoid_max(g, EllipsoidConfig([1, 1, 1], 10.0, tol=1e-10))
    assert rep.converged
    assert lam[0] == pytest.approx(0.0, abs=1e-6)
    assert lam[0] >= 0


@pytest.mark.parametrize("seed", range(5))
def test_ellipsoid_piecewise_linear_vs_oracles(seed):
    rng = np.random.default_rng(seed)
    # four pieces whose slopes sum to zero keep the maximizer bounded
    A = rng.normal(size=(3, 3))
    A = np.vstack([A, -A.sum(axis=0), rng.normal(size=3)])
    c = rng.uniform(2, 8, 3)
    b = rng.uniform(0, 1, 5)

    def gv(L):
        return np.min((L - c) @ A.T + b, axis=-1)

    def g(lam):
        v = (lam - c) @ A.T + b
        i = int(np.argmin(v))
        return float(v[i]), A[i]

    lam, rep = ellipsoid_max(g, EllipsoidConfig([5, 5, 5], 10.0, tol=1e-7, max_iters=20000))
    best = gv(lam[None, :])[0]
    # exact LP over the same box
    res = linprog(
        [0, 0, 0, -1],
        A_ub=np.hstack([-A, np.ones((5, 1))]),
        b_ub=b - A @ c,
        bounds=[(0, 10)] * 3 + [(None, None)],
        method="highs",
    )
    assert best == pytest.approx(-res.fun, abs=1e-4)
    if np.all(res.x[:3] < 10 - 1e-6):  # maximizer inside the grid box
        ax = np.linspace(0, 10, 81)
        G = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
        assert gv(G).max() <= best + 1e-9


def test_ellipsoid_best_value_nondecreasing_and_maxiters():
    def g(lam):
        return -np.sum((lam - 3.0) ** 2), -2 * (lam - 3.0)

    lam, rep = ellipsoid_max(g, EllipsoidConfig([0, 0], 10.0, tol=1e-14, max_iters=5))
    assert not rep.converged and rep.iterations == 5
    with pytest.raises(MaxIters):
        ellipsoid_max(g, EllipsoidConfig([0, 0], 10.0, tol=1e-14, max_iters=5), strict=True)


def test_ellipsoid_config_validation():
    with pytest.raises(ValueError):
        EllipsoidConfig([1, 1, 1], 0.0)
    with pytest.raises(ValueError):
        EllipsoidConfig([1, 1, 1], 1.0, tol=0.0)
    with pytest.raises(ValueError):
        EllipsoidConfig([1, 1, 1], 1.0, max_iters=0)


# --- grid search ----------------------------------------------------------


def test_grid_min_examples():
    x, v = grid_min(lambda x: (x - 0.5) ** 2, 0, 1, 101)
    assert x == pytest.approx(0.5) and v == pytest.approx(0, abs=1e-30)
    assert grid_min(lambda x: 3.0, 2.0, 5.0, 11) == (2.0, 3.0)
    assert grid_min(lambda x: x, 0, 1, 2) == (0.0, 0.0)
    with pytest.raises(ValueError):
        grid_min(lambda x: x, 0, 1, 1)


def test_grid_min_nan_is_inf():
    x, v = grid_min(lambda xs: np.where(xs < 0.5, np.nan, xs), 0, 1, 11, vectorized=True)
    assert x == pytest.approx(0.5)


# --- block coordinate descent --------------------------------------------


def test_bcd2_separable():
    a, b, rep = bcd2(lambda b: 1.0, lambda a: 2.0, lambda a, b: (a - 1) ** 2 + (b - 2) ** 2, 0.0, 0.0, 1e-12)
    assert (a, b) == (1.0, 2.0)
    assert rep.converged and rep.iterations <= 2


def test_bcd2_coupled():
    # argmin_a (a-b)^2 + a^2 = b/2 ; argmin_b = a
    a, b, rep = bcd2(lambda b: b / 2, lambda a: a, lambda a, b: (a - b) ** 2 + a * a, 1.0, 1.0, 1e-14)
    assert abs(a) < 1e-6 and abs(b) < 1e-6
    h = rep.history
    assert all(h[i + 1] <= h[i] for i in range(len(h) - 1))


def test_bcd2_already_optimal_and_maxiters():
    a, b, rep = bcd2(lambda b: 0.0, lambda a: 0.0, lambda a, b: a * a + b * b, 0.0, 0.0, 1e-12)
    assert rep.iterations == 1 and rep.converged
    with pytest.raises(MaxIters):
        bcd2(lambda b: b / 2, lambda a: a, lambda a, b: (a - b) ** 2 + a * a, 1.0, 1.0, 0.0, 3, strict=True)


def test_convergence_report_fields():
    r = ConvergenceReport(3, 1e-9, True)
    assert r.iterations == 3 and r.history == ()


# --- closed-form stationary point ----------------------------------------


@given(k=st.floats(1e-3, 1e3), m=st.floats(1e-3, 1e3), t=st.floats(1e-3, 10.0))
def test_stationary_exp_minimizes(k, m, t):
    z = float(stationary_exp(k, m, t, 0.0, 1e3))

    def h(y):
        return k * t * math.expm1(math.log(2) * y / t) - m * y

    for y in (0.0, z * 0.999, z * 1.001 + 1e-9, min(1e3, z + 1)):
        assert h(z) <= h(y) + 1e-9 * max(1.0, abs(h(y)))


def test_stationary_exp_degenerate():
    assert stationary_exp(0.0, 1.0, 1.0, 0.0, 5.0) == 5.0
    assert stationary_exp(0.0, -1.0, 1.0, 0.0, 5.0) == 0.0
    assert stationary_exp(1.0, 1.0, 0.0, 0.0, 5.0) == 0.0
    assert stationary_exp(1.0, -1.0, 1.0, 0.0, 5.0) == 0.0
