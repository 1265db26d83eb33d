"""Small numerical kernels shared by the solvers.

Contains bisection with an optional monotone-bracket mode, a deep-cut
ellipsoid method for maximizing concave functions over the nonnegative
orthant (scalar and batched forms), uniform grid search and a two-block
coordinate-descent driver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import MaxIters, NoBracket

__all__ = [
    "EllipsoidConfig",
    "ConvergenceReport",
    "bisect",
    "ellipsoid_max",
    "ellipsoid_max_batch",
    "grid_min",
    "bcd2",
]


@dataclass(frozen=True)
class EllipsoidConfig:
    """Initial ball and stopping rule of :func:`ellipsoid_max`.

    ``tol`` bounds the certified optimality gap ``UB - best`` where ``UB``
    is the smallest value of ``g(x) + sqrt(s' P s)`` seen so far, a valid
    upper bound on the maximum as long as the initial ball contains a
    maximizer.
    """

    initial_center: Sequence[float]
    initial_radius: float
    tol: float = 1e-8
    max_iters: int = 5000

    def __post_init__(self) -> None:
        if not self.initial_radius > 0:
            raise ValueError("initial_radius must be > 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of an iterative routine."""

    iterations: int
    final_gap: float
    converged: bool
    history: tuple[float, ...] = field(default=(), repr=False)


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    *,
    monotone: bool = False,
) -> float:
    """Root of a scalar function by interval halving.

    Parameters
    ----------
    f : callable
        Continuous function of one variable.
    lo, hi : float
        Bracket, ``lo < hi``.
    tol : float
        Width of the final bracket.
    monotone : bool, optional
        If the signs at the endpoints agree, return the endpoint on the side
        where the root escapes (the one with the smaller ``|f|``) instead of
        raising. Intended for monotone ``f``.

    Returns
    -------
    float
        Midpoint of the final bracket, or an endpoint.

    Raises
    ------
    NoBracket
        In strict mode when ``f(lo)`` and ``f(hi)`` have the same sign.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        if not monotone:
            raise NoBracket(f"f({lo})={flo} and f({hi})={fhi} share a sign")
        return hi if abs(fhi) < abs(flo) else lo
    neg_lo = flo < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == neg_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ellipsoid_max_batch(
    g: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
    centers: np.ndarray,
    radii,
    tol,
    max_iters: int,
):
    """Run independent deep-cut ellipsoid maximizations in lockstep.

    Parameters
    ----------
    g : callable
        ``g(X, idx) -> (values, subgradients)`` evaluating the concave
        objectives of the problems ``idx`` at the rows of ``X``. Only
        nonnegative points are ever passed.
    centers : ndarray, shape (m, n)
        Initial centers, ``n >= 2``.
    radii : float or ndarray, shape (m,)
        Initial radii.
    tol : float or ndarray, shape (m,)
        Absolute tolerance on the certified gap.
    max_iters : int
        Iteration cap per problem.

    Returns
    -------
    best_x : ndarray, shape (m, n)
    best_v : ndarray, shape (m,)
    gap : ndarray, shape (m,)
        Certified ``UB - best_v`` (``inf`` if no feasible center was seen).
    iters : ndarray of int, shape (m,)
    """
    x = np.array(centers, dtype=float)
    m, n = x.shape
    if n < 2:
        raise ValueError("ellipsoid method needs at least two dimensions")
    rad = np.broadcast_to(np.asarray(radii, dtype=float), (m,))
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (m,))
    P = np.einsum("i,jk->ijk", rad**2, np.eye(n))
    best_x = np.clip(x, 0.0, None)
    best_v = np.full(m, -np.inf)
    ub = np.full(m, np.inf)
    iters = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    c1 = (n * n) / (n * n - 1.0)

    for _ in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1
        xa = x[idx]
        Pa_mat = P[idx]
        k = idx.size
        cut = np.zeros((k, n))
        depth = np.zeros(k)

        jmin = np.argmin(xa, axis=1)
        xmin = xa[np.arange(k), jmin]
        infeas = xmin < 0
        if infeas.any():
            r = np.flatnonzero(infeas)
            cut[r, jmin[r]] = -1.0
            depth[r] = -xmin[r]
        feas = np.flatnonzero(~infeas)
        if feas.size:
            gi = idx[feas]
            v, s = g(xa[feas], gi)
            v = np.asarray(v, dtype=float)
            s = np.asarray(s, dtype=float)
            better = v > best_v[gi]
            best_v[gi[better]] = v[better]
            best_x[gi[better]] = xa[feas][better]
            Ps = np.einsum("ijk,ik->ij", Pa_mat[feas], s)
            sPs = np.maximum(np.einsum("ij,ij->i", s, Ps), 0.0)
            ub[gi] = np.minimum(ub[gi], v + np.sqrt(sPs))
            cut[feas] = -s
            depth[feas] = best_v[gi] - v

        gap = ub[idx] - best_v[idx]
        done = gap <= tol[idx]
        Pcut = np.einsum("ijk,ik->ij", Pa_mat, cut)
        aPa = np.einsum("ij,ij->i", cut, Pcut)
        degenerate = ~(aPa > 0)
        sq = np.sqrt(np.where(degenerate, 1.0, aPa))
        alpha = depth / sq
        # alpha >= 1: the kept half-space misses the ellipsoid entirely
        empty = alpha >= 1.0
        ub[idx[empty & ~infeas]] = best_v[idx[empty & ~infeas]]
        stop = done | degenerate | empty
        active[idx[stop]] = False

        go = ~stop
        if not go.any():
            continue
        gi = idx[go]
        al = alpha[go]
        d = Pcut[go] / sq[go, None]
        x[gi] = xa[go] - ((1.0 + n * al) / (n + 1.0))[:, None] * d
        coef = 2.0 * (1.0 + n * al) / ((n + 1.0) * (1.0 + al))
        Pn = Pa_mat[go] - coef[:, None, None] * np.einsum("ij,ik->ijk", d, d)
        Pn *= (c1 * (1.0 - al * al))[:, None, None]
        P[gi] = 0.5 * (Pn + np.transpose(Pn, (0, 2, 1)))

    gap = ub - best_v
    return best_x, best_v, gap, iters


def ellipsoid_max(
    g: Callable[[np.ndarray], tuple[float, np.ndarray]],
    cfg: EllipsoidConfig,
    *,
    strict: bool = False,
) -> tuple[np.ndarray, ConvergenceReport]:
    """Maximize a concave function over the nonnegative orthant.

    Parameters
    ----------
    g : callable
        ``g(lam) -> (value, subgradient)``.
    cfg : EllipsoidConfig
        Initial ball and stopping rule.
    strict : bool, optional
        Raise :class:`MaxIters` instead of returning an unconverged result.

    Returns
    -------
    lam : ndarray
        Best point found (not the last center).
    report : ConvergenceReport
    """

    def gb(X, _idx):
        v, s = g(X[0])
        return np.array([v], dtype=float), np.asarray(s, dtype=float)[None, :]

    c = np.asarray(cfg.initial_center, dtype=float)[None, :]
    bx, bv, gap, it = ellipsoid_max_batch(gb, c, cfg.initial_radius, cfg.tol, cfg.max_iters)
    ok = bool(gap[0] <= cfg.tol)
    if strict and not ok:
        raise MaxIters(f"ellipsoid gap {gap[0]:.3g} after {it[0]} iterations")
    return bx[0], ConvergenceReport(int(it[0]), float(gap[0]), ok)


def grid_min(
    f: Callable,
    lo: float,
    hi: float,
    K: int,
    *,
    vectorized: bool = False,
) -> tuple[float, float]:
    """Minimize ``f`` over ``K`` evenly spaced points of ``[lo, hi]``.

    Ties go to the smallest argument; NaN values count as ``+inf``.
    With ``vectorized=True``, ``f`` receives the whole grid at once.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    xs = np.linspace(lo, hi, K)
    vals = np.asarray(f(xs) if vectorized else [f(float(x)) for x in xs], dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    return float(xs[i]), float(vals[i])


def bcd2(
    update_a: Callable,
    update_b: Callable,
    objective: Callable,
    a0,
    b0,
    tol: float,
    max_iters: int = 1000,
    *,
    strict: bool = False,
):
    """Two-block coordinate descent.

    Each round sets ``a = update_a(b)`` and then ``b = update_b(a)``; both
    updates must return exact block minimizers. Stops once a round improves
    the objective by less than ``tol``.

    Returns
    -------
    a, b : block values
    report : ConvergenceReport
        ``history`` holds the objective after every round, starting with
        the initial point.
    """
    a, b = a0, b0
    hist = [float(objective(a, b))]
    for k in range(1, max_iters + 1):
        a = update_a(b)
        b = update_b(a)
        fk = float(objective(a, b))
        hist.append(fk)
        gain = hist[-2] - fk
        if gain < tol:
            return a, b, ConvergenceReport(k, max(gain, 0.0), True, tuple(hist))
    if strict:
        raise MaxIters(f"bcd2 did not converge in {max_iters} rounds")
    return a, b, ConvergenceReport(max_iters, hist[-2] - hist[-1], False, tuple(hist))


def _log2_pos(x):
    """``log2(x)`` for positive entries, ``-inf`` elsewhere."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.log2(np.where(x > 0, x, 1.0)), -np.inf)


def stationary_exp(k, m, t, lo, hi):
    """Clipped root ``z`` of ``k ln2 2**(z/t) = m`` on ``[lo, hi]``.

    This is the minimizer of ``k t (2**(z/t) - 1) - m z`` over the interval,
    the building block of every closed-form bit allocation. ``k`` may be
    zero (linear objective), ``t`` zero forces ``z = lo``.
    """
    k, m, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (k, m, t)))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = t * _log2_pos(m / (k * math.log(2.0)))
    z = np.where(k > 0, z, np.where(m > 0, np.inf, -np.inf))
    z = np.where(t > 0, z, -np.inf)
    return np.clip(np.nan_to_num(z, nan=-np.inf), lo, hi)
