"""Weighted energy minimization (problem P1).

For a fixed time split ``alpha`` the problem is convex in the bit
allocation. Its Lagrangian separates into a user part in
``(S, a) = (ell_uh + ell_ua, ell_ua)`` and a helper part in ``ell_ha``, each
minimized in closed form. The dual is maximized over the multipliers of the
three coupling constraints (user latency, helper latency, AP capacity):

* multipliers of constraints that no box point can violate are fixed at 0;
* a single remaining multiplier is found by bisection on its (monotone)
  subgradient;
* two or three remaining multipliers go through a deep-cut ellipsoid method
  on a box scaled by Slater bounds, followed by a primal repair step.

The outer search over ``alpha`` is a uniform grid with one refinement pass.
All internal arithmetic is vectorized over the ``alpha`` grid and uses
bandwidth-normalized bits (see :class:`~nomamec.system_model.NormalizedParams`).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .errors import Infeasible, NomaOrderViolated
from .numerics import (
    ConvergenceReport,
    bcd2,
    bisect,
    ellipsoid_max_batch,
    stationary_exp,
)
from .system_model import (
    Allocation,
    EnergyBreakdown,
    NormalizedParams,
    SystemParams,
    energy_breakdown,
    invert_powers,
)

__all__ = [
    "DualState",
    "P1Report",
    "inner_bits",
    "ell_ha_as_printed",
    "dual_subgradients",
    "solve_p1_given_alpha",
    "solve_p1",
    "solve_p1_pair",
    "solve_p1_helper_idle",
    "f2_value",
]

LN2 = math.log(2.0)
DEFAULT_K = 201
_BISECT_ITERS = 200
_ELL_TOL = 1e-10
_ELL_ITERS = 4000


# ---------------------------------------------------------------------------
# report types


@dataclass(frozen=True)
class DualState:
    """Multipliers (J/cycle) and the two stationarity constants they imply.

    ``A`` governs the total user offload ``ell_uh + ell_ua`` and ``C_const``
    the AP-bound share. ``C_const`` is NaN when ``h_uh == h_ua`` and both are
    NaN when ``w_u == 0``.
    """

    lambda1: float
    lambda2: float
    lambda3: float
    A: float
    C_const: float

    @classmethod
    def from_lambdas(cls, params: SystemParams, l1: float, l2: float, l3: float) -> "DualState":
        n = params.normalized()
        q = n.wh * n.eh + l2 * n.cu
        A = C = math.nan
        if n.wu > 0:
            A = (n.wu * n.eu + l1 * n.cu - q) * n.h_uh / (n.wu * LN2)
            if n.h_uh != n.h_ua:
                C = (q - l3 * n.cu) * n.h_uh * n.h_ua / (n.wu * LN2 * (n.h_uh - n.h_ua))
        return cls(float(l1), float(l2), float(l3), float(A), float(C))

    @property
    def lambdas(self) -> tuple[float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3)


@dataclass(frozen=True)
class P1Report:
    """Solution of the energy-minimization problem.

    Attributes
    ----------
    allocation : Allocation
    weighted_energy : float
        Objective value (J) of ``allocation``.
    alpha_star : float
        Share of the deadline given to the user's slot.
    dual : DualState
        Multipliers at ``alpha_star``.
    primal_dual_gap : float
        ``weighted_energy`` minus the dual value at ``alpha_star`` (J).
    diagnostics : ConvergenceReport
        Dual iterations at ``alpha_star``; ``final_gap`` is relative.
    energy : EnergyBreakdown
    cooperative : bool
        Whether user bits may be relayed through the helper (false under the
        channel-order fallback or for the TDMA benchmark).
    order_fallback : bool
        True when ``h_uh < h_ua`` forced ``ell_uh = 0``.
    dual_value : float
    alpha_evaluations : int
    infeasible_alphas : int
    scheme : str
    """

    allocation: Allocation
    weighted_energy: float
    alpha_star: float
    dual: DualState
    primal_dual_gap: float
    diagnostics: ConvergenceReport
    energy: EnergyBreakdown
    cooperative: bool = True
    order_fallback: bool = False
    dual_value: float = math.nan
    alpha_evaluations: int = 0
    infeasible_alphas: int = 0
    scheme: str = "proposed"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["diagnostics"].pop("history", None)
        return d


# ---------------------------------------------------------------------------
# vectorized kernels (normalized units)


def _persp(z, t):
    """``t * (2**(z/t) - 1)`` with the limits ``0`` at ``z = 0`` and ``inf``
    for positive ``z`` in a zero slot."""
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ts = np.where(t > 0, t, 1.0)
        v = ts * np.expm1(LN2 * z / ts)
    v = np.where(t > 0, v, np.where(z > 0, np.inf, 0.0))
    return np.where(np.isnan(v), np.inf, v)


def _coeffs(n: NormalizedParams):
    ku = n.wu / n.h_uh
    kd = n.wu * (1.0 / n.h_ua - 1.0 / n.h_uh)
    return ku, kd


def _f2(n: NormalizedParams, tu, th, a, b, x):
    """Weighted energy (J) for normalized bits ``a=ell_ua, b=ell_uh, x=ell_ha``."""
    ku, kd = _coeffs(n)
    with np.errstate(invalid="ignore"):
        user = ku * _persp(a + b, tu) + kd * _persp(a, tu) + n.wu * n.eu * (n.Lu - a - b)
        helper = (n.wh / n.h_ha) * _persp(x, th) + n.wh * n.eh * (n.Lh - x + b)
        v = user + helper
    return np.where(np.isnan(v), np.inf, v)


def _cons(n: NormalizedParams, a, b, x):
    """Coupling constraints in cycles, stacked on the last axis (<= 0 is ok)."""
    c1 = (n.Lu - a - b) * n.cu - n.fu * n.T
    c2 = (n.Lh - x + b) * n.cu - n.fh * n.T
    c3 = a * n.cu + x * n.ch - n.F
    return np.stack(np.broadcast_arrays(c1, c2, c3), axis=-1)


def _bcap(n: NormalizedParams, tu, th, coop):
    """Upper bound on normalized ``ell_uh``: helper receive-and-compute time
    and the user's task size; zero without cooperation or without a slot."""
    cap = np.minimum(th / n.tau, n.Lu)
    return np.where(coop & (tu > 0), cap, 0.0)


def _inner(n: NormalizedParams, tu, th, bcap, coop, lam):
    """Exact minimizer of the Lagrangian over the box for multipliers ``lam``.

    The user part is minimized over the polygon ``a >= 0``, ``0 <= b <= bcap``,
    ``a + b <= Lu`` by enumerating the interior stationary point and the four
    clipped edge minimizers, keeping the best feasible candidate.

    Returns normalized ``(a, b, x) = (ell_ua, ell_uh, ell_ha)``.
    """
    l1, l2, l3 = lam[:, 0], lam[:, 1], lam[:, 2]
    ku, kd = _coeffs(n)
    Pu = n.wu * n.eu + l1 * n.cu
    q = n.wh * n.eh + l2 * n.cu
    mA = Pu - l3 * n.cu
    zero = np.zeros_like(tu)
    Lu = n.Lu

    # helper part
    x = stationary_exp(n.wh / n.h_ha, q - l3 * n.ch, th, 0.0, n.Lh)

    def phi(a, b):
        with np.errstate(invalid="ignore", over="ignore"):
            v = ku * _persp(a + b, tu) + kd * _persp(a, tu) - Pu * (a + b) + q * b + l3 * n.cu * a
        return np.where(np.isnan(v), np.inf, v)

    cands_a = []
    cands_b = []
    # b = 0 edge (also the whole problem without cooperation)
    cands_a.append(stationary_exp(n.wu / n.h_ua, mA, tu, 0.0, Lu))
    cands_b.append(zero)
    if np.any(coop):
        # a = 0 edge
        s1 = stationary_exp(ku, Pu - q, tu, 0.0, bcap)
        cands_a.append(zero)
        cands_b.append(np.where(coop, s1, 0.0))
        # interior stationary point
        with np.errstate(invalid="ignore", over="ignore"):
            S0 = stationary_exp(ku, Pu - q, tu, -np.inf, np.inf)
            a0 = stationary_exp(kd, q - l3 * n.cu, tu, -np.inf, np.inf)
            b0 = S0 - a0
            ok = coop & np.isfinite(S0) & np.isfinite(a0) & (a0 >= 0) & (b0 >= 0) & (b0 <= bcap) & (S0 <= Lu)
        cands_a.append(np.where(ok, a0, 0.0))
        cands_b.append(np.where(ok, b0, 0.0))
        # b = bcap edge
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            growth = np.where(tu > 0, np.exp2(bcap / np.where(tu > 0, tu, 1.0)), 1.0)
            a3 = stationary_exp(ku * growth + kd, mA, tu, 0.0, np.maximum(Lu - bcap, 0.0))
        cands_a.append(np.where(coop, a3, 0.0))
        cands_b.append(bcap)
        # a + b = Lu edge
        lo4 = np.maximum(Lu - bcap, 0.0)
        a4 = stationary_exp(kd, q - l3 * n.cu, tu, lo4, Lu)
        cands_a.append(np.where(coop, a4, 0.0))
        cands_b.append(np.where(coop, Lu - a4, 0.0))
        A = np.stack(cands_a)
        Bv = np.stack(cands_b)
        vals = phi(A, Bv)
        # the interior candidate is only valid where it was found feasible
        vals[2] = np.where(ok, vals[2], np.inf)
        vals[3] = np.where(coop & (bcap <= Lu), vals[3], np.inf)
        k = np.argmin(vals, axis=0)
        cols = np.arange(tu.size)
        a = A[k, cols]
        b = Bv[k, cols]
    else:
        a, b = cands_a[0], zero
    return a, b, x


class _Batch:
    """Per-alpha data of a batch of fixed-split subproblems."""

    def __init__(self, n: NormalizedParams, alphas, coop):
        self.n = n
        self.alpha = np.asarray(alphas, dtype=float)
        self.tu = self.alpha * n.T
        self.th = n.T - self.tu
        self.coop = np.broadcast_to(np.asarray(coop, dtype=bool), self.alpha.shape).copy()
        self.bcap = _bcap(n, self.tu, self.th, self.coop)
        self.scale = max((n.wu * n.eu + n.wh * n.eh) * (n.Lu + n.Lh), 1e-300)

    def sub(self, idx):
        return self.tu[idx], self.th[idx], self.bcap[idx], self.coop[idx]

    def inner(self, idx, lam):
        tu, th, bc, co = self.sub(idx)
        return _inner(self.n, tu, th, bc, co, lam)

    def lagr(self, idx, lam):
        """Dual value, primal bits and constraint values at ``lam``."""
        a, b, x = self.inner(idx, lam)
        tu, th = self.tu[idx], self.th[idx]
        f = _f2(self.n, tu, th, a, b, x)
        c = _cons(self.n, a, b, x)
        g = f + np.einsum("ij,ij->i", lam, c)
        return g, f, c, (a, b, x)

    def cmax(self, idx):
        """Largest value each constraint takes over the box."""
        n = self.n
        tu, th, bc, _ = self.sub(idx)
        amax = np.where(tu > 0, n.Lu, 0.0)
        xmax = np.where(th > 0, n.Lh, 0.0)
        c1 = np.full(idx.size, n.Lu * n.cu - n.fu * n.T)
        c2 = (n.Lh + bc) * n.cu - n.fh * n.T
        c3 = amax * n.cu + xmax * n.ch - n.F
        return np.stack([c1, c2, c3], axis=-1)


@dataclass
class _BatchResult:
    value: np.ndarray
    dual: np.ndarray
    bits: np.ndarray  # (m, 3) normalized (a, b, x)
    lam: np.ndarray
    iters: np.ndarray
    gap_ok: np.ndarray
    feasible: np.ndarray = field(default=None)


def _solve_batch(batch: _Batch) -> _BatchResult:
    """Solve every fixed-split subproblem of ``batch``."""
    n = batch.n
    m = batch.alpha.size
    allidx = np.arange(m)
    lam = np.zeros((m, 3))
    value = np.full(m, np.inf)
    dual = np.full(m, -np.inf)
    bits = np.zeros((m, 3))
    iters = np.zeros(m, dtype=int)
    gap_ok = np.zeros(m, dtype=bool)
    feasible = np.ones(m, dtype=bool)

    g0, f0, c0, (a0, b0, x0) = batch.lagr(allidx, lam)
    done = np.all(c0 <= 0, axis=1)
    value[done], dual[done] = f0[done], g0[done]
    bits[done] = np.stack([a0, b0, x0], axis=1)[done]
    gap_ok[done] = True

    rest = np.flatnonzero(~done)
    if rest.size:
        cm = batch.cmax(rest)
        pattern = (cm > 0).astype(int) @ np.array([1, 2, 4])
        for pat in np.unique(pattern):
            idx = rest[pattern == pat]
            dims = [i for i in range(3) if pat & (1 << i)]
            if len(dims) == 1:
                _solve_1d(batch, idx, dims[0], lam, value, dual, bits, iters, gap_ok, feasible)
            else:
                _solve_nd(batch, idx, dims, g0[idx], lam, value, dual, bits, iters, gap_ok, feasible)
    return _BatchResult(value, dual, bits, lam, iters, gap_ok, feasible)


def _solve_1d(batch, idx, j, lam, value, dual, bits, iters, gap_ok, feasible):
    """Bisection on the single active multiplier ``j``."""
    n = batch.n
    k = idx.size
    lo = np.zeros(k)
    ref = np.array([n.fu * n.T + n.Lu * n.cu, n.fh * n.T + (n.Lh + n.Lu) * n.cu, n.F])[j]
    hi = np.full(k, batch.scale / ref)
    L = np.zeros((k, 3))

    def cj(vals):
        L[:, j] = vals
        g, f, c, ab = batch.lagr(idx, L)
        return g, f, c, ab

    _, _, c, _ = cj(hi)
    bad = c[:, j] > 0
    steps = 0
    while bad.any() and steps < 400:
        hi = np.where(bad, hi * 4.0, hi)
        _, _, c, _ = cj(hi)
        bad = c[:, j] > 0
        steps += 1
    if bad.any():
        feasible[idx[bad]] = False
    it = 0
    while it < _BISECT_ITERS:
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo) <= 4e-16 * hi) or np.all((mid <= lo) | (mid >= hi)):
            break
        _, _, c, _ = cj(mid)
        pos = c[:, j] > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        it += 1
    g_lo, _, _, _ = cj(lo)
    g_hi, f_hi, c_hi, (a, b, x) = cj(hi)
    ok = ~bad
    sel = idx[ok]
    value[sel] = f_hi[ok]
    dual[sel] = np.maximum(g_lo, g_hi)[ok]
    bits[sel] = np.stack([a, b, x], axis=1)[ok]
    lam[sel, j] = hi[ok]
    iters[sel] = it + steps
    gap_ok[sel] = True


def _slater(batch, idx, dims, g0):
    """Strictly feasible point used for dual bounds and primal repair.

    Tries a small grid of box points first and falls back to a max-min-slack
    linear program. Returns ``(point (k,3), f2, slack (k,3), ok (k,))``.
    """
    n = batch.n
    tu, th, bc, _ = batch.sub(idx)
    k = idx.size
    fr = np.array([0.0, 0.125, 0.25, 0.5, 0.75, 1.0])
    A, Bv, X = np.meshgrid(fr, fr, fr, indexing="ij")
    A, Bv, X = A.ravel(), Bv.ravel(), X.ravel()
    a = np.where(tu[:, None] > 0, A[None, :] * n.Lu, 0.0)
    b = Bv[None, :] * bc[:, None]
    x = np.where(th[:, None] > 0, X[None, :] * n.Lh, 0.0)
    c = _cons(n, a, b, x)
    f = _f2(n, tu[:, None], th[:, None], a, b, x)
    inbox = a + b <= n.Lu * (1 + 1e-12)
    cd = c[..., dims]
    strict = inbox & np.all(cd < 0, axis=-1) & np.isfinite(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = (f - g0[:, None])[..., None] / (-cd)
    score = np.where(strict, np.max(U, axis=-1), np.inf)
    j = np.argmin(score, axis=1)
    rows = np.arange(k)
    pt = np.stack([a[rows, j], b[rows, j], x[rows, j]], axis=1)
    fv = f[rows, j]
    cv = c[rows, j]
    ok = strict[rows, j]
    for r in np.flatnonzero(~ok):
        res = _slater_lp(n, tu[r], th[r], bc[r], dims)
        if res is not None:
            pt[r] = res
            fv[r] = _f2(n, tu[r], th[r], *res)
            cv[r] = _cons(n, *res)
            ok[r] = np.all(cv[r][dims] < 0) and np.isfinite(fv[r])
    return pt, fv, cv, ok


def _slater_lp(n, tu, th, bc, dims):
    """Maximize the smallest normalized slack of the active constraints."""
    refs = np.array([n.fu * n.T + n.Lu * n.cu, n.fh * n.T + (n.Lh + n.Lu) * n.cu, n.F + n.Lu * n.cu + n.Lh * n.ch])
    # variables (a, b, x, z); constraint rows: c_i(l) + z ref_i <= 0
    rows = {
        0: ([-n.cu, -n.cu, 0.0], n.fu * n.T - n.Lu * n.cu),
        1: ([0.0, n.cu, -n.cu], n.fh * n.T - n.Lh * n.cu),
        2: ([n.cu, 0.0, n.ch], n.F),
    }
    A_ub, b_ub = [], []
    for i in dims:
        coef, rhs = rows[i]
        A_ub.append(coef + [refs[i]])
        b_ub.append(rhs)
    A_ub.append([1.0, 1.0, 0.0, 0.0])
    b_ub.append(n.Lu)
    bounds = [(0, n.Lu if tu > 0 else 0), (0, bc), (0, n.Lh if th > 0 else 0), (None, 1.0)]
    res = linprog([0, 0, 0, -1.0], A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or res.x[3] <= 1e-12:
        return None
    return np.asarray(res.x[:3])


def _solve_nd(batch, idx, dims, g0, lam, value, dual, bits, iters, gap_ok, feasible):
    """Ellipsoid dual ascent over two or three active multipliers."""
    n = batch.n
    pt, fbar, cbar, ok = _slater(batch, idx, dims, g0)
    feasible[idx[~ok]] = False
    idx, pt, fbar, cbar, g0 = idx[ok], pt[ok], fbar[ok], cbar[ok], g0[ok]
    if idx.size == 0:
        return
    d = len(dims)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = (fbar - g0)[:, None] / (-cbar[:, dims])
    U = np.where(np.isfinite(U) & (U > 0), U, 0.0)
    U = np.maximum(U, 1e-30 * batch.scale / np.abs(cbar[:, dims]).max(axis=1, keepdims=True))
    # per-row scale: the dual range, so that values and subgradients are O(1)
    S = np.maximum(batch.scale, fbar - g0)

    def g(mu, pos):
        # pos indexes the rows of this ellipsoid batch, not the alpha batch
        Lm = np.zeros((pos.size, 3))
        Lm[:, dims] = mu * U[pos]
        gv, _, c, _ = batch.lagr(idx[pos], Lm)
        return gv / S[pos], c[:, dims] * U[pos] / S[pos, None]

    centers = np.full((idx.size, d), 1.0 / 3.0)
    bx, bv, gap, it = ellipsoid_max_batch(g, centers, 0.85, _ELL_TOL, _ELL_ITERS)
    Lm = np.zeros((idx.size, 3))
    Lm[:, dims] = bx * U
    gv, f, c, (a, b, x) = batch.lagr(idx, Lm)
    l_bits = np.stack([a, b, x], axis=1)
    # move toward the Slater point just enough to restore feasibility
    viol = np.clip(c[:, dims], 0.0, None)
    denom = c[:, dims] - cbar[:, dims]
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(viol > 0, viol / denom, 0.0)
    theta = np.clip(theta.max(axis=1), 0.0, 1.0)
    rep = l_bits + theta[:, None] * (pt - l_bits)
    frep = _f2(n, batch.tu[idx], batch.th[idx], rep[:, 0], rep[:, 1], rep[:, 2])
    value[idx] = frep
    dual[idx] = np.maximum(gv, g0)
    bits[idx] = rep
    lam[idx] = Lm
    iters[idx] = it
    gap_ok[idx] = gap <= _ELL_TOL


# ---------------------------------------------------------------------------
# public fixed-split operations


def _order_check(params: SystemParams) -> None:
    if params.channels.h_uh < params.channels.h_ua:
        raise NomaOrderViolated(
            f"h_uh={params.channels.h_uh} < h_ua={params.channels.h_ua}; cooperation undefined"
        )


def inner_bits(params: SystemParams, alpha: float, dual: DualState) -> tuple[float, float, float]:
    """Closed-form minimizer of the Lagrangian at fixed ``alpha`` and multipliers.

    Returns true bits ``(ell_uh, ell_ua, ell_ha)``.

    Raises
    ------
    NomaOrderViolated
        If ``h_uh < h_ua``.
    """
    _order_check(params)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    n = params.normalized()
    b = _Batch(n, np.array([alpha]), True)
    lam = np.array([dual.lambdas], dtype=float)
    a, bb, x = b.inner(np.array([0]), lam)
    return float(bb[0] * n.B), float(a[0] * n.B), float(x[0] * n.B)


def ell_ha_as_printed(params: SystemParams, alpha: float, dual: DualState) -> float:
    """Helper offload with ``w_u`` in the denominator of the log argument.

    Kept for comparison only: the stationarity condition of the helper's own
    offload involves ``w_h``; the two agree only when ``w_u == w_h``.
    """
    n = params.normalized()
    th = (1.0 - alpha) * n.T
    arg = n.h_ha * (n.wh * n.eh + dual.lambda2 * n.cu - dual.lambda3 * n.ch) / (n.wu * LN2)
    z = th * max(math.log2(arg), 0.0) if arg > 0 else 0.0
    return min(n.Lh, z) * n.B


def dual_subgradients(params: SystemParams, bits) -> tuple[float, float, float]:
    """Constraint values (cycles) at ``bits = (ell_uh, ell_ua, ell_ha)``.

    These are the subgradients of the dual function with respect to
    ``(lambda1, lambda2, lambda3)``.
    """
    ell_uh, ell_ua, ell_ha = bits
    k, c = params.task, params.caps
    d1 = (k.L_u - ell_uh - ell_ua) * k.C_u - c.f_u * params.T
    d2 = (k.L_h - ell_ha + ell_uh) * k.C_u - c.f_h * params.T
    d3 = ell_ua * k.C_u + ell_ha * k.C_h - c.F
    return float(d1), float(d2), float(d3)


def f2_value(params: SystemParams, alpha, ell_uh, ell_ua, ell_ha):
    """Weighted energy (J) of bits at time split ``alpha``; vectorized.

    Uses the SIC power formulas directly and does not check feasibility.
    """
    n = params.normalized()
    alpha = np.asarray(alpha, dtype=float)
    tu = alpha * n.T
    th = n.T - tu
    B = n.B
    return _f2(n, tu, th, np.asarray(ell_ua) / B, np.asarray(ell_uh) / B, np.asarray(ell_ha) / B)


def solve_p1_given_alpha(params: SystemParams, alpha: float, *, cooperative: bool = True):
    """Optimal bits for a fixed time split.

    Returns
    -------
    bits : tuple
        True bits ``(ell_uh, ell_ua, ell_ha)``.
    dual : DualState
    value : float
        Weighted energy (J) of the returned bits.

    Raises
    ------
    Infeasible
        If no bit vector meets the constraints at this split.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    n = params.normalized()
    coop = cooperative and params.channels.noma_order_ok
    if n.Lu == 0 and n.Lh == 0:
        return (0.0, 0.0, 0.0), DualState.from_lambdas(params, 0, 0, 0), 0.0
    batch = _Batch(n, np.array([float(alpha)]), coop)
    r = _solve_batch(batch)
    if not r.feasible[0] or not np.isfinite(r.value[0]):
        raise Infeasible(f"no feasible allocation at alpha={alpha}")
    a, b, x = r.bits[0]
    dual = DualState.from_lambdas(params, *r.lam[0])
    return (float(b * n.B), float(a * n.B), float(x * n.B)), dual, float(r.value[0])


# ---------------------------------------------------------------------------
# full solver


def _zero_report(params: SystemParams, scheme: str, coop: bool) -> P1Report:
    alloc = Allocation(t_u=params.T, t_h=0.0)
    eb = energy_breakdown(params, alloc)
    return P1Report(
        allocation=alloc,
        weighted_energy=eb.weighted_total,
        alpha_star=1.0,
        dual=DualState.from_lambdas(params, 0, 0, 0),
        primal_dual_gap=0.0,
        diagnostics=ConvergenceReport(0, 0.0, True),
        energy=eb,
        cooperative=coop,
        order_fallback=not params.channels.noma_order_ok,
        dual_value=eb.weighted_total,
        scheme=scheme,
    )


def _assemble(params, n, alpha, res_row, coop, scheme, evals, n_inf) -> P1Report:
    value, dual_v, bits, lam, it, ok = res_row
    a, b, x = bits
    tu = alpha * n.T
    th = n.T - tu
    B = n.B
    ell_uh, ell_ua, ell_ha = b * B, a * B, x * B
    if tu <= 0:
        ell_uh = ell_ua = 0.0
    if th <= 0:
        ell_ha = 0.0
    p = invert_powers(params.channels, ell_uh, ell_ua, ell_ha, tu, th, B)
    alloc = Allocation(p[0], p[1], p[2], ell_uh, ell_ua, ell_ha, tu, th)
    eb = energy_breakdown(params, alloc)
    gap = eb.weighted_total - dual_v
    rel = abs(gap) / max(abs(eb.weighted_total), 1e-300)
    return P1Report(
        allocation=alloc,
        weighted_energy=eb.weighted_total,
        alpha_star=float(alpha),
        dual=DualState.from_lambdas(params, *lam),
        primal_dual_gap=float(gap),
        diagnostics=ConvergenceReport(int(it), float(rel), bool(ok)),
        energy=eb,
        cooperative=coop,
        order_fallback=not params.channels.noma_order_ok,
        dual_value=float(dual_v),
        alpha_evaluations=evals,
        infeasible_alphas=n_inf,
        scheme=scheme,
    )


def _alpha_search(params: SystemParams, K: int, modes: list[bool], refine: bool = True):
    """Grid search over ``alpha`` for each cooperation mode, batched together.

    Returns per mode ``(alpha, row, evaluations, infeasible_count)``.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    n = params.normalized()
    grids = [np.linspace(0.0, 1.0, K) for _ in modes]
    found = [None] * len(modes)
    evals = [0] * len(modes)
    n_inf = [0] * len(modes)
    passes = 2 if refine else 1
    for p in range(passes):
        batch = _Batch(n, np.concatenate(grids), np.concatenate([np.full(K, c) for c in modes]))
        r = _solve_batch(batch)
        for i in range(len(modes)):
            sl = slice(i * K, (i + 1) * K)
            vals = np.where(r.feasible[sl], r.value[sl], np.inf)
            evals[i] += K
            n_inf[i] += int(np.sum(~np.isfinite(vals)))
            j = int(np.argmin(vals))
            if np.isfinite(vals[j]):
                row = (vals[j], r.dual[sl][j], r.bits[sl][j], r.lam[sl][j], r.iters[sl][j], r.gap_ok[sl][j])
                cur = found[i]
                al = grids[i][j]
                if cur is None or vals[j] < cur[1][0] or (vals[j] == cur[1][0] and al < cur[0]):
                    found[i] = (al, row)
            if p + 1 < passes and found[i] is not None:
                g = grids[i]
                jj = int(np.searchsorted(g, found[i][0]))
                lo = g[max(jj - 1, 0)]
                hi = g[min(jj + 1, K - 1)]
                grids[i] = np.linspace(lo, hi, K)
    return [(f, e, ni) for f, e, ni in zip(found, evals, n_inf)]


def solve_p1_pair(params: SystemParams, K: int = DEFAULT_K) -> tuple[P1Report, P1Report]:
    """Solve the cooperative problem and its no-cooperation restriction.

    Both share one vectorized batch. The cooperative report never exceeds the
    restricted one: the restricted optimum is itself a cooperative allocation
    (with ``ell_uh = 0``) and is returned whenever it is numerically better.

    Returns
    -------
    (proposed, tdma) : tuple of P1Report

    Raises
    ------
    Infeasible
        If no time split admits a feasible allocation.
    """
    n = params.normalized()
    order_ok = params.channels.noma_order_ok
    if n.Lu == 0 and n.Lh == 0:
        return _zero_report(params, "proposed", order_ok), _zero_report(params, "tdma", False)
    modes = [True, False] if order_ok else [False]
    out = _alpha_search(params, K, modes)
    if any(f is None for f, _, _ in out):
        raise Infeasible("no time split admits a feasible allocation")
    reps = []
    for (f, e, ni), coop in zip(out, modes):
        reps.append(_assemble(params, n, f[0], f[1], coop, "proposed", e, ni))
    tdma = _relabel(reps[-1], "tdma")
    proposed = reps[0]
    if len(reps) == 2 and reps[1].weighted_energy < proposed.weighted_energy:
        proposed = _relabel(reps[1], "proposed")
    return proposed, tdma


def _relabel(r: P1Report, scheme: str) -> P1Report:
    from dataclasses import replace

    return replace(r, scheme=scheme)


def solve_p1(params: SystemParams, K: int = DEFAULT_K) -> P1Report:
    """Minimum weighted energy with helper cooperation.

    Parameters
    ----------
    params : SystemParams
    K : int, optional
        Points of the ``alpha`` grid; a second grid of ``K`` points refines
        the best bracket.

    Returns
    -------
    P1Report
        ``t_u + t_h = T`` always holds. When ``h_uh < h_ua`` the solver
        falls back to ``ell_uh = 0`` and flags ``order_fallback``.

    Raises
    ------
    Infeasible
    """
    return solve_p1_pair(params, K)[0]


def solve_p1_restricted(params: SystemParams, K: int = DEFAULT_K, scheme: str = "tdma") -> P1Report:
    """The problem with ``ell_uh = 0`` forced (no relaying through the helper)."""
    n = params.normalized()
    if n.Lu == 0 and n.Lh == 0:
        return _zero_report(params, scheme, False)
    (f, e, ni), = _alpha_search(params, K, [False])
    if f is None:
        raise Infeasible("no time split admits a feasible allocation")
    return _assemble(params, n, f[0], f[1], False, scheme, e, ni)


# ---------------------------------------------------------------------------
# idle helper (L_h = 0)


def _idle_report(params, n, tu, a, iters, converged, lam1, branch_gap=0.0) -> P1Report:
    B = n.B
    b = (n.T - tu) / n.tau if params.channels.noma_order_ok else 0.0
    b = min(max(b, 0.0), n.Lu)
    ell_uh, ell_ua = b * B, a * B
    th = n.T - tu
    p = invert_powers(params.channels, ell_uh, ell_ua, 0.0, tu, th, B)
    alloc = Allocation(p[0], p[1], 0.0, ell_uh, ell_ua, 0.0, tu, th)
    eb = energy_breakdown(params, alloc)
    return P1Report(
        allocation=alloc,
        weighted_energy=eb.weighted_total,
        alpha_star=tu / n.T,
        dual=DualState.from_lambdas(params, lam1, 0.0, 0.0),
        primal_dual_gap=branch_gap,
        diagnostics=ConvergenceReport(iters, 0.0, converged),
        energy=eb,
        cooperative=params.channels.noma_order_ok,
        order_fallback=not params.channels.noma_order_ok,
        dual_value=eb.weighted_total - branch_gap,
        scheme="proposed",
    )


def solve_p1_helper_idle(params: SystemParams, *, tol: float = 1e-13) -> P1Report:
    """Energy minimization when the helper has no task of its own.

    Helper time is then spent only on the user's bits, and the helper
    receives exactly what it can process before the deadline:
    ``ell_uh = (T - t_u) f_h / C_u``. If local computing at the user costs no
    more per bit than at the helper (weighted), the user keeps the whole
    deadline for itself. Otherwise ``(ell_ua, t_u)`` are found by block
    coordinate descent for a fixed multiplier of the user latency
    constraint, polished by a scalar search over ``t_u`` with ``ell_ua``
    minimized in closed form, and that multiplier by bisection.

    Raises
    ------
    ValueError
        If ``L_h != 0``.
    Infeasible
    """
    if params.task.L_h != 0:
        raise ValueError("solve_p1_helper_idle requires L_h = 0")
    n = params.normalized()
    if n.Lu == 0:
        return _zero_report(params, "proposed", params.channels.noma_order_ok)
    amax_F = min(n.F / n.cu, n.Lu)
    lat = n.Lu - n.fu * n.T / n.cu  # ell_uh + ell_ua must reach this

    if n.wu * n.eu <= n.wh * n.eh or not params.channels.noma_order_ok:
        if lat > amax_F * (1 + 1e-12):
            raise Infeasible("user latency cannot be met with the AP capacity")
        a = float(stationary_exp(n.wu / n.h_ua, n.wu * n.eu, n.T, 0.0, amax_F)) if n.wu > 0 else 0.0
        a = min(max(a, lat, 0.0), amax_F)
        return _idle_report(params, n, n.T, a, 0, True, 0.0)

    ku, kd = _coeffs(n)
    tau = n.tau
    scale = n.wu * n.eu * n.Lu + n.wh * n.eh * n.Lu

    def f4(a, t):
        b = (n.T - t) / tau
        return float(
            ku * _persp(a + b, t) + kd * _persp(a, t) + n.wu * n.eu * (n.Lu - a - b) + n.wh * n.eh * b
        )

    def t_lo(a):
        return max(n.T - (n.Lu - a) * tau, 1e-9 * n.T)

    def inner(l1):
        Pu = n.wu * n.eu + l1 * n.cu

        def upd_a(t):
            b = (n.T - t) / tau
            with np.errstate(over="ignore"):
                k = ku * 2.0 ** (b / t) + kd
            return float(stationary_exp(k, Pu, t, 0.0, max(min(amax_F, n.Lu - b), 0.0)))

        def dLdt(t, a):
            z = (n.T / tau + a) / t - 1.0 / tau
            with np.errstate(over="ignore", invalid="ignore"):
                d = ku * (2.0**z * (1.0 - LN2 * (n.T / tau + a) / t) - 1.0)
                d += kd * ((1.0 - LN2 * a / t) * 2.0 ** (a / t) - 1.0)
            d += (n.wu * n.eu - n.wh * n.eh) / tau + l1 * n.fh
            return -np.inf if np.isnan(d) else float(d)

        def upd_t(a):
            lo = t_lo(a)
            if lo >= n.T:
                return n.T
            return bisect(lambda t: dLdt(t, a), lo, n.T, 1e-14 * n.T, monotone=True)

        def obj(a, t):
            b = (n.T - t) / tau
            return f4(a, t) + l1 * ((n.Lu - a - b) * n.cu - n.fu * n.T)

        t0 = n.T
        a0 = upd_a(t0)
        a, t, rep = bcd2(upd_a, upd_t, obj, a0, t0, tol * scale, max_iters=20000)
        # BCD can stall where a + b = L_u couples the blocks; the profile
        # t -> min_a obj is convex, so a bounded scalar search finishes the job
        t_min = max(n.T - n.Lu * tau, 0.0)
        if t_min < n.T:
            res = minimize_scalar(
                lambda s: obj(upd_a(s), s), bounds=(t_min, n.T), method="bounded",
                options={"xatol": 1e-13 * n.T, "maxiter": 500},
            )
            for ts in (float(res.x), t_min, n.T):
                if ts > 0 and obj(upd_a(ts), ts) < obj(a, t):
                    a, t = upd_a(ts), ts
        b = (n.T - t) / tau
        c1 = (n.Lu - a - b) * n.cu - n.fu * n.T
        return a, t, c1, rep

    a, t, c1, rep = inner(0.0)
    total_iters = rep.iterations
    lam1 = 0.0
    if c1 > 0:
        hi = n.wu * n.eu / n.cu
        for _ in range(200):
            a, t, c1, rep = inner(hi)
            if c1 <= 0:
                break
            hi *= 4.0
        else:
            raise Infeasible("user latency cannot be met")
        lam1 = bisect(lambda l: inner(l)[2], 0.0, hi, 1e-14 * hi, monotone=True)
        a, t, c1, rep = inner(lam1)
        if c1 > 0:
            a, t, c1, rep = inner(hi)
            lam1 = hi
        total_iters += rep.iterations
    return _idle_report(params, n, t, a, total_iters, rep.converged, lam1)
