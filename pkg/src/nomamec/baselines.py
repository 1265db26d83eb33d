"""Benchmark schemes without cooperation: TDMA and plain uplink NOMA.

TDMA gives the user and the helper disjoint slots. NOMA lets both transmit
during the whole deadline while the AP separates them by successive
interference cancellation. Neither relays user bits through the helper.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .energy_min import solve_p1_restricted
from .errors import Infeasible
from .numerics import bisect, grid_min, stationary_exp
from .system_model import Allocation, SystemParams, energy_breakdown

__all__ = [
    "Scheme",
    "Problem",
    "BaselineReport",
    "tdma_energy_min",
    "tdma_data_max",
    "noma_data_max",
    "noma_energy_min",
    "noma_energy_objective",
]

LN2 = math.log(2.0)


class Scheme(str, Enum):
    TDMA = "TDMA"
    NOMA = "NOMA"


class Problem(str, Enum):
    EnergyMin = "EnergyMin"
    DataMax = "DataMax"


@dataclass(frozen=True)
class BaselineReport:
    """Result of a benchmark scheme.

    For NOMA both devices use the whole window, so the allocation reports
    ``t_u = t_h = T`` (overlapping, not consecutive slots).
    """

    scheme: Scheme
    problem: Problem
    value: float
    allocation: Allocation
    reconstructed: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        d["problem"] = self.problem.value
        return d


# ---------------------------------------------------------------------------
# TDMA


def tdma_energy_min(params: SystemParams, K: int = 201) -> BaselineReport:
    """Energy minimization with the helper-bound stream switched off.

    Raises
    ------
    Infeasible
    """
    r = solve_p1_restricted(params, K, scheme="tdma")
    return BaselineReport(
        Scheme.TDMA,
        Problem.EnergyMin,
        r.weighted_energy,
        r.allocation,
        details={"alpha_star": r.alpha_star},
    )


def _rates(params: SystemParams) -> tuple[float, float]:
    ch, c = params.channels, params.caps
    return math.log2(1.0 + ch.h_ua * c.P_bar_u), math.log2(1.0 + ch.h_ha * c.P_bar_h)


def tdma_data_max(params: SystemParams) -> BaselineReport:
    """Whole deadline to whichever device has the larger weighted rate.

    Ties go to the helper (``t_u = 0``).
    """
    R1, R2 = _rates(params)
    T, B = params.T, params.B
    c = params.caps
    if params.w_u * R1 > params.w_h * R2:
        t_u, val = T, T * B * params.w_u * R1
        alloc = Allocation(p_ua=c.P_bar_u, ell_ua=T * B * R1, t_u=T)
    else:
        t_u, val = 0.0, T * B * params.w_h * R2
        alloc = Allocation(p_ha=c.P_bar_h, ell_ha=T * B * R2, t_h=T)
    return BaselineReport(Scheme.TDMA, Problem.DataMax, float(val), alloc, details={"t_u": t_u})


# ---------------------------------------------------------------------------
# NOMA, data maximization


def _best_on_interval(obj, dobj, hi: float) -> float:
    """Maximizer of a smooth scalar function on ``[0, hi]``.

    Checks both endpoints and, if the derivative changes sign, the
    stationary point found by bisection.
    """
    cands = [0.0, hi]
    d0, d1 = dobj(0.0), dobj(hi)
    if (d0 > 0) != (d1 > 0) and d0 != 0 and d1 != 0:
        cands.append(bisect(dobj, 0.0, hi, 1e-14 * hi))
    vals = [obj(x) for x in cands]
    return cands[int(np.argmax(vals))]


def _noma_helper_first(params: SystemParams) -> tuple[float, float]:
    """Helper decoded first (user interferes); optimize the user's power."""
    ch, c = params.channels, params.caps
    wu, wh = params.w_u, params.w_h
    H = ch.h_ha * c.P_bar_h

    def obj(p):
        return wu * math.log2(1.0 + ch.h_ua * p) + wh * math.log2(1.0 + H / (1.0 + ch.h_ua * p))

    def dobj(p):
        s = 1.0 + ch.h_ua * p
        return ch.h_ua / (LN2 * s) * (wu - wh * H / (s + H))

    p = _best_on_interval(obj, dobj, c.P_bar_u)
    return p, obj(p)


def _noma_user_first(params: SystemParams) -> tuple[float, float]:
    """User decoded first (helper interferes); optimize the helper's power."""
    ch, c = params.channels, params.caps
    wu, wh = params.w_u, params.w_h
    U = ch.h_ua * c.P_bar_u

    def obj(q):
        return wh * math.log2(1.0 + ch.h_ha * q) + wu * math.log2(1.0 + U / (1.0 + ch.h_ha * q))

    def dobj(q):
        s = 1.0 + ch.h_ha * q
        return ch.h_ha / (LN2 * s) * (wh - wu * U / (s + U))

    q = _best_on_interval(obj, dobj, c.P_bar_h)
    return q, obj(q)


def noma_data_max(params: SystemParams) -> BaselineReport:
    """Both devices transmit for the whole deadline; best SIC order.

    In each order the device decoded second transmits at full power and the
    interfering device's power is optimized on its interval.
    """
    ch, c = params.channels, params.caps
    T, B = params.T, params.B
    p, v_hf = _noma_helper_first(params)
    q, v_uf = _noma_user_first(params)
    if v_hf >= v_uf:
        p_ua, p_ha, order = p, c.P_bar_h, "helper-first"
        r_ua = math.log2(1.0 + ch.h_ua * p_ua)
        r_ha = math.log2(1.0 + ch.h_ha * p_ha / (1.0 + ch.h_ua * p_ua))
    else:
        p_ua, p_ha, order = c.P_bar_u, q, "user-first"
        r_ha = math.log2(1.0 + ch.h_ha * p_ha)
        r_ua = math.log2(1.0 + ch.h_ua * p_ua / (1.0 + ch.h_ha * p_ha))
    alloc = Allocation(p_ua=p_ua, p_ha=p_ha, ell_ua=T * B * r_ua, ell_ha=T * B * r_ha, t_u=T, t_h=T)
    val = T * B * max(v_hf, v_uf)
    return BaselineReport(Scheme.NOMA, Problem.DataMax, float(val), alloc, details={"order": order})


# ---------------------------------------------------------------------------
# NOMA, energy minimization


def noma_energy_objective(params: SystemParams, ell_ua, ell_ha, *, helper_first: bool = True):
    """Weighted energy (J) of simultaneous offloading over the whole deadline.

    Vectorized over ``ell_ua`` and ``ell_ha`` (true bits); constraints are
    not checked.
    """
    ch, k, c = params.channels, params.task, params.caps
    T, B = params.T, params.B
    a = np.asarray(ell_ua, dtype=float) / (B * T)
    x = np.asarray(ell_ha, dtype=float) / (B * T)
    with np.errstate(over="ignore"):
        if helper_first:
            p_ua = np.expm1(LN2 * a) / ch.h_ua
            p_ha = np.expm1(LN2 * x) * np.exp2(a) / ch.h_ha
        else:
            p_ha = np.expm1(LN2 * x) / ch.h_ha
            p_ua = np.expm1(LN2 * a) * np.exp2(x) / ch.h_ua
    kap = c.kappa
    e_u = T * p_ua + (k.L_u - np.asarray(ell_ua)) * kap * c.f_u**2
    e_h = T * p_ha + (k.L_h - np.asarray(ell_ha)) * kap * c.f_h**2
    return params.w_u * e_u + params.w_h * e_h


def _noma_powers(params, ell_ua, ell_ha, helper_first):
    ch, T, B = params.channels, params.T, params.B
    a, x = ell_ua / (B * T), ell_ha / (B * T)
    if helper_first:
        p_ua = math.expm1(LN2 * a) / ch.h_ua
        p_ha = math.expm1(LN2 * x) * 2.0**a / ch.h_ha
    else:
        p_ha = math.expm1(LN2 * x) / ch.h_ha
        p_ua = math.expm1(LN2 * a) * 2.0**x / ch.h_ua
    return p_ua, p_ha


def noma_energy_min(params: SystemParams, *, helper_first: bool = True, K: int = 2001) -> BaselineReport:
    """Simultaneous offloading of both devices with SIC at the AP.

    For a fixed number of user bits sent to the AP, the helper's best
    offload has a closed form (clipped to its latency, task and AP-capacity
    limits). The resulting profile in the user bits is scanned on ``K``
    points and the best cell refined by a bounded scalar search.

    Raises
    ------
    Infeasible
        If the latency constraints cannot be met within the AP capacity.
    """
    ch, k, c = params.channels, params.task, params.caps
    T, B = params.T, params.B
    n = params.normalized()
    alo = max(0.0, n.Lu - n.fu * T / n.cu)
    xlo = max(0.0, n.Lh - n.fh * T / n.cu)
    amax = min(n.Lu, (n.F - xlo * n.ch) / n.cu)
    if n.Lu == 0 and n.Lh == 0:
        alloc = Allocation(t_u=T, t_h=T)
        return BaselineReport(Scheme.NOMA, Problem.EnergyMin, 0.0, alloc, True, {"order": "helper-first"})
    if amax < alo * (1 - 1e-12) or alo * n.cu + xlo * n.ch > n.F * (1 + 1e-12):
        raise Infeasible("latency cannot be met within the AP capacity")
    amax = max(amax, alo)

    def x_of(a):
        a = np.asarray(a, dtype=float)
        xhi = np.clip((n.F - a * n.cu) / n.ch, xlo, n.Lh)
        if helper_first:
            kx = n.wh * np.exp2(a / T) / n.h_ha
        else:
            kx = n.wu * np.expm1(LN2 * a / T) / n.h_ua + n.wh / n.h_ha
        return stationary_exp(kx, n.wh * n.eh, T, xlo, xhi)

    def prof(a):
        a = np.asarray(a, dtype=float)
        return noma_energy_objective(params, a * B, x_of(a) * B, helper_first=helper_first)

    if amax - alo <= 1e-15 * max(n.Lu, 1e-30):
        a_best = alo
    else:
        a_grid, _ = grid_min(prof, alo, amax, K, vectorized=True)
        h = (amax - alo) / (K - 1)
        lo, hi = max(alo, a_grid - h), min(amax, a_grid + h)
        res = minimize_scalar(lambda s: float(prof(s)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * max(n.Lu, 1e-30)})
        a_best = float(res.x) if res.fun <= float(prof(a_grid)) else a_grid
    x_best = float(x_of(a_best))
    ell_ua, ell_ha = a_best * B, x_best * B
    p_ua, p_ha = _noma_powers(params, ell_ua, ell_ha, helper_first)
    alloc = Allocation(p_ua=p_ua, p_ha=p_ha, ell_ua=ell_ua, ell_ha=ell_ha, t_u=T, t_h=T)
    val = float(energy_breakdown(params, alloc).weighted_total)
    order = "helper-first" if helper_first else "user-first"
    return BaselineReport(Scheme.NOMA, Problem.EnergyMin, val, alloc, True, {"order": order})
