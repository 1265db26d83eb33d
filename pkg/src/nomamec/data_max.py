"""Weighted offloaded-data maximization (problem P2).

Both devices transmit at full power. With ``beta`` the user's power share
for the helper-bound stream, the user's helper rate is
``r = log2(1 + beta P_u h_uh)`` and its total rate is ``R_1 + g(r)`` where
``g(r) = -log2(rho + (1 - rho) 2**-r)`` and ``rho = h_ua/h_uh``. For a given
user slot ``t_u`` the objective increases with ``r``, so ``r`` is pushed to
the tightest of three limits: the full power share (``beta = 1``), the
helper's receive-and-compute time, or the helper's energy budget. Each limit
gives a one-dimensional concave problem in ``t_u`` solved by bisection on
its derivative; the best of the three is optimal.

Internally all bit quantities are divided by ``B``; reported values are true
bits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import CaseInfeasible
from .numerics import bisect
from .system_model import Allocation, SystemParams

__all__ = [
    "CaseId",
    "CaseEvaluation",
    "P2Diagnostics",
    "P2Report",
    "beta1",
    "beta2",
    "f5",
    "f7",
    "df5",
    "df7",
    "f7_as_printed",
    "solve_case_beta_one",
    "solve_case_time_binding",
    "solve_case_energy_binding",
    "solve_p2",
    "solve_p2_high_snr",
    "p2_objective",
]


class CaseId(str, Enum):
    BetaOne = "BetaOne"
    TimeBinding = "TimeBinding"
    EnergyBinding = "EnergyBinding"


@dataclass(frozen=True)
class CaseEvaluation:
    """Optimum of one candidate case (``value`` in weighted bits)."""

    case_id: CaseId
    t_u: float
    beta: float
    value: float
    E_margin: float
    t1: float
    feasible: bool


@dataclass(frozen=True)
class P2Diagnostics:
    order_fallback: bool = False
    high_snr: bool = False


@dataclass(frozen=True)
class P2Report:
    """Solution of the data-maximization problem."""

    allocation: Allocation
    weighted_bits: float
    winning_case: CaseId
    cases: tuple[CaseEvaluation, ...]
    diagnostics: P2Diagnostics

    @property
    def beta(self) -> float:
        """User power share of the helper-bound stream."""
        a = self.allocation
        tot = a.p_uh + a.p_ua
        return a.p_uh / tot if tot > 0 else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["winning_case"] = self.winning_case.value
        for c in d["cases"]:
            c["case_id"] = c["case_id"].value
        return d


@dataclass(frozen=True)
class _C:
    """Per-scenario constants in normalized units."""

    T: float
    wu: float
    wh: float
    B: float
    a: float  # P_u h_uh
    rho: float
    R1: float
    R2: float
    gam: float  # max user-to-helper rate
    tau: float  # helper seconds per normalized bit
    Et: float  # helper energy budget in normalized bits

    @classmethod
    def of(cls, p: SystemParams) -> "_C":
        ch, c = p.channels, p.caps
        tau = p.task.C_u * p.B / c.f_h
        return cls(
            T=p.T,
            wu=p.w_u,
            wh=p.w_h,
            B=p.B,
            a=c.P_bar_u * ch.h_uh,
            rho=ch.h_ua / ch.h_uh,
            R1=math.log2(1.0 + ch.h_ua * c.P_bar_u),
            R2=math.log2(1.0 + ch.h_ha * c.P_bar_h),
            gam=math.log2(1.0 + c.P_bar_u * ch.h_uh),
            tau=tau,
            Et=c.E_prime_h / (c.kappa * c.f_h**2 * p.B),
        )

    @property
    def tauE(self) -> float:
        """Helper compute time for the whole energy budget."""
        return self.tau * self.Et


def _L(r, rho):
    """``log2(rho + (1 - rho) 2**-r)``, the negative cooperative gain."""
    return np.log2(rho + (1.0 - rho) * np.exp2(-np.asarray(r, dtype=float)))


def _gprime(r, rho):
    e = (1.0 - rho) * np.exp2(-np.asarray(r, dtype=float))
    return e / (rho + e)


def _phi(k: _C, t, r):
    """Normalized objective for user slot ``t`` and helper rate ``r``."""
    return k.wu * t * (k.R1 - _L(r, k.rho)) + k.wh * (k.T - t) * k.R2


def p2_objective(params: SystemParams, beta, t_u):
    """Weighted bits for power share ``beta`` and user slot ``t_u`` (vectorized).

    Constraints are not checked.
    """
    k = _C.of(params)
    r = np.log2(1.0 + np.asarray(beta, dtype=float) * k.a)
    return k.B * _phi(k, np.asarray(t_u, dtype=float), r)


def _r1(k: _C, t):
    return (k.T - t) / (k.tau * t)


def beta1(params: SystemParams, t_u: float) -> float:
    """Power share that makes the helper's receive-plus-compute time exactly ``T``."""
    if t_u <= 0:
        raise ValueError("t_u must be > 0")
    k = _C.of(params)
    return float(np.expm1(math.log(2.0) * _r1(k, t_u)) / k.a)


def beta2(params: SystemParams, t_u: float) -> float:
    """Power share that exhausts the helper's energy budget in slot ``t_u``."""
    if t_u <= 0:
        raise ValueError("t_u must be > 0")
    k = _C.of(params)
    return float(np.expm1(math.log(2.0) * k.Et / t_u) / k.a)


def f5(params: SystemParams, t_u):
    """Normalized objective along the time-binding curve."""
    k = _C.of(params)
    t = np.asarray(t_u, dtype=float)
    return _phi(k, t, _r1(k, t))


def df5(params: SystemParams, t_u):
    """Derivative of :func:`f5` with respect to ``t_u``.

    Written as ``w_u (R_1 - L) - w_h R_2 - w_u T g'(r)/(tau t)`` with
    ``L = log2(rho + (1-rho) 2**-r)``; algebraically equal to the textbook
    form but free of cancellation between large terms.
    """
    k = _C.of(params)
    t = np.asarray(t_u, dtype=float)
    r = _r1(k, t)
    return k.wu * (k.R1 - _L(r, k.rho)) - k.wh * k.R2 - k.wu * k.T / (k.tau * t) * _gprime(r, k.rho)


def f7(params: SystemParams, t_u):
    """Normalized objective along the energy-binding curve."""
    k = _C.of(params)
    t = np.asarray(t_u, dtype=float)
    return _phi(k, t, k.Et / t)


def df7(params: SystemParams, t_u):
    """Derivative of :func:`f7` with respect to ``t_u``."""
    k = _C.of(params)
    t = np.asarray(t_u, dtype=float)
    r = k.Et / t
    return k.wu * (k.R1 - _L(r, k.rho)) - k.wh * k.R2 - k.wu * r * _gprime(r, k.rho)


def f7_as_printed(params: SystemParams, t_u):
    """Energy-binding objective with ``h_ha/h_uh`` in the log term.

    Only for comparison; :func:`f7` (with ``h_ua/h_uh``) is the model.
    """
    k = _C.of(params)
    ch = params.channels
    t = np.asarray(t_u, dtype=float)
    r = k.Et / t
    rr = ch.h_ha / ch.h_uh
    with np.errstate(invalid="ignore", over="ignore"):
        log_term = np.log2(1.0 - rr + rr * np.exp2(r))
    return k.wu * k.Et + k.wh * k.T * k.R2 + t * (k.wu * k.R1 - k.wh * k.R2) - k.wu * t * log_term


def _maximize(df, lo: float, hi: float, T: float) -> float:
    if hi - lo <= 1e-12 * T:
        return hi
    return bisect(df, lo, hi, 1e-12 * T, monotone=True)


def solve_case_beta_one(params: SystemParams) -> CaseEvaluation:
    """All user power to the helper-bound stream.

    The objective is then affine in ``t_u`` with slope ``E`` (the margin of
    the user's helper rate over the helper's AP rate); ``t_u`` sits at zero
    or at the largest value the helper's time and energy allow.
    """
    k = _C.of(params)
    E = k.wu * k.gam - k.wh * k.R2
    with np.errstate(divide="ignore"):
        t1 = min(k.T / (1.0 + k.tau * k.gam), k.Et / k.gam)
    t = t1 if E > 0 else 0.0
    value = k.B * (k.wh * k.T * k.R2 + max(E, 0.0) * t1)
    return CaseEvaluation(CaseId.BetaOne, float(t), 1.0, float(value), float(E), float(t1), True)


def _time_interval(k: _C) -> tuple[float, float]:
    lo = max(k.T / (1.0 + k.tau * k.gam), k.T - k.tauE)
    return lo, k.T


def _energy_interval(k: _C) -> tuple[float, float]:
    return k.Et / k.gam, min(k.T, k.T - k.tauE)


def solve_case_time_binding(params: SystemParams) -> CaseEvaluation:
    """Helper receive-plus-compute time exactly fills the deadline.

    Raises
    ------
    CaseInfeasible
        If the admissible ``t_u`` interval is empty.
    """
    k = _C.of(params)
    lo, hi = _time_interval(k)
    if not lo <= hi:
        raise CaseInfeasible("time-binding interval is empty")
    t = _maximize(lambda s: float(df5(params, s)), lo, hi, k.T)
    r = _r1(k, t)
    beta = min(max(float(np.expm1(math.log(2.0) * r) / k.a), 0.0), 1.0)
    value = k.B * float(_phi(k, t, r))
    return CaseEvaluation(CaseId.TimeBinding, float(t), beta, value, k.wu * k.gam - k.wh * k.R2, lo, True)


def solve_case_energy_binding(params: SystemParams) -> CaseEvaluation:
    """Helper energy budget exactly spent on the user's bits.

    Raises
    ------
    CaseInfeasible
        If the admissible ``t_u`` interval is empty.
    """
    k = _C.of(params)
    lo, hi = _energy_interval(k)
    if not (lo <= hi and hi > 0):
        raise CaseInfeasible("energy-binding interval is empty")
    t = _maximize(lambda s: float(df7(params, s)), lo, hi, k.T)
    r = k.Et / t
    beta = min(max(float(np.expm1(math.log(2.0) * r) / k.a), 0.0), 1.0)
    value = k.B * float(_phi(k, t, r))
    return CaseEvaluation(CaseId.EnergyBinding, float(t), beta, value, k.wu * k.gam - k.wh * k.R2, lo, True)


def _allocation(params: SystemParams, t_u: float, beta: float) -> Allocation:
    ch, c = params.channels, params.caps
    B, T = params.B, params.T
    Pu = c.P_bar_u
    r_uh = math.log2(1.0 + beta * Pu * ch.h_uh)
    r_ua = math.log2(1.0 + (1.0 - beta) * Pu * ch.h_ua / (1.0 + beta * Pu * ch.h_ua))
    t_h = T - t_u
    return Allocation(
        p_uh=beta * Pu,
        p_ua=(1.0 - beta) * Pu,
        p_ha=c.P_bar_h,
        ell_uh=t_u * B * r_uh,
        ell_ua=t_u * B * r_ua,
        ell_ha=t_h * B * math.log2(1.0 + ch.h_ha * c.P_bar_h),
        t_u=t_u,
        t_h=t_h,
    )


def _infeasible_case(cid: CaseId, k: _C) -> CaseEvaluation:
    return CaseEvaluation(cid, math.nan, math.nan, -math.inf, k.wu * k.gam - k.wh * k.R2, math.nan, False)


def _linear_split(params: SystemParams) -> tuple[float, float]:
    """Best time split with ``beta = 0``: ``(t_u, value)``; ties go to the helper."""
    k = _C.of(params)
    if k.wu * k.R1 > k.wh * k.R2:
        return k.T, k.B * k.T * k.wu * k.R1
    return 0.0, k.B * k.T * k.wh * k.R2


def solve_p2(params: SystemParams) -> P2Report:
    """Maximum weighted offloaded bits.

    Evaluates the three cases and keeps the best feasible one (ties prefer
    ``BetaOne``, then ``TimeBinding``). If ``h_uh < h_ua`` the helper-bound
    stream is useless; ``beta = 0`` and the time split is chosen directly.
    """
    k = _C.of(params)
    if not params.channels.noma_order_ok:
        t_u, val = _linear_split(params)
        cases = tuple(_infeasible_case(c, k) for c in CaseId)
        win = CaseId.TimeBinding if t_u > 0 else CaseId.BetaOne
        return P2Report(_allocation(params, t_u, 0.0), val, win, cases, P2Diagnostics(order_fallback=True))
    cases = []
    for cid, fn in (
        (CaseId.BetaOne, solve_case_beta_one),
        (CaseId.TimeBinding, solve_case_time_binding),
        (CaseId.EnergyBinding, solve_case_energy_binding),
    ):
        try:
            cases.append(fn(params))
        except CaseInfeasible:
            cases.append(_infeasible_case(cid, k))
    best = cases[0]
    for c in cases[1:]:
        if c.feasible and c.value > best.value:
            best = c
    beta = best.beta if best.t_u > 0 else 0.0
    alloc = _allocation(params, best.t_u, beta)
    return P2Report(alloc, best.value, best.case_id, tuple(cases), P2Diagnostics())


def solve_p2_high_snr(params: SystemParams) -> P2Report:
    """High-SNR approximation: one device offloads for the whole deadline.

    At high SNR any positive ``beta`` yields the full cooperative gain
    ``log2(h_uh/h_ua)``, so the objective is affine in ``t_u`` with the
    user's slope ``w_u (log2(h_uh/h_ua) + R_1)``. ``weighted_bits`` is that
    approximate objective; the allocation is reported with ``beta = 0``.
    """
    k = _C.of(params)
    user = k.wu * (math.log2(params.channels.h_uh / params.channels.h_ua) + k.R1)
    helper = k.wh * k.R2
    t_u = k.T if user > helper else 0.0
    value = k.B * k.T * max(user, helper) if user > helper else k.B * k.T * helper
    cid = CaseId.TimeBinding if t_u > 0 else CaseId.BetaOne
    cases = tuple(_infeasible_case(c, k) for c in CaseId)
    return P2Report(_allocation(params, t_u, 0.0), float(value), cid, cases, P2Diagnostics(high_snr=True))
