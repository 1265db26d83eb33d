"""Brute-force reference solvers.

Both oracles evaluate the model formulas (rates, power inversion, energies)
directly on a mesh of the decision space and keep the best feasible point.
They share no code with the solvers beyond the scenario types, so agreement
is meaningful evidence of correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllInfeasible
from .system_model import FEAS_RTOL, Allocation, SystemParams

__all__ = ["MeshSpec", "alpha_axis", "OracleResult", "oracle_p1", "oracle_p2"]


@dataclass(frozen=True)
class MeshSpec:
    """Mesh resolution.

    Attributes
    ----------
    points_per_axis : int
        Points on each bit axis (P1) or on both axes (P2).
    alpha_points : int
        Points on the time-split axis of P1.
    alpha_spacing : {"chebyshev", "uniform"}
        P1 only; see :func:`alpha_axis`.
    beta_spacing : {"rate", "uniform"}
        P2 only. ``"rate"`` spaces the user-to-helper power share so that the
        rate ``log2(1 + beta P h_uh)`` is uniform; ``"uniform"`` spaces
        ``beta`` itself.
    """

    points_per_axis: int = 60
    alpha_points: int = 101
    beta_spacing: str = "rate"
    alpha_spacing: str = "chebyshev"

    def __post_init__(self) -> None:
        if self.points_per_axis < 2 or self.alpha_points < 2:
            raise ValueError("need at least two points per axis")
        if self.beta_spacing not in ("rate", "uniform"):
            raise ValueError("beta_spacing must be 'rate' or 'uniform'")
        if self.alpha_spacing not in ("chebyshev", "uniform"):
            raise ValueError("alpha_spacing must be 'chebyshev' or 'uniform'")


def alpha_axis(mesh: MeshSpec) -> np.ndarray:
    """Time-split mesh on ``[0, 1]``.

    ``"chebyshev"`` clusters points near both ends, where the optimum tends
    to sit (one device needs only a sliver of the deadline).
    """
    K = mesh.alpha_points
    if mesh.alpha_spacing == "uniform":
        return np.linspace(0.0, 1.0, K)
    ax = 0.5 * (1.0 - np.cos(np.pi * np.arange(K) / (K - 1)))
    ax[0], ax[-1] = 0.0, 1.0
    return ax


@dataclass(frozen=True)
class OracleResult:
    """Best mesh point.

    ``mesh_error`` is, for P2, a rigorous bound on the distance between the
    mesh optimum and the true optimum. For P1 it is only an estimate: the
    change of the optimum when the mesh is coarsened by a factor of two.
    """

    value: float
    allocation: Allocation
    mesh_error: float
    evaluations: int

    def __iter__(self):
        yield self.value
        yield self.allocation


def _le(lhs, rhs, scale):
    return lhs <= rhs + FEAS_RTOL * np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), scale)


def _expm1_2(x):
    with np.errstate(over="ignore"):
        return np.expm1(np.asarray(x, dtype=float) * math.log(2.0))


def _p1_energy(params: SystemParams, uh, ua, ha, tu, th):
    """Weighted energy and feasibility on broadcast arrays of true bits."""
    ch, k, c = params.channels, params.task, params.caps
    B, T = params.B, params.T
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r_uh = np.where(uh > 0, uh / (B * tu), 0.0)
        r_ua = np.where(ua > 0, ua / (B * tu), 0.0)
        r_ha = np.where(ha > 0, ha / (B * th), 0.0)
        p_uh = _expm1_2(r_uh) / ch.h_uh
        p_ua = _expm1_2(r_ua) * (np.exp2(r_uh) / ch.h_uh + (1.0 / ch.h_ua - 1.0 / ch.h_uh))
        p_ha = _expm1_2(r_ha) / ch.h_ha
        e_u = np.where(uh + ua > 0, tu * (p_uh + p_ua), 0.0)
        e_h = np.where(ha > 0, th * p_ha, 0.0)
    kap = c.kappa
    loc_u = (k.L_u - uh - ua) * kap * c.f_u**2
    loc_h = (k.L_h - ha + uh) * kap * c.f_h**2
    with np.errstate(invalid="ignore"):  # 0 * inf for a zero weight marks the point infeasible
        val = params.w_u * (e_u + loc_u) + params.w_h * (e_h + loc_h)
    per = k.C_u / c.f_h
    ok = (
        _le(uh + ua, k.L_u, 1.0)
        & _le(ha, k.L_h, 1.0)
        & _le((k.L_u - uh - ua) * k.C_u / c.f_u, T, T)
        & _le(np.maximum(tu, (k.L_h - ha) * per) + uh * per, T, T)
        & _le(ua * k.C_u + ha * k.C_h, c.F, c.F)
        & ((uh + ua == 0) | (tu > 0))
        & ((ha == 0) | (th > 0))
        & np.isfinite(val)
    )
    return np.where(ok, val, np.inf)


def oracle_p1(
    params: SystemParams,
    mesh: MeshSpec = MeshSpec(),
    *,
    cooperative: bool = True,
    estimate_error: bool = True,
    alpha: float | None = None,
) -> OracleResult:
    """Exhaustive search of the energy-minimization problem.

    The bit axes span ``[0, min(L_u, T f_h/C_u)]`` (helper-bound bits),
    ``[0, min(L_u, F/C_u)]`` (AP-bound user bits) and ``[0, L_h]``; the
    time-split axis spans ``[0, 1]``. The helper-bound axis collapses to
    ``{0}`` when ``cooperative`` is false or ``h_uh < h_ua``. Passing
    ``alpha`` pins the time split to that single value.

    Raises
    ------
    AllInfeasible
        If no mesh point satisfies the constraints.
    """
    k, c = params.task, params.caps
    T = params.T
    N = mesh.points_per_axis
    coop = cooperative and params.channels.noma_order_ok
    uh_ax = np.linspace(0.0, min(k.L_u, T * c.f_h / k.C_u), N) if coop else np.zeros(1)
    ua_ax = np.linspace(0.0, min(k.L_u, c.F / k.C_u), N)
    ha_ax = np.linspace(0.0, k.L_h, N)
    al_ax = alpha_axis(mesh) if alpha is None else np.array([float(alpha)])
    UH, UA, HA = np.meshgrid(uh_ax, ua_ax, ha_ax, indexing="ij")
    best = (np.inf, None, None)
    for ia, al in enumerate(al_ax):
        tu = al * T
        th = T - tu
        v = _p1_energy(params, UH, UA, HA, tu, th)
        j = int(np.argmin(v))
        if v.flat[j] < best[0]:
            best = (float(v.flat[j]), ia, np.unravel_index(j, v.shape), v)
    if not np.isfinite(best[0]):
        raise AllInfeasible("no feasible point on the P1 mesh")
    val, ia, (i0, i1, i2), v = best
    uh, ua, ha = uh_ax[i0], ua_ax[i1], ha_ax[i2]
    tu = al_ax[ia] * T
    th = T - tu
    spread = 0.0
    if estimate_error and N >= 4 and mesh.alpha_points >= 4:
        coarse = MeshSpec(N // 2, mesh.alpha_points // 2 + 1, mesh.beta_spacing, mesh.alpha_spacing)
        try:
            spread = abs(
                oracle_p1(params, coarse, cooperative=cooperative, estimate_error=False, alpha=alpha).value - val
            )
        except AllInfeasible:
            spread = math.inf
    alloc = _p1_allocation(params, uh, ua, ha, tu, th)
    evals = UH.size * al_ax.size
    return OracleResult(val, alloc, spread, evals)


def _p1_allocation(params, uh, ua, ha, tu, th) -> Allocation:
    ch, B = params.channels, params.B
    r_uh = uh / (B * tu) if uh > 0 else 0.0
    r_ua = ua / (B * tu) if ua > 0 else 0.0
    r_ha = ha / (B * th) if ha > 0 else 0.0
    p_uh = float(_expm1_2(r_uh)) / ch.h_uh
    p_ua = float(_expm1_2(r_ua)) * (2.0**r_uh / ch.h_uh + 1.0 / ch.h_ua - 1.0 / ch.h_uh)
    p_ha = float(_expm1_2(r_ha)) / ch.h_ha
    return Allocation(p_uh, p_ua, p_ha, float(uh), float(ua), float(ha), float(tu), float(th))


def oracle_p2(params: SystemParams, mesh: MeshSpec = MeshSpec(points_per_axis=400)) -> OracleResult:
    """Exhaustive search of the data-maximization problem over ``(beta, t_u)``.

    Both devices transmit at full power; ``beta`` is the user's power share
    for the helper-bound stream and ``t_h = T - t_u``. With ``h_uh < h_ua``
    the ``beta`` axis collapses to ``{0}``.

    The reported ``mesh_error`` bounds ``true optimum - mesh optimum``: the
    constraints only tighten as ``t_u`` or the helper-bound rate grows, so
    rounding the optimum down to the mesh stays feasible, and the objective
    is Lipschitz in ``(t_u, rate)`` on that cell.
    """
    ch, c = params.channels, params.caps
    T, B = params.T, params.B
    N = mesh.points_per_axis
    Pu, Ph = c.P_bar_u, c.P_bar_h
    R1 = math.log2(1.0 + ch.h_ua * Pu)
    R2 = math.log2(1.0 + ch.h_ha * Ph)
    gam = math.log2(1.0 + Pu * ch.h_uh)
    if ch.noma_order_ok:
        if mesh.beta_spacing == "rate":
            r_ax = np.linspace(0.0, gam, N)
            beta = np.expm1(r_ax * math.log(2.0)) / (Pu * ch.h_uh)
            beta[-1] = 1.0
        else:
            beta = np.linspace(0.0, 1.0, N)
    else:
        beta = np.zeros(1)
    t_ax = np.linspace(0.0, T, N)
    Bt, Tt = np.meshgrid(beta, t_ax, indexing="ij")
    r_uh = np.log2(1.0 + Bt * Pu * ch.h_uh)
    r_ua = np.log2(1.0 + (1.0 - Bt) * Pu * ch.h_ua / (1.0 + Bt * Pu * ch.h_ua))
    uh = Tt * B * r_uh
    val = B * (params.w_u * Tt * (r_uh + r_ua) + params.w_h * (T - Tt) * R2)
    ok = _le(c.kappa * c.f_h**2 * uh, c.E_prime_h, c.E_prime_h) & _le(
        Tt + uh * params.task.C_u / c.f_h, T, T
    )
    v = np.where(ok, val, -np.inf)
    j = int(np.argmax(v))
    if not np.isfinite(v.flat[j]):
        raise AllInfeasible("no feasible point on the P2 mesh")
    ib, it = np.unravel_index(j, v.shape)
    b, t = float(beta[ib]), float(t_ax[it])
    # Lipschitz constants in (t_u, rate); rate step from the beta axis
    rho = ch.h_ua / ch.h_uh if ch.noma_order_ok else 1.0
    gain_max = -math.log2(rho) if rho > 0 else 0.0
    Lt = max(params.w_u * (gain_max + R1), params.w_h * R2)
    if ch.noma_order_ok:
        r_vals = np.log2(1.0 + beta * Pu * ch.h_uh)
        dr = float(np.max(np.diff(r_vals)))
    else:
        dr = 0.0
    Lr = params.w_u * T
    err = B * (Lt * T / (N - 1) + Lr * dr)
    alloc = Allocation(
        p_uh=b * Pu,
        p_ua=(1.0 - b) * Pu,
        p_ha=Ph,
        ell_uh=float(uh[ib, it]),
        ell_ua=float(Tt[ib, it] * B * r_ua[ib, it]),
        ell_ha=(T - t) * B * R2,
        t_u=t,
        t_h=T - t,
    )
    return OracleResult(float(v.flat[j]), alloc, err, int(v.size))
