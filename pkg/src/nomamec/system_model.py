"""Scenario data types and the physical model of the user/helper/AP system.

All public bit quantities are true bits and all times are seconds. The
solvers work on bandwidth-normalized bits (bits divided by ``B``); the
:class:`NormalizedParams` view carries the matching per-normalized-bit
coefficients so that conversions happen in one place.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any, Mapping

import numpy as np

from .errors import BitOverflow, NomaOrderViolated, ZeroSlot

__all__ = [
    "FEAS_RTOL",
    "ChannelGains",
    "TaskLoad",
    "DeviceCaps",
    "SystemParams",
    "NormalizedParams",
    "Allocation",
    "EnergyBreakdown",
    "Violation",
    "f1",
    "noma_rates",
    "helper_ap_rate",
    "invert_powers",
    "energy_breakdown",
    "helper_latency",
    "check_feasible_p1",
    "check_feasible_p2",
    "params_from_dict",
    "params_to_dict",
    "with_overrides",
]

#: Relative slack used by every feasibility check.
FEAS_RTOL = 1e-9


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _finite_pos(x: float) -> bool:
    return math.isfinite(x) and x > 0


@dataclass(frozen=True)
class ChannelGains:
    """Channel-gain-to-noise ratios (1/W) of the three links."""

    h_uh: float
    h_ua: float
    h_ha: float

    def __post_init__(self) -> None:
        for name in ("h_uh", "h_ua", "h_ha"):
            _require(_finite_pos(getattr(self, name)), f"{name} must be positive and finite")

    @property
    def noma_order_ok(self) -> bool:
        """True when the helper hears the user at least as well as the AP does."""
        return self.h_uh >= self.h_ua


@dataclass(frozen=True)
class TaskLoad:
    """Task sizes (bits) and computation intensities (cycles/bit)."""

    L_u: float
    L_h: float
    C_u: float = 1.0
    C_h: float = 1.0

    def __post_init__(self) -> None:
        _require(self.L_u >= 0 and math.isfinite(self.L_u), "L_u must be >= 0")
        _require(self.L_h >= 0 and math.isfinite(self.L_h), "L_h must be >= 0")
        _require(_finite_pos(self.C_u), "C_u must be > 0")
        _require(_finite_pos(self.C_h), "C_h must be > 0")


@dataclass(frozen=True)
class DeviceCaps:
    """CPU, energy and power capabilities of the devices and the AP."""

    f_u: float
    f_h: float
    kappa: float
    P_bar_u: float
    P_bar_h: float
    E_prime_h: float
    F: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            _require(v > 0 and not math.isnan(v), f"{f.name} must be > 0")


@dataclass(frozen=True)
class SystemParams:
    """Every constant describing one scenario."""

    channels: ChannelGains
    task: TaskLoad
    caps: DeviceCaps
    T: float
    w_u: float = 1.0
    w_h: float = 1.0
    B: float = 1e6

    def __post_init__(self) -> None:
        _require(_finite_pos(self.T), "T must be > 0")
        _require(self.w_u >= 0 and self.w_h >= 0, "weights must be >= 0")
        _require(self.w_u + self.w_h > 0, "w_u + w_h must be > 0")
        _require(_finite_pos(self.B), "B must be > 0")

    def normalized(self) -> "NormalizedParams":
        return NormalizedParams.from_params(self)


@dataclass(frozen=True)
class NormalizedParams:
    """Bandwidth-normalized view of :class:`SystemParams`.

    Bits are divided by ``B``. ``eu``/``eh`` are local-computing energies per
    normalized bit, ``cu``/``ch`` are cycles per normalized bit.
    """

    h_uh: float
    h_ua: float
    h_ha: float
    Lu: float
    Lh: float
    cu: float
    ch: float
    fu: float
    fh: float
    eu: float
    eh: float
    F: float
    T: float
    wu: float
    wh: float
    Pu: float
    Ph: float
    Eh: float
    B: float

    @classmethod
    def from_params(cls, p: SystemParams) -> "NormalizedParams":
        B = p.B
        k = p.caps.kappa
        return cls(
            h_uh=p.channels.h_uh,
            h_ua=p.channels.h_ua,
            h_ha=p.channels.h_ha,
            Lu=p.task.L_u / B,
            Lh=p.task.L_h / B,
            cu=p.task.C_u * B,
            ch=p.task.C_h * B,
            fu=p.caps.f_u,
            fh=p.caps.f_h,
            eu=k * p.caps.f_u**2 * B,
            eh=k * p.caps.f_h**2 * B,
            F=p.caps.F,
            T=p.T,
            wu=p.w_u,
            wh=p.w_h,
            Pu=p.caps.P_bar_u,
            Ph=p.caps.P_bar_h,
            Eh=p.caps.E_prime_h,
            B=B,
        )

    @property
    def tau(self) -> float:
        """Helper seconds needed per normalized user bit."""
        return self.cu / self.fh


@dataclass(frozen=True)
class Allocation:
    """A full decision vector: powers (W), offloaded bits, slot lengths (s)."""

    p_uh: float = 0.0
    p_ua: float = 0.0
    p_ha: float = 0.0
    ell_uh: float = 0.0
    ell_ua: float = 0.0
    ell_ha: float = 0.0
    t_u: float = 0.0
    t_h: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Offloading and local-computing energies (J) of both devices."""

    e_off_u: float
    e_loc_u: float
    e_off_h: float
    e_loc_h: float
    weighted_total: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


class Violation(str, Enum):
    """Names of the constraints reported by the feasibility checks."""

    UserLatency = "UserLatency"
    HelperLatency = "HelperLatency"
    SlotOverrun = "SlotOverrun"
    ApCapacity = "ApCapacity"
    HelperBitsExceedTask = "HelperBitsExceedTask"
    UserBitsExceedTask = "UserBitsExceedTask"
    Negative = "Negative"
    UserPowerCap = "UserPowerCap"
    HelperPowerCap = "HelperPowerCap"
    HelperEnergyBudget = "HelperEnergyBudget"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


# --------------------------------------------------------------------------
# rates and their inverses


def f1(x):
    """Return ``2**x - 1`` computed without cancellation for small ``x``."""
    return np.expm1(np.asarray(x, dtype=float) * math.log(2.0))


def noma_rates(ch: ChannelGains, p_uh: float, p_ua: float) -> tuple[float, float]:
    """Spectral efficiencies of the user's superposed streams.

    The helper decodes its own stream ``p_uh`` treating nothing as
    interference; the AP decodes ``p_ua`` treating ``p_uh`` as noise.

    Parameters
    ----------
    ch : ChannelGains
        Link CGNRs.
    p_uh, p_ua : float
        Powers (W) of the helper-bound and AP-bound streams.

    Returns
    -------
    (R_uh, R_ua) : tuple of float
        Rates in bits/s/Hz.
    """
    if p_uh < 0 or p_ua < 0:
        raise ValueError("powers must be nonnegative")
    r_uh = math.log2(1.0 + ch.h_uh * p_uh)
    r_ua = math.log2(1.0 + ch.h_ua * p_ua / (1.0 + ch.h_ua * p_uh))
    return r_uh, r_ua


def helper_ap_rate(h_ha: float, p_ha: float) -> float:
    """Spectral efficiency of the helper-to-AP link (bits/s/Hz)."""
    if p_ha < 0:
        raise ValueError("power must be nonnegative")
    return math.log2(1.0 + h_ha * p_ha)


def _slot_rate(bits: float, t: float, B: float, what: str) -> float:
    if bits < 0:
        raise ValueError(f"{what} must be nonnegative")
    if bits == 0:
        return 0.0
    if t <= 0:
        raise ZeroSlot(f"{what}={bits} bits assigned to a zero-length slot")
    return bits / (B * t)


def invert_powers(
    ch: ChannelGains,
    ell_uh: float,
    ell_ua: float,
    ell_ha: float,
    t_u: float,
    t_h: float,
    B: float,
) -> tuple[float, float, float]:
    """Transmit powers that deliver the given bits in the given slots.

    Returns ``(p_uh, p_ua, p_ha)`` in watts. The AP-bound user power carries
    the interference of the helper-bound stream, hence its three-term form.

    Raises
    ------
    NomaOrderViolated
        If ``h_uh < h_ua`` while bits are sent to the helper.
    ZeroSlot
        If bits are assigned to a zero-length slot.
    """
    r_uh = _slot_rate(ell_uh, t_u, B, "ell_uh")
    r_ua = _slot_rate(ell_ua, t_u, B, "ell_ua")
    r_ha = _slot_rate(ell_ha, t_h, B, "ell_ha")
    if ell_uh > 0 and not ch.noma_order_ok:
        raise NomaOrderViolated(f"h_uh={ch.h_uh} < h_ua={ch.h_ua}")
    p_uh = float(f1(r_uh)) / ch.h_uh
    # p_ua = f1(r_uh + r_ua)/h_uh - f1(r_uh)/h_uh + (1/h_ua - 1/h_uh) f1(r_ua)
    #      = 2^r_uh f1(r_ua)/h_uh + (1/h_ua - 1/h_uh) f1(r_ua)
    p_ua = float(f1(r_ua)) * (2.0**r_uh / ch.h_uh + (1.0 / ch.h_ua - 1.0 / ch.h_uh))
    p_ha = float(f1(r_ha)) / ch.h_ha
    return p_uh, max(p_ua, 0.0), p_ha


# --------------------------------------------------------------------------
# energies, latencies, feasibility


def energy_breakdown(params: SystemParams, alloc: Allocation) -> EnergyBreakdown:
    """Energies of one allocation.

    Raises
    ------
    BitOverflow
        If the offloaded bits exceed the task they come from.
    """
    a = alloc
    L_u, L_h = params.task.L_u, params.task.L_h
    tol_u = FEAS_RTOL * max(L_u, 1.0)
    tol_h = FEAS_RTOL * max(L_h, 1.0)
    if a.ell_uh + a.ell_ua > L_u + tol_u:
        raise BitOverflow("ell_uh + ell_ua exceeds L_u")
    if a.ell_ha > L_h + tol_h:
        raise BitOverflow("ell_ha exceeds L_h")
    kappa = params.caps.kappa
    e_off_u = a.t_u * (a.p_uh + a.p_ua)
    e_off_h = a.t_h * a.p_ha
    e_loc_u = max(L_u - a.ell_uh - a.ell_ua, 0.0) * kappa * params.caps.f_u**2
    e_loc_h = max(L_h - a.ell_ha + a.ell_uh, 0.0) * kappa * params.caps.f_h**2
    total = params.w_u * (e_off_u + e_loc_u) + params.w_h * (e_off_h + e_loc_h)
    return EnergyBreakdown(e_off_u, e_loc_u, e_off_h, e_loc_h, total)


def helper_latency(params: SystemParams, alloc: Allocation) -> float:
    """Time the helper needs to finish its own bits and the user's bits.

    The helper processes its own residual task while receiving, then the
    user's bits; both use the user's intensity ``C_u``, as in the model.
    """
    per_bit = params.task.C_u / params.caps.f_h
    own = (params.task.L_h - alloc.ell_ha) * per_bit
    return max(alloc.t_u, own) + alloc.ell_uh * per_bit


def _leq(lhs: float, rhs: float, scale: float) -> bool:
    return lhs <= rhs + FEAS_RTOL * max(abs(rhs), abs(lhs), scale)


def _negative(alloc: Allocation) -> bool:
    return any(v < 0 for v in asdict(alloc).values())


def check_feasible_p1(params: SystemParams, alloc: Allocation) -> list[Violation]:
    """Constraints of the energy-minimization problem violated by ``alloc``."""
    a, k, c = alloc, params.task, params.caps
    T = params.T
    out: list[Violation] = []
    if _negative(a):
        out.append(Violation.Negative)
    if not _leq(a.ell_uh + a.ell_ua, k.L_u, 1.0):
        out.append(Violation.UserBitsExceedTask)
    if not _leq(a.ell_ha, k.L_h, 1.0):
        out.append(Violation.HelperBitsExceedTask)
    if not _leq((k.L_u - a.ell_uh - a.ell_ua) * k.C_u / c.f_u, T, T):
        out.append(Violation.UserLatency)
    if not _leq(helper_latency(params, a), T, T):
        out.append(Violation.HelperLatency)
    if not _leq(a.t_u + a.t_h, T, T):
        out.append(Violation.SlotOverrun)
    if not _leq(a.ell_ua * k.C_u + a.ell_ha * k.C_h, c.F, c.F):
        out.append(Violation.ApCapacity)
    return out


def check_feasible_p2(params: SystemParams, alloc: Allocation) -> list[Violation]:
    """Constraints of the data-maximization problem violated by ``alloc``."""
    a, k, c = alloc, params.task, params.caps
    T = params.T
    out: list[Violation] = []
    if _negative(a):
        out.append(Violation.Negative)
    if not _leq(a.p_uh + a.p_ua, c.P_bar_u, c.P_bar_u):
        out.append(Violation.UserPowerCap)
    if not _leq(a.p_ha, c.P_bar_h, c.P_bar_h):
        out.append(Violation.HelperPowerCap)
    if not _leq(c.kappa * c.f_h**2 * a.ell_uh, c.E_prime_h, c.E_prime_h):
        out.append(Violation.HelperEnergyBudget)
    if not _leq(a.t_u + a.ell_uh * k.C_u / c.f_h, T, T):
        out.append(Violation.HelperLatency)
    if not _leq(a.t_u + a.t_h, T, T):
        out.append(Violation.SlotOverrun)
    return out


# --------------------------------------------------------------------------
# serialization


def params_to_dict(p: SystemParams) -> dict[str, Any]:
    """JSON-ready nested dictionary of a scenario."""
    return asdict(p)


def params_from_dict(d: Mapping[str, Any]) -> SystemParams:
    """Inverse of :func:`params_to_dict`.

    Unknown keys raise ``ValueError`` so that typos in scenario files are
    not silently ignored.
    """

    def build(cls, sub: Mapping[str, Any]):
        names = {f.name for f in fields(cls)}
        extra = set(sub) - names
        if extra:
            raise ValueError(f"unknown {cls.__name__} fields: {sorted(extra)}")
        return cls(**{k: float(v) for k, v in sub.items()})

    top = dict(d)
    try:
        ch = build(ChannelGains, top.pop("channels"))
        task = build(TaskLoad, top.pop("task"))
        caps = build(DeviceCaps, top.pop("caps"))
    except KeyError as exc:
        raise ValueError(f"missing section {exc}") from None
    except TypeError as exc:
        raise ValueError(str(exc)) from None
    extra = set(top) - {"T", "w_u", "w_h", "B"}
    if extra:
        raise ValueError(f"unknown SystemParams fields: {sorted(extra)}")
    if "T" not in top:
        raise ValueError("missing field T")
    return SystemParams(ch, task, caps, **{k: float(v) for k, v in top.items()})


_SECTIONS = {
    "channels": {f.name for f in fields(ChannelGains)},
    "task": {f.name for f in fields(TaskLoad)},
    "caps": {f.name for f in fields(DeviceCaps)},
}


def with_overrides(p: SystemParams, **kw: float) -> SystemParams:
    """Copy of ``p`` with flat field overrides routed to the right section.

    >>> with_overrides(p, L_u=1e5, T=4e-3)  # doctest: +SKIP
    """
    parts: dict[str, dict[str, float]] = {s: {} for s in _SECTIONS}
    top: dict[str, float] = {}
    for key, val in kw.items():
        for sec, names in _SECTIONS.items():
            if key in names:
                parts[sec][key] = val
                break
        else:
            if key not in {"T", "w_u", "w_h", "B"}:
                raise ValueError(f"unknown parameter {key!r}")
            top[key] = val
    return replace(
        p,
        channels=replace(p.channels, **parts["channels"]),
        task=replace(p.task, **parts["task"]),
        caps=replace(p.caps, **parts["caps"]),
        **top,
    )
