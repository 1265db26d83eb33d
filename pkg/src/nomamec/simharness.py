"""Monte Carlo channel generation and seeded experiment sweeps.

Each figure of the registry fixes a swept parameter, the schemes to run and
the per-realization metrics. :func:`run_sweep` averages those metrics over
channel realizations and :func:`write_csv` emits them with a fixed header.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .baselines import noma_data_max, noma_energy_min, tdma_data_max
from .data_max import solve_p2
from .energy_min import solve_p1_pair
from .errors import AllInfeasible, CaseInfeasible, Infeasible
from .system_model import (
    ChannelGains,
    DeviceCaps,
    SystemParams,
    TaskLoad,
    params_from_dict,
    params_to_dict,
    with_overrides,
)

__all__ = [
    "ChannelModel",
    "dbm_to_watt",
    "gen_channels",
    "table_one_params",
    "FIGURES",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "run_sweep",
    "write_csv",
    "CSV_HEADER",
    "SCHEMES",
]

CSV_HEADER = ("axis", "scheme", "mean", "stderr", "n", "infeasible", "order_violations")
SCHEMES = ("proposed", "tdma", "noma")
_FAILURES = (Infeasible, CaseInfeasible, AllInfeasible)


def dbm_to_watt(dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class ChannelModel:
    """Path-loss model ``h = c d**-phi X / sigma2`` with Rayleigh fading.

    Defaults place the helper 70 m from the user, 80 m from the AP and the
    user 150 m from the AP, with ``sigma2 = -120 dBm``.
    """

    c: float = 1e-3
    phi: float = 3.0
    sigma2: float = dbm_to_watt(-120.0)
    d_ua: float = 150.0
    d_ha: float = 80.0
    d_uh: float = 70.0

    def __post_init__(self) -> None:
        for name in ("c", "phi", "sigma2", "d_ua", "d_ha", "d_uh"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    def mean_gains(self) -> tuple[float, float, float]:
        """Mean CGNRs ``(h_uh, h_ua, h_ha)``."""
        g = lambda d: self.c * d ** (-self.phi) / self.sigma2  # noqa: E731
        return g(self.d_uh), g(self.d_ua), g(self.d_ha)


def gen_channels(model: ChannelModel, rng: np.random.Generator) -> ChannelGains:
    """Draw one realization of the three links in the order (uh, ua, ha).

    ``X ~ Exp(1)`` is the squared magnitude of a unit complex Gaussian. An
    exact zero draw is discarded and redrawn.
    """
    x = rng.exponential(1.0, 3)
    while np.any(x == 0.0):
        x = np.where(x == 0.0, rng.exponential(1.0, 3), x)
    m = model.mean_gains()
    return ChannelGains(*(float(mi * xi) for mi, xi in zip(m, x)))


def table_one_params(model: ChannelModel | None = None, **overrides: float) -> SystemParams:
    """Default scenario: 80 Kbits per device, 5 ms deadline, unit fading."""
    model = model or ChannelModel()
    p = SystemParams(
        channels=ChannelGains(*model.mean_gains()),
        task=TaskLoad(L_u=80e3, L_h=80e3, C_u=1.0, C_h=1.0),
        caps=DeviceCaps(
            f_u=3e9, f_h=1e9, kappa=1e-26, P_bar_u=0.4, P_bar_h=0.8, E_prime_h=1e-3, F=1e5
        ),
        T=5e-3,
        w_u=1.0,
        w_h=1.0,
        B=1e6,
    )
    return with_overrides(p, **overrides) if overrides else p


# ---------------------------------------------------------------------------
# figure registry


@dataclass(frozen=True)
class Figure:
    """One experiment: how an axis value modifies the scenario and which
    metrics a realization produces."""

    figure_id: str
    axis_name: str
    default_axis: tuple[float, ...]
    apply: Callable[[SystemParams, ChannelModel, float], tuple[SystemParams, ChannelModel]]
    metrics: Callable[[SystemParams, Sequence[str]], dict[str, float]]
    note: str = ""


def _set(key: str) -> Callable:
    def f(p, m, v):
        return with_overrides(p, **{key: v}), m

    return f


def _set_duh(p, m, v):
    return p, replace(m, d_uh=v, d_ha=max(m.d_ua - v, 1.0))


def _energy(p: SystemParams, schemes) -> dict[str, float]:
    """Weighted energies plus the relative saving against the better
    benchmark, ``(best - proposed) / best``."""
    out: dict[str, float] = {}
    if "proposed" in schemes or "tdma" in schemes:
        prop, tdma = solve_p1_pair(p)
        if "proposed" in schemes:
            out["proposed"] = prop.weighted_energy
        if "tdma" in schemes:
            out["tdma"] = tdma.weighted_energy
    if "noma" in schemes:
        out["noma"] = noma_energy_min(p).value
    bench = [out[s] for s in ("tdma", "noma") if s in out]
    if "proposed" in out and bench:
        best = min(bench)
        out["saving/best"] = (best - out["proposed"]) / best if best > 0 else 0.0
    return out


def _coop_gain(p: SystemParams, schemes) -> dict[str, float]:
    """Energy saved by cooperation divided by the proposed energy."""
    e = _energy(p, schemes)
    out = dict(e)
    out.pop("saving/best", None)
    if "proposed" in e and e["proposed"] > 0:
        for s in ("tdma", "noma"):
            if s in e:
                out[f"gain/{s}"] = (e[s] - e["proposed"]) / e["proposed"]
        bench = [e[s] for s in ("tdma", "noma") if s in e]
        if bench:
            out["gain/best"] = (min(bench) - e["proposed"]) / e["proposed"]
    return out


def _data(p: SystemParams, schemes) -> dict[str, float]:
    out: dict[str, float] = {}
    if "proposed" in schemes:
        out["proposed"] = solve_p2(p).weighted_bits
    if "tdma" in schemes:
        out["tdma"] = tdma_data_max(p).value
    if "noma" in schemes:
        out["noma"] = noma_data_max(p).value
    return out


def _beta_rows(rep) -> dict[str, float]:
    """``beta`` is only meaningful when the user transmits. ``proposed/beta``
    is NaN otherwise (counted in the ``infeasible`` column);
    ``proposed/beta-idle0`` reports 0 instead."""
    active = rep.allocation.t_u > 0
    return {
        "proposed/beta": rep.beta if active else math.nan,
        "proposed/beta-idle0": rep.beta if active else 0.0,
        "proposed/user-active": float(active),
    }


def _beta(p: SystemParams, schemes) -> dict[str, float]:
    return _beta_rows(solve_p2(p))


def _p1_share(alloc) -> float:
    tot = alloc.p_uh + alloc.p_ua
    return alloc.p_uh / tot if tot > 0 else 0.0


def _beta_distance(p: SystemParams, schemes) -> dict[str, float]:
    prop, _ = solve_p1_pair(p)
    return {"proposed/p1-share": _p1_share(prop.allocation), **_beta_rows(solve_p2(p))}


def _region(p: SystemParams, schemes) -> dict[str, float]:
    """Unweighted user and helper bits at the weighted optimum."""
    out: dict[str, float] = {}
    runs = {
        "proposed": lambda: solve_p2(p).allocation,
        "tdma": lambda: tdma_data_max(p).allocation,
        "noma": lambda: noma_data_max(p).allocation,
    }
    for s in SCHEMES:
        if s in schemes:
            a = runs[s]()
            out[f"{s}/user"] = a.ell_uh + a.ell_ua
            out[f"{s}/helper"] = a.ell_ha
    return out


def _weights(p: SystemParams, schemes) -> dict[str, float]:
    out = {f"{k}/energy": v for k, v in _energy(p, schemes).items() if "/" not in k}
    out.update({f"{k}/bits": v for k, v in _data(p, schemes).items()})
    return out


_KB = 1e3
FIGURES: dict[str, Figure] = {
    f.figure_id: f
    for f in (
        Figure("energy-vs-Lu", "L_u", tuple(k * 10 * _KB for k in range(1, 11)), _set("L_u"), _energy,
               "L_h = 80 Kbits, T = 5 ms, d_uh = 70 m"),
        Figure("coop-gain-vs-Lu", "L_u", tuple(x * _KB for x in (80, 184, 288, 392, 496, 600)), _set("L_u"),
               _coop_gain, "L_h = 80 Kbits, T = 5 ms; gain = (benchmark - proposed) / proposed"),
        Figure("energy-vs-T", "T", (2e-3, 4e-3, 6e-3, 8e-3, 10e-3), _set("T"), _energy,
               "L_u = L_h = 80 Kbits"),
        Figure("data-vs-T", "T", tuple(k * 1e-3 for k in range(1, 11)), _set("T"), _data, "d_uh = 70 m"),
        Figure("data-vs-Pu", "P_bar_u", tuple(np.round(np.linspace(0.05, 0.8, 6), 12).tolist()),
               _set("P_bar_u"), _data, "T = 5 ms"),
        Figure("beta-vs-Pu", "P_bar_u", tuple(np.round(np.linspace(0.05, 0.8, 6), 12).tolist()),
               _set("P_bar_u"), _beta, "T = 5 ms"),
        Figure("data-vs-distance", "d_uh", tuple(float(d) for d in range(10, 151, 20)), _set_duh, _data,
               "d_ua = 150 m fixed, helper on the segment: d_ha = max(d_ua - d_uh, 1 m)"),
        Figure("data-region", "w_h", tuple(np.round(np.logspace(-2, 2, 9), 12).tolist()), _set("w_h"),
               _region, "w_u = 1; rows give unweighted user and helper bits"),
        Figure("beta-vs-distance", "d_uh", tuple(float(d) for d in range(10, 151, 20)), _set_duh,
               _beta_distance, "p1-share = p_uh / (p_uh + p_ua) from energy minimization"),
        Figure("perf-vs-weight", "w_h", (0.25, 0.5, 1.0, 2.0, 4.0), _set("w_h"), _weights, "w_u = 1"),
    )
}


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class SweepConfig:
    """A seeded experiment.

    ``axis`` defaults to the figure's own axis; ``params`` and ``channel``
    default to the standard scenario. Channel gains in ``params`` are
    replaced by a fresh draw for every realization.
    """

    figure_id: str
    axis: tuple[float, ...] = ()
    realizations: int = 200
    seed: int = 0
    schemes: tuple[str, ...] = SCHEMES
    params: SystemParams | None = None
    channel: ChannelModel = field(default_factory=ChannelModel)

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURES:
            raise ValueError(f"unknown figure_id {self.figure_id!r}; choose from {sorted(FIGURES)}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        bad = set(self.schemes) - set(SCHEMES)
        if bad or not self.schemes:
            raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}, got {sorted(bad)}")
        object.__setattr__(self, "axis", tuple(float(v) for v in (self.axis or FIGURES[self.figure_id].default_axis)))
        object.__setattr__(self, "schemes", tuple(s for s in SCHEMES if s in self.schemes))
        if not self.axis:
            raise ValueError("axis must be nonempty")

    @property
    def figure(self) -> Figure:
        return FIGURES[self.figure_id]

    def template(self) -> SystemParams:
        return self.params if self.params is not None else table_one_params(self.channel)

    def to_dict(self) -> dict[str, Any]:
        return {
            "figure_id": self.figure_id,
            "axis": list(self.axis),
            "realizations": self.realizations,
            "seed": self.seed,
            "schemes": list(self.schemes),
            "params": params_to_dict(self.template()),
            "channel": {k: getattr(self.channel, k) for k in ("c", "phi", "sigma2", "d_ua", "d_ha", "d_uh")},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SweepConfig":
        known = {"figure_id", "axis", "realizations", "seed", "schemes", "params", "channel"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        if "figure_id" not in d:
            raise ValueError("config needs a figure_id")
        ch = d.get("channel") or {}
        if "sigma2_dbm" in ch:
            ch = {**{k: v for k, v in ch.items() if k != "sigma2_dbm"}, "sigma2": dbm_to_watt(ch["sigma2_dbm"])}
        return cls(
            figure_id=d["figure_id"],
            axis=tuple(d.get("axis") or ()),
            realizations=int(d.get("realizations", 200)),
            seed=int(d.get("seed", 0)),
            schemes=tuple(d.get("schemes") or SCHEMES),
            params=params_from_dict(d["params"]) if d.get("params") else None,
            channel=ChannelModel(**ch),
        )

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SweepRow:
    axis: float
    scheme: str
    mean: float
    stderr: float
    n: int
    infeasible: int
    order_violations: int


@dataclass
class SweepResult:
    """Aggregated rows, plus the raw per-realization samples.

    ``samples[(axis_index, label)]`` holds one entry per realization, NaN
    where the realization was infeasible.
    """

    config: SweepConfig
    rows: list[SweepRow]
    samples: dict[tuple[int, str], np.ndarray] = field(default_factory=dict, repr=False)

    def series(self, label: str) -> list[SweepRow]:
        return [r for r in self.rows if r.scheme == label]

    def metadata(self) -> dict[str, Any]:
        fig = self.config.figure
        return {"figure_id": fig.figure_id, "axis_name": fig.axis_name, "setup": fig.note,
                "config": self.config.to_dict()}


def _rng(seed: int, realization: int) -> np.random.Generator:
    # same draw for a given realization at every axis point (common random numbers)
    return np.random.default_rng([seed, realization])


def _run_point(cfg: SweepConfig, i_axis: int):
    fig = cfg.figure
    base, model = fig.apply(cfg.template(), cfg.channel, cfg.axis[i_axis])
    recs: list[dict[str, float] | None] = []
    order_bad = 0
    for r in range(cfg.realizations):
        ch = gen_channels(model, _rng(cfg.seed, r))
        p = replace(base, channels=ch)
        order_bad += int(not ch.noma_order_ok)
        try:
            recs.append(fig.metrics(p, cfg.schemes))
        except _FAILURES:
            recs.append(None)
    return recs, order_bad


def _aggregate(cfg: SweepConfig, i_axis: int, recs, order_bad: int):
    labels: list[str] = []
    for rec in recs:
        for k in rec or {}:
            if k not in labels:
                labels.append(k)
    rows, samples = [], {}
    for lab in labels:
        v = np.array([(rec or {}).get(lab, np.nan) for rec in recs], dtype=float)
        ok = v[np.isfinite(v)]
        n = int(ok.size)
        mean = float(ok.mean()) if n else math.nan
        se = float(ok.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append(SweepRow(cfg.axis[i_axis], lab, mean, se, n, cfg.realizations - n, order_bad))
        samples[(i_axis, lab)] = v
    return rows, samples


def run_sweep(cfg: SweepConfig, *, workers: int = 1) -> SweepResult:
    """Run every axis point of ``cfg``.

    Results do not depend on ``workers``: each realization draws from its
    own stream and aggregation follows the axis order.
    """
    idx = range(len(cfg.axis))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            outs = list(ex.map(_run_point, [cfg] * len(cfg.axis), idx))
    else:
        outs = [_run_point(cfg, i) for i in idx]
    rows: list[SweepRow] = []
    samples: dict = {}
    for i, (recs, bad) in enumerate(outs):
        r, s = _aggregate(cfg, i, recs, bad)
        rows.extend(r)
        samples.update(s)
    return SweepResult(cfg, rows, samples)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(result: SweepResult, out=None) -> str:
    """Serialize rows with the fixed header; write to ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in result.rows:
        w.writerow([_fmt(r.axis), r.scheme, _fmt(r.mean), _fmt(r.stderr), r.n, r.infeasible, r.order_violations])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def seed_from_env(default: int = 0) -> int:
    """Seed from ``MEC_SEED`` when set, else ``default``."""
    v = os.environ.get("MEC_SEED")
    return int(v) if v not in (None, "") else default
