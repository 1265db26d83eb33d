import json
import math

import numpy as np
import pytest
from conftest import random_scenario

from nomamec.baselines import (
    Problem,
    Scheme,
    noma_data_max,
    noma_energy_min,
    noma_energy_objective,
    tdma_data_max,
    tdma_energy_min,
)
from nomamec.data_max import solve_p2
from nomamec.energy_min import solve_p1
from nomamec.errors import Infeasible
from nomamec.oracle import MeshSpec, oracle_p1
from nomamec.system_model import (
    ChannelGains,
    DeviceCaps,
    SystemParams,
    TaskLoad,
    with_overrides,
)


def toy(**kw):
    p = SystemParams(
        ChannelGains(h_uh=5.0, h_ua=3.0, h_ha=7.0),
        TaskLoad(L_u=10.0, L_h=10.0),
        DeviceCaps(f_u=1.0, f_h=1.0, kappa=1.0, P_bar_u=1.0, P_bar_h=1.0, E_prime_h=1.0, F=100.0),
        T=1.0,
        B=1.0,
    )
    return with_overrides(p, **kw) if kw else p


# --- TDMA ----------------------------------------------------------------------


def test_tdma_data_max_examples():
    r = tdma_data_max(toy())
    assert r.value == pytest.approx(3.0)
    assert r.allocation.t_h == 1.0 and r.allocation.t_u == 0.0
    r = tdma_data_max(toy(w_h=0.0))
    assert r.allocation.t_u == 1.0 and r.value == pytest.approx(2.0)
    tie = tdma_data_max(toy(h_ha=3.0))
    assert tie.allocation.t_u == 0.0


def test_tdma_energy_min_zero_task(base):
    assert tdma_energy_min(with_overrides(base, L_u=0.0, L_h=0.0)).value == 0.0


def test_tdma_energy_min_vs_restricted_oracle(base):
    r = tdma_energy_min(base)
    o = oracle_p1(base, MeshSpec(60), cooperative=False, estimate_error=False)
    assert r.value <= o.value * (1 + 1e-9)
    assert r.value == pytest.approx(o.value, rel=1e-2)


@pytest.mark.parametrize("seed", range(10))
def test_baselines_never_cooperate(seed):
    p = random_scenario(seed)
    for r in (tdma_energy_min(p), tdma_data_max(p), noma_data_max(p), noma_energy_min(p)):
        assert r.allocation.ell_uh == 0.0 and r.allocation.p_uh == 0.0
        json.dumps(r.to_dict())


@pytest.mark.parametrize("seed", range(10))
def test_tdma_dominated_by_proposed(seed):
    p = random_scenario(seed)
    assert tdma_energy_min(p).value >= solve_p1(p).weighted_energy * (1 - 1e-9)
    assert tdma_data_max(p).value <= solve_p2(p).weighted_bits * (1 + 1e-9)


# --- NOMA, data ------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_noma_data_max_vs_scalar_grid(seed):
    p = random_scenario(seed)
    ch, c = p.channels, p.caps
    wu, wh = p.w_u, p.w_h
    P = np.linspace(0.0, c.P_bar_u, 100001)
    hf = wu * np.log2(1 + ch.h_ua * P) + wh * np.log2(1 + ch.h_ha * c.P_bar_h / (1 + ch.h_ua * P))
    Q = np.linspace(0.0, c.P_bar_h, 100001)
    uf = wh * np.log2(1 + ch.h_ha * Q) + wu * np.log2(1 + ch.h_ua * c.P_bar_u / (1 + ch.h_ha * Q))
    grid = p.T * p.B * max(hf.max(), uf.max())
    r = noma_data_max(p)
    assert r.value >= grid * (1 - 1e-12)
    assert r.value == pytest.approx(grid, rel=1e-3)
    a = r.allocation
    assert p.w_u * a.ell_ua + p.w_h * a.ell_ha == pytest.approx(r.value, rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_noma_data_at_least_single_user_corner(seed):
    p = random_scenario(seed)
    assert noma_data_max(p).value >= tdma_data_max(p).value * (1 - 1e-12)


def test_noma_data_max_limits(base):
    R2 = math.log2(1 + base.channels.h_ha * base.caps.P_bar_h)
    r = noma_data_max(with_overrides(base, w_u=0.0))
    assert r.value == pytest.approx(base.w_h * base.T * R2 * base.B)
    big = with_overrides(base, h_ha=base.channels.h_ha * 1e6)
    R2b = math.log2(1 + big.channels.h_ha * big.caps.P_bar_h)
    assert noma_data_max(big).value == pytest.approx(big.w_h * big.T * R2b * big.B, rel=1e-2)


# --- NOMA, energy -----------------------------------------------------------------


def test_noma_energy_min_zero_task(base):
    r = noma_energy_min(with_overrides(base, L_u=0.0, L_h=0.0))
    assert r.value == 0.0 and r.reconstructed
    assert r.scheme is Scheme.NOMA and r.problem is Problem.EnergyMin


def _mesh_min(p, helper_first=True, N=200):
    k, c = p.task, p.caps
    ua = np.linspace(0, k.L_u, N)
    ha = np.linspace(0, k.L_h, N)
    A, H = np.meshgrid(ua, ha, indexing="ij")
    ok = (
        ((k.L_u - A) * k.C_u <= c.f_u * p.T * (1 + 1e-12))
        & ((k.L_h - H) * k.C_h <= c.f_h * p.T * (1 + 1e-12))
        & (A * k.C_u + H * k.C_h <= c.F * (1 + 1e-12))
    )
    v = np.where(ok, noma_energy_objective(p, A, H, helper_first=helper_first), np.inf)
    return v.min()


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("helper_first", [True, False])
def test_noma_energy_min_vs_mesh(seed, helper_first):
    p = random_scenario(seed)
    r = noma_energy_min(p, helper_first=helper_first)
    m = _mesh_min(p, helper_first)
    assert r.value <= m * (1 + 1e-9)
    assert r.value == pytest.approx(m, rel=1e-2)


def test_noma_energy_min_infeasible(base):
    with pytest.raises(Infeasible):
        noma_energy_min(with_overrides(base, f_u=1e6, f_h=1e6, F=1e3))


def test_noma_energy_not_always_above_proposed():
    """Simultaneous full-window transmission is outside the proposed scheme's
    feasible set, so NOMA can spend less energy on some channel draws."""
    below = 0
    for seed in range(20):
        p = random_scenario(seed, L_u=30e3)
        if noma_energy_min(p).value < solve_p1(p).weighted_energy * (1 - 1e-6):
            below += 1
    assert below > 0
