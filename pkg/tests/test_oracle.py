import math

import numpy as np
import pytest
from conftest import random_scenario

from nomamec.data_max import solve_p2
from nomamec.errors import AllInfeasible
from nomamec.oracle import MeshSpec, alpha_axis, oracle_p1, oracle_p2
from nomamec.system_model import check_feasible_p1, check_feasible_p2, with_overrides


def test_mesh_validation():
    with pytest.raises(ValueError):
        MeshSpec(points_per_axis=1)
    with pytest.raises(ValueError):
        MeshSpec(beta_spacing="log")
    with pytest.raises(ValueError):
        MeshSpec(alpha_spacing="random")


@pytest.mark.parametrize("spacing", ["chebyshev", "uniform"])
def test_alpha_axis_nested(spacing):
    coarse = alpha_axis(MeshSpec(alpha_points=11, alpha_spacing=spacing))
    fine = alpha_axis(MeshSpec(alpha_points=21, alpha_spacing=spacing))
    assert coarse[0] == 0.0 and coarse[-1] == 1.0
    assert np.all(np.diff(fine) > 0)
    assert np.allclose(fine[::2], coarse, atol=1e-15)


def test_p1_zero_task(base):
    o = oracle_p1(with_overrides(base, L_u=0.0, L_h=0.0), MeshSpec(5, 5))
    assert o.value == 0.0


def test_p1_all_local_corner(base):
    # devices that can finish locally with no offload cost worth paying
    p = with_overrides(base, kappa=1e-40)
    o = oracle_p1(p, MeshSpec(10, 11), estimate_error=False)
    assert o.allocation.ell_ua == 0 and o.allocation.ell_uh == 0 and o.allocation.ell_ha == 0
    assert o.value == pytest.approx(
        1e-40 * (p.task.L_u * p.caps.f_u**2 + p.task.L_h * p.caps.f_h**2), rel=1e-9
    )


def test_p1_nested_mesh_monotone(base):
    a = oracle_p1(base, MeshSpec(11, 11), estimate_error=False)
    b = oracle_p1(base, MeshSpec(21, 21), estimate_error=False)
    assert b.value <= a.value * (1 + 1e-12)
    assert b.evaluations > a.evaluations


def test_p1_result_feasible(base):
    o = oracle_p1(base, MeshSpec(20, 21))
    assert check_feasible_p1(base, o.allocation) == []
    assert o.mesh_error >= 0
    value, alloc = o
    assert value == o.value


def test_p1_alpha_pin(base):
    o = oracle_p1(base, MeshSpec(20), alpha=0.5, estimate_error=False)
    assert o.allocation.t_u == pytest.approx(0.5 * base.T)


def test_p1_infeasible(base):
    with pytest.raises(AllInfeasible):
        oracle_p1(with_overrides(base, f_u=1e6, f_h=1e6, F=1e3), MeshSpec(5, 5))


def test_p2_nested_mesh_monotone(base):
    a = oracle_p2(base, MeshSpec(51))
    b = oracle_p2(base, MeshSpec(101))
    assert b.value >= a.value * (1 - 1e-12)
    assert b.mesh_error < a.mesh_error


@pytest.mark.parametrize("seed", range(5))
def test_p2_feasible_and_bounded(seed):
    p = random_scenario(seed)
    o = oracle_p2(p, MeshSpec(100))
    assert check_feasible_p2(p, o.allocation) == []
    assert o.value <= solve_p2(p).weighted_bits * (1 + 1e-9)


def test_p2_unlimited_helper(base):
    # with an unbounded helper only the power split matters: beta = 1 wins if the
    # helper-bound rate beats the AP rate, and t_u is then the whole deadline
    p = with_overrides(base, E_prime_h=1e30, f_h=1e30)
    o = oracle_p2(p, MeshSpec(200))
    gam = math.log2(1 + p.caps.P_bar_u * p.channels.h_uh)
    R1 = math.log2(1 + p.caps.P_bar_u * p.channels.h_ua)
    R2 = math.log2(1 + p.caps.P_bar_h * p.channels.h_ha)
    best = p.T * p.B * max(p.w_u * max(gam, R1), p.w_h * R2)
    assert o.value == pytest.approx(best, rel=1e-9)


def test_p2_uniform_beta_spacing(base):
    a = oracle_p2(base, MeshSpec(200, beta_spacing="uniform"))
    b = oracle_p2(base, MeshSpec(200))
    assert a.value == pytest.approx(b.value, rel=1e-2)
