import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nomamec.errors import BitOverflow, NomaOrderViolated, ZeroSlot
from nomamec.system_model import (
    Allocation,
    ChannelGains,
    DeviceCaps,
    SystemParams,
    TaskLoad,
    Violation,
    check_feasible_p1,
    check_feasible_p2,
    energy_breakdown,
    helper_ap_rate,
    helper_latency,
    invert_powers,
    noma_rates,
    params_from_dict,
    params_to_dict,
    with_overrides,
)


def unit_params(**kw):
    p = SystemParams(
        ChannelGains(3.0, 1.0, 7.0),
        TaskLoad(L_u=3.0, L_h=3.0, C_u=1.0, C_h=1.0),
        DeviceCaps(f_u=1.0, f_h=1.0, kappa=1.0, P_bar_u=1.0, P_bar_h=1.0, E_prime_h=1.0, F=10.0),
        T=10.0,
        B=1.0,
    )
    return with_overrides(p, **kw) if kw else p


# --- rates -----------------------------------------------------------------


def test_noma_rates_examples():
    ch = ChannelGains(3.0, 1.0, 1.0)
    assert noma_rates(ch, 0, 0) == (0.0, 0.0)
    r_uh, r_ua = noma_rates(ch, 1, 3)
    assert r_uh == pytest.approx(2.0, rel=1e-15)
    assert r_ua == pytest.approx(math.log2(2.5), rel=1e-15)
    assert noma_rates(ch, 1, 0) == (pytest.approx(2.0), 0.0)


def test_noma_rates_reject_negative():
    with pytest.raises(ValueError):
        noma_rates(ChannelGains(3.0, 1.0, 1.0), -1.0, 0.0)


def test_helper_ap_rate_examples():
    assert helper_ap_rate(7.0, 1.0) == pytest.approx(3.0)
    assert helper_ap_rate(123.0, 0.0) == 0.0
    assert helper_ap_rate(3.0, 0.5) == pytest.approx(math.log2(2.5))
    with pytest.raises(ValueError):
        helper_ap_rate(1.0, -0.1)


pos = st.floats(1e-3, 1e3)


@given(h_ua=pos, ratio=st.floats(1.0, 100.0), p1=st.floats(0, 10), p2=st.floats(0, 10), dp=st.floats(0.01, 5))
def test_rate_monotonicity(h_ua, ratio, p1, p2, dp):
    ch = ChannelGains(h_ua * ratio, h_ua, 1.0)
    a = noma_rates(ch, p1, p2)
    assert noma_rates(ch, p1 + dp, p2)[0] >= a[0]
    assert noma_rates(ch, p1, p2 + dp)[1] >= a[1]
    assert noma_rates(ch, p1 + dp, p2)[1] <= a[1]


@given(h_ua=pos, ratio=st.floats(1.0, 100.0), p1=st.floats(0, 10), p2=st.floats(0, 10))
def test_sic_sum_rate_identity(h_ua, ratio, p1, p2):
    h_uh = h_ua * ratio
    r1, r2 = noma_rates(ChannelGains(h_uh, h_ua, 1.0), p1, p2)
    rhs = math.log2((1 + h_uh * p1) * (1 + h_ua * (p1 + p2)) / (1 + h_ua * p1))
    assert r1 + r2 == pytest.approx(rhs, rel=1e-12, abs=1e-12)


# --- power inversion -------------------------------------------------------


def test_invert_powers_examples():
    ch = ChannelGains(3.0, 1.0, 7.0)
    p = invert_powers(ch, 2.0, math.log2(2.5), 0.0, 1.0, 1.0, 1.0)
    assert p == pytest.approx((1.0, 3.0, 0.0), rel=1e-12)
    assert invert_powers(ch, 0, 0, 0, 1, 1, 1) == (0.0, 0.0, 0.0)
    assert invert_powers(ch, 0, 0, 3.0, 1, 1, 1)[2] == pytest.approx(1.0)


def test_invert_powers_errors():
    with pytest.raises(NomaOrderViolated):
        invert_powers(ChannelGains(1.0, 2.0, 1.0), 1.0, 1.0, 0.0, 1.0, 1.0, 1.0)
    # without helper-bound bits the order does not matter
    invert_powers(ChannelGains(1.0, 2.0, 1.0), 0.0, 1.0, 0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ZeroSlot):
        invert_powers(ChannelGains(3.0, 1.0, 1.0), 1.0, 0.0, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(ZeroSlot):
        invert_powers(ChannelGains(3.0, 1.0, 1.0), 0.0, 0.0, 1.0, 1.0, 0.0, 1.0)


@given(
    h_ua=st.floats(1e3, 1e7),
    ratio=st.floats(1.0, 50.0),
    h_ha=st.floats(1e3, 1e7),
    r_uh=st.floats(0, 40),
    r_ua=st.floats(0, 40),
    r_ha=st.floats(0, 40),
    alpha=st.floats(0.05, 0.95),
)
def test_power_bit_round_trip(h_ua, ratio, h_ha, r_uh, r_ua, r_ha, alpha):
    # spectral efficiencies up to 40 bits/s/Hz keep every power finite
    ch = ChannelGains(h_ua * ratio, h_ua, h_ha)
    B, T = 1e6, 5e-3
    t_u, t_h = alpha * T, (1 - alpha) * T
    uh, ua, ha = r_uh * B * t_u, r_ua * B * t_u, r_ha * B * t_h
    p_uh, p_ua, p_ha = invert_powers(ch, uh, ua, ha, t_u, t_h, B)
    r_uh, r_ua = noma_rates(ch, p_uh, p_ua)
    assert t_u * B * r_uh == pytest.approx(uh, rel=1e-9, abs=1e-6)
    assert t_u * B * r_ua == pytest.approx(ua, rel=1e-9, abs=1e-6)
    assert t_h * B * helper_ap_rate(h_ha, p_ha) == pytest.approx(ha, rel=1e-9, abs=1e-6)


# --- energies and latency ---------------------------------------------------


def test_energy_breakdown_examples(base):
    p = with_overrides(base, L_u=1e5)
    e = energy_breakdown(p, Allocation())
    assert e.e_loc_u == pytest.approx(9e-3, rel=1e-12)
    z = with_overrides(base, L_u=0.0, L_h=0.0)
    e0 = energy_breakdown(z, Allocation())
    assert (e0.e_off_u, e0.e_loc_u, e0.e_off_h, e0.e_loc_h, e0.weighted_total) == (0, 0, 0, 0, 0)
    e1 = energy_breakdown(base, Allocation(p_uh=0.1, p_ua=0.3, t_u=5e-3))
    assert e1.e_off_u == pytest.approx(2e-3, rel=1e-12)


def test_energy_breakdown_weighted_total(base):
    p = with_overrides(base, w_u=0.3, w_h=2.0)
    a = Allocation(0.01, 0.02, 0.05, 1e3, 2e4, 3e4, 2e-3, 3e-3)
    e = energy_breakdown(p, a)
    assert e.weighted_total == pytest.approx(0.3 * (e.e_off_u + e.e_loc_u) + 2.0 * (e.e_off_h + e.e_loc_h))
    assert min(e.e_off_u, e.e_loc_u, e.e_off_h, e.e_loc_h) >= 0


def test_energy_breakdown_overflow(base):
    with pytest.raises(BitOverflow):
        energy_breakdown(base, Allocation(ell_ua=base.task.L_u + 1.0))
    with pytest.raises(BitOverflow):
        energy_breakdown(base, Allocation(ell_ha=base.task.L_h + 1.0))


def test_helper_latency_examples():
    p = unit_params(L_h=3.0)
    assert helper_latency(p, Allocation(t_u=2.0, ell_uh=1.0)) == pytest.approx(4.0)
    assert helper_latency(p, Allocation(t_u=5.0, ell_uh=1.0)) == pytest.approx(6.0)
    assert helper_latency(p, Allocation(t_u=1.5, ell_ha=3.0)) == pytest.approx(1.5)


# --- feasibility ------------------------------------------------------------


def test_check_feasible_p1_examples(base):
    assert check_feasible_p1(base, Allocation()) == []
    bad = check_feasible_p1(base, Allocation(ell_ha=base.task.L_h + 1, t_h=base.T))
    assert Violation.HelperBitsExceedTask in bad
    F = base.caps.F
    bad = check_feasible_p1(base, Allocation(ell_ua=F + 1, t_u=base.T))
    assert Violation.ApCapacity in bad


def test_check_feasible_p1_latency_and_slots(base):
    slow = with_overrides(base, f_u=1e6)
    assert Violation.UserLatency in check_feasible_p1(slow, Allocation())
    assert Violation.SlotOverrun in check_feasible_p1(base, Allocation(t_u=base.T, t_h=1e-3))
    assert Violation.Negative in check_feasible_p1(base, Allocation(ell_ua=-1.0))


def test_check_feasible_p2_examples(base):
    c = base.caps
    assert check_feasible_p2(base, Allocation(p_uh=0.1, p_ua=c.P_bar_u - 0.1, p_ha=c.P_bar_h)) == []
    cap = c.E_prime_h / (c.kappa * c.f_h**2)
    bad = check_feasible_p2(base, Allocation(ell_uh=cap * (1 + 1e-6), t_u=1e-3))
    assert Violation.HelperEnergyBudget in bad
    assert Violation.HelperLatency in check_feasible_p2(base, Allocation(ell_uh=10.0, t_u=base.T))
    assert Violation.UserPowerCap in check_feasible_p2(base, Allocation(p_ua=c.P_bar_u * 1.01))


# --- types and serialization -------------------------------------------------


def test_channel_gains_validation():
    assert ChannelGains(2.0, 1.0, 1.0).noma_order_ok
    assert ChannelGains(1.0, 1.0, 1.0).noma_order_ok
    assert not ChannelGains(0.5, 1.0, 1.0).noma_order_ok
    for bad in [(0.0, 1, 1), (1, -1, 1), (1, 1, math.inf), (1, math.nan, 1)]:
        with pytest.raises(ValueError):
            ChannelGains(*bad)


def test_param_validation(base):
    with pytest.raises(ValueError):
        TaskLoad(-1.0, 0.0)
    with pytest.raises(ValueError):
        TaskLoad(1.0, 1.0, C_u=0.0)
    with pytest.raises(ValueError):
        with_overrides(base, T=0.0)
    with pytest.raises(ValueError):
        with_overrides(base, w_u=0.0, w_h=0.0)
    with pytest.raises(ValueError):
        with_overrides(base, kappa=-1.0)
    with pytest.raises(ValueError):
        with_overrides(base, nonsense=1.0)


def test_json_round_trip(base):
    text = json.dumps(params_to_dict(base))
    assert params_from_dict(json.loads(text)) == base
    d = params_to_dict(base)
    d["task"]["bogus"] = 1
    with pytest.raises(ValueError):
        params_from_dict(d)


def test_normalized_units(base):
    n = base.normalized()
    assert n.Lu == pytest.approx(base.task.L_u / base.B)
    assert n.eu == pytest.approx(base.caps.kappa * base.caps.f_u**2 * base.B)
    assert n.tau == pytest.approx(base.task.C_u * base.B / base.caps.f_h)
