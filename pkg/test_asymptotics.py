"""
Tests for the closed-form bounds and power allocations.

Usage:
    pytest test_asymptotics.py
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from models import SystemConfig
from services import an_design, asymptotics, ofdm_model, rates
from services.errors import UnsupportedShapeError

BASE = SystemConfig(n=64, n_cp=16, nu=16, n_a=10, n_b=2, n_e=2, n_s=2)


def test_theta_star_values():
    assert asymptotics.theta_star(BASE) == 0.5
    assert_allclose(asymptotics.theta_star(BASE.with_updates(n_e=4)), 2.0 / 3.0)
    assert asymptotics.theta_star(BASE.with_updates(n_e=1000, n_s=1, n_b=1)) > 0.998


def test_loss_bound_for_equal_antennas():
    assert_allclose(asymptotics.loss_ub_ne_eq_ns(BASE), 3.2)
    assert_allclose(asymptotics.loss_ub_hi_snr(BASE), 3.2)


def test_loss_bound_large_eve_array():
    c = BASE.with_updates(n_e=16, n_s=1, n_b=1)
    assert asymptotics.loss_ub_ne_gg_ns(c) <= asymptotics.loss_ub_hi_snr(c)


def test_low_snr_bounds():
    c = BASE.with_updates(gamma_bob=0.1, gamma_eve=0.1)
    loss, lb = asymptotics.lo_snr_bounds(c)
    assert_allclose(loss, 2 * 64 / 80 * math.log2(0.1 * 17 / 64 + 1.0))
    assert_allclose(lb, asymptotics.no_eve_avg(c) - loss)
    silent = BASE.with_updates(gamma_eve=0.0)
    assert asymptotics.lo_snr_bounds(silent)[0] == 0.0


def test_eve_bound_without_an():
    c = BASE.with_updates(theta=1.0)
    expected = 2 * 64 / 80 * math.log2(100.0 * 17 / 64 + 1.0)
    assert_allclose(asymptotics.ub_eve_avg(c), expected)
    assert_allclose(asymptotics.ub_eve_avg_block(c), expected * 80)


def test_secrecy_bound_with_deaf_eve_is_bob_rate():
    c = BASE.with_updates(var_ae=0.0)
    assert_allclose(asymptotics.lb_avg_secrecy(c), asymptotics.bob_avg(c))


def test_zero_data_power():
    c = BASE.with_updates(theta=0.0)
    assert asymptotics.lb_avg_secrecy(c) == 0.0
    assert asymptotics.f_theta(c, 0.0) == 0.0


def test_bounds_need_spatial_dimension():
    c = BASE.with_updates(n_a=2, alpha=0.0)
    with pytest.raises(UnsupportedShapeError):
        asymptotics.lb_avg_secrecy(c)
    report = asymptotics.bound_report(c)
    assert math.isnan(report.lb_avg_secrecy)
    assert "large_na_bounds_undefined" in report.regime_flags


def test_alpha_free_bound_close_to_exact_bound():
    c = BASE.with_updates(n_a=20)
    exact, free = asymptotics.ub_eve_avg(c), asymptotics.ub_eve_alpha_free(c)
    assert free <= exact
    assert abs(exact - free) <= 0.25 * exact


def test_eve_bound_decreases_with_alpha():
    values = [asymptotics.ub_eve_avg(BASE.with_updates(alpha=a)) for a in np.linspace(0, 1, 11)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert asymptotics.alpha_star(BASE) == 1.0


def test_numeric_theta_star_maximizes_objective():
    for n_e in (1, 2, 4, 8):
        c = BASE.with_updates(n_e=n_e)
        numeric = asymptotics.theta_star_numeric(c, approximate_k=True)
        # with K = 1 the objective theta^(N_s/N_E) (1 - theta) peaks at N_s / (N_s + N_E)
        assert abs(numeric - c.n_s / (c.n_s + n_e)) <= 1e-5
        assert 0.0 < asymptotics.theta_star_numeric(c) < 1.0
    assert abs(asymptotics.theta_star_numeric(BASE, approximate_k=True) - asymptotics.theta_star(BASE)) <= 1e-5


def test_hi_snr_bound_peaks_at_theta_star():
    c = BASE.with_updates(gamma_bob=1000.0, gamma_eve=1000.0)
    peak = asymptotics.hi_snr_lb(c)
    assert_allclose(asymptotics.hi_snr_lb_at(c, 0.5, approximate_k=True), peak)
    assert asymptotics.hi_snr_lb_at(c, 0.3, approximate_k=True) < peak


def test_bounds_invariant_to_eve_snr_scaling():
    a = asymptotics.bound_report(BASE).to_dict()
    b = asymptotics.bound_report(BASE.with_updates(gamma_eve=BASE.gamma_eve * 5.0, var_ae=BASE.var_ae / 5.0)).to_dict()
    for key, value in a.items():
        if isinstance(value, float) and math.isfinite(value):
            assert_allclose(b[key], value, rtol=1e-9, err_msg=key)


def test_regime_flags():
    flags = asymptotics.regime_flags(BASE)
    assert "hi_snr_out_of_regime" not in flags
    assert "lo_snr_out_of_regime" in flags
    assert "ne_eq_ns_bound_out_of_regime" not in flags
    assert "ne_gg_ns_bound_out_of_regime" in flags
    quiet = asymptotics.regime_flags(BASE.with_updates(gamma_bob=0.1, gamma_eve=0.1))
    assert "hi_snr_out_of_regime" in quiet and "lo_snr_out_of_regime" not in quiet


def test_bound_report_flattens_flags():
    row = asymptotics.bound_report(BASE).to_dict()
    assert isinstance(row["regime_flags"], str)
    assert row["theta_star"] == 0.5
    assert_allclose(row["lambda_alpha"], 0.5 / (64 * 8) + 0.5 / (64 * 8 + 16 * 10))


def test_large_array_secrecy_matches_exact_rates():
    c = SystemConfig(n=8, n_cp=2, nu=2, n_a=64, n_b=2, n_e=2, n_s=2, alpha=1.0)
    r = ofdm_model.draw_channel(c, 0)
    ops = ofdm_model.build_time_ops(r, c)
    p = an_design.design_precoders(r, ops, c, route=an_design.PROJECTOR)
    report = rates.secrecy_report(r, ops, p, an_design.link_power_splits(c), c, rates.PERSUB)
    joint, persub = asymptotics.asymptotic_secrecy_matrices(r, p, c)
    assert_allclose(joint, persub, rtol=1e-9)
    assert abs(persub - report.r_sec_raw) <= 0.03 * abs(report.r_sec_raw)


def large_array(seed=0, **changes):
    c = SystemConfig(n=8, n_cp=2, nu=2, n_a=64, n_b=2, n_e=2, n_s=2, alpha=1.0).with_updates(**changes)
    r = ofdm_model.draw_channel(c, seed)
    ops = ofdm_model.build_time_ops(r, c)
    return c, r, ops, an_design.design_precoders(r, ops, c, route=an_design.PROJECTOR)


@pytest.mark.parametrize("exact_cp_power", [False, True])
def test_large_array_secrecy_is_invariant_to_alpha(exact_cp_power):
    c, r, _, p = large_array(1, exact_cp_power=exact_cp_power)
    values = [asymptotics.asymptotic_secrecy_matrices(r, p, c.with_updates(alpha=a)) for a in (0.0, 0.3, 1.0)]
    for joint, persub in values[1:]:
        assert_allclose((joint, persub), values[0], rtol=1e-12)


def test_large_array_secrecy_follows_exact_cp_power():
    c, r, ops, p = large_array(2)
    exact = c.with_updates(exact_cp_power=True)
    shrink = c.n / c.block_len
    rescaled = c.with_updates(gamma_bob=c.gamma_bob * shrink, gamma_eve=c.gamma_eve * shrink)
    assert_allclose(asymptotics.asymptotic_secrecy_matrices(r, p, exact),
                    asymptotics.asymptotic_secrecy_matrices(r, p, rescaled), rtol=1e-10)
    assert asymptotics.asymptotic_secrecy_matrices(r, p, exact)[0] != pytest.approx(
        asymptotics.asymptotic_secrecy_matrices(r, p, c)[0], rel=1e-6)
    report = rates.secrecy_report(r, ops, p, an_design.link_power_splits(exact), exact, rates.PERSUB)
    _, persub = asymptotics.asymptotic_secrecy_matrices(r, p, exact)
    assert abs(persub - report.r_sec_raw) <= 0.04 * abs(report.r_sec_raw)
