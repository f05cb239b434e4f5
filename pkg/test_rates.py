"""
Tests for Bob/Eve rate evaluation and the secrecy report.

Usage:
    pytest test_rates.py
"""
import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from models import SystemConfig
from services import an_design, matops, ofdm_model, rates
from services.errors import ContractError


def setup(c, seed=0, route=an_design.GENERIC):
    r = ofdm_model.draw_channel(c, seed)
    ops = ofdm_model.build_time_ops(r, c)
    p = an_design.design_precoders(r, ops, c, route=route)
    return r, ops, p, an_design.link_power_splits(c)


def small(**changes):
    return SystemConfig(n=8, n_cp=2, nu=2, n_a=4, n_b=2, n_e=2, n_s=2).with_updates(**changes)


def test_bob_rate_zero_without_data_power():
    c = small(theta=0.0)
    r, ops, p, s = setup(c)
    assert rates.bob_rate(r, p, s, c) == 0.0
    assert rates.eve_rate_joint(r, ops, p, s, c) == 0.0
    assert rates.eve_rate_persub(r, ops, p, s, c) == 0.0


def test_bob_rate_scalar_chain():
    c = SystemConfig(n=8, n_cp=2, nu=2, n_a=1, n_b=1, n_e=1, n_s=1, alpha=0.0, theta=0.7)
    r, ops, p, s = setup(c, 3)
    h2 = np.abs(r.freq_ab[:, 0, 0]) ** 2
    expected = np.sum(np.log2(1.0 + c.theta * c.gamma_bob * h2 / c.n))
    assert_allclose(rates.bob_rate(r, p, s, c), expected, rtol=1e-12)


def test_bob_rate_matches_block_diagonal_form():
    c = small()
    r, ops, p, s = setup(c, 4)
    eff = [p.filter[k].conj().T @ r.freq_ab[k] @ p.data[k] for k in range(c.n)]
    signal = s.bob.per_data_symbol * linalg.block_diag(*[e @ e.conj().T for e in eff])
    whole = matops.logdet_rate(signal, np.zeros_like(signal))
    assert_allclose(rates.bob_rate(r, p, s, c), whole, rtol=1e-9)


def test_eve_covariance_vanishes_without_an():
    c = small(theta=1.0)
    r, ops, p, s = setup(c)
    assert_allclose(rates.eve_covariance_joint(r, ops, p, s, c), 0.0, atol=1e-12)


def test_eve_covariance_spatial_only():
    c = small(alpha=1.0)
    r, ops, p, s = setup(c, 2)
    cov = rates.eve_covariance_joint(r, ops, p, s, c)
    blocks = [r.freq_ae[k] @ p.spatial[k] @ p.spatial[k].conj().T @ r.freq_ae[k].conj().T for k in range(c.n)]
    assert_allclose(cov, s.eve.per_spatial_symbol * linalg.block_diag(*blocks), atol=1e-10)


def test_eve_rates_agree_without_an():
    c = small(theta=1.0)
    r, ops, p, s = setup(c, 5)
    assert_allclose(rates.eve_rate_joint(r, ops, p, s, c), rates.eve_rate_persub(r, ops, p, s, c), rtol=1e-9)


def test_eve_rates_agree_on_single_subcarrier():
    c = SystemConfig(n=1, n_cp=0, nu=0, n_a=2, n_b=1, n_e=2, n_s=1)
    r, ops, p, s = setup(c, 6)
    assert_allclose(rates.eve_rate_joint(r, ops, p, s, c), rates.eve_rate_persub(r, ops, p, s, c), rtol=1e-12)


def test_eve_persub_terms_match_direct_determinant():
    c = SystemConfig(n=4, n_cp=2, nu=2, n_a=2, n_b=1, n_e=2, n_s=1)
    r, ops, p, s = setup(c, 7)
    gram = np.asarray(p.eve_temporal_gram)
    total = 0.0
    for k in range(c.n):
        ga = r.freq_ae[k] @ p.data[k]
        gb = r.freq_ae[k] @ p.spatial[k]
        noise = (s.eve.per_spatial_symbol * gb @ gb.conj().T
                 + s.eve.per_temporal_symbol * gram[2 * k:2 * k + 2, 2 * k:2 * k + 2] + np.eye(2))
        total += math.log2(abs(np.linalg.det(np.eye(2) + s.eve.per_data_symbol * ga @ ga.conj().T @ np.linalg.inv(noise))))
    assert_allclose(rates.eve_rate_persub(r, ops, p, s, c), total, rtol=1e-9)


def test_projector_and_generic_routes_give_same_rates():
    c = small(n_a=3, n_e=3)
    generic = rates.secrecy_report(*setup(c, 8), c)
    projector = rates.secrecy_report(*setup(c, 8, route=an_design.PROJECTOR), c)
    for name in generic.RATE_FIELDS:
        assert_allclose(getattr(projector, name), getattr(generic, name), rtol=1e-8, atol=1e-9)


def test_deaf_eavesdropper():
    c = small(var_ae=0.0)
    report = rates.secrecy_report(*setup(c, 9), c)
    assert report.r_eve == 0.0
    assert report.r_sec_clipped == report.r_bob
    assert report.s_loss == 0.0
    assert_allclose(report.s_loss_full, report.r_no_eve_full - report.r_bob)


def test_secrecy_is_clipped_when_eve_wins():
    c = SystemConfig(n=8, n_cp=2, nu=2, n_a=2, n_b=1, n_e=6, n_s=1, theta=1.0, gamma_bob=1.0, gamma_eve=1000.0)
    report = rates.secrecy_report(*setup(c, 10), c)
    assert report.r_sec_raw < 0
    assert report.r_sec_clipped == 0.0
    assert report.s_loss == report.r_bob


def test_eve_strategy_selection():
    c = small()
    args = setup(c, 11)
    worst = rates.secrecy_report(*args, c, rates.WORST)
    joint = rates.secrecy_report(*args, c, rates.JOINT)
    persub = rates.secrecy_report(*args, c, rates.PERSUB)
    assert joint.r_eve == worst.r_eve_joint
    assert persub.r_eve == worst.r_eve_persub
    assert worst.r_eve == max(worst.r_eve_joint, worst.r_eve_persub)
    with pytest.raises(ContractError):
        rates.secrecy_report(*args, c, "average")


def test_report_units():
    c = small()
    report = rates.secrecy_report(*setup(c, 12), c)
    per_shz = report.per_shz()
    assert_allclose(per_shz["r_bob"], report.r_bob / c.block_len)
    assert report.r_no_eve_full >= report.r_no_eve


def test_bob_rate_monotone_in_theta_and_gamma():
    c = small()
    r, ops, p, _ = setup(c, 13)
    by_theta = [rates.bob_rate(r, p, an_design.link_power_splits(c.with_updates(theta=t)), c)
                for t in np.linspace(0.0, 1.0, 11)]
    by_gamma = [rates.bob_rate(r, p, an_design.link_power_splits(c.with_updates(gamma_bob=g)), c)
                for g in (0.1, 1.0, 10.0, 100.0, 1000.0)]
    for values in (by_theta, by_gamma):
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    assert by_gamma[-1] > by_gamma[0]


def test_eve_rate_without_an_monotone_in_theta():
    c = small()
    r, ops, p, _ = setup(c, 14)
    values = []
    for t in np.linspace(0.0, 1.0, 11):
        s = an_design.link_power_splits(c.with_updates(theta=t))
        quiet = replace(s.eve, per_spatial_symbol=0.0, per_temporal_symbol=0.0)
        s = replace(s, eve=quiet)
        assert_allclose(rates.eve_covariance_joint(r, ops, p, s, c), 0.0, atol=1e-12)
        values.append(rates.eve_rate_joint(r, ops, p, s, c))
    assert values[0] == 0.0
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
