"""
Asymptotic Secrecy Bounds
Closed-form large-N_A approximations, secrecy-rate bounds and power
allocations for the hybrid AN scheme. Scalar bounds are returned in
bits/s/Hz; block-unit variants multiply by N + N_cp.
"""
import logging
import math
from typing import List, Tuple

import numpy as np
from scipy import linalg, optimize

from models import BoundReport, ChannelRealization, PrecoderSet, SystemConfig

from . import matops
from .errors import UnsupportedShapeError

logger = logging.getLogger(__name__)

HIGH_SNR = 10.0
LOW_SNR = 1.0


def _log2(x: float) -> float:
    return math.log2(x)


def _bps(c: SystemConfig) -> float:
    """Subcarriers per transmitted sample, N / (N + N_cp)."""
    return c.n / c.block_len


def _require_spatial(c: SystemConfig, what: str) -> None:
    if c.n_a <= c.n_s:
        raise UnsupportedShapeError(f"{what} needs n_a > n_s (got n_a={c.n_a}, n_s={c.n_s})")


def lambda_alpha(c: SystemConfig) -> float:
    """Per-dimension AN weight alpha / (N(N_A-N_s)) + (1-alpha) / (N(N_A-N_s) + N_cp N_A)."""
    spatial = c.alpha / (c.n * c.spatial_dim) if c.spatial_dim > 0 else 0.0
    return spatial + c.alpha_bar / c.temporal_dim


def p_alpha(c: SystemConfig) -> float:
    return c.theta_bar * c.gamma_eve * c.n_a * c.n_taps * c.var_ae * lambda_alpha(c) + 1.0


def k_alpha(c: SystemConfig, approximate: bool = False) -> float:
    """K_alpha = N (alpha / N + (1 - alpha) / (N + N_cp)); 1 under the N + N_cp ~ N simplification."""
    if approximate:
        return 1.0
    return c.n * (c.alpha / c.n + c.alpha_bar / c.block_len)


def _eve_inner(c: SystemConfig) -> float:
    """Per-antenna Eve SINR term of the large-N_A Eve bound."""
    power = c.gamma_eve * c.n_taps * c.var_ae
    signal = c.theta * power / c.n
    interference = c.theta_bar * power * (c.alpha / c.n + c.alpha_bar / c.block_len)
    return signal / (interference + 1.0) + 1.0


def bob_avg(c: SystemConfig, theta: float = None) -> float:
    """Large-N_A average Bob rate N_s N/(N+N_cp) log2(theta Gamma_B N_A nu~ var / (N_s N) + 1)."""
    theta = c.theta if theta is None else theta
    snr = theta * c.gamma_bob * c.n_a * c.n_taps * c.var_ab / (c.n_s * c.n)
    return c.n_s * _bps(c) * _log2(snr + 1.0)


def no_eve_avg(c: SystemConfig) -> float:
    """Average rate of the eavesdropper-free system (theta = 1)."""
    return bob_avg(c, theta=1.0)


def ub_eve_avg(c: SystemConfig) -> float:
    """Upper bound on Eve's average rate, bits/s/Hz."""
    _require_spatial(c, "Eve rate bound")
    return c.n_e * _bps(c) * _log2(_eve_inner(c))


def ub_eve_avg_block(c: SystemConfig) -> float:
    """Same bound in bits per OFDM block."""
    return ub_eve_avg(c) * c.block_len


def ub_eve_alpha_free(c: SystemConfig) -> float:
    """Eve bound with N + N_cp ~ N, where alpha drops out, bits/s/Hz."""
    _require_spatial(c, "Eve rate bound")
    power = c.gamma_eve * c.n_taps * c.var_ae / c.n
    inner = c.theta * power / (c.theta_bar * power + 1.0) + 1.0
    return c.n_e * _bps(c) * _log2(inner)


def lb_avg_secrecy(c: SystemConfig) -> float:
    """
    Lower bound on the average secrecy rate, bits/s/Hz.

    Raises:
        UnsupportedShapeError: If N_A = N_s
    """
    _require_spatial(c, "average secrecy lower bound")
    return bob_avg(c) - ub_eve_avg(c)


def theta_star(c: SystemConfig) -> float:
    return c.n_e / (c.n_e + c.n_s)


def f_theta(c: SystemConfig, theta: float, approximate_k: bool = False) -> float:
    """theta^(N_s/N_E) (1-theta) K / (theta + (1-theta) K); the high-SNR secrecy objective."""
    k = k_alpha(c, approximate_k)
    theta_bar = 1.0 - theta
    denom = theta + theta_bar * k
    if denom == 0:
        return 0.0
    return theta ** (c.n_s / c.n_e) * theta_bar * k / denom


def theta_star_numeric(c: SystemConfig, approximate_k: bool = False) -> float:
    """Maximizer of f_theta over (0, 1) by bounded scalar search."""
    res = optimize.minimize_scalar(
        lambda t: -f_theta(c, t, approximate_k), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-9}
    )
    return float(res.x)


def alpha_star(c: SystemConfig) -> float:
    """alpha maximizing alpha / N + (1 - alpha) / (N + N_cp): all AN spatial whenever N_cp > 0."""
    if c.spatial_dim == 0:
        return 0.0
    return 1.0 if c.n_cp > 0 else c.alpha


def _hi_snr_bob_term(c: SystemConfig) -> float:
    return c.n_s * _bps(c) * _log2(c.gamma_bob * c.n_a * c.n_taps * c.var_ab / (c.n_s * c.n))


def hi_snr_lb(c: SystemConfig) -> float:
    """High-SNR secrecy lower bound at theta = theta_star, bits/s/Hz."""
    ne, ns = c.n_e, c.n_s
    eve_term = ((ne / (ne + ns)) ** (ns / ne)) * ns / (ne + ns)
    return _hi_snr_bob_term(c) + ne * _bps(c) * _log2(eve_term)


def hi_snr_lb_at(c: SystemConfig, theta: float, approximate_k: bool = False) -> float:
    """High-SNR secrecy lower bound at an arbitrary theta in (0, 1)."""
    value = f_theta(c, theta, approximate_k)
    if value <= 0:
        return float("-inf")
    return _hi_snr_bob_term(c) + c.n_e * _bps(c) * _log2(value)


def loss_ub_hi_snr(c: SystemConfig) -> float:
    ne, ns = c.n_e, c.n_s
    return ns * _bps(c) * _log2((ne + ns) / ne) + ne * _bps(c) * _log2((ne + ns) / ns)


def loss_ub_ne_gg_ns(c: SystemConfig) -> float:
    """High-SNR loss bound when N_E >> N_s."""
    return c.n_e * _bps(c) * _log2(c.n_e / c.n_s)


def loss_ub_ne_eq_ns(c: SystemConfig) -> float:
    """High-SNR loss bound 2 N_E N / (N + N_cp), exact when N_E = N_s."""
    return 2.0 * c.n_e * _bps(c)


def lo_snr_bounds(c: SystemConfig) -> Tuple[float, float]:
    """
    Low-SNR loss upper bound and secrecy lower bound at theta = 1, bits/s/Hz.

    Returns:
        (loss_ub, lb_secrecy)
    """
    eve = _log2(c.gamma_eve * c.n_taps * c.var_ae / c.n + 1.0)
    loss_ub = c.n_e * _bps(c) * eve
    return loss_ub, no_eve_avg(c) - loss_ub


def regime_flags(c: SystemConfig) -> Tuple[str, ...]:
    """Names of the bounds whose stated regime this config leaves."""
    flags: List[str] = []
    if c.n_a <= c.n_s:
        flags.append("large_na_bounds_undefined")
    snr_eve = c.gamma_eve * c.var_ae
    snr_bob = c.gamma_bob * c.var_ab
    if snr_eve < HIGH_SNR or snr_bob < snr_eve:
        flags.append("hi_snr_out_of_regime")
    if c.n_e < c.n_s:
        flags.append("hi_snr_needs_ne_ge_ns")
    if c.n_e != c.n_s:
        flags.append("ne_eq_ns_bound_out_of_regime")
    if c.n_e <= c.n_s:
        flags.append("ne_gg_ns_bound_out_of_regime")
    if snr_eve > LOW_SNR:
        flags.append("lo_snr_out_of_regime")
    if not (c.n_e == c.n_s == c.n_b):
        flags.append("lo_snr_needs_ne_eq_ns_eq_nb")
    return tuple(flags)


def bound_report(c: SystemConfig) -> BoundReport:
    """Evaluate every closed-form bound for c; undefined large-N_A bounds become NaN."""
    nan = float("nan")
    if c.n_a > c.n_s:
        lb, ub, ub_free = lb_avg_secrecy(c), ub_eve_avg(c), ub_eve_alpha_free(c)
    else:
        lb = ub = ub_free = nan
    loss_lo, lb_lo = lo_snr_bounds(c)
    return BoundReport(
        lb_avg_secrecy=lb,
        ub_eve_avg=ub,
        ub_eve_avg_block=ub * c.block_len,
        ub_eve_alpha_free=ub_free,
        bob_avg=bob_avg(c),
        no_eve_avg=no_eve_avg(c),
        hi_snr_lb=hi_snr_lb(c) if c.gamma_bob * c.var_ab > 0 else nan,
        hi_snr_lb_at_theta=hi_snr_lb_at(c, c.theta) if c.gamma_bob * c.var_ab > 0 else nan,
        theta_star=theta_star(c),
        theta_star_numeric=theta_star_numeric(c),
        alpha_star=alpha_star(c),
        loss_ub_hi_snr=loss_ub_hi_snr(c),
        loss_ub_ne_gg_ns=loss_ub_ne_gg_ns(c),
        loss_ub_ne_eq_ns=loss_ub_ne_eq_ns(c),
        loss_ub_lo_snr=loss_lo,
        lb_lo_snr=lb_lo,
        k_alpha=k_alpha(c),
        lambda_alpha=lambda_alpha(c),
        p_alpha=p_alpha(c),
        regime_flags=regime_flags(c),
    )


def asymptotic_secrecy_matrices(r: ChannelRealization, p: PrecoderSet, c: SystemConfig) -> Tuple[float, float]:
    """
    Large-N_A secrecy rate of one realization, bits/block.

    Eve's AN covariance is replaced by its large-N_A form
    theta_bar Gamma_E / (N (N_A - N_s)) G G^H, which no longer depends on alpha.
    With exact_cp_power the frequency-domain powers use N + N_cp in place of N,
    as in the power split.

    Returns:
        (joint, per-subcarrier) evaluations; equal up to rounding since G G^H is block diagonal
    """
    _require_spatial(c, "asymptotic secrecy rate")
    span = c.block_len if c.exact_cp_power else c.n
    data_bob = c.theta * c.gamma_bob / (c.n_s * span)
    data_eve = c.theta * c.gamma_eve / (c.n_s * span)
    an_eve = c.theta_bar * c.gamma_eve / (span * c.spatial_dim)

    bob_eff = np.einsum("kbs,kba,kat->kst", p.filter.conj(), r.freq_ab, p.data, optimize=True)
    eve_paths = np.einsum("kea,kas->kes", r.freq_ae, p.data, optimize=True)
    bob_sig = data_bob * np.einsum("kst,kut->ksu", bob_eff, bob_eff.conj())
    eve_sig = data_eve * np.einsum("kes,kfs->kef", eve_paths, eve_paths.conj())
    eve_an = an_eve * np.einsum("kea,kfa->kef", r.freq_ae, np.conj(r.freq_ae))

    zeros = np.zeros(bob_sig.shape[1:], dtype=complex)
    r_bob = sum(matops.logdet_rate(sig, zeros) for sig in bob_sig)
    eve_persub = sum(matops.logdet_rate(sig, an) for sig, an in zip(eve_sig, eve_an))
    eve_joint = matops.logdet_rate(linalg.block_diag(*eve_sig), linalg.block_diag(*eve_an))
    return float(r_bob - eve_joint), float(r_bob - eve_persub)
