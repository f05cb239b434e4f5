"""
Secrecy Rate Evaluation
Instantaneous Bob/Eve rates and secrecy metrics of one channel realization
under hybrid spatial/temporal artificial noise.
"""
import logging

import numpy as np
from scipy import linalg

from models import ChannelRealization, LinkPowers, PrecoderSet, RateReport, SystemConfig, TimeDomainOps

from . import matops
from .an_design import power_split
from .errors import ContractError, PsdViolation

logger = logging.getLogger(__name__)

JOINT = "joint"
PERSUB = "persub"
WORST = "worst"
EVE_STRATEGIES = (JOINT, PERSUB, WORST)


def _bob_effective(r: ChannelRealization, p: PrecoderSet) -> np.ndarray:
    """C_k^H H_k A_k per subcarrier."""
    return np.einsum("kbs,kba,kat->kst", p.filter.conj(), r.freq_ab, p.data, optimize=True)


def _eve_data_paths(r: ChannelRealization, p: PrecoderSet) -> np.ndarray:
    """G_k A_k per subcarrier."""
    return np.einsum("kea,kas->kes", r.freq_ae, p.data, optimize=True)


def _outer(paths: np.ndarray) -> np.ndarray:
    return np.einsum("kes,kfs->kef", paths, paths.conj())


def bob_rate(r: ChannelRealization, p: PrecoderSet, s: LinkPowers, c: SystemConfig) -> float:
    """
    Bob's rate in bits/block.

    Sum over subcarriers of log2 det(P_x C_k^H H_k A_k (.)^H + I), where
    P_x is the per-data-symbol power of the Bob-side split.
    """
    eff = _bob_effective(r, p)
    signal = s.bob.per_data_symbol * _outer(eff)
    zero = np.zeros(signal.shape[1:], dtype=complex)
    return float(sum(matops.logdet_rate(sig_k, zero) for sig_k in signal))


def _spatial_blocks(r: ChannelRealization, p: PrecoderSet, s: LinkPowers) -> np.ndarray:
    n, n_e = r.freq_ae.shape[:2]
    if p.spatial.shape[2] == 0 or s.eve.per_spatial_symbol == 0:
        return np.zeros((n, n_e, n_e), dtype=complex)
    paths = np.einsum("kea,kad->ked", r.freq_ae, p.spatial, optimize=True)
    return s.eve.per_spatial_symbol * _outer(paths)


def _check_covariance(cov: np.ndarray, name: str) -> np.ndarray:
    cov = (cov + cov.conj().T) / 2
    if cov.shape[0] and np.any(cov):
        lowest = linalg.eigvalsh(cov, subset_by_index=[0, 0])[0]
        if lowest < -matops.PSD_TOL * abs(np.trace(cov).real):
            raise PsdViolation(name, float(lowest))
    return cov


def eve_covariance_joint(
    r: ChannelRealization, ops: TimeDomainOps, p: PrecoderSet, s: LinkPowers, c: SystemConfig
) -> np.ndarray:
    """
    AN covariance at Eve over all N_E N received dimensions (subcarrier-major).

    Spatial AN contributes a block-diagonal term G B B^H G^H scaled by the
    spatial symbol power; temporal AN contributes E E^H scaled by the
    temporal symbol power.
    """
    spatial = linalg.block_diag(*_spatial_blocks(r, p, s))
    cov = spatial + s.eve.per_temporal_symbol * np.asarray(p.eve_temporal_gram)
    return _check_covariance(cov, "Eve AN covariance")


def _eve_signal_blocks(r: ChannelRealization, p: PrecoderSet, s: LinkPowers) -> np.ndarray:
    return s.eve.per_data_symbol * _outer(_eve_data_paths(r, p))


def eve_rate_joint(
    r: ChannelRealization, ops: TimeDomainOps, p: PrecoderSet, s: LinkPowers, c: SystemConfig
) -> float:
    """Eve's rate with joint processing of all subcarriers, bits/block."""
    signal = linalg.block_diag(*_eve_signal_blocks(r, p, s))
    return matops.logdet_rate(signal, eve_covariance_joint(r, ops, p, s, c))


def eve_rate_persub(
    r: ChannelRealization, ops: TimeDomainOps, p: PrecoderSet, s: LinkPowers, c: SystemConfig
) -> float:
    """Eve's rate decoding each subcarrier on its own, bits/block."""
    signal = _eve_signal_blocks(r, p, s)
    spatial = _spatial_blocks(r, p, s)
    gram = np.asarray(p.eve_temporal_gram)
    n_e = signal.shape[1]
    total = 0.0
    for k in range(signal.shape[0]):
        rows = slice(k * n_e, (k + 1) * n_e)
        noise_k = spatial[k] + s.eve.per_temporal_symbol * gram[rows, rows]
        total += matops.logdet_rate(signal[k], (noise_k + noise_k.conj().T) / 2)
    return total


def secrecy_report(
    r: ChannelRealization,
    ops: TimeDomainOps,
    p: PrecoderSet,
    s: LinkPowers,
    c: SystemConfig,
    eve_strategy: str = WORST,
) -> RateReport:
    """
    Bob, Eve and secrecy rates of one realization.

    Args:
        eve_strategy: "joint", "persub", or "worst" (Eve picks the better of the two)

    Returns:
        RateReport in bits/block; r_no_eve uses the same theta, r_no_eve_full theta = 1
    """
    if eve_strategy not in EVE_STRATEGIES:
        raise ContractError(f"unknown Eve strategy '{eve_strategy}', expected one of {EVE_STRATEGIES}")
    r_bob = bob_rate(r, p, s, c)
    r_joint = eve_rate_joint(r, ops, p, s, c)
    r_persub = eve_rate_persub(r, ops, p, s, c)
    r_eve = {JOINT: r_joint, PERSUB: r_persub, WORST: max(r_joint, r_persub)}[eve_strategy]

    full = LinkPowers(bob=power_split(c.with_updates(theta=1.0), c.gamma_bob), eve=s.eve)
    r_no_eve_full = bob_rate(r, p, full, c)
    raw = r_bob - r_eve
    clipped = max(raw, 0.0)
    return RateReport(
        r_bob=r_bob,
        r_eve_joint=r_joint,
        r_eve_persub=r_persub,
        r_eve=r_eve,
        r_sec_clipped=clipped,
        r_sec_raw=raw,
        r_no_eve=r_bob,
        r_no_eve_full=r_no_eve_full,
        s_loss=r_bob - clipped,
        s_loss_full=r_no_eve_full - clipped,
        block_len=c.block_len,
        eve_strategy=eve_strategy,
    )
