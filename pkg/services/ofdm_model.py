"""
OFDM Channel Model
Configuration validation, random CIR generation and the block-level
time-domain operators (CP insertion/removal, DFT, permutations, banded
convolution matrices) of a MIMOME-OFDM link.
"""
import logging
import os
from typing import Dict, Iterable, Mapping, Optional

import numpy as np
from dotenv import dotenv_values
from scipy import linalg

from models import ChannelRealization, SystemConfig, TimeDomainOps

from .errors import ConfigValidationError, ConstructionConventionError, ContractError

logger = logging.getLogger(__name__)

DIAGONAL_TOL = 1e-10

INT_KEYS = ("n", "n_cp", "nu", "n_a", "n_b", "n_e", "n_s")
FLOAT_KEYS = ("gamma_bob_db", "gamma_eve_db", "var_ab", "var_ae", "theta", "alpha")
BOOL_KEYS = ("exact_cp_power",)
CONFIG_KEYS = INT_KEYS + FLOAT_KEYS + BOOL_KEYS

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def validate_config(c: SystemConfig) -> SystemConfig:
    """
    Check every SystemConfig invariant.

    Returns:
        The same config when it is consistent

    Raises:
        ConfigValidationError: Named after the first violated invariant
    """
    for key in INT_KEYS:
        value = getattr(c, key)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ConfigValidationError("integer_dimension", f"{key} must be an integer, got {value!r}")
    if c.n < 1:
        raise ConfigValidationError("subcarriers_positive", f"n must be at least 1, got {c.n}")
    if c.nu < 0:
        raise ConfigValidationError("delay_spread_nonnegative", f"nu must be >= 0, got {c.nu}")
    if c.n_cp < c.nu:
        raise ConfigValidationError(
            "cp_shorter_than_delay_spread", f"cp length {c.n_cp} is shorter than delay spread {c.nu}"
        )
    for key in ("n_a", "n_b", "n_e"):
        if getattr(c, key) < 1:
            raise ConfigValidationError("antenna_count_positive", f"{key} must be at least 1")
    if not 1 <= c.n_s <= min(c.n_a, c.n_b):
        raise ConfigValidationError(
            "streams_out_of_range", f"n_s={c.n_s} must lie in [1, min(n_a, n_b)={min(c.n_a, c.n_b)}]"
        )
    for key in ("theta", "alpha"):
        value = getattr(c, key)
        if not 0.0 <= value <= 1.0:
            raise ConfigValidationError("fraction_out_of_range", f"{key}={value} must lie in [0, 1]")
    for key in ("gamma_bob", "gamma_eve", "var_ab", "var_ae"):
        value = getattr(c, key)
        if not np.isfinite(value) or value < 0:
            raise ConfigValidationError("nonnegative_finite", f"{key}={value} must be finite and >= 0")
    if c.spatial_dim == 0 and c.alpha > 0:
        raise ConfigValidationError(
            "spatial_an_unavailable", f"n_a = n_s = {c.n_s} leaves no spatial AN dimension, alpha must be 0"
        )
    if c.n_a * c.block_len <= c.n_s * c.n:
        raise ConfigValidationError("temporal_an_infeasible", "no degrees of freedom left for temporal AN")
    return c


def _parse_bool(key: str, raw: str) -> bool:
    value = str(raw).strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ConfigValidationError("malformed_value", f"{key}={raw!r} is not a boolean")


def config_from_mapping(values: Mapping[str, object], base: Optional[SystemConfig] = None) -> SystemConfig:
    """
    Build a SystemConfig from config-file keys.

    Keys not present keep the value of ``base`` (the defaults when omitted).

    Raises:
        ConfigValidationError: On unknown keys or unparseable values
    """
    base = base or SystemConfig()
    changes: Dict[str, object] = {}
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            raise ConfigValidationError("unknown_key", f"unknown configuration key '{key}'")
        if raw is None:
            raise ConfigValidationError("malformed_value", f"{key} has no value")
        try:
            if key in INT_KEYS:
                as_float = float(raw)
                if not as_float.is_integer():
                    raise ValueError(raw)
                changes[key] = int(as_float)
            elif key in BOOL_KEYS:
                changes[key] = raw if isinstance(raw, bool) else _parse_bool(key, raw)
            elif key == "gamma_bob_db":
                changes["gamma_bob"] = db_to_linear(float(raw))
            elif key == "gamma_eve_db":
                changes["gamma_eve"] = db_to_linear(float(raw))
            else:
                changes[key] = float(raw)
        except (TypeError, ValueError):
            raise ConfigValidationError("malformed_value", f"{key}={raw!r} is not a valid number")
    return base.with_updates(**changes)


def parse_overrides(overrides: Iterable[str]) -> Dict[str, str]:
    parsed: Dict[str, str] = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigValidationError("malformed_override", f"override '{item}' is not key=value")
        key, value = item.split("=", 1)
        parsed[key.strip()] = value.strip()
    return parsed


def load_config(
    path: Optional[str] = None,
    overrides: Iterable[str] = (),
    base: Optional[SystemConfig] = None,
) -> SystemConfig:
    """
    Load a `key = value` configuration file and apply --set overrides.

    Args:
        path: Config file path, or None for the defaults
        overrides: "key=value" strings applied after the file
        base: Configuration the file and overrides are applied to

    Returns:
        Validated SystemConfig
    """
    c = base if base is not None else SystemConfig()
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigValidationError("config_unreadable", f"{path} does not exist")
        try:
            values = dotenv_values(path, encoding="utf-8")
        except OSError as exc:
            raise ConfigValidationError("config_unreadable", f"cannot read {path}: {exc}")
        c = config_from_mapping(values, c)
        logger.debug(f"[CONFIG] loaded {len(values)} keys from {path}")
    c = config_from_mapping(parse_overrides(overrides), c)
    return validate_config(c)


def _cir(rng: np.random.Generator, variance: float, shape) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def taps_to_freq(taps: np.ndarray, n: int) -> np.ndarray:
    """
    Per-subcarrier matrices [H_k]_ij = sum_l h_lij w^(l k), w = exp(-2 pi i / n).

    Args:
        taps: CIR taps indexed (tap, rx, tx)
        n: Number of subcarriers

    Returns:
        Array indexed (k, rx, tx)
    """
    if taps.shape[0] > n:
        # taps beyond one block alias onto lag l mod n
        folded = np.zeros((n,) + taps.shape[1:], dtype=complex)
        np.add.at(folded, np.arange(taps.shape[0]) % n, taps)
        taps = folded
    return np.fft.fft(taps, n=n, axis=0)


def draw_channel(c: SystemConfig, seed: int) -> ChannelRealization:
    """
    Draw i.i.d. CN(0, var) taps for Alice-Bob and Alice-Eve.

    Deterministic in (c, seed): Bob's taps are drawn first, then Eve's.
    """
    rng = np.random.default_rng(seed)
    taps_ab = _cir(rng, c.var_ab, (c.n_taps, c.n_b, c.n_a))
    taps_ae = _cir(rng, c.var_ae, (c.n_taps, c.n_e, c.n_a))
    return ChannelRealization(
        taps_ab=taps_ab,
        taps_ae=taps_ae,
        freq_ab=taps_to_freq(taps_ab, c.n),
        freq_ae=taps_to_freq(taps_ae, c.n),
        seed=seed,
    )


def unitary_dft(n: int) -> np.ndarray:
    return linalg.dft(n, scale="sqrtn")


def cp_insert_matrix(n: int, n_cp: int) -> np.ndarray:
    """(n + n_cp) x n 0/1 matrix copying the last n_cp samples to the head."""
    t = np.zeros((n + n_cp, n))
    rows = np.arange(n + n_cp)
    t[rows, (rows - n_cp) % n] = 1.0
    return t


def cp_remove_matrix(n: int, n_cp: int) -> np.ndarray:
    r = np.zeros((n, n + n_cp))
    r[np.arange(n), n_cp + np.arange(n)] = 1.0
    return r


def antenna_major_index(n_ant: int, n: int) -> np.ndarray:
    """
    Index array p with w = v[p]: w[a*n + k] = v[k*n_ant + a].

    Equivalent to applying the permutation matrix P_{n_ant} to a
    subcarrier-major vector v.
    """
    return np.arange(n * n_ant).reshape(n, n_ant).T.ravel()


def permutation_matrix(n_ant: int, n: int) -> np.ndarray:
    idx = antenna_major_index(n_ant, n)
    p = np.zeros((n * n_ant, n * n_ant))
    p[np.arange(n * n_ant), idx] = 1.0
    return p


def conv_matrix(taps: np.ndarray, n: int, n_cp: int) -> np.ndarray:
    """
    Banded matrix R^cp H~ mapping CP-extended transmit blocks to received
    samples after CP removal.

    Within each (rx, tx) block, row i holds tap h_l in column i + n_cp - l,
    i.e. the samples that reach output i once the first n_cp received
    samples are discarded.
    """
    n_taps, n_rx, n_tx = taps.shape
    blocks = np.zeros((n_rx, n, n_tx, n + n_cp), dtype=complex)
    rows = np.arange(n)
    for lag in range(n_taps):
        blocks[:, rows, :, rows + n_cp - lag] = taps[lag]
    return blocks.reshape(n_rx * n, n_tx * (n + n_cp))


def build_time_ops(r: ChannelRealization, c: SystemConfig) -> TimeDomainOps:
    """Assemble the time-domain operators of one realization."""
    if c.nu > c.n_cp:
        raise ConfigValidationError("cp_shorter_than_delay_spread", f"nu={c.nu} exceeds n_cp={c.n_cp}")
    perm = {n_ant: antenna_major_index(n_ant, c.n) for n_ant in {c.n_a, c.n_b, c.n_e}}
    return TimeDomainOps(
        conv_ab=conv_matrix(np.asarray(r.taps_ab), c.n, c.n_cp),
        conv_ae=conv_matrix(np.asarray(r.taps_ae), c.n, c.n_cp),
        cp_insert=cp_insert_matrix(c.n, c.n_cp),
        cp_remove=cp_remove_matrix(c.n, c.n_cp),
        dft=unitary_dft(c.n),
        perm=perm,
    )


def frequency_rows(ops: TimeDomainOps, conv: np.ndarray, n_rx: int) -> np.ndarray:
    """
    P^T F_{n_rx} conv, returned as (k, rx, column).

    Per-antenna DFT of the received samples followed by the
    antenna-major to subcarrier-major reordering.
    """
    n = ops.dft.shape[0]
    blocks = np.asarray(conv).reshape(n_rx, n, -1)
    freq = np.einsum("ki,aic->kac", ops.dft, blocks, optimize=True)
    return freq


def diagonalize(r: ChannelRealization, ops: TimeDomainOps, which: str = "AB") -> np.ndarray:
    """
    Per-subcarrier channel matrices from M = P^T F conv T^cp F^H P.

    Args:
        r: Channel realization (for the antenna counts)
        ops: Time-domain operators
        which: "AB" for Bob's link, "AE" for Eve's

    Returns:
        Array indexed (k, rx, tx)

    Raises:
        ConstructionConventionError: If M is not block diagonal within 1e-10
    """
    if which == "AB":
        conv, n_rx = ops.conv_ab, r.taps_ab.shape[1]
    elif which == "AE":
        conv, n_rx = ops.conv_ae, r.taps_ae.shape[1]
    else:
        raise ContractError(f"unknown link '{which}', expected AB or AE")
    n_tx = r.taps_ab.shape[2]
    n, n_block = ops.dft.shape[0], ops.cp_insert.shape[0]

    blocks = np.asarray(conv).reshape(n_rx, n, n_tx, n_block)
    circ = np.einsum("aibj,jn->aibn", blocks, ops.cp_insert, optimize=True)
    m = np.einsum("ki,aibn,mn->kamb", ops.dft, circ, ops.dft.conj(), optimize=True)

    diag = np.einsum("kakb->kab", m).copy()
    off_block = m.copy()
    k = np.arange(n)
    off_block[k, :, k, :] = 0.0
    total = np.linalg.norm(m)
    ratio = float(np.linalg.norm(off_block) / total) if total > 0 else 0.0
    if ratio > DIAGONAL_TOL:
        raise ConstructionConventionError(which, ratio)
    return diag
