"""
Domain records shared by the services: system configuration, channel
realizations, precoders and the rate/bound reports.
"""
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """
    Scalar parameters of one MIMOME-OFDM link.

    SNRs are linear power ratios with unit noise variance, so the transmit
    power P equals the SNR of the link it is evaluated for.
    """
    n: int = 64
    n_cp: int = 16
    nu: int = 16
    n_a: int = 4
    n_b: int = 2
    n_e: int = 2
    n_s: int = 2
    gamma_bob: float = 100.0
    gamma_eve: float = 100.0
    var_ab: float = 1.0
    var_ae: float = 1.0
    theta: float = 0.5
    alpha: float = 0.5
    exact_cp_power: bool = False

    @property
    def n_taps(self) -> int:
        return self.nu + 1

    @property
    def block_len(self) -> int:
        return self.n + self.n_cp

    @property
    def spatial_dim(self) -> int:
        """Spatial AN dimension per subcarrier."""
        return self.n_a - self.n_s

    @property
    def temporal_dim(self) -> int:
        """Column count of the temporal AN precoder."""
        return self.n * (self.n_a - self.n_s) + self.n_cp * self.n_a

    @property
    def theta_bar(self) -> float:
        return 1.0 - self.theta

    @property
    def alpha_bar(self) -> float:
        return 1.0 - self.alpha

    @property
    def gamma_bob_db(self) -> float:
        return 10.0 * np.log10(self.gamma_bob) if self.gamma_bob > 0 else float("-inf")

    @property
    def gamma_eve_db(self) -> float:
        return 10.0 * np.log10(self.gamma_eve) if self.gamma_eve > 0 else float("-inf")

    def with_updates(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, object]:
        """Config-file vocabulary (dB SNRs) for result rows."""
        return {
            "n": self.n,
            "n_cp": self.n_cp,
            "nu": self.nu,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "n_e": self.n_e,
            "n_s": self.n_s,
            "gamma_bob_db": self.gamma_bob_db,
            "gamma_eve_db": self.gamma_eve_db,
            "var_ab": self.var_ab,
            "var_ae": self.var_ae,
            "theta": self.theta,
            "alpha": self.alpha,
            "exact_cp_power": self.exact_cp_power,
        }


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelRealization:
    """
    CIR taps indexed (tap, rx, tx) and the per-subcarrier matrices they
    induce, indexed (subcarrier, rx, tx).
    """
    taps_ab: np.ndarray
    taps_ae: np.ndarray
    freq_ab: np.ndarray
    freq_ae: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        for f in ("taps_ab", "taps_ae", "freq_ab", "freq_ae"):
            object.__setattr__(self, f, _freeze(getattr(self, f)))


@dataclass(frozen=True)
class TimeDomainOps:
    """
    Block-level time-domain operators.

    conv_ab / conv_ae are antenna-major: row a*N + i is sample i at receive
    antenna a after CP removal, column b*(N+N_cp) + j is sample j of transmit
    antenna b. ``perm`` maps an antenna count to the index array that turns a
    subcarrier-major vector v into its antenna-major form v[perm[n_ant]].
    """
    conv_ab: np.ndarray
    conv_ae: np.ndarray
    cp_insert: np.ndarray
    cp_remove: np.ndarray
    dft: np.ndarray
    perm: Dict[int, np.ndarray]

    def __post_init__(self):
        for f in ("conv_ab", "conv_ae", "cp_insert", "cp_remove", "dft"):
            object.__setattr__(self, f, _freeze(getattr(self, f)))
        object.__setattr__(self, "perm", {k: _freeze(v) for k, v in self.perm.items()})


@dataclass(frozen=True)
class PowerSplit:
    """Per-symbol powers for one total power budget P."""
    total: float
    per_data_symbol: float
    per_spatial_symbol: float
    per_temporal_symbol: float


@dataclass(frozen=True)
class LinkPowers:
    """Power splits of the Bob-side (P = Gamma_B) and Eve-side (P = Gamma_E) rate expressions."""
    bob: PowerSplit
    eve: PowerSplit


@dataclass(frozen=True)
class PrecoderSet:
    """
    Precoders and filters of one realization.

    ``temporal`` (Q) and ``eve_temporal`` (E_k stacked as (N, N_E, dim Q))
    are None when the temporal precoder was evaluated through its null-space
    projector only; ``eve_temporal_gram`` (E E^H, subcarrier-major) is always
    present.
    """
    data: np.ndarray
    filter: np.ndarray
    spatial: np.ndarray
    eve_temporal_gram: np.ndarray
    temporal: Optional[np.ndarray] = None
    eve_temporal: Optional[np.ndarray] = None
    route: str = "generic"

    def __post_init__(self):
        for f in ("data", "filter", "spatial", "eve_temporal_gram", "temporal", "eve_temporal"):
            value = getattr(self, f)
            if value is not None:
                object.__setattr__(self, f, _freeze(value))

    @property
    def has_temporal(self) -> bool:
        return self.temporal is not None


@dataclass(frozen=True)
class BlockSample:
    """One simulated OFDM block, subcarrier-major where per-subcarrier."""
    x: np.ndarray
    d_spatial: np.ndarray
    d_temporal: np.ndarray
    s_alice: np.ndarray
    bob_filtered: np.ndarray
    eve_rx: np.ndarray


@dataclass(frozen=True)
class RateReport:
    """Instantaneous rates of one realization in bits per OFDM block."""
    r_bob: float
    r_eve_joint: float
    r_eve_persub: float
    r_eve: float
    r_sec_clipped: float
    r_sec_raw: float
    r_no_eve: float
    r_no_eve_full: float
    s_loss: float
    s_loss_full: float
    block_len: int
    eve_strategy: str = "worst"

    RATE_FIELDS = (
        "r_bob", "r_eve_joint", "r_eve_persub", "r_eve", "r_sec_clipped",
        "r_sec_raw", "r_no_eve", "r_no_eve_full", "s_loss", "s_loss_full",
    )

    def rates(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.RATE_FIELDS}

    def per_shz(self) -> Dict[str, float]:
        """Same rates in bits/s/Hz (divided by N + N_cp)."""
        return {name: value / self.block_len for name, value in self.rates().items()}


@dataclass(frozen=True)
class BoundReport:
    """Closed-form bounds in bits/s/Hz unless the field name says otherwise."""
    lb_avg_secrecy: float
    ub_eve_avg: float
    ub_eve_avg_block: float
    ub_eve_alpha_free: float
    bob_avg: float
    no_eve_avg: float
    hi_snr_lb: float
    hi_snr_lb_at_theta: float
    theta_star: float
    theta_star_numeric: float
    alpha_star: float
    loss_ub_hi_snr: float
    loss_ub_ne_gg_ns: float
    loss_ub_ne_eq_ns: float
    loss_ub_lo_snr: float
    lb_lo_snr: float
    k_alpha: float
    lambda_alpha: float
    p_alpha: float
    regime_flags: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, object]:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "regime_flags"}
        out["regime_flags"] = ";".join(self.regime_flags)
        return out


@dataclass(frozen=True)
class TrialPlan:
    base_config: SystemConfig
    n_trials: int = 200
    master_seed: int = 20170101
    sweep_param: Optional[str] = None
    grid: Tuple[float, ...] = ()
    eve_strategy: str = "worst"


@dataclass(frozen=True)
class PointSummary:
    """Monte Carlo aggregate at one sweep point."""
    value: Optional[float]
    config: SystemConfig
    means: Dict[str, float]
    stderrs: Dict[str, float]
    n_trials: int
    master_seed: int
    bounds: Optional[BoundReport] = None

    def mean_shz(self, name: str) -> float:
        return self.means[name] / self.config.block_len

    def stderr_shz(self, name: str) -> float:
        return self.stderrs[name] / self.config.block_len


@dataclass(frozen=True)
class SweepResult:
    sweep_param: Optional[str]
    rows: Tuple[PointSummary, ...] = field(default_factory=tuple)

    def values(self) -> Tuple[Optional[float], ...]:
        return tuple(row.value for row in self.rows)

    def series(self, name: str, per_shz: bool = True) -> np.ndarray:
        if per_shz:
            return np.array([row.mean_shz(name) for row in self.rows])
        return np.array([row.means[name] for row in self.rows])


