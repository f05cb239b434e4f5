"""
Invariant Suite
Named structural, cancellation and bound checks run by `cli.py verify` on a
small configuration grid.
"""
import itertools
import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from models import SystemConfig

from . import an_design, asymptotics, matops, montecarlo, ofdm_model, rates
from .errors import ConfigValidationError

logger = logging.getLogger(__name__)

INVARIANTS: Dict[str, Callable[[], None]] = {}


class InvariantViolation(AssertionError):
    pass


def invariant(name: str):
    def register(fn: Callable[[], None]) -> Callable[[], None]:
        INVARIANTS[name] = fn
        return fn
    return register


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise InvariantViolation(message)


def _crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


SMALL_GRID = (
    SystemConfig(n=8, n_cp=2, nu=2, n_a=1, n_b=1, n_e=1, n_s=1, alpha=0.0),
    SystemConfig(n=8, n_cp=2, nu=2, n_a=2, n_b=1, n_e=2, n_s=1),
    SystemConfig(n=8, n_cp=2, nu=2, n_a=3, n_b=2, n_e=2, n_s=2),
    SystemConfig(n=8, n_cp=2, nu=2, n_a=4, n_b=2, n_e=2, n_s=1),
    SystemConfig(n=8, n_cp=3, nu=2, n_a=4, n_b=2, n_e=3, n_s=2),
)


FULL_SIZE_TOEPLITZ = (
    SystemConfig(n=64, n_cp=16, nu=16, n_a=2, n_b=1, n_e=2, n_s=1),
    SystemConfig(n=64, n_cp=16, nu=16, n_a=4, n_b=2, n_e=2, n_s=2),
)


def _realizations(seeds=range(3), grid=SMALL_GRID):
    for c in grid:
        for seed in seeds:
            r = ofdm_model.draw_channel(c, seed)
            yield c, r, ofdm_model.build_time_ops(r, c)


@invariant("matops.svd_reconstruction")
def _svd_reconstruction():
    rng = np.random.default_rng(1)
    for shape in ((4, 2), (20, 30), (7, 7)):
        m = _crandn(rng, *shape)
        res = matops.svd(m)
        rebuilt = res.left @ np.diag(res.singular_values) @ res.right.conj().T
        _expect(np.linalg.norm(rebuilt - m) <= 1e-10 * np.linalg.norm(m), f"reconstruction failed for {shape}")
        _expect(np.all(np.diff(res.singular_values) <= 0), "singular values not descending")


@invariant("matops.null_space_dimension")
def _null_space_dimension():
    rng = np.random.default_rng(2)
    m = _crandn(rng, 3, 8)
    z = matops.null_space_basis(m)
    _expect(z.shape == (8, 5), f"null space of 3x8 has shape {z.shape}")
    _expect(np.linalg.norm(m @ z) <= 1e-10 * np.linalg.norm(m), "null space residual too large")


@invariant("matops.logdet_properties")
def _logdet_properties():
    rng = np.random.default_rng(3)
    a, b, extra = _crandn(rng, 8, 8), _crandn(rng, 8, 8), _crandn(rng, 8, 3)
    signal, noise = a @ a.conj().T, b @ b.conj().T
    u = matops.svd(_crandn(rng, 8, 8)).left
    base = matops.logdet_rate(signal, noise)
    rotated = matops.logdet_rate(u @ signal @ u.conj().T, u @ noise @ u.conj().T)
    _expect(abs(base - rotated) <= 1e-9 * max(1.0, base), "log-det rate changes under unitary congruence")
    _expect(matops.logdet_rate(signal, noise + extra @ extra.conj().T) <= base + 1e-9, "more noise increased the rate")


@invariant("matops.toeplitz_exact_residual")
def _toeplitz_exact_residual():
    rng = np.random.default_rng(4)
    taps = 0.2 * _crandn(rng, 17)
    taps[0] = 4.0
    rhs = _crandn(rng, 64, 3)
    x = matops.toeplitz_apply_inverse(taps, rhs, matops.EXACT)
    t = matops.toeplitz_upper(taps, 64)
    _expect(matops.relative_residual(t @ x, rhs) <= 1e-10, "exact Toeplitz solve residual too large")


@invariant("ofdm.cp_and_permutation")
def _cp_and_permutation():
    for n, n_cp in ((8, 2), (64, 16)):
        product = ofdm_model.cp_remove_matrix(n, n_cp) @ ofdm_model.cp_insert_matrix(n, n_cp)
        _expect(np.array_equal(product, np.eye(n)), "cp_remove . cp_insert is not the identity")
        for n_ant in (1, 2, 4):
            p = ofdm_model.permutation_matrix(n_ant, n)
            _expect(np.array_equal(p.T @ p, np.eye(n * n_ant)), "permutation is not orthogonal")


@invariant("ofdm.diagonalize_matches_frequency")
def _diagonalize_matches_frequency():
    for c, r, ops in _realizations():
        for which, freq in (("AB", r.freq_ab), ("AE", r.freq_ae)):
            blocks = ofdm_model.diagonalize(r, ops, which)
            _expect(np.linalg.norm(blocks - freq) <= 1e-10 * max(np.linalg.norm(freq), 1.0),
                    f"{which} blocks differ from the CIR DFT for {c}")


@invariant("an.precoder_orthogonality")
def _precoder_orthogonality():
    for c, r, ops in _realizations():
        p = an_design.design_precoders(r, ops, c)
        for k in range(c.n):
            a, b, f = p.data[k], p.spatial[k], p.filter[k]
            h, g = r.freq_ab[k], r.freq_ae[k]
            _expect(np.linalg.norm(a.conj().T @ a - np.eye(c.n_s)) <= 1e-10, "A_k not orthonormal")
            _expect(np.linalg.norm(a @ a.conj().T + b @ b.conj().T - np.eye(c.n_a)) <= 1e-10,
                    "A_k and B_k do not complete a basis")
            _expect(np.linalg.norm(f.conj().T @ h @ b) <= 1e-10 * max(np.linalg.norm(h), 1e-300),
                    f"spatial AN leaks at subcarrier {k}")
            gg = g @ g.conj().T
            split = g @ a @ (g @ a).conj().T + g @ b @ (g @ b).conj().T
            _expect(np.linalg.norm(gg - split) <= 1e-12 * max(np.linalg.norm(gg), 1.0), "G G^H split fails")


@invariant("an.temporal_generic_cancellation")
def _temporal_generic_cancellation():
    for c, r, ops in _realizations():
        _, filters = an_design.design_data_and_filter(r, c.n_s)
        q = an_design.design_temporal_an_generic(ops, filters, c)
        _expect(q.shape[1] == c.temporal_dim, "temporal AN dimension mismatch")
        _expect(an_design.cancellation_residual(ops, filters, q) <= 1e-10, "temporal AN leaks into Bob")


@invariant("an.toeplitz_matches_generic")
def _toeplitz_matches_generic():
    full = _realizations(seeds=(0,), grid=FULL_SIZE_TOEPLITZ)
    for c, r, ops in itertools.chain(_realizations(), full):
        if c.n_b != c.n_s:
            continue
        _, filters = an_design.design_data_and_filter(r, c.n_s)
        generic = an_design.design_temporal_an_generic(ops, filters, c)
        toeplitz = an_design.design_temporal_an_toeplitz(ops, c, seed=7)
        distance = np.linalg.norm(generic @ generic.conj().T - toeplitz @ toeplitz.conj().T)
        _expect(distance <= 1e-8, f"Toeplitz and generic temporal AN subspaces differ by {distance:.2e}")


@invariant("an.block_cancellation")
def _block_cancellation():
    for c, r, ops in _realizations(seeds=(0,)):
        p = an_design.design_precoders(r, ops, c)
        split = an_design.power_split(c, c.gamma_bob)
        sample = an_design.simulate_block(r, ops, p, split, seed=11, noise=False)
        wanted = np.einsum("kst,kt->ks", np.einsum("kbs,kba,kat->kst", p.filter.conj(), r.freq_ab, p.data), sample.x)
        _expect(np.linalg.norm(sample.bob_filtered - wanted) <= 1e-9 * np.linalg.norm(wanted), "AN reaches Bob")


@invariant("rates.spatial_only_joint_equals_persub")
def _spatial_only_joint_equals_persub():
    c = SystemConfig(n=8, n_cp=2, nu=2, n_a=4, n_b=2, n_e=2, n_s=2, alpha=1.0)
    r = ofdm_model.draw_channel(c, 5)
    ops = ofdm_model.build_time_ops(r, c)
    p = an_design.design_precoders(r, ops, c)
    s = an_design.link_power_splits(c)
    joint = rates.eve_rate_joint(r, ops, p, s, c)
    persub = rates.eve_rate_persub(r, ops, p, s, c)
    _expect(abs(joint - persub) <= 1e-9 * max(joint, 1.0), "joint and per-subcarrier Eve rates differ at alpha = 1")


@invariant("rates.bob_monotone_in_theta")
def _bob_monotone_in_theta():
    c = SMALL_GRID[2]
    r = ofdm_model.draw_channel(c, 6)
    ops = ofdm_model.build_time_ops(r, c)
    p = an_design.design_precoders(r, ops, c)
    values = [rates.bob_rate(r, p, an_design.link_power_splits(c.with_updates(theta=t)), c) for t in np.linspace(0, 1, 6)]
    _expect(all(b >= a - 1e-12 for a, b in zip(values, values[1:])), "Bob's rate decreases in theta")


@invariant("asymptotics.closed_forms")
def _closed_forms():
    c = SystemConfig(n_e=2, n_s=2, n_b=2, n_a=10)
    _expect(abs(asymptotics.loss_ub_ne_eq_ns(c) - 3.2) <= 1e-12, "N_E = N_s loss bound is not 3.2")
    _expect(abs(asymptotics.loss_ub_hi_snr(c) - 3.2) <= 1e-12, "loss bounds disagree at N_E = N_s")
    grid = np.linspace(0.0, 1.0, 10001)
    for n_e in (1, 2, 4, 8):
        ce = c.with_updates(n_e=n_e)
        best = grid[np.argmax([asymptotics.f_theta(ce, t, approximate_k=True) for t in grid])]
        _expect(abs(best - asymptotics.theta_star_numeric(ce, approximate_k=True)) <= 1e-3,
                f"numeric theta* misses the f(theta) peak for n_e={n_e}")
    _expect(abs(asymptotics.theta_star_numeric(c, approximate_k=True) - asymptotics.theta_star(c)) <= 1e-5,
            "closed-form and numeric theta* differ at N_E = N_s")
    scaled = c.with_updates(gamma_eve=c.gamma_eve * 7.0, var_ae=c.var_ae / 7.0)
    a, b = asymptotics.bound_report(c).to_dict(), asymptotics.bound_report(scaled).to_dict()
    for key, value in a.items():
        if isinstance(value, float) and math.isfinite(value):
            _expect(abs(value - b[key]) <= 1e-9 * max(abs(value), 1.0), f"{key} not invariant to Eve SNR scaling")


@invariant("montecarlo.thread_determinism")
def _thread_determinism():
    c = SMALL_GRID[2]
    one = montecarlo.run_point(c, 6, 99, threads=1)
    many = montecarlo.run_point(c, 6, 99, threads=4)
    _expect(one.means == many.means, "Monte Carlo means depend on thread count")


def run_invariants(names: Optional[List[str]] = None) -> List[Tuple[str, Optional[str]]]:
    """
    Run registered invariants.

    Returns:
        (name, failure message or None) per invariant, in registration order

    Raises:
        ConfigValidationError: If a requested name is not a registered invariant
    """
    unknown = sorted(set(names or ()) - set(INVARIANTS))
    if unknown:
        raise ConfigValidationError("unknown_invariant", f"no invariant named {', '.join(unknown)}")
    results: List[Tuple[str, Optional[str]]] = []
    for name, check in INVARIANTS.items():
        if names and name not in names:
            continue
        try:
            check()
            results.append((name, None))
        except Exception as exc:
            logger.debug(f"[VERIFY] {name} raised", exc_info=True)
            results.append((name, f"{type(exc).__name__}: {exc}"))
    return results
