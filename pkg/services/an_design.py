"""
Artificial-Noise Precoder Design
Data precoders, Bob's receive filters, spatial and temporal AN precoders and
the hybrid power split of a MIMOME-OFDM transmitter.
"""
import logging
from typing import List, Tuple

import numpy as np
from scipy import linalg

from models import (
    BlockSample,
    ChannelRealization,
    LinkPowers,
    PowerSplit,
    PrecoderSet,
    SystemConfig,
    TimeDomainOps,
)

from . import matops
from .errors import (
    ConditioningError,
    ContractError,
    DegeneracyError,
    DegenerateChannelError,
    NumericalFailure,
    RankAnomalyError,
    SingularityError,
    UnsupportedShapeError,
)
from .ofdm_model import frequency_rows

logger = logging.getLogger(__name__)

GENERIC = "generic"
TOEPLITZ = "toeplitz"
PROJECTOR = "projector"

CANCELLATION_TOL = 1e-10
TOEPLITZ_CANCELLATION_TOL = 1e-8

BALANCED = "balanced"
LEADING = "leading"
# solved rows larger than this multiple of the free draws are discarded
MAX_SOLVE_GROWTH = 1e6


def _full_svds(freq: np.ndarray):
    return [matops.svd(h_k, full_matrices=True) for h_k in freq]


def design_data_and_filter(r: ChannelRealization, n_streams: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenmode data precoders and receive filters.

    Args:
        r: Channel realization
        n_streams: Number of data streams N_s per subcarrier

    Returns:
        (A, C) indexed (k, antenna, stream): top-N_s right and left singular
        vectors of every H_k

    Raises:
        DegenerateChannelError: If some H_k has fewer than N_s significant singular values
    """
    freq = np.asarray(r.freq_ab)
    n, n_b, n_a = freq.shape
    data = np.empty((n, n_a, n_streams), dtype=complex)
    filters = np.empty((n, n_b, n_streams), dtype=complex)
    for k, res in enumerate(_full_svds(freq)):
        if matops.numerical_rank(res.singular_values) < n_streams:
            raise DegenerateChannelError(k, n_streams)
        data[k] = res.right[:, :n_streams]
        filters[k] = res.left[:, :n_streams]
    return data, filters


def design_spatial_an(r: ChannelRealization, data: np.ndarray) -> np.ndarray:
    """
    Spatial AN precoders B_k: the right singular vectors of H_k left over
    after the data precoder.

    Returns:
        Array indexed (k, antenna, column); zero columns when N_A = N_s
    """
    freq = np.asarray(r.freq_ab)
    n, _, n_a = freq.shape
    n_streams = data.shape[2]
    spatial = np.empty((n, n_a, n_a - n_streams), dtype=complex)
    if n_a == n_streams:
        return spatial
    for k, res in enumerate(_full_svds(freq)):
        spatial[k] = res.right[:, n_streams:]
        if np.linalg.norm(data[k].conj().T @ spatial[k]) > CANCELLATION_TOL:
            raise ContractError(f"data precoder of subcarrier {k} was not built from the same SVD")
    return spatial


def bob_cancellation_matrix(ops: TimeDomainOps, filters: np.ndarray) -> np.ndarray:
    """X = C^H P^T F R^cp H~, of size N_s N x N_A (N + N_cp)."""
    n, n_b, n_s = filters.shape
    rows = frequency_rows(ops, ops.conv_ab, n_b)
    x = np.einsum("kas,kac->ksc", filters.conj(), rows, optimize=True)
    return x.reshape(n * n_s, -1)


def cancellation_residual(ops: TimeDomainOps, filters: np.ndarray, temporal: np.ndarray) -> float:
    """Relative temporal AN leakage ||X Q||_F / ||X||_F at Bob."""
    x = bob_cancellation_matrix(ops, filters)
    scale = np.linalg.norm(x)
    return float(np.linalg.norm(x @ temporal) / scale) if scale > 0 else 0.0


def design_temporal_an_generic(ops: TimeDomainOps, filters: np.ndarray, c: SystemConfig) -> np.ndarray:
    """
    Temporal AN precoder as an orthonormal basis of null(X).

    Raises:
        RankAnomalyError: If the null space does not have N(N_A - N_s) + N_cp N_A columns
    """
    x = bob_cancellation_matrix(ops, filters)
    q = matops.null_space_basis(x)
    if q.shape[1] != c.temporal_dim:
        raise RankAnomalyError(c.temporal_dim, q.shape[1])
    residual = np.linalg.norm(x @ q)
    if residual > CANCELLATION_TOL * np.linalg.norm(x):
        raise NumericalFailure(f"temporal AN leaks into Bob (residual {residual:.3e})", x.shape)
    return q


def temporal_row_space(ops: TimeDomainOps, filters: np.ndarray, c: SystemConfig) -> np.ndarray:
    """
    Orthonormal basis V_r of the row space of X.

    Q Q^H = I - V_r V_r^H for every orthonormal basis Q of null(X), so
    V_r fixes the temporal AN covariance without forming Q.
    """
    x = bob_cancellation_matrix(ops, filters)
    v_r = matops.row_space_basis(x)
    found = x.shape[1] - v_r.shape[1]
    if found != c.temporal_dim:
        raise RankAnomalyError(c.temporal_dim, found)
    return v_r


def _bob_taps(x: np.ndarray, c: SystemConfig, width: int) -> np.ndarray:
    """Taps h_l of the first N_s x N_s antenna pairs, indexed (l, rx, tx)."""
    blocks = x.reshape(c.n_b, c.n, c.n_a, c.block_len)
    # row 0 of every block holds h_l at column N_cp - l
    cols = c.n_cp - np.arange(width)
    return blocks[:c.n_s, 0, :c.n_s, :][:, :, cols].transpose(2, 0, 1)


def inside_zero_count(taps: np.ndarray) -> int:
    """
    Number of zeros of det H(z), H(z) = sum_l h_l z^l, inside the unit circle.

    The determinant polynomial is interpolated from its values at M-th roots
    of unity with M above its degree.

    Raises:
        SingularityError: If det H(z) vanishes identically
    """
    width, n_s, _ = taps.shape
    degree = n_s * (width - 1)
    m = max(64, 1 << int(np.ceil(np.log2(2 * (degree + 1)))))
    values = np.linalg.det(np.fft.ifft(taps, n=m, axis=0) * m)
    coeffs = np.fft.fft(values)[:degree + 1] / m
    scale = np.abs(coeffs).max()
    if scale == 0:
        raise SingularityError("Bob's channel determinant vanishes", 0.0)
    significant = np.nonzero(np.abs(coeffs) > 1e-13 * scale)[0]
    roots = np.roots(coeffs[:significant[-1] + 1][::-1])
    return int(np.sum(np.abs(roots) < 1.0))


def _shift_candidates(c: SystemConfig, width: int, zeros_inside: int, pivot: str) -> List[Tuple[int, ...]]:
    """
    Per-antenna shifts s_a of the determined blocks, best first.

    Antenna a solves the N samples starting at N_cp - s_a; its blocks are
    banded Toeplitz with h_{s_a} on the diagonal. Shifts summing to the
    zero count give a block symbol of winding number zero. Rotations of the
    balanced split come first, then single-unit moves between antennas.
    """
    if pivot == LEADING:
        return [(width - 1,) * c.n_s]
    base, extra = divmod(zeros_inside, c.n_s)
    balanced = [
        tuple(base + int((a - start) % c.n_s < extra) for a in range(c.n_s))
        for start in range(c.n_s if extra else 1)
    ]
    candidates = list(balanced)
    first = balanced[0]
    for src in range(c.n_s):
        for dst in range(c.n_s):
            if src == dst or first[src] == 0 or first[dst] == width - 1:
                continue
            moved = list(first)
            moved[src] -= 1
            moved[dst] += 1
            if tuple(moved) not in candidates:
                candidates.append(tuple(moved))
    return candidates


def _determined_index(c: SystemConfig, shifts: Tuple[int, ...]) -> np.ndarray:
    return np.concatenate([
        a * c.block_len + c.n_cp - s + np.arange(c.n) for a, s in enumerate(shifts)
    ])


def _solve_banded_block(dense: np.ndarray, rhs: np.ndarray, n: int, n_s: int) -> np.ndarray:
    # sample-major interleaving keeps the stacked block-Toeplitz system banded
    order = np.arange(n * n_s).reshape(n_s, n).T.ravel()
    a = dense[np.ix_(order, order)]
    rows, cols = np.nonzero(a)
    if rows.size == 0:
        raise SingularityError("determined block is zero", 0.0)
    lower = int(max(np.max(rows - cols), 0))
    upper = int(max(np.max(cols - rows), 0))
    size = a.shape[0]
    ab = np.zeros((lower + upper + 1, size), dtype=complex)
    for offset in range(-lower, upper + 1):
        diag = np.diagonal(a, offset)
        if offset >= 0:
            ab[upper - offset, offset:] = diag
        else:
            ab[upper - offset, :size + offset] = diag
    try:
        y = linalg.solve_banded((lower, upper), ab, rhs[order])
    except linalg.LinAlgError as exc:
        raise SingularityError("determined block is singular", float(np.abs(ab).min())) from exc
    out = np.empty_like(y)
    out[order] = y
    return out


def _solve_circulant_block(taps: np.ndarray, shifts: Tuple[int, ...], rhs: np.ndarray, n: int) -> np.ndarray:
    width, n_s, _ = taps.shape
    cols = np.zeros((n_s, n_s, n), dtype=complex)
    for a, s in enumerate(shifts):
        for l in range(width):
            cols[:, a, (l - s) % n] += taps[l, :, a]
    symbol = np.fft.fft(cols, axis=-1).transpose(2, 0, 1)
    spectrum = np.fft.fft(rhs.reshape(n_s, n, -1), axis=1).transpose(1, 0, 2)
    try:
        solved = np.linalg.solve(symbol, spectrum)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("circulant block symbol is singular", 0.0) from exc
    return np.fft.ifft(solved.transpose(1, 0, 2), axis=1).reshape(n_s * n, -1)


def design_temporal_an_toeplitz(
    ops: TimeDomainOps, c: SystemConfig, seed: int, mode: str = matops.EXACT, pivot: str = BALANCED
) -> np.ndarray:
    """
    Temporal AN precoder from random free rows and a banded Toeplitz solve.

    The free rows of Q are drawn i.i.d. CN(0, 1); N determined rows of each
    of the first N_s transmit antennas are solved so that every receive
    antenna of Bob cancels the AN, then the columns are orthonormalized.

    With pivot="balanced" the determined rows of antenna a start at
    N_cp - s_a, where the shifts s_a split the number of zeros of det H(z)
    inside the unit circle. The stacked block then has a winding-free
    symbol and stays well conditioned at any N. pivot="leading" solves the
    N samples starting at N_cp - nu (upper-triangular blocks with h_nu on the
    diagonal), whose inverse grows geometrically with N unless every zero
    of H(z) lies inside the unit circle.

    Args:
        ops: Time-domain operators
        c: System configuration with N_B = N_s
        seed: Seed for the free rows
        mode: "exact" (banded solve) or "circulant" (DFT approximation)
        pivot: "balanced" or "leading"

    Returns:
        Q with N(N_A - N_s) + N_cp N_A orthonormal columns

    Raises:
        UnsupportedShapeError: If N_B != N_s
        SingularityError: If the leading tap (pivot="leading") or the determined block is singular
        ConditioningError: If no determined block reaches the 1e-8 exact-mode leakage
    """
    if c.n_b != c.n_s:
        raise UnsupportedShapeError(
            f"Toeplitz temporal AN needs n_b = n_s (got n_b={c.n_b}, n_s={c.n_s}); use the generic route"
        )
    if mode not in (matops.EXACT, matops.CIRCULANT):
        raise ContractError(f"unknown Toeplitz solve mode '{mode}'")
    if pivot not in (BALANCED, LEADING):
        raise ContractError(f"unknown Toeplitz pivot '{pivot}'")
    n, n_s = c.n, c.n_s
    width = min(c.nu, n - 1) + 1
    x = np.asarray(ops.conv_ab)
    scale = np.linalg.norm(x)
    taps = _bob_taps(x, c, width)
    if pivot == LEADING:
        lead = float(abs(np.linalg.det(taps[-1])))
        if lead < matops.SINGULAR_TAP_TOL:
            raise SingularityError("leading tap matrix is singular", lead)
        zeros_inside = n_s * (width - 1)
    else:
        zeros_inside = inside_zero_count(taps)

    rng = np.random.default_rng(seed)
    dim = c.temporal_dim
    draws = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    draw_norm = max(np.linalg.norm(draws), np.finfo(float).tiny)

    growth = residual = float("inf")
    for shifts in _shift_candidates(c, width, zeros_inside, pivot):
        determined = _determined_index(c, shifts)
        q = np.zeros((c.n_a * c.block_len, dim), dtype=complex)
        free = np.ones(q.shape[0], dtype=bool)
        free[determined] = False
        q[free] = draws
        rhs = -(x @ q)
        if n_s == 1 and shifts[0] == width - 1:
            solved = matops.toeplitz_apply_inverse(taps[::-1, 0, 0], rhs, mode)
        elif mode == matops.EXACT:
            solved = _solve_banded_block(x[:, determined], rhs, n, n_s)
        else:
            solved = _solve_circulant_block(taps, shifts, rhs, n)
        q[determined] = solved
        growth = float(np.linalg.norm(solved) / draw_norm)

        if mode == matops.CIRCULANT:
            q = matops.gram_schmidt(q)
            residual = float(np.linalg.norm(x @ q) / scale) if scale > 0 else 0.0
            level = logging.WARNING if residual > TOEPLITZ_CANCELLATION_TOL else logging.INFO
            logger.log(level, f"[AN] circulant temporal AN leakage {residual:.3e} (approximation)")
            return q

        if not np.isfinite(growth) or growth > MAX_SOLVE_GROWTH:
            logger.debug(f"[AN] shifts {shifts}: solve growth {growth:.3e}, trying next block")
            continue
        try:
            q = matops.gram_schmidt(q)
        except DegeneracyError:
            logger.debug(f"[AN] shifts {shifts}: solved columns collapsed, trying next block")
            continue
        residual = float(np.linalg.norm(x @ q) / scale) if scale > 0 else 0.0
        if residual <= TOEPLITZ_CANCELLATION_TOL:
            logger.debug(f"[AN] toeplitz shifts {shifts} growth {growth:.3e} residual {residual:.3e}")
            return q
        logger.debug(f"[AN] shifts {shifts}: leakage {residual:.3e}, trying next block")
    raise ConditioningError(growth, residual)


def eve_temporal_blocks(ops: TimeDomainOps, temporal: np.ndarray, n_e: int) -> np.ndarray:
    """E = P^T F R^cp G~ Q split per subcarrier, indexed (k, rx, column)."""
    rows = frequency_rows(ops, ops.conv_ae, n_e)
    return np.einsum("kec,cq->keq", rows, temporal, optimize=True)


def _gram(e_blocks: np.ndarray) -> np.ndarray:
    flat = e_blocks.reshape(-1, e_blocks.shape[-1])
    return flat @ flat.conj().T


def eve_temporal_gram_from_row_space(ops: TimeDomainOps, row_space: np.ndarray, n_e: int) -> np.ndarray:
    """E E^H = M M^H - (M V_r)(M V_r)^H with M = P^T F R^cp G~."""
    m = frequency_rows(ops, ops.conv_ae, n_e)
    m = m.reshape(-1, m.shape[-1])
    mv = m @ row_space
    gram = m @ m.conj().T - mv @ mv.conj().T
    return (gram + gram.conj().T) / 2


def power_split(c: SystemConfig, power: float) -> PowerSplit:
    """
    Per-symbol powers for a total budget P.

    Data power theta P is shared by N_s N symbols; the AN share theta_bar P
    goes alpha to the N (N_A - N_s) spatial symbols and 1 - alpha to the
    temporal ones. With exact_cp_power the frequency-domain streams are
    normalized by N + N_cp instead of N.
    """
    span = c.block_len if c.exact_cp_power else c.n
    data = c.theta * power / (c.n_s * span)
    spatial = c.alpha * c.theta_bar * power / (span * c.spatial_dim) if c.spatial_dim > 0 else 0.0
    temporal = c.alpha_bar * c.theta_bar * power / c.temporal_dim if c.temporal_dim > 0 else 0.0
    return PowerSplit(total=power, per_data_symbol=data, per_spatial_symbol=spatial, per_temporal_symbol=temporal)


def link_power_splits(c: SystemConfig) -> LinkPowers:
    """Splits for Bob's (P = Gamma_B) and Eve's (P = Gamma_E) rate expressions."""
    return LinkPowers(bob=power_split(c, c.gamma_bob), eve=power_split(c, c.gamma_eve))


def expected_transmit_power(c: SystemConfig, power: float) -> float:
    """E||s_A||^2 per block, counting the CP copies of the frequency-domain streams."""
    s = power_split(c, power)
    cp_gain = c.block_len / c.n
    freq_domain = c.n_s * c.n * s.per_data_symbol + c.n * c.spatial_dim * s.per_spatial_symbol
    return freq_domain * cp_gain + c.temporal_dim * s.per_temporal_symbol


def design_precoders(
    r: ChannelRealization,
    ops: TimeDomainOps,
    c: SystemConfig,
    route: str = GENERIC,
    seed: int = 0,
    mode: str = matops.EXACT,
) -> PrecoderSet:
    """
    Build the full precoder set of one realization.

    Args:
        route: "generic" (SVD null space), "toeplitz" (banded solve, N_B = N_s)
            or "projector" (generic null space kept implicit; Q and E_k are not formed)
        seed: Seed of the Toeplitz route's free rows
        mode: Toeplitz solve mode
    """
    data, filters = design_data_and_filter(r, c.n_s)
    spatial = design_spatial_an(r, data)
    temporal = eve_blocks = None
    if route == PROJECTOR:
        gram = eve_temporal_gram_from_row_space(ops, temporal_row_space(ops, filters, c), c.n_e)
    else:
        if route == GENERIC:
            temporal = design_temporal_an_generic(ops, filters, c)
        elif route == TOEPLITZ:
            temporal = design_temporal_an_toeplitz(ops, c, seed, mode)
        else:
            raise ContractError(f"unknown temporal AN route '{route}'")
        eve_blocks = eve_temporal_blocks(ops, temporal, c.n_e)
        gram = _gram(eve_blocks)
    return PrecoderSet(
        data=data,
        filter=filters,
        spatial=spatial,
        eve_temporal_gram=gram,
        temporal=temporal,
        eve_temporal=eve_blocks,
        route=route,
    )


def _cn(rng: np.random.Generator, variance: float, shape) -> np.ndarray:
    return np.sqrt(variance / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _receive(ops: TimeDomainOps, conv: np.ndarray, s_alice: np.ndarray, n_rx: int) -> np.ndarray:
    n = ops.dft.shape[0]
    samples = (np.asarray(conv) @ s_alice).reshape(n_rx, n)
    return (samples @ ops.dft.T).T


def simulate_block(
    r: ChannelRealization,
    ops: TimeDomainOps,
    p: PrecoderSet,
    s: PowerSplit,
    seed: int,
    noise: bool = True,
    eve_noise_var: float = 1.0,
) -> BlockSample:
    """
    Push one random OFDM block through both links.

    Draws x, d^s and d^t at the split's per-symbol powers, forms
    s_A = T^cp F^H P (A x + B d^s) + Q d^t and returns Bob's filtered
    output and Eve's per-subcarrier received vectors.

    Args:
        s: Power split the symbols are drawn with (Bob's, P = Gamma_B)
        noise: Add unit-variance AWGN at Bob and eve_noise_var at Eve
        eve_noise_var: Eve's noise variance (Gamma_B / Gamma_E when both links share P)
    """
    if p.temporal is None:
        raise ContractError("simulate_block needs a materialized temporal precoder (generic or toeplitz route)")
    rng = np.random.default_rng(seed)
    n, n_a, n_s = p.data.shape
    n_b = p.filter.shape[1]
    n_e = r.taps_ae.shape[1]

    x = _cn(rng, s.per_data_symbol, (n, n_s))
    d_spatial = _cn(rng, s.per_spatial_symbol, (n, p.spatial.shape[2]))
    d_temporal = _cn(rng, s.per_temporal_symbol, p.temporal.shape[1])

    freq = np.einsum("kas,ks->ka", p.data, x) + np.einsum("kad,kd->ka", p.spatial, d_spatial)
    time = freq.T @ ops.dft.conj()
    s_alice = (time @ np.asarray(ops.cp_insert).T).ravel() + p.temporal @ d_temporal

    y_bob = _receive(ops, ops.conv_ab, s_alice, n_b)
    y_eve = _receive(ops, ops.conv_ae, s_alice, n_e)
    if noise:
        y_bob = y_bob + _cn(rng, 1.0, y_bob.shape)
        y_eve = y_eve + _cn(rng, eve_noise_var, y_eve.shape)
    bob_filtered = np.einsum("kbs,kb->ks", p.filter.conj(), y_bob)
    return BlockSample(
        x=x,
        d_spatial=d_spatial,
        d_temporal=d_temporal,
        s_alice=s_alice,
        bob_filtered=bob_filtered,
        eve_rx=y_eve,
    )
