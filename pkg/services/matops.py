"""
Matrix Operations
Complex dense kernels used by the channel model, the precoder design and the
rate evaluation: SVD, null spaces, orthonormalization, log-det rates and
banded Toeplitz solves.
"""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import ContractError, DegeneracyError, NumericalFailure, PsdViolation, SingularityError

DEFAULT_RANK_TOL = 1e-10
PHASE_TOL = 1e-12
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
SINGULAR_TAP_TOL = 1e-14

EXACT = "exact"
CIRCULANT = "circulant"


@dataclass(frozen=True)
class SvdResult:
    """
    Singular value decomposition m = left @ diag(singular_values) @ right^H.

    ``right`` holds the right singular vectors as columns (not V^H).
    """
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} has non-finite entries")
    return arr


def svd(m, full_matrices: bool = False) -> SvdResult:
    """
    Singular value decomposition with a deterministic phase convention.

    For every right singular vector, the first entry with magnitude above
    1e-12 is rotated to be real and positive; the paired left vector takes
    the same rotation so the product is unchanged.

    Args:
        m: Complex matrix
        full_matrices: Return square left/right factors instead of thin ones

    Returns:
        SvdResult with descending singular values

    Raises:
        ContractError: If m is not a finite 2-D matrix
        NumericalFailure: If LAPACK does not converge
    """
    m = _as_matrix(m)
    u = s = vh = None
    for driver in ("gesdd", "gesvd"):
        try:
            u, s, vh = linalg.svd(m, full_matrices=full_matrices, lapack_driver=driver)
            break
        except (linalg.LinAlgError, ValueError):
            continue
    if u is None:
        raise NumericalFailure("SVD did not converge", m.shape)

    v = vh.conj().T
    if v.shape[1] > 0:
        significant = np.abs(v) > PHASE_TOL
        first = np.argmax(significant, axis=0)
        anchors = v[first, np.arange(v.shape[1])]
        phases = np.ones(v.shape[1], dtype=complex)
        nonzero = np.abs(anchors) > 0
        phases[nonzero] = anchors[nonzero] / np.abs(anchors[nonzero])
        v = v * phases.conj()
        k = len(s)
        u = u.copy()
        u[:, :k] = u[:, :k] * phases[:k].conj()
    return SvdResult(left=u, singular_values=s, right=v)


def numerical_rank(singular_values: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    if len(singular_values) == 0 or singular_values[0] == 0:
        return 0
    return int(np.count_nonzero(singular_values > rel_tol * singular_values[0]))


def null_space_basis(m, rel_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """
    Orthonormal basis of the right null space of m.

    Args:
        m: Complex matrix
        rel_tol: Singular values at or below rel_tol * s_max count as zero

    Returns:
        Matrix whose columns span null(m); zero columns if m has full column rank
    """
    if not 0 < rel_tol < 1:
        raise ContractError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    m = _as_matrix(m)
    cols = m.shape[1]
    if not np.any(m):
        return np.eye(cols, dtype=complex)
    res = svd(m, full_matrices=True)
    r = numerical_rank(res.singular_values, rel_tol)
    return res.right[:, r:]


def row_space_basis(m, rel_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the row space of m (the complement of null_space_basis)."""
    m = _as_matrix(m)
    if not np.any(m):
        return np.zeros((m.shape[1], 0), dtype=complex)
    res = svd(m)
    r = numerical_rank(res.singular_values, rel_tol)
    return res.right[:, :r]


def gram_schmidt(m) -> np.ndarray:
    """
    Modified Gram-Schmidt with one re-orthogonalization pass.

    Raises:
        DegeneracyError: If a column collapses below 1e-12 * ||m||_F
    """
    m = _as_matrix(m)
    scale = np.linalg.norm(m)
    q = m.copy()
    for j in range(q.shape[1]):
        v = q[:, j]
        for _ in range(2):
            for i in range(j):
                v -= np.vdot(q[:, i], v) * q[:, i]
        norm = np.linalg.norm(v)
        if norm < 1e-12 * scale or norm == 0:
            raise DegeneracyError(j)
        q[:, j] = v / norm
    return q


def _check_hermitian(m: np.ndarray, name: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise ContractError(f"{name} must be square, got shape {m.shape}")
    scale = max(np.linalg.norm(m), 1.0)
    if np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL * scale:
        raise ContractError(f"{name} is not Hermitian")


def _check_psd(m: np.ndarray, name: str) -> None:
    if m.shape[0] == 0:
        return
    eigs = linalg.eigvalsh(m)
    tol = PSD_TOL * max(abs(np.trace(m).real), np.finfo(float).tiny)
    if eigs[0] < -tol:
        raise PsdViolation(name, float(eigs[0]))


def logdet_rate(signal, noise) -> float:
    """
    Gaussian-input rate log2 det(signal (noise + I)^-1 + I) in bits.

    The interference covariance is whitened by the Cholesky factor of
    noise + I and the rate is summed from the eigenvalues of the congruent
    signal matrix.

    Args:
        signal: Hermitian PSD signal covariance
        noise: Hermitian PSD interference covariance, without the identity

    Returns:
        Rate in bits

    Raises:
        ContractError: On shape mismatch or asymmetry above 1e-10
        PsdViolation: On an eigenvalue below -1e-10 * trace
    """
    signal = _as_matrix(signal, "signal")
    noise = _as_matrix(noise, "noise")
    _check_hermitian(signal, "signal")
    _check_hermitian(noise, "noise")
    if signal.shape != noise.shape:
        raise ContractError(f"signal {signal.shape} and noise {noise.shape} differ in size")
    n = signal.shape[0]
    if n == 0 or not np.any(signal):
        return 0.0
    _check_psd(signal, "signal")
    _check_psd(noise, "noise")

    k = (noise + noise.conj().T) / 2 + np.eye(n)
    try:
        chol = linalg.cholesky(k, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalFailure(f"Cholesky of noise + I failed: {exc}", k.shape) from exc
    w = linalg.solve_triangular(chol, signal, lower=True)
    w = linalg.solve_triangular(chol, w.conj().T, lower=True).conj().T
    w = (w + w.conj().T) / 2
    eigs = np.clip(linalg.eigvalsh(w), 0.0, None)
    return float(np.sum(np.log1p(eigs)) / math.log(2))


def toeplitz_upper(first_row_taps: Sequence[complex], n: int) -> np.ndarray:
    """Dense upper-triangular banded Toeplitz matrix with the given first row."""
    taps = np.asarray(first_row_taps, dtype=complex)[:n]
    row = np.zeros(n, dtype=complex)
    row[:len(taps)] = taps
    col = np.zeros(n, dtype=complex)
    col[0] = row[0]
    return linalg.toeplitz(col, row)


def toeplitz_apply_inverse(first_row_taps: Sequence[complex], rhs, mode: str = EXACT) -> np.ndarray:
    """
    Solve T X = rhs for the upper-triangular banded Toeplitz T.

    Exact mode is a banded back-substitution. Circulant mode replaces T with
    the circulant whose first row is the zero-padded taps and divides in the
    DFT domain; the result is an approximation.

    Args:
        first_row_taps: First row of T, (t_0, t_1, ..., t_nu)
        rhs: N-row right-hand side (vector or matrix)
        mode: "exact" or "circulant"

    Returns:
        Solution with the shape of rhs

    Raises:
        SingularityError: If |t_0| < 1e-14 or the circulant symbol vanishes
    """
    taps = np.asarray(first_row_taps, dtype=complex).ravel()
    rhs = np.asarray(rhs, dtype=complex)
    if len(taps) == 0:
        raise ContractError("toeplitz taps are empty")
    if abs(taps[0]) < SINGULAR_TAP_TOL:
        raise SingularityError("leading Toeplitz tap vanishes", abs(taps[0]))
    n = rhs.shape[0]
    taps = taps[:n]
    band = len(taps) - 1

    if mode == EXACT:
        ab = np.zeros((band + 1, n), dtype=complex)
        for offset, t in enumerate(taps):
            ab[band - offset, offset:] = t
        return linalg.solve_banded((0, band), ab, rhs)

    if mode == CIRCULANT:
        # circulant with first row (t_0, ..., t_nu, 0, ...) has first column (t_0, 0, ..., t_nu, ..., t_1)
        col = np.zeros(n, dtype=complex)
        col[0] = taps[0]
        for offset in range(1, band + 1):
            col[n - offset] = taps[offset]
        try:
            return linalg.solve_circulant(col, rhs, singular="raise")
        except linalg.LinAlgError as exc:
            symbol = np.abs(np.fft.fft(col)).min()
            raise SingularityError("circulant embedding is singular", float(symbol)) from exc

    raise ContractError(f"unknown Toeplitz solve mode '{mode}'")


def relative_residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    denom = np.linalg.norm(rhs)
    diff = np.linalg.norm(lhs - rhs)
    return float(diff / denom) if denom > 0 else float(diff)
