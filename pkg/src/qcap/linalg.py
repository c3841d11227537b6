"""Dense Hermitian linear algebra in base 2.

Matrices are plain complex ``numpy`` arrays. The validating constructors
:func:`hermitian` and :func:`density_matrix` symmetrize and check their
input; every other function assumes its arguments are already Hermitian.
All entropies and exponentials use base 2.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    EigenDecompositionError,
    ExponentOverflow,
    InvalidDensityMatrix,
    NotHermitianError,
    RegularityViolation,
)

HERMITIAN_TOL = 1e-8
TRACE_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-10
ENTROPY_CUTOFF = 1e-14
EXP2_LIMIT = 1000.0
REGULARITY_FLOOR = 1e-12


class Spectrum(NamedTuple):
    """Eigenvalues in descending order and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class Norms(NamedTuple):
    frobenius: float
    trace: float
    operator: float


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(a + a^dagger) / 2`` after checking ``a`` is Hermitian.

    :param a: square array-like
    :param tol: allowed entrywise asymmetry relative to ``max(1, max|a|)``
    :raises NotHermitianError: when the asymmetry exceeds ``tol``
    """
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    asym = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if asym > tol * scale:
        raise NotHermitianError(f"matrix asymmetry {asym:.3e} exceeds {tol:.0e}")
    return 0.5 * (a + a.conj().T)


def density_matrix(a, trace_tol: float = TRACE_TOL, eig_tol: float = NEGATIVE_EIG_TOL) -> np.ndarray:
    """Validate and symmetrize a density matrix.

    :raises InvalidDensityMatrix: on a trace off by more than ``trace_tol`` or
        an eigenvalue below ``-eig_tol``
    """
    rho = hermitian(a)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > trace_tol:
        raise InvalidDensityMatrix(f"trace {tr:.12g} differs from 1 by more than {trace_tol:.0e}")
    w_min = float(np.linalg.eigvalsh(rho)[0])
    if w_min < -eig_tol:
        raise InvalidDensityMatrix(f"negative eigenvalue {w_min:.3e}")
    return rho


# ---------------------------------------------------------------------------
# spectral primitives
# ---------------------------------------------------------------------------

def _eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        fro = float(np.linalg.norm(a)) if np.all(np.isfinite(a)) else float("nan")
        raise EigenDecompositionError(
            f"eigensolver did not converge (shape {a.shape}, Frobenius norm {fro:.3e}, "
            f"finite entries: {bool(np.all(np.isfinite(a)))})"
        ) from exc


def eig_hermitian(a) -> Spectrum:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    >>> eig_hermitian(np.eye(2)).eigenvalues
    array([1., 1.])
    """
    w, v = _eigh(np.asarray(a, dtype=complex))
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def _from_spectrum(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def matrix_exp2(a, return_shift: bool = False):
    """Base-2 matrix exponential ``2^A`` computed spectrally.

    With ``return_shift=True`` the pair ``(2^(A - s I), s)`` is returned where
    ``s`` is the largest eigenvalue of ``A``; the shifted factor never
    overflows and ``2^A = 2^s * 2^(A - s I)``.

    :raises ExponentOverflow: if an eigenvalue exceeds 1000 in magnitude
        and the unshifted result was requested
    """
    w, v = _eigh(np.asarray(a, dtype=complex))
    shift = float(w[-1])
    if return_shift:
        return _from_spectrum(np.exp2(w - shift), v), shift
    if np.max(np.abs(w)) > EXP2_LIMIT:
        raise ExponentOverflow(f"eigenvalue magnitude {np.max(np.abs(w)):.3e} exceeds {EXP2_LIMIT:g}")
    return _from_spectrum(np.exp2(w), v)


def gibbs_state(a) -> tuple[np.ndarray, float]:
    """Return ``(2^A / Tr 2^A, log2 Tr 2^A)`` with max-shift stabilization."""
    w, v = _eigh(np.asarray(a, dtype=complex))
    shift = float(w[-1])
    e = np.exp2(w - shift)
    z = float(e.sum())
    return _from_spectrum(e / z, v), shift + float(np.log2(z))


def entropy_maximizer(lam) -> np.ndarray:
    """Maximizer of ``H(rho) + Tr[rho lam]`` over density matrices, ``2^lam / Tr 2^lam``."""
    return gibbs_state(lam)[0]


def norms(a) -> Norms:
    """Frobenius, trace and operator norms of a Hermitian matrix."""
    w = np.linalg.eigvalsh(np.asarray(a, dtype=complex))
    aw = np.abs(w)
    return Norms(float(np.sqrt(np.sum(aw * aw))), float(aw.sum()), float(aw.max(initial=0.0)))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(a))


def trace_norm(a) -> float:
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def operator_norm(a) -> float:
    return float(np.abs(np.linalg.eigvalsh(a)).max())


def project_frobenius_ball(b, r: float) -> np.ndarray:
    """Project a Hermitian matrix onto ``{X : ||X||_F <= r}``.

    For Hermitian input the projection reduces to uniform scaling.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    b = np.asarray(b, dtype=complex)
    nrm = float(np.linalg.norm(b))
    # a few ulps of slack so that projecting a projected point is the identity
    if nrm <= r * (1.0 + 8.0 * np.finfo(float).eps):
        return b
    return b * (r / nrm)


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------

def _entropy_of_eigenvalues(w: np.ndarray) -> np.ndarray:
    w = np.where(w > ENTROPY_CUTOFF, w, 1.0)
    return -np.sum(w * np.log2(w), axis=-1)


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy in bits; eigenvalues below ``1e-14`` count as zero."""
    return float(_entropy_of_eigenvalues(np.linalg.eigvalsh(np.asarray(rho, dtype=complex))))


def entropies(states: np.ndarray) -> np.ndarray:
    """Vectorized von Neumann entropies of a stack of shape ``(n, M, M)``."""
    return _entropy_of_eigenvalues(np.linalg.eigvalsh(states))


def binary_entropy(p: float) -> float:
    """``Hb(p) = -p log2 p - (1-p) log2 (1-p)`` with ``Hb(0) = Hb(1) = 0``."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------

def min_eigenvalue(states: np.ndarray) -> float:
    """Smallest eigenvalue over a stack of Hermitian matrices."""
    states = np.asarray(states)
    if states.ndim == 2:
        states = states[None]
    return float(np.linalg.eigvalsh(states)[:, 0].min())


def min_spectrum_gamma(channel, floor: float = REGULARITY_FLOOR) -> float:
    """Minimum output eigenvalue ``gamma`` of a channel.

    ``channel`` is a stack of states, or any object with a ``states``
    attribute (discrete channels, quadrature grids). For a continuous channel
    pass its grid; the result is then a grid approximation.

    :raises RegularityViolation: if ``gamma <= floor``
    """
    states = getattr(channel, "states", channel)
    gamma = min_eigenvalue(np.asarray(states))
    if gamma <= floor:
        raise RegularityViolation(gamma, floor)
    return gamma


def dual_radius(dim: int, gamma: float) -> float:
    """Radius ``M * log2(max(1/gamma, e))`` of the dual ball."""
    return float(dim * max(np.log2(1.0 / gamma), np.log2(np.e)))


# ---------------------------------------------------------------------------
# random test objects and coordinates
# ---------------------------------------------------------------------------

def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    g = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = rho / np.real(np.trace(rho))
    return 0.5 * (rho + rho.conj().T)


def hermitian_basis(dim: int) -> np.ndarray:
    """Orthonormal basis of the real space of Hermitian ``dim x dim`` matrices.

    The inner product is ``<A, B> = Tr[A B]``; returns shape ``(dim**2, dim, dim)``.
    """
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    s = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = e[j, i] = s
            basis.append(e)
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = -1j * s
            e[j, i] = 1j * s
            basis.append(e)
    return np.array(basis)
