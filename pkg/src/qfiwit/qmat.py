"""Dense matrix and state utilities for small multipartite qubit systems.

Everything here works on plain ``numpy`` arrays.  :class:`DensityMatrix` is a
thin validated wrapper that remembers the subsystem factorization; it exposes
``__array__`` so it can be passed straight into numpy routines.

Subsystems are numbered from 1, with factor 1 the leftmost Kronecker factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NotHermitianError

TAU_HERM = 1e-10
TAU_PSD = 1e-9
TAU_TR = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (I2, SX, SY, SZ)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)

# |psi+-> = (|01> +- |10>)/sqrt2, |Phi+-> = (|00> +- |11>)/sqrt2
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dag(a))


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi[..., :, None] * np.conj(psi[..., None, :])


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more square matrices, left to right."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    mats = [np.asarray(o, dtype=complex) for o in ops]
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kron operands must be square, got shape {m.shape}")
    return reduce(np.kron, mats)


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.matrix
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density operator with its subsystem dimensions.

    Construction checks Hermiticity, trace and positivity at the module
    tolerances and raises :class:`DomainError` on failure.  Pass
    ``validate=False`` to skip the checks (used for intermediate objects).
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=())
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {m.shape}")
        dims = tuple(int(d) for d in self.dims) if self.dims else (m.shape[0],)
        if int(np.prod(dims)) != m.shape[0]:
            raise DomainError(f"dims {dims} do not multiply to {m.shape[0]}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        if self.validate:
            report = is_density(m)
            if not report.valid:
                raise DomainError(f"not a density matrix: {report}")

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class DensityReport:
    valid: bool
    herm_residual: float
    min_eigenvalue: float
    trace_residual: float

    def __bool__(self):
        return self.valid


def is_density(m, tau_herm: float = TAU_HERM, tau_psd: float = TAU_PSD,
               tau_tr: float = TAU_TR) -> DensityReport:
    """Check whether ``m`` is a density matrix and report the residuals."""
    m = _as_matrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    herm = float(np.max(np.abs(m - dag(m)))) if m.size else 0.0
    min_eig = float(np.linalg.eigvalsh(hermitize(m))[0])
    tr = float(abs(np.trace(m) - 1.0))
    valid = herm <= tau_herm and min_eig >= -tau_psd and tr <= tau_tr
    return DensityReport(valid, herm, min_eig, tr)


def eig_hermitian(h, tau_herm: float = TAU_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the matrix of orthonormal
    eigenvectors (columns).  The input is symmetrized before the call to
    ``numpy.linalg.eigh``; inputs further than ``tau_herm`` from Hermitian
    (relative to their magnitude) are rejected.
    """
    h = _as_matrix(h)
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    resid = float(np.max(np.abs(h - dag(h)))) if h.size else 0.0
    if resid > tau_herm * scale:
        raise NotHermitianError(f"matrix is not Hermitian (residual {resid:.3e})")
    return np.linalg.eigh(hermitize(h))


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None) -> DensityMatrix:
    """Reduced state on the subsystems listed in ``keep`` (1-based).

    ``dims`` defaults to ``rho.dims`` when ``rho`` is a :class:`DensityMatrix`.
    Kept subsystems stay in their original order.
    """
    if dims is None:
        if not isinstance(rho, DensityMatrix):
            raise ValueError("dims required for a bare array")
        dims = rho.dims
    m = _as_matrix(rho)
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 1 or keep[-1] > n:
        raise DomainError(f"invalid subsystem set {keep} for {n} subsystems")
    if int(np.prod(dims)) != m.shape[0]:
        raise DomainError(f"dims {dims} do not match matrix size {m.shape[0]}")
    kidx = [k - 1 for k in keep]
    traced = [i for i in range(n) if i not in kidx]
    t = m.reshape(dims + dims)
    # trace out from the highest index down so the axis numbering stays valid
    for i in sorted(traced, reverse=True):
        nleft = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + nleft)
    kdims = tuple(dims[i] for i in kidx)
    d = int(np.prod(kdims))
    return DensityMatrix(t.reshape(d, d), kdims, validate=False)


def bell_diagonal(c1: float, c2: float, c3: float) -> DensityMatrix:
    """Two-qubit Bell-diagonal state (I + sum_j c_j s_j x s_j)/4."""
    constraints = {
        "1-c1-c2-c3 >= 0": 1 - c1 - c2 - c3,
        "1-c1+c2+c3 >= 0": 1 - c1 + c2 + c3,
        "1+c1-c2+c3 >= 0": 1 + c1 - c2 + c3,
        "1+c1+c2-c3 >= 0": 1 + c1 + c2 - c3,
    }
    for name, val in constraints.items():
        if val < -TAU_PSD:
            raise DomainError(f"Bell-diagonal positivity violated: {name} (value {val:.3g})")
    m = np.eye(4, dtype=complex)
    for c, s in zip((c1, c2, c3), (SX, SY, SZ)):
        m = m + c * np.kron(s, s)
    return DensityMatrix(m / 4, (2, 2), validate=False)


def bell_diagonal_spectrum(c1: float, c2: float, c3: float) -> dict[str, float]:
    """Eigenvalues of :func:`bell_diagonal` labelled by Bell vector."""
    return {
        "Phi+": (1 + c1 - c2 + c3) / 4,
        "Phi-": (1 - c1 + c2 + c3) / 4,
        "psi+": (1 + c1 + c2 - c3) / 4,
        "psi-": (1 - c1 - c2 - c3) / 4,
    }


def bloch_to_density(s) -> DensityMatrix:
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError("Bloch vector must have three components")
    if np.linalg.norm(s) > 1 + TAU_PSD:
        raise DomainError(f"Bloch vector norm {np.linalg.norm(s):.6g} exceeds 1")
    m = 0.5 * (I2 + s[0] * SX + s[1] * SY + s[2] * SZ)
    return DensityMatrix(m, (2,), validate=False)


def density_to_bloch(rho) -> np.ndarray:
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise ValueError("Bloch representation needs a qubit state")
    return np.real([np.trace(m @ s) for s in (SX, SY, SZ)])


def haar_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return z / np.linalg.norm(z)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full- or fixed-rank density matrix (Hilbert-Schmidt style)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ dag(g)
    return m / np.trace(m).real


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return hermitize(g)
