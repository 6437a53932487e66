"""Core dense complex linear algebra: Hermitian operators, density matrices,
superoperators in column-stacking vectorization, matrix functions and
channel-positivity diagnostics.

All values are immutable after construction; every constructor validates its
invariants and absorbs pure roundoff (e.g. Hermiticity defects below
``1e-12 * norm``) instead of propagating it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "OperatorError",
    "HermitianOperator",
    "DensityMatrix",
    "Superoperator",
    "vec",
    "unvec",
    "spre",
    "spost",
    "sandwich",
    "commutator_superop",
    "dissipator_superop",
    "matrix_exponential",
    "gibbs_state",
    "partial_trace_second",
    "choi_matrix",
    "is_cptp",
    "CPTPReport",
    "trace_distance",
]

HERMITICITY_TOL = 1e-12


class OperatorError(ValueError):
    """Invalid operator data (non-Hermitian, non-normalized, wrong shape)."""


def _as_matrix(x) -> np.ndarray:
    m = np.asarray(getattr(x, "entries", x), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise OperatorError("matrix contains NaN or Inf entries")
    return m


def _hermitize(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    scale = max(np.linalg.norm(m), 1.0)
    defect = np.linalg.norm(m - m.conj().T)
    if defect > tol * scale:
        raise OperatorError(f"Hermiticity defect {defect:.3e} exceeds {tol:.1e} * norm")
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix in units of angular frequency (hbar = 1)."""

    entries: np.ndarray

    def __post_init__(self):
        m = _hermitize(_as_matrix(self.entries))
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


@dataclass(frozen=True)
class DensityMatrix:
    """Positive unit-trace matrix; the state of the open system."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.entries)
        tr = np.trace(m)
        if abs(tr - 1.0) > 1e-12 * max(abs(tr), 1.0):
            raise OperatorError(f"trace defect {abs(tr - 1.0):.3e} exceeds 1e-12")
        m = _hermitize(m)
        w = np.linalg.eigvalsh(m)
        if w.min() < -1e-10:
            raise OperatorError(f"negative eigenvalue {w.min():.3e} below -1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major (column-stacking) vectorization."""
    return np.asarray(a, dtype=complex).ravel(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> a X."""
    a = np.asarray(a, dtype=complex)
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> X b."""
    b = np.asarray(b, dtype=complex)
    return np.kron(b.T, np.eye(b.shape[0]))


def sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> a X b^dagger."""
    return np.kron(np.asarray(b, dtype=complex).conj(), np.asarray(a, dtype=complex))


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> [h, X]."""
    return spre(h) - spost(h)


def dissipator_superop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> a X b^dagger - (1/2){b^dagger a, X}."""
    m = np.asarray(b, dtype=complex).conj().T @ np.asarray(a, dtype=complex)
    return sandwich(a, b) - 0.5 * (spre(m) + spost(m))


@dataclass(frozen=True)
class Superoperator:
    """Linear map on dim x dim operators, stored as a dim^2 x dim^2 matrix
    acting on column-major vectorized operators."""

    matrix: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = int(round(np.sqrt(m.shape[0])))
        if m.ndim != 2 or m.shape[0] != m.shape[1] or d * d != m.shape[0]:
            raise OperatorError(f"superoperator matrix has bad shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise OperatorError("superoperator contains NaN or Inf entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)

    def apply(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(np.asarray(rho)), self.dim)

    def expm(self) -> "Superoperator":
        return Superoperator(matrix_exponential(self.matrix))

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix + other.matrix)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


def matrix_exponential(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring (order-13 Pade core)."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise OperatorError("matrix_exponential: NaN or Inf entries")
    return scipy.linalg.expm(a)


def gibbs_state(h, beta: float) -> DensityMatrix:
    """Thermal state e^{-beta h} / Tr e^{-beta h} via eigendecomposition.

    Energies are shifted by the ground-state energy before exponentiation so
    the partition sum cannot overflow for large beta.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise OperatorError(f"beta must be finite and positive, got {beta}")
    hm = _hermitize(_as_matrix(h))
    w, v = np.linalg.eigh(hm)
    z = np.exp(-beta * (w - w.min()))
    z /= z.sum()
    return DensityMatrix((v * z) @ v.conj().T)


def _ptrace_second_raw(m: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    r = m.reshape(d_a, d_b, d_a, d_b)
    return np.einsum("ibjb->ij", r)


def partial_trace_second(rho, d_a: int, d_b: int):
    """Trace out the second tensor factor of a state on a d_a x d_b space."""
    m = _as_matrix(rho)
    if m.shape[0] != d_a * d_b:
        raise OperatorError(f"dimension mismatch: {m.shape[0]} != {d_a} * {d_b}")
    out = _ptrace_second_raw(m, d_a, d_b)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out)
    return out


def choi_matrix(w: Superoperator) -> np.ndarray:
    """Choi matrix C = sum_{kl} W(|k><l|) otimes |k><l|.

    W is completely positive iff C is positive semidefinite.
    """
    d = w.dim
    c = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for l in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = 1.0
            c += np.kron(w.apply(e), e)
    return c


@dataclass(frozen=True)
class CPTPReport:
    min_choi_eig: float
    trace_defect: float
    tol: float

    @property
    def completely_positive(self) -> bool:
        return self.min_choi_eig >= -self.tol * self._dim

    @property
    def trace_preserving(self) -> bool:
        return self.trace_defect <= self.tol

    @property
    def passed(self) -> bool:
        return self.completely_positive and self.trace_preserving

    # dim is stashed by is_cptp; default keeps the dataclass simple
    _dim: int = 1


def is_cptp(w: Superoperator, tol: float = 1e-9) -> CPTPReport:
    """Check complete positivity (Choi spectrum) and trace preservation."""
    c = choi_matrix(w)
    min_eig = float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min())
    d = w.dim
    tr_row = vec(np.eye(d)).conj() @ w.matrix
    trace_defect = float(np.abs(tr_row - vec(np.eye(d)).conj()).max())
    return CPTPReport(min_eig, trace_defect, tol, _dim=d)


def trace_distance(rho, sigma) -> float:
    """(1/2) * trace norm of the difference."""
    d = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    d = 0.5 * (d + d.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum())
