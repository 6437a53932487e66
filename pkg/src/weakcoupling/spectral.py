"""Eigenstructure of the system Hamiltonian: degenerate-level projectors,
Bohr frequencies, and jump operators S_i(omega)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import HermitianOperator, _as_matrix

__all__ = ["EigenDecomposition", "JumpOperatorSet", "decompose", "jump_operators", "verify_eigenoperator"]

DEFAULT_TAU_DEG = 1e-9
ZERO_FREQ_WARN_TOL = 1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    """Merged eigenlevels of a Hermitian operator.

    ``energies[k]`` is the (degeneracy-averaged) level energy, ``projectors[k]``
    the orthogonal projector onto its eigenspace; levels closer than
    ``tau_deg`` times the spectral range are merged.
    """

    energies: np.ndarray
    projectors: tuple
    tau_deg: float
    hamiltonian: np.ndarray

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def diag_project(self, a: np.ndarray) -> np.ndarray:
        """Projection onto the level-diagonal part, sum_k P_k A P_k."""
        return sum(p @ np.asarray(a, dtype=complex) @ p for p in self.projectors)


def decompose(h, tau_deg: float = DEFAULT_TAU_DEG) -> EigenDecomposition:
    """Hermitian eigendecomposition with degeneracy merging."""
    hm = _as_matrix(h)
    hm = 0.5 * (hm + hm.conj().T)
    w, v = np.linalg.eigh(hm)
    spread = w[-1] - w[0]
    scale = spread if spread > 0 else max(abs(w[0]), 1.0)
    tol = tau_deg * scale
    groups = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            groups.append((start, k))
            start = k
    energies = np.array([w[a:b].mean() for a, b in groups])
    projectors = tuple(v[:, a:b] @ v[:, a:b].conj().T for a, b in groups)
    return EigenDecomposition(energies, projectors, tau_deg, hm)


@dataclass(frozen=True)
class JumpOperatorSet:
    """Jump operators S_i(omega) for Bohr frequencies omega = eps' - eps.

    ``operators`` has shape (n_freq, n_coupling, dim, dim); frequency a pairs
    with ``frequencies[a]``.  The list includes omega = 0 only when some
    coupling operator has a nonvanishing level-diagonal part.
    """

    frequencies: np.ndarray
    operators: np.ndarray
    hamiltonian: np.ndarray
    eig: EigenDecomposition

    @property
    def n_couplings(self) -> int:
        return self.operators.shape[1]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def op(self, i: int, a: int) -> np.ndarray:
        """S_i at frequency index a."""
        return self.operators[a, i]

    def index_of(self, omega: float) -> int:
        a = int(np.argmin(np.abs(self.frequencies - omega)))
        if not np.isclose(self.frequencies[a], omega, rtol=0, atol=1e-9 * max(1.0, abs(omega))):
            raise KeyError(f"{omega} is not a Bohr frequency of this set")
        return a

    def coupling_sum(self) -> np.ndarray:
        """sum_omega S_i(omega), which must reproduce S_i."""
        return self.operators.sum(axis=0)


def jump_operators(eig: EigenDecomposition, couplings, warn_tol: float = ZERO_FREQ_WARN_TOL) -> JumpOperatorSet:
    """Spectral decomposition S_i(omega) = sum_{eps'-eps=omega} P(eps) S_i P(eps')."""
    s_list = [_as_matrix(s) for s in couplings]
    if not s_list:
        raise ValueError("need at least one coupling operator")
    d = eig.dim
    for s in s_list:
        if s.shape != (d, d):
            raise ValueError("coupling operator dimension mismatch")

    ens = eig.energies
    spread = ens[-1] - ens[0] if len(ens) > 1 else max(abs(ens[0]), 1.0)
    tol = max(eig.tau_deg * max(spread, 1e-300), 0.0)

    # Bohr frequencies as exact differences of merged level energies, so that
    # omega and -omega stay exactly paired; positive list first, then mirror.
    pos = []
    for a in range(len(ens)):
        for b in range(len(ens)):
            if ens[b] - ens[a] > tol:
                w = ens[b] - ens[a]
                if not any(abs(w - p) <= tol for p in pos):
                    pos.append(w)
    pos = sorted(pos)

    freqs = [-w for w in reversed(pos)] + [0.0] + pos
    ops = np.zeros((len(freqs), len(s_list), d, d), dtype=complex)
    for ai, w in enumerate(freqs):
        for a in range(len(ens)):
            for b in range(len(ens)):
                if abs((ens[b] - ens[a]) - w) <= tol:
                    for i, s in enumerate(s_list):
                        ops[ai, i] += eig.projectors[a] @ s @ eig.projectors[b]

    zi = freqs.index(0.0)
    diag_norms = [np.linalg.norm(ops[zi, i]) for i in range(len(s_list))]
    keep_zero = False
    for i, dn in enumerate(diag_norms):
        sn = max(np.linalg.norm(s_list[i]), 1e-300)
        if dn > 1e-14 * sn:
            keep_zero = True
        if dn > warn_tol * sn:
            warnings.warn(
                f"coupling operator {i} has a level-diagonal part of relative "
                f"norm {dn / sn:.2e}; zero-frequency jump terms are included",
                stacklevel=2,
            )
    if not keep_zero:
        sel = [k for k in range(len(freqs)) if k != zi]
        freqs = [freqs[k] for k in sel]
        ops = ops[sel]

    return JumpOperatorSet(np.array(freqs), ops, eig.hamiltonian, eig)


def verify_eigenoperator(eig: EigenDecomposition, jset: JumpOperatorSet) -> float:
    """Largest residual of the eigenoperator identities.

    First kind:  [H, S_i(w)] + w S_i(w) = 0.
    Second kind: [H, S_i(w)^dag S_j(w')] - (w - w') S_i(w)^dag S_j(w') = 0.
    """
    h = eig.hamiltonian
    res = 0.0
    nf, nc = jset.operators.shape[:2]
    for a in range(nf):
        w = jset.frequencies[a]
        for i in range(nc):
            s = jset.operators[a, i]
            res = max(res, np.linalg.norm(h @ s - s @ h + w * s))
    for a in range(nf):
        for b in range(nf):
            dw = jset.frequencies[a] - jset.frequencies[b]
            for i in range(nc):
                for j in range(nc):
                    m = jset.operators[a, i].conj().T @ jset.operators[b, j]
                    res = max(res, np.linalg.norm(h @ m - m @ h - dw * m))
    return float(res)
