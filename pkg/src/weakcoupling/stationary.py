"""Steady-state analysis: null-space solves, Gibbs comparisons, the Redfield
stationary-state correction, and coherence diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bath import BathModel
from .operators import DensityMatrix, HermitianOperator, Superoperator, gibbs_state, trace_distance, unvec
from .spectral import JumpOperatorSet, decompose

__all__ = [
    "null_space",
    "steady_state",
    "redfield_delta_H",
    "coherence_report",
    "CoherenceReport",
    "SteadyStateReport",
    "gibbs_comparison",
]

KERNEL_SV_TOL = 1e-10


def null_space(l: Superoperator, sv_tol: float = KERNEL_SV_TOL):
    """Kernel of the generator matrix by SVD.

    Returns (dimension, basis) where basis rows are vectorized operators
    spanning the numerical null space (singular values below sv_tol relative
    to the largest)."""
    m = l.matrix
    _, s, vh = np.linalg.svd(m)
    top = s.max() if s.size and s.max() > 0 else 1.0
    mask = s <= sv_tol * top
    return int(mask.sum()), vh[mask].conj()


def steady_state(l: Superoperator, sv_tol: float = KERNEL_SV_TOL) -> DensityMatrix:
    """Unit-trace element of ker L.

    A kernel dimension other than one triggers a non-ergodicity warning; the
    returned state is then the trace-normalized projection of the maximally
    mixed state onto the kernel (the full basis is available via
    :func:`null_space`)."""
    dim_ker, basis = null_space(l, sv_tol)
    d = l.dim
    if dim_ker == 0:
        raise np.linalg.LinAlgError("generator has no numerical null space")
    if dim_ker == 1:
        rho = unvec(basis[0], d)
    else:
        warnings.warn(
            f"non-ergodic generator: kernel dimension {dim_ker}; "
            "use null_space() for the full basis",
            stacklevel=2,
        )
        target = np.eye(d, dtype=complex).ravel(order="F") / d
        coeffs = basis.conj() @ target
        rho = unvec(basis.T @ coeffs, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-14:
        raise np.linalg.LinAlgError("null-space element is traceless; cannot normalize")
    rho = rho / np.trace(rho)
    w = np.linalg.eigvalsh(rho)
    if w.min() < -1e-10:
        rho = rho - min(w.min(), 0.0) * np.eye(d)  # absorb tiny negative tails
        rho = rho / np.trace(rho)
    return DensityMatrix(rho)


def redfield_delta_H(jset: JumpOperatorSet, bath: BathModel, lam: float = 1.0) -> HermitianOperator:
    """Off-diagonal correction delta H of the Redfield stationary state
    e^{-beta (H + delta H)} / Z.

    Coefficients (omega != omega'):

        f_ij(w, w') = i/(e^{b(w'-w)} - 1) [ e^{b w'} gBR_ji(-w', -w)
                      - (1/2)(e^{-b(w-w')} + 1) gBR_ij(w, w') ],

    with gBR_ij(w, w') = Gamma_ji(w) + Gamma_ij(w')^*; the diagonal
    (in the H eigenbasis) vanishes identically."""
    freqs = jset.frequencies
    beta = bath.beta
    d = jset.dim
    gam = {float(w): bath.Gamma(float(w)) for w in freqs}
    gam.update({-float(w): bath.Gamma(-float(w)) for w in freqs})
    h = np.zeros((d, d), dtype=complex)
    for a, wa in enumerate(freqs):
        for b, wb in enumerate(freqs):
            if abs(wa - wb) <= 1e-12 * max(1.0, abs(wa)):
                continue
            dw = wb - wa
            g_fwd = gam[float(wa)] + np.conj(gam[float(wb)])
            g_rev = gam[-float(wb)] + np.conj(gam[-float(wa)])
            f = (
                1j
                / np.expm1(beta * dw)
                * (np.exp(beta * wb) * g_rev - 0.5 * (np.exp(-beta * (wa - wb)) + 1.0) * g_fwd)
            )
            block = np.zeros((d, d), dtype=complex)
            for i in range(jset.n_couplings):
                for j in range(jset.n_couplings):
                    if bath.c[i, j] != 0.0:
                        block += bath.c[i, j] * (jset.op(j, b).conj().T @ jset.op(i, a))
            h += f * block
    return HermitianOperator(lam**2 * h)


@dataclass(frozen=True)
class CoherenceReport:
    populations: np.ndarray
    coherence_l1: float
    basis_energies: np.ndarray


def coherence_report(rho, h_basis, tau_deg: float = 1e-9) -> CoherenceReport:
    """Populations and off-diagonal 1-norm of rho in the eigenbasis of
    ``h_basis`` (the basis is always stated explicitly through the report)."""
    eig = decompose(np.asarray(h_basis, dtype=complex), tau_deg)
    w, v = np.linalg.eigh(eig.hamiltonian)
    r = v.conj().T @ np.asarray(rho, dtype=complex) @ v
    pops = r.diagonal().real.copy()
    coh = float(np.abs(r - np.diag(r.diagonal())).sum())
    return CoherenceReport(pops, coh, w)


@dataclass(frozen=True)
class SteadyStateReport:
    steady: DensityMatrix
    reference: DensityMatrix
    trace_dist: float
    population_dist: float
    coherence_l1: float
    basis_energies: np.ndarray
    delta_h: HermitianOperator | None = None


def gibbs_comparison(steady: DensityMatrix, h_ref, beta: float, delta_h=None) -> SteadyStateReport:
    """Compare a steady state against the Gibbs state of ``h_ref``, reporting
    the trace distance, the population distance in the h_ref eigenbasis, and
    the residual coherence there."""
    ref = gibbs_state(h_ref, beta)
    rep = coherence_report(steady.entries, h_ref)
    ref_rep = coherence_report(ref.entries, h_ref)
    return SteadyStateReport(
        steady,
        ref,
        trace_distance(steady.entries, ref.entries),
        float(np.abs(rep.populations - ref_rep.populations).sum()),
        rep.coherence_l1,
        rep.basis_energies,
        delta_h,
    )
