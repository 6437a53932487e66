"""Static renormalization: truncated Zassenhaus products and the mean-force
Hamiltonian corrections obtained from the reduced global thermal state."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .bath import BathModel
from .generators import centering_correction
from .operators import HermitianOperator, gibbs_state
from .spectral import JumpOperatorSet, decompose, jump_operators

__all__ = [
    "zassenhaus_truncated",
    "mf_correction_1",
    "upsilon2",
    "mf_correction_2",
    "mean_force",
    "MeanForceResult",
    "correction_discrepancy",
]

UPSILON_DIAGONAL_WINDOW = 1e-6  # |omega' - omega| * beta below which the limit branch is used


class ZassenhausError(RuntimeError):
    """Inner operator series failed to converge within the term cap."""


def _inner_sum(a: np.ndarray, b: np.ndarray, rel_tol: float, n_cap: int):
    """Terms B_m = (ad_a)^(m-1) b / m! until the running sum stabilizes."""
    terms = []
    cur = b.copy()  # B_1; recursion B_{m+1} = ad_a(B_m) / (m + 1)
    total = 0.0
    for m in range(1, n_cap + 1):
        terms.append(cur.copy())
        total += np.linalg.norm(cur)
        cur = (a @ cur - cur @ a) / (m + 1.0)
        if np.linalg.norm(cur) < rel_tol * max(total, 1e-300):
            return terms
    raise ZassenhausError(
        f"inner Zassenhaus sum did not converge within {n_cap} terms "
        f"(residual term norm {np.linalg.norm(cur):.3e})"
    )


def zassenhaus_truncated(a, b, p_max: int, *, rel_tol: float = 1e-14, n_cap: int = 60) -> np.ndarray:
    """Truncated expansion of e^{a+b} as {1 + sum_{p<=p_max} T_p} e^a with
    T_p built from B_m = (ad_a)^{m-1} b / m! and the combinatorial weights
    n_p...n_1 / (n_p (n_p+n_{p-1}) ... (n_p+...+n_1)).

    Only p_max in {1, 2} is supported; the truncation error is O(b^{p_max+1}).
    """
    if p_max not in (1, 2):
        raise ValueError("p_max must be 1 or 2")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    bm = _inner_sum(a, b, rel_tol, n_cap)  # bm[m-1] = B_m
    d = a.shape[0]
    pref = np.eye(d, dtype=complex)
    # p = 1: sum_m B_m
    for t in bm:
        pref = pref + t
    if p_max == 2:
        # p = 2: sum_{n1,n2} n1/(n1+n2) B_{n2} B_{n1}
        for n2, b2 in enumerate(bm, start=1):
            acc = np.zeros_like(a)
            for n1, b1 in enumerate(bm, start=1):
                contrib = (n1 / (n1 + n2)) * (b2 @ b1)
                acc += contrib
                if np.linalg.norm(contrib) < rel_tol * max(np.linalg.norm(acc), 1e-300):
                    break
            pref = pref + acc
    return pref @ scipy.linalg.expm(a)


def mf_correction_1(couplings, r_expect) -> HermitianOperator:
    """First static correction sum_i S_i <R_i>; identical to the centering
    correction of the dynamical derivation."""
    s0 = np.asarray(couplings[0], dtype=complex)
    hc1, _ = centering_correction(np.zeros_like(s0), couplings, r_expect)
    return hc1


def upsilon2(bath, omega: float, omega_p: float) -> float:
    """Scalar coefficient of the second mean-force correction.

    For omega' != omega:

        (e^{b d} S(w) - S(w') - e^{b w'} (S(-w') - S(-w))) / (e^{b d} - 1),
        d = w' - w,

    and the limit branch S(w) - (1/beta)(dS(w) + e^{b w} dS(-w)) when
    beta |w' - w| falls below the switching window.
    """
    beta = bath.beta
    d = omega_p - omega
    if abs(d) * beta < UPSILON_DIAGONAL_WINDOW:
        return bath.lamb_S(omega) - (bath.d_lamb_S(omega) + np.exp(beta * omega) * bath.d_lamb_S(-omega)) / beta
    edb = np.expm1(beta * d)  # e^{beta d} - 1
    num = (
        (edb + 1.0) * bath.lamb_S(omega)
        - bath.lamb_S(omega_p)
        - np.exp(beta * omega_p) * (bath.lamb_S(-omega_p) - bath.lamb_S(-omega))
    )
    return num / edb


def mf_correction_2(jset: JumpOperatorSet, bath, lam: float = 1.0) -> HermitianOperator:
    """Second static correction sum Upsilon_ij(w, w') S_i(w)^dag S_j(w')."""
    freqs = jset.frequencies
    d = jset.dim
    h = np.zeros((d, d), dtype=complex)
    for a, wa in enumerate(freqs):
        for b, wb in enumerate(freqs):
            u = upsilon2(bath, float(wa), float(wb))
            block = np.zeros((d, d), dtype=complex)
            for i in range(jset.n_couplings):
                for j in range(jset.n_couplings):
                    if bath.c[i, j] != 0.0:
                        block += bath.c[i, j] * (jset.op(i, a).conj().T @ jset.op(j, b))
            h += u * block
    return HermitianOperator(lam**2 * h)


class MeanForceResult:
    """Corrections, effective Hamiltonian and its Gibbs state.

    The pipeline re-centers first (the first correction uses the given
    reservoir expectations, after which the correlators are centered), then
    assembles the second correction on the Bohr frequencies of H^(1).
    """

    def __init__(self, h_c1, h_c2, h_mf2, gibbs, upsilon_table, commutator_norm):
        self.h_c1 = h_c1
        self.h_c2 = h_c2
        self.h_mf2 = h_mf2
        self.gibbs = gibbs
        self.upsilon_table = upsilon_table
        self.commutator_norm = commutator_norm


def mean_force(h0, couplings, bath, lam: float = 1.0, tau_deg: float = 1e-9) -> MeanForceResult:
    """Second-order mean-force Hamiltonian H^(mf,2) = H^(0) + H_C1 + H_C2 and
    its Gibbs state at the bath temperature."""
    hc1, h1 = centering_correction(h0, couplings, bath.r_expect)
    hc1 = HermitianOperator(lam * hc1.entries)
    h1 = HermitianOperator(np.asarray(h0, dtype=complex) + hc1.entries)
    jset = jump_operators(decompose(h1.entries, tau_deg), couplings)
    hc2 = mf_correction_2(jset, bath, lam)
    h_mf2 = HermitianOperator(h1.entries + hc2.entries)
    freqs = jset.frequencies
    table = np.array(
        [[upsilon2(bath, float(wa), float(wb)) for wb in freqs] for wa in freqs]
    )
    comm = h1.entries @ hc2.entries - hc2.entries @ h1.entries
    return MeanForceResult(
        hc1, hc2, h_mf2, gibbs_state(h_mf2.entries, bath.beta), table, float(np.linalg.norm(comm))
    )


def correction_discrepancy(jset: JumpOperatorSet, bath, lam: float = 1.0):
    """Level-diagonal difference between the static and dynamical second
    corrections.

    Returns (closed_form, direct): the closed form

        -(1/beta) sum_w sum_ij (dS_ij(w) + e^{bw} dS_ji(-w)) S_i(w)^dag S_j(w)

    and the directly computed diagonal projection of
    H_mf_C2 - H_C2(t = inf); the two agree to the lambda^4 order of the
    scenario."""
    from .cumulant import second_correction

    freqs = jset.frequencies
    d = jset.dim
    beta = bath.beta
    closed = np.zeros((d, d), dtype=complex)
    for a, wa in enumerate(freqs):
        coeff = -(bath.d_lamb_S(float(wa)) + np.exp(beta * wa) * bath.d_lamb_S(-float(wa))) / beta
        block = np.zeros((d, d), dtype=complex)
        for i in range(jset.n_couplings):
            for j in range(jset.n_couplings):
                if bath.c[i, j] != 0.0:
                    block += bath.c[i, j] * (jset.op(i, a).conj().T @ jset.op(j, a))
        closed += coeff * block
    closed = HermitianOperator(lam**2 * closed)

    h_mf2 = mf_correction_2(jset, bath, lam)
    h_c2 = second_correction(jset, bath, lam=lam)
    direct = jset.eig.diag_project(h_mf2.entries - h_c2.entries)
    return closed, HermitianOperator(direct)
