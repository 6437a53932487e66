"""Markovian and Redfield generators: the secular (Davies) GKSL dissipator,
Lamb-Stark Hamiltonian, time-dependent Bloch-Redfield generator, and the
simplified three-step renormalization recipe."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import BathModel
from .operators import HermitianOperator, Superoperator, commutator_superop, dissipator_superop
from .spectral import JumpOperatorSet, decompose, jump_operators

__all__ = [
    "GeneratorOptions",
    "centering_correction",
    "lamb_stark_hamiltonian",
    "davies_generator",
    "redfield_generator",
    "renormalize_simplified",
]


@dataclass(frozen=True)
class GeneratorOptions:
    """Equation assembly flags.

    ``renormalized`` means the Hamiltonian in use is already the physical one
    (Bohr frequencies of H^(1)) and forces the Lamb-Stark term off.
    """

    include_lamb_stark: bool = False
    picture: str = "schrodinger"
    renormalized: bool = False

    def __post_init__(self):
        if self.picture not in ("schrodinger", "interaction"):
            raise ValueError(f"unknown picture {self.picture!r}")
        if self.renormalized and self.include_lamb_stark:
            object.__setattr__(self, "include_lamb_stark", False)


def centering_correction(h0, couplings, r_expect) -> tuple[HermitianOperator, HermitianOperator]:
    """First-order correction H_C^(1) = sum_i S_i <R_i> and the centered
    Hamiltonian H^(1) = H^(0) + H_C^(1)."""
    h0 = np.asarray(h0, dtype=complex)
    r = np.asarray(r_expect, dtype=float)
    hc1 = np.zeros_like(h0)
    for s, ri in zip(couplings, r, strict=True):
        hc1 = hc1 + float(ri) * np.asarray(s, dtype=complex)
    return HermitianOperator(hc1), HermitianOperator(h0 + hc1)


def lamb_stark_hamiltonian(jset: JumpOperatorSet, bath: BathModel) -> HermitianOperator:
    """H_LS = sum_omega sum_ij S_ij(omega) S_i(omega)^dag S_j(omega)."""
    d = jset.dim
    h = np.zeros((d, d), dtype=complex)
    for a, w in enumerate(jset.frequencies):
        s_w = bath.lamb_S(float(w))
        block = np.zeros((d, d), dtype=complex)
        for i in range(jset.n_couplings):
            for j in range(jset.n_couplings):
                if bath.c[i, j] != 0.0:
                    block += bath.c[i, j] * (jset.op(i, a).conj().T @ jset.op(j, a))
        h += s_w * block
    return HermitianOperator(h)


def davies_generator(
    jset: JumpOperatorSet,
    bath: BathModel,
    opts: GeneratorOptions = GeneratorOptions(),
    lam: float = 1.0,
) -> Superoperator:
    """Secular GKSL generator.

    L(rho) = -i [H + lam^2 H_LS, rho]
             + lam^2 sum_omega sum_ij gamma_ij(omega)
               (S_j(omega) rho S_i(omega)^dag - (1/2){S_i^dag S_j, rho}),

    with the commutator term restricted to H_LS in the interaction picture
    and dropped entirely when the Lamb-Stark flag is off.
    """
    d = jset.dim
    l = np.zeros((d * d, d * d), dtype=complex)
    if opts.picture == "schrodinger":
        l += -1j * commutator_superop(jset.hamiltonian)
    if opts.include_lamb_stark:
        h_ls = lamb_stark_hamiltonian(jset, bath)
        l += -1j * lam**2 * commutator_superop(h_ls.entries)
    lam2 = lam**2
    for a, w in enumerate(jset.frequencies):
        g_w = bath.gamma(float(w))
        for i in range(jset.n_couplings):
            for j in range(jset.n_couplings):
                rate = bath.c[i, j] * g_w
                if rate != 0.0:
                    l += lam2 * rate * dissipator_superop(jset.op(j, a), jset.op(i, a))
    return Superoperator(l)


def redfield_generator(
    jset: JumpOperatorSet,
    bath: BathModel,
    t: float = math.inf,
    picture: str = "interaction",
    lam: float = 1.0,
) -> Superoperator:
    """Bloch-Redfield generator with the finite-time kernel

        gBR_ij(w, w', t) = e^{i (w'-w) t} (Gamma^(t)_ji(w) + Gamma^(t)*_ij(w')),

    acting as sum gBR (S_i(w) rho S_j(w')^dag - (1/2){S_j^dag S_i, rho}).
    ``t = inf`` substitutes the stationary Gamma; the Schroedinger picture
    drops the oscillating phase and adds -i[H, .].
    """
    if t < 0:
        raise ValueError(f"Redfield generator needs t >= 0, got {t}")
    d = jset.dim
    l = np.zeros((d * d, d * d), dtype=complex)
    if picture == "schrodinger":
        l += -1j * commutator_superop(jset.hamiltonian)
    elif picture != "interaction":
        raise ValueError(f"unknown picture {picture!r}")

    freqs = jset.frequencies
    if math.isinf(t):
        gam = {float(w): bath.Gamma(float(w)) for w in freqs}
    else:
        gam = {float(w): bath.Gamma_t(float(w), t) for w in freqs}

    lam2 = lam**2
    for a, wa in enumerate(freqs):
        for b, wb in enumerate(freqs):
            phase = 1.0
            if picture == "interaction" and not math.isinf(t):
                phase = np.exp(1j * (wb - wa) * t)
            scalar = gam[float(wa)] + np.conj(gam[float(wb)])
            for i in range(jset.n_couplings):
                for j in range(jset.n_couplings):
                    coeff = bath.c[i, j] * phase * scalar
                    if coeff != 0.0:
                        l += lam2 * coeff * dissipator_superop(jset.op(i, a), jset.op(j, b))
    return Superoperator(l)


def renormalize_simplified(h0, couplings, bath: BathModel, tau_deg: float = 1e-9):
    """Three-step recipe: center the interaction, declare H^(1) physical,
    rebuild the jump operators on its Bohr frequencies, skip Lamb-Stark.

    Returns (H_ren, options, jump operator set on H_ren).
    """
    _, h_ren = centering_correction(h0, couplings, bath.r_expect)
    opts = GeneratorOptions(include_lamb_stark=False, picture="schrodinger", renormalized=True)
    jset = jump_operators(decompose(h_ren.entries, tau_deg), couplings)
    return h_ren, opts, jset
