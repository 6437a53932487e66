"""Brute-force ground truth: the system coupled to a finite set of truncated
harmonic oscillators.

Provides the exact unitary reduced dynamics and the exact partial trace of
the global Gibbs state, plus :class:`DiscreteBath`, which exposes the same
correlation-function surface as :class:`~weakcoupling.bath.BathModel` but
with closed-form mode sums, so the master equations can be evaluated on
exactly the spectrum the oracle uses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ._phase import e_t, i2
from .bath import BathError, SpectralDensity
from .operators import DensityMatrix, OperatorError

__all__ = [
    "TruncatedBath",
    "DiscreteBath",
    "discretize_bath",
    "total_hamiltonian",
    "exact_reduced_evolution",
    "exact_mean_force",
]

DIMENSION_CAP = 8192


@dataclass(frozen=True)
class TruncatedBath:
    """Finite mode set: frequencies, couplings, per-mode Fock cap n_max."""

    frequencies: np.ndarray
    couplings: np.ndarray
    n_max: int
    delta_omega: float

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        g = np.asarray(self.couplings, dtype=float)
        if w.ndim != 1 or w.shape != g.shape or len(w) < 1:
            raise BathError("mode frequencies and couplings must be matching 1-d arrays")
        if np.any(w <= 0):
            raise BathError("mode frequencies must be positive")
        if self.n_max < 1:
            raise BathError("per-mode truncation must keep at least two levels")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", g)

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def mode_dim(self) -> int:
        return self.n_max + 1

    def total_dim(self, d_system: int) -> int:
        return d_system * self.mode_dim**self.n_modes

    def check_dim(self, d_system: int):
        d = self.total_dim(d_system)
        if d > DIMENSION_CAP:
            raise OperatorError(
                f"oracle dimension {d} exceeds the cap {DIMENSION_CAP} "
                f"({self.n_modes} modes at {self.mode_dim} levels)"
            )

    def recurrence_time(self) -> float:
        return 2.0 * np.pi / self.delta_omega


def discretize_bath(spectral: SpectralDensity, n_modes: int, omega_max: float | None = None, n_max: int = 4) -> TruncatedBath:
    """Equidistant midpoint modes on (0, omega_max], omega_max = 6 omega_c by
    default, with |g_k|^2 = J(omega_k) * d_omega / (2 pi).

    The 2 pi normalization makes the discrete correlation function
    sum |g|^2 [(N+1) e^{-iwt} + N e^{iwt}] converge to the continuum
    (1/2pi) int e^{-iOt} gamma(O) dO under the gamma = J (N+1) convention.
    """
    if n_modes < 1:
        raise BathError("need at least one mode")
    if omega_max is None:
        if spectral.family != "ohmic-exponential":
            raise BathError("omega_max must be given for tabulated densities")
        omega_max = 6.0 * spectral.omega_c
    d_omega = omega_max / n_modes
    freqs = (np.arange(n_modes) + 0.5) * d_omega
    g2 = spectral.j(freqs) * d_omega / (2.0 * np.pi)
    return TruncatedBath(freqs, np.sqrt(g2), n_max, d_omega)


@dataclass
class DiscreteBath:
    """Correlation functions of the truncated-mode bath in closed form.

    Duck-types the scalar surface of :class:`BathModel` (single coupling
    operator, c = [[1]]): emission lines at +omega_k with weight g^2 (N+1)
    and absorption lines at -omega_k with weight g^2 N.  The instantaneous
    rate gamma(omega) is a sum of delta functions and therefore undefined;
    the finite-time and principal-value objects are all regular off the
    mode frequencies.
    """

    modes: TruncatedBath
    beta: float
    c: np.ndarray = field(default_factory=lambda: np.array([[1.0]]))
    r_expect: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise BathError(f"beta must be finite and positive, got {self.beta}")
        w = self.modes.frequencies
        g2 = self.modes.couplings**2
        n = 1.0 / np.expm1(self.beta * w)
        self._lines = np.concatenate([w, -w])
        self._weights = np.concatenate([g2 * (n + 1.0), g2 * n])

    def _offsets(self, omega: float) -> np.ndarray:
        x = omega - self._lines
        if np.abs(x).min() < 1e-9:
            raise BathError(f"frequency {omega} collides with a bath mode line")
        return x

    def gamma(self, omega: float) -> float:
        raise BathError(
            "the discrete-mode rate function is a sum of delta lines; "
            "use finite-time or principal-value objects instead"
        )

    def lamb_S(self, omega: float) -> float:
        return float(np.sum(self._weights / self._offsets(omega)))

    def d_lamb_S(self, omega: float) -> float:
        return float(-np.sum(self._weights / self._offsets(omega) ** 2))

    def Gamma(self, omega: float) -> complex:
        # off the mode lines the half-line transform is purely imaginary
        return 1j * self.lamb_S(omega)

    def Gamma_t(self, omega: float, t: float) -> complex:
        return complex(np.sum(self._weights * e_t(self._offsets(omega), t)))

    def correlation(self, tau: float) -> complex:
        return complex(np.sum(self._weights * np.exp(-1j * self._lines * tau)))

    def kernel_scalar_matrix(self, omegas, t: float, rtol: float = 0.0) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=float)
        e = np.empty((len(omegas), len(self._lines)), dtype=complex)
        for a, wa in enumerate(omegas):
            e[a] = e_t(wa - self._lines, t)
        return (e.conj() * self._weights) @ e.T

    def kernel_scalar_matrix_diff(self, omegas, t: float, h: float, rtol: float = 0.0) -> np.ndarray:
        return self.kernel_scalar_matrix(omegas, t + h) - self.kernel_scalar_matrix(omegas, t - h)

    def xi_scalar(self, omega: float, omega_p: float, t: float) -> complex:
        delta = omega_p - omega
        term_a = i2(delta, omega - self._lines, t)
        term_b = i2(delta, self._lines - omega_p, t)
        return complex(np.sum(self._weights * (term_a - term_b)) / 2j)


def _mode_operators(n_levels: int):
    lower = np.diag(np.sqrt(np.arange(1, n_levels)), k=1)
    number = np.diag(np.arange(n_levels, dtype=float))
    return lower, number


def total_hamiltonian(h_system, coupling, tbath: TruncatedBath, lam: float = 1.0, sparse: bool = False):
    """H = H_S x 1 + 1 x sum_k w_k n_k + lam S x sum_k g_k (b_k + b_k^dag),
    with truncated ladder operators (Fock cap n_max per mode)."""
    h_s = np.asarray(h_system, dtype=complex)
    s_op = np.asarray(coupling, dtype=complex)
    d_s = h_s.shape[0]
    tbath.check_dim(d_s)
    q = tbath.mode_dim
    m = tbath.n_modes
    kind = scipy.sparse.csr_matrix if sparse else np.asarray

    def kron_chain(ops):
        out = None
        for o in ops:
            o = scipy.sparse.csr_matrix(o) if sparse else np.asarray(o)
            out = o if out is None else (
                scipy.sparse.kron(out, o, format="csr") if sparse else np.kron(out, o)
            )
        return out

    lower, number = _mode_operators(q)
    eye_s = np.eye(d_s)
    eye_q = np.eye(q)

    h = kron_chain([h_s] + [eye_q] * m)
    for k in range(m):
        ops = [eye_s] + [eye_q] * m
        ops[1 + k] = tbath.frequencies[k] * number
        h = h + kron_chain(ops)
        pos = (lower + lower.T) * tbath.couplings[k]
        ops = [s_op] + [eye_q] * m
        ops[1 + k] = lam * pos
        h = h + kron_chain(ops)
    return kind(h) if sparse else np.asarray(h)


def _thermal_mode_weights(tbath: TruncatedBath, beta: float) -> list[np.ndarray]:
    out = []
    for w in tbath.frequencies:
        p = np.exp(-beta * w * np.arange(tbath.mode_dim))
        out.append(p / p.sum())
    return out


def _significant_strings(weights: list[np.ndarray], cutoff: float):
    """Fock strings whose joint thermal probability exceeds the cutoff."""
    strings = [((), 1.0)]
    for p in weights:
        new = []
        for idx, prob in strings:
            for n, pn in enumerate(p):
                joint = prob * pn
                if joint >= cutoff:
                    new.append((idx + (n,), joint))
        strings = new
    return strings


def exact_reduced_evolution(
    h_system,
    coupling,
    tbath: TruncatedBath,
    beta: float,
    rho0,
    times,
    lam: float = 1.0,
    prob_cutoff: float = 1e-12,
):
    """Exact reduced dynamics rho_S(t) = Tr_R[U (rho0 x rho_beta) U^dag].

    The thermal mode ensemble is truncated to Fock strings above
    ``prob_cutoff`` joint probability (discarded mass is reported), each
    propagated with a sparse Krylov matrix exponential, so no dense
    diagonalization of the composite space is needed.

    Returns (states, info) with per-time diagnostics including the largest
    population found on any mode's top Fock level (truncation indicator).
    """
    rho0 = DensityMatrix(np.asarray(rho0, dtype=complex))
    d_s = rho0.dim
    tbath.check_dim(d_s)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")

    weights = _thermal_mode_weights(tbath, beta)
    strings = _significant_strings(weights, prob_cutoff)
    kept = sum(p for _, p in strings)
    q = tbath.mode_dim
    m = tbath.n_modes
    d_r = q**m

    h = total_hamiltonian(h_system, coupling, tbath, lam, sparse=True)

    # columns: system basis a x kept Fock strings
    cols = np.zeros((d_s * d_r, d_s * len(strings)), dtype=complex)
    for r, (fock, _) in enumerate(strings):
        ridx = 0
        for n in fock:
            ridx = ridx * q + n
        for a in range(d_s):
            cols[a * d_r + ridx, r * d_s + a] = 1.0

    # mask of composite basis states where some mode sits at its Fock cap
    cap_mask = np.zeros(d_r, dtype=bool)
    idx = np.arange(d_r)
    for k in range(m):
        level = (idx // q ** (m - 1 - k)) % q
        cap_mask |= level == q - 1
    cap_mask = np.tile(cap_mask, d_s)

    uniform = len(times) > 1 and np.allclose(np.diff(times), times[1] - times[0], rtol=1e-12, atol=1e-15)
    if uniform:
        prop = scipy.sparse.linalg.expm_multiply(
            -1j * h, cols, start=times[0], stop=times[-1], num=len(times), endpoint=True
        )
    else:
        prop = np.empty((len(times),) + cols.shape, dtype=complex)
        for k, t in enumerate(times):
            prop[k] = scipy.sparse.linalg.expm_multiply(-1j * h * t, cols) if t != 0 else cols

    states = []
    infos = []
    probs = np.array([p for _, p in strings]) / kept
    for k in range(len(times)):
        psi = prop[k]
        rho = np.zeros((d_s, d_s), dtype=complex)
        cap_pop = 0.0
        for r in range(len(strings)):
            block = psi[:, r * d_s : (r + 1) * d_s]  # (D, d_s), column a = |psi_{a,r}>
            cap_pop += probs[r] * float((np.abs(block[cap_mask]) ** 2).sum(axis=0).max())
            phi = block.T.reshape(d_s, d_s, d_r)  # phi[a, s, r']
            rho += probs[r] * np.einsum("ab,asr,btr->st", rho0.entries, phi, phi.conj())
        states.append(rho)
        infos.append({"t": float(times[k]), "cap_population": cap_pop, "trace_defect": float(abs(np.trace(rho) - 1.0))})
        if cap_pop > 1e-6:
            warnings.warn(
                f"top Fock level population {cap_pop:.2e} at t = {times[k]:.4g}; "
                "raise n_max for a trustworthy oracle",
                stacklevel=2,
            )
    info = {
        "discarded_probability": float(1.0 - kept),
        "n_strings": len(strings),
        "total_dim": d_s * d_r,
        "per_time": infos,
    }
    return states, info


def exact_mean_force(h_total, beta: float, d_system: int) -> DensityMatrix:
    """Tr_R[e^{-beta H_total}] / Tr[e^{-beta H_total}] by dense
    eigendecomposition of the composite Hamiltonian."""
    h = np.asarray(h_total, dtype=complex)
    d = h.shape[0]
    if d % d_system != 0:
        raise OperatorError(f"total dimension {d} not divisible by system dimension {d_system}")
    d_r = d // d_system
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    boltz = np.exp(-beta * (w - w.min()))
    vr = v.reshape(d_system, d_r, d)
    rho = np.einsum("arm,m,brm->ab", vr, boltz, vr.conj())
    return DensityMatrix(rho / np.trace(rho))
