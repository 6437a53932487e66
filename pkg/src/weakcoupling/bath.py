"""Thermal bosonic bath: spectral densities, occupation numbers, relaxation
rates gamma(omega), principal-value shifts S(omega), half-line Fourier
transforms Gamma(omega) and their finite-time versions.

The bath couples through n operators R_i with a positive semidefinite real
weight matrix c, so that every (i, j)-indexed quantity factorizes as
``c[i, j]`` times a scalar function of the single spectral density.  The
scalar functions are memoized per :class:`BathModel` instance.

Conventions (hbar = k_B = 1): ``gamma(omega) = J(omega) (N_beta(omega) + 1)``
for omega > 0 and the KMS continuation ``gamma(-omega) = e^{-beta omega}
gamma(omega)``; ``Gamma = gamma/2 + i S`` with ``S`` the principal-value
integral of ``gamma(Omega) / (omega - Omega) / (2 pi)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._integrate import QuadratureError, adaptive_gk
from ._phase import e_t

__all__ = [
    "BathError",
    "SpectralDensity",
    "BathModel",
    "occupation",
    "gamma_rate",
    "lamb_shift_S",
    "half_fourier_Gamma",
    "finite_time_Gamma",
    "correlation_function",
]


class BathError(ValueError):
    """Invalid bath parameters or an undefined limit was requested."""


def occupation(beta: float, omega: float) -> float:
    """Bose-Einstein occupation 1 / (e^{beta omega} - 1).

    Negative omega returns the analytic continuation (a negative value), so
    that detailed-balance identities hold without case splits.  omega = 0 is
    an error; rate functions handle that limit separately.
    """
    if omega == 0:
        raise BathError("occupation is singular at omega = 0; use the rate limit")
    return 1.0 / np.expm1(beta * omega)


@dataclass(frozen=True)
class SpectralDensity:
    """J(omega) on omega >= 0.

    ``ohmic-exponential``: J = kappa * omega^s / omega_c^(s-1) * e^{-omega/omega_c}.
    ``tabulated``: linear interpolation of (omega, J) samples, zero outside.
    """

    family: str = "ohmic-exponential"
    s: float = 1.0
    omega_c: float = 1.0
    kappa: float = 1.0
    table_omega: np.ndarray | None = None
    table_j: np.ndarray | None = None

    def __post_init__(self):
        if self.family == "ohmic-exponential":
            if self.s < 0:
                raise BathError(f"exponent s must be >= 0, got {self.s}")
            if not (self.omega_c > 0 and np.isfinite(self.omega_c)):
                raise BathError(f"cutoff omega_c must be positive, got {self.omega_c}")
            if self.kappa < 0:
                raise BathError(f"scale kappa must be >= 0, got {self.kappa}")
        elif self.family == "tabulated":
            om = np.asarray(self.table_omega, dtype=float)
            jj = np.asarray(self.table_j, dtype=float)
            if om.ndim != 1 or om.shape != jj.shape or len(om) < 2:
                raise BathError("tabulated density needs matching 1-d (omega, J) arrays")
            if not np.all(np.diff(om) > 0) or om[0] < 0:
                raise BathError("tabulated omegas must be increasing and >= 0")
            if np.any(jj < 0):
                raise BathError("tabulated J must be nonnegative")
            object.__setattr__(self, "table_omega", om)
            object.__setattr__(self, "table_j", jj)
        else:
            raise BathError(f"unknown spectral density family {self.family!r}")

    def j(self, abs_omega):
        """J at |omega| (vectorized)."""
        w = np.asarray(abs_omega, dtype=float)
        if self.family == "ohmic-exponential":
            with np.errstate(divide="ignore", invalid="ignore"):
                pw = np.where(w > 0, w, 1.0) ** self.s
            pw = np.where(w > 0, pw, 1.0 if self.s == 0 else 0.0)
            return self.kappa * pw * self.omega_c ** (1.0 - self.s) * np.exp(-w / self.omega_c)
        return np.interp(w, self.table_omega, self.table_j, left=0.0, right=0.0)

    def support_max(self) -> float:
        if self.family == "tabulated":
            return float(self.table_omega[-1])
        return np.inf


@dataclass
class BathModel:
    """Inverse temperature, spectral density, and the n x n coupling weights.

    ``c`` must be real symmetric positive semidefinite, which guarantees the
    rate matrix (c[i, j] * gamma(omega)) is PSD at every omega and keeps the
    KMS relation gamma_ij(-omega) = e^{-beta omega} gamma_ji(omega) exact.
    ``r_expect`` holds the reservoir expectations <R_i> used for centering.
    Treat instances as immutable; the only mutation is result memoization.
    """

    beta: float
    spectral: SpectralDensity
    c: np.ndarray = field(default_factory=lambda: np.array([[1.0]]))
    r_expect: np.ndarray | None = None
    quad_rtol: float = 1e-10
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise BathError(f"beta must be finite and positive, got {self.beta}")
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise BathError(f"cross-coupling matrix has bad shape {c.shape}")
        if np.linalg.norm(c - c.T) > 1e-12 * max(np.linalg.norm(c), 1.0):
            raise BathError("cross-coupling matrix must be real symmetric")
        w = np.linalg.eigvalsh(0.5 * (c + c.T))
        if w.min() < -1e-12 * max(w.max(), 1.0):
            raise BathError(f"cross-coupling matrix not PSD (min eig {w.min():.3e})")
        self.c = 0.5 * (c + c.T)
        if self.r_expect is None:
            self.r_expect = np.zeros(self.n)
        else:
            self.r_expect = np.asarray(self.r_expect, dtype=float)
            if self.r_expect.shape != (self.n,):
                raise BathError("r_expect must have one entry per coupling operator")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    # -- scalar rate functions ------------------------------------------------

    def gamma_zero_limit(self) -> float:
        """lim_{omega -> 0} J(omega) (N + 1): kappa/beta for Ohmic s = 1,
        zero for s > 1, divergent (error) for s < 1."""
        sd = self.spectral
        if sd.family == "tabulated":
            # tables are assumed to vanish at the origin like s > 1
            return 0.0
        if sd.s > 1:
            return 0.0
        if sd.s == 1:
            return sd.kappa / self.beta
        raise BathError(f"gamma(0) diverges for sub-Ohmic exponent s = {sd.s}")

    def gamma_vec(self, omega):
        """Full-line rate function gamma(Omega), vectorized and KMS-consistent."""
        w = np.asarray(omega, dtype=float)
        aw = np.abs(w)
        j = self.spectral.j(aw)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            n = np.where(aw > 0, 1.0 / np.expm1(self.beta * np.where(aw > 0, aw, 1.0)), 0.0)
        emission = j * (1.0 + n)
        absorption = j * n
        try:
            zero_val = self.gamma_zero_limit()
        except BathError:
            zero_val = np.nan
        out = np.where(w > 0, emission, np.where(w < 0, absorption, zero_val))
        return out if out.shape else float(out)

    def gamma(self, omega: float) -> float:
        if omega == 0:
            return self.gamma_zero_limit()
        return float(self.gamma_vec(omega))

    def window(self, omega: float = 0.0) -> float:
        """Integration window half-width: the integrand tails are below
        ~1e-17 of the peak beyond it for the Ohmic-exponential family."""
        sup = self.spectral.support_max()
        if np.isfinite(sup):
            return max(sup, abs(omega) + 40.0 / self.beta)
        return max(50.0 * self.spectral.omega_c, abs(omega) + 40.0 / self.beta)

    def _quad(self, f, w_ref: float, *, oscillation: float = 0.0, rtol=None):
        big = self.window(w_ref)
        n0 = 32
        if oscillation > 0:
            n0 = int(min(max(32, oscillation * 2 * big / np.pi), 30_000))
        return adaptive_gk(
            f,
            -big,
            big,
            rtol=self.quad_rtol if rtol is None else rtol,
            breakpoints=(0.0, w_ref),
            initial_subdiv=n0,
        )

    def lamb_S(self, omega: float) -> float:
        """Principal-value shift S(omega), by singularity subtraction plus the
        analytic log term for the subtracted constant."""
        key = ("S", omega)
        if key not in self._cache:
            g_w = self.gamma(omega)
            big = self.window(omega)

            def f(om):
                d = omega - om
                num = self.gamma_vec(om) - g_w
                with np.errstate(divide="ignore", invalid="ignore"):
                    val = np.where(d != 0, num / np.where(d != 0, d, 1.0), 0.0)
                return val

            core = self._quad(f, omega)
            log_term = g_w * np.log((big + omega) / (big - omega)) if big > abs(omega) else 0.0
            self._cache[key] = float((core + log_term) / (2.0 * np.pi))
        return self._cache[key]

    def d_lamb_S(self, omega: float) -> float:
        """d S / d omega by central differences, step 1e-4 * omega_c scale."""
        h = 1e-4 * (self.spectral.omega_c if self.spectral.family == "ohmic-exponential" else self.window(0) / 50.0)
        return (self.lamb_S(omega + h) - self.lamb_S(omega - h)) / (2.0 * h)

    def d_gamma(self, omega: float) -> float:
        h = 1e-4 * (self.spectral.omega_c if self.spectral.family == "ohmic-exponential" else self.window(0) / 50.0)
        return (self.gamma(omega + h) - self.gamma(omega - h)) / (2.0 * h)

    def Gamma(self, omega: float) -> complex:
        """Half-line Fourier transform Gamma = gamma/2 + i S."""
        return 0.5 * self.gamma(omega) + 1j * self.lamb_S(omega)

    def Gamma_t(self, omega: float, t: float) -> complex:
        """Finite-time transform integral_0^t e^{i omega u} C(u) du, evaluated
        in the frequency domain with the removable singularity at Omega = omega
        replaced by its limit t."""
        if t < 0:
            raise BathError(f"finite-time transform needs t >= 0, got {t}")
        if t == 0:
            return 0.0 + 0.0j
        key = ("Gt", omega, t)
        if key not in self._cache:

            def f(om):
                return self.gamma_vec(om) * e_t(omega - om, t) / (2.0 * np.pi)

            self._cache[key] = complex(self._quad(f, omega, oscillation=t))
        return self._cache[key]

    def correlation(self, tau: float) -> complex:
        """Scalar correlation function C(tau) = (1/2pi) int e^{-i Omega tau} gamma."""
        key = ("C", tau)
        if key not in self._cache:

            def f(om):
                return self.gamma_vec(om) * np.exp(-1j * om * tau) / (2.0 * np.pi)

            self._cache[key] = complex(self._quad(f, 0.0, oscillation=abs(tau)))
        return self._cache[key]

    # -- shared-node kernel integrals (used by the cumulant module) ----------

    def kernel_scalar_matrix(self, omegas, t: float, rtol: float = 1e-7) -> np.ndarray:
        """Matrix over frequency pairs of the two-sided finite-time kernel,

            K[a, b] = int dOmega R(Omega) conj(E_t(omega_a - Omega)) E_t(omega_b - Omega),

        with R = gamma / (2 pi).  All entries are assembled on one shared node
        set, so the result is a Gram matrix: exactly PSD and Hermitian up to
        rounding, independent of the quadrature tolerance.
        """
        omegas = np.asarray(omegas, dtype=float)
        k = len(omegas)
        if t == 0:
            return np.zeros((k, k), dtype=complex)
        big = max(self.window(float(w)) for w in omegas)

        def f(om):
            r = self.gamma_vec(om) / (2.0 * np.pi)
            e = np.empty((len(om), k), dtype=complex)
            for a, wa in enumerate(omegas):
                e[:, a] = e_t(wa - om, t)
            prod = e.conj()[:, :, None] * e[:, None, :]
            return (r[:, None] * prod.reshape(len(om), k * k))

        n0 = int(min(max(32, t * 2 * big / np.pi), 30_000))
        vals = adaptive_gk(
            f,
            -big,
            big,
            rtol=rtol,
            breakpoints=tuple(omegas) + (0.0,),
            initial_subdiv=n0,
        )
        return vals.reshape(k, k)

    def kernel_scalar_matrix_diff(self, omegas, t: float, h: float, rtol: float = 1e-9) -> np.ndarray:
        """K(t + h) - K(t - h) as a single integral of the differenced
        integrand; the shared nodes make the small difference accurate."""
        omegas = np.asarray(omegas, dtype=float)
        k = len(omegas)
        big = max(self.window(float(w)) for w in omegas)

        def pair(om, tt):
            e = np.empty((len(om), k), dtype=complex)
            for a, wa in enumerate(omegas):
                e[:, a] = e_t(wa - om, tt)
            return e.conj()[:, :, None] * e[:, None, :]

        def f(om):
            r = self.gamma_vec(om) / (2.0 * np.pi)
            d = pair(om, t + h) - pair(om, t - h)
            return r[:, None] * d.reshape(len(om), k * k)

        n0 = int(min(max(32, (t + h) * 2 * big / np.pi), 30_000))
        vals = adaptive_gk(
            f, -big, big, rtol=rtol, breakpoints=tuple(omegas) + (0.0,), initial_subdiv=n0
        )
        return vals.reshape(k, k)


# -- (i, j)-indexed module-level operations (spec surface) --------------------


def _check_idx(bath: BathModel, i: int, j: int):
    if not (0 <= i < bath.n and 0 <= j < bath.n):
        raise BathError(f"coupling index out of range: ({i}, {j}) for n = {bath.n}")


def gamma_rate(bath: BathModel, i: int, j: int, omega: float) -> float:
    """Markovian relaxation rate gamma_ij(omega) = c_ij J(omega)(N + 1)."""
    _check_idx(bath, i, j)
    return bath.c[i, j] * bath.gamma(omega)


def lamb_shift_S(bath: BathModel, i: int, j: int, omega: float) -> float:
    """Principal-value shift S_ij(omega)."""
    _check_idx(bath, i, j)
    return bath.c[i, j] * bath.lamb_S(omega)


def half_fourier_Gamma(bath: BathModel, i: int, j: int, omega: float) -> complex:
    """Gamma_ij(omega) = gamma_ij(omega)/2 + i S_ij(omega)."""
    _check_idx(bath, i, j)
    return bath.c[i, j] * bath.Gamma(omega)


def finite_time_Gamma(bath: BathModel, i: int, j: int, omega: float, t: float) -> complex:
    """Gamma^(t)_ij(omega) = integral_0^t e^{i omega u} <R_i(u) R_j> du."""
    _check_idx(bath, i, j)
    return bath.c[i, j] * bath.Gamma_t(omega, t)


def correlation_function(bath: BathModel, i: int, j: int, tau: float) -> complex:
    """Two-time correlation <R_i(tau) R_j> of the centered bath operators."""
    _check_idx(bath, i, j)
    return bath.c[i, j] * bath.correlation(tau)
