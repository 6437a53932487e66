"""Stable closed forms for the oscillatory time integrals that appear in
finite-time kernels.

``e_t(x, t)`` is the windowed Fourier factor integral_0^t e^{ixs} ds and
``i2(delta, x, t)`` is integral_0^t e^{i delta s} e_s(x) ds; both have
removable singularities that are evaluated by series branches.
"""

from __future__ import annotations

import numpy as np

__all__ = ["e_t", "i2"]


def _cis(x):
    return np.exp(1j * np.asarray(x))


def e_t(x, t: float):
    """integral_0^t e^{ixs} ds = t e^{ixt/2} sinc(xt/2), vectorized in x."""
    x = np.asarray(x, dtype=float)
    half = 0.5 * x * t
    return t * _cis(half) * np.sinc(half / np.pi)


def _m1(delta: float, t: float) -> complex:
    """integral_0^t s e^{i delta s} ds."""
    if abs(delta) * t < 1e-8:
        d = delta
        return t * t / 2.0 + 1j * d * t**3 / 3.0 - d * d * t**4 / 8.0
    return (t * np.exp(1j * delta * t) - e_t(delta, t)) / (1j * delta)


def _m2(delta: float, t: float) -> complex:
    """integral_0^t s^2 e^{i delta s} ds."""
    if abs(delta) * t < 1e-8:
        d = delta
        return t**3 / 3.0 + 1j * d * t**4 / 4.0 - d * d * t**5 / 10.0
    return (t * t * np.exp(1j * delta * t) - 2.0 * _m1(delta, t)) / (1j * delta)


def i2(delta: float, x, t: float):
    """integral_0^t e^{i delta s} (e^{ixs} - 1)/(ix) ds, vectorized in x.

    For small |x| t the quotient is replaced by its quadratic series in x,
    which keeps the removable singularity at x = 0 accurate.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) * t < 1e-6
    xs = x[~small]
    out[~small] = (e_t(delta + xs, t) - e_t(delta, t)) / (1j * xs)
    if small.any():
        m1 = _m1(delta, t)
        m2 = _m2(delta, t)
        out[small] = m1 + 0.5j * x[small] * m2
    return out
