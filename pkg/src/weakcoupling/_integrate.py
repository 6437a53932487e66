"""Vectorized adaptive Gauss-Kronrod quadrature.

All frequency-domain integrals in this package (principal values after
singularity subtraction, finite-time half-Fourier transforms, sinc-product
kernels) run through :func:`adaptive_gk`.  The integrand is evaluated on
whole arrays of abscissae at once, and several integrands can share one
node set, which keeps Gram-structured kernel matrices exactly positive
semidefinite at the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureError", "QuadratureInfo", "adaptive_gk"]


class QuadratureError(RuntimeError):
    """Raised when the adaptive subdivision fails to reach tolerance."""


# 15-point Kronrod extension of 7-point Gauss, abscissae/weights on [-1, 1].
_XGK_HALF = np.array(
    [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ]
)
_WGK_HALF = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ]
)
_WG_HALF = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
    ]
)

_XGK = np.concatenate([-_XGK_HALF[:-1], _XGK_HALF[::-1]])  # ascending, 15 nodes
_WGK = np.concatenate([_WGK_HALF[:-1], _WGK_HALF[::-1]])
# Gauss nodes sit at Kronrod indices 1, 3, 5, 7, 9, 11, 13.
_WG = np.zeros(15)
_WG[[1, 13]] = _WG_HALF[0]
_WG[[3, 11]] = _WG_HALF[1]
_WG[[5, 9]] = _WG_HALF[2]
_WG[7] = _WG_HALF[3]
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])


@dataclass
class QuadratureInfo:
    n_panels: int
    n_evaluations: int
    error_estimate: float
    converged: bool


def _panel_edges(a, b, breakpoints, initial_subdiv):
    pts = [a, b]
    for p in breakpoints:
        if a < p < b:
            pts.append(float(p))
    pts = np.unique(np.asarray(pts, dtype=float))
    edges = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        k = max(1, int(np.ceil(initial_subdiv * (hi - lo) / (b - a))))
        edges.append(np.linspace(lo, hi, k + 1))
    lefts = np.concatenate([e[:-1] for e in edges])
    rights = np.concatenate([e[1:] for e in edges])
    return lefts, rights


def adaptive_gk(
    f,
    a: float,
    b: float,
    *,
    rtol: float = 1e-10,
    atol: float = 0.0,
    breakpoints=(),
    initial_subdiv: int = 8,
    max_panels: int = 400_000,
    max_iter: int = 48,
    full_output: bool = False,
):
    """Integrate ``f`` over ``[a, b]`` with adaptive Gauss-Kronrod panels.

    ``f`` must accept an array of abscissae with shape ``(n,)`` and return
    values of shape ``(n,)`` or ``(n, m)`` for ``m`` simultaneous integrands.
    All components are evaluated on one common panel set, refined until
    every component satisfies ``err <= atol + rtol * scale`` where the scale
    is the L1 sum of panel contributions (robust for oscillatory tails).

    Returns the integral (shape ``()`` or ``(m,)``), or ``(integral, info)``
    when ``full_output`` is set.  Raises :class:`QuadratureError` if the
    tolerance cannot be met within the panel budget.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
        raise QuadratureError(f"bad integration interval [{a}, {b}]")

    lefts, rights = _panel_edges(a, b, breakpoints, initial_subdiv)
    n_eval = 0

    probe = np.atleast_1d(f(np.asarray([0.5 * (a + b)])))
    scalar = probe.ndim == 1
    m = 1 if scalar else probe.shape[1]

    def eval_panels(lo, hi):
        half = 0.5 * (hi - lo)[:, None]
        mid = 0.5 * (hi + lo)[:, None]
        x = (mid + half * _XGK[None, :]).ravel()
        fx = f(x)
        fx = np.asarray(fx)
        if scalar:
            fx = fx[:, None]
        fx = fx.reshape(len(lo), 15, m)
        ik = np.einsum("k,pkm->pm", _WGK, fx) * half
        ig = np.einsum("k,pkm->pm", _WG[_GAUSS_IDX], fx[:, _GAUSS_IDX, :]) * half
        return ik, np.abs(ik - ig)

    ik, err = eval_panels(lefts, rights)
    n_eval += 15 * len(lefts)

    for _ in range(max_iter):
        total = np.abs(err).sum(axis=0)
        scale = np.abs(ik).sum(axis=0)
        tol = atol + rtol * scale
        if np.all(total <= tol):
            result = ik.sum(axis=0)
            result = result[0] if scalar else result
            if full_output:
                return result, QuadratureInfo(len(lefts), n_eval, float(total.max()), True)
            return result
        # Split every panel that contributes more than its fair share of the
        # still-missing error, for any component.
        need = np.zeros(len(lefts), dtype=bool)
        for j in range(m):
            if total[j] > tol[j]:
                need |= err[:, j] > tol[j] / (2.0 * len(lefts))
        if not need.any():
            need = err.max(axis=1) >= err.max() * 0.5
        if len(lefts) + need.sum() > max_panels:
            raise QuadratureError(
                f"panel budget exhausted: {len(lefts)} panels, "
                f"error {float(total.max()):.3e} vs tol {float(tol.min()):.3e} "
                f"on [{a:.6g}, {b:.6g}]"
            )
        lo_s, hi_s = lefts[need], rights[need]
        mid_s = 0.5 * (lo_s + hi_s)
        new_lo = np.concatenate([lefts[~need], lo_s, mid_s])
        new_hi = np.concatenate([rights[~need], mid_s, hi_s])
        keep_ik, keep_err = ik[~need], err[~need]
        split_ik, split_err = eval_panels(
            np.concatenate([lo_s, mid_s]), np.concatenate([mid_s, hi_s])
        )
        n_eval += 15 * 2 * len(lo_s)
        lefts, rights = new_lo, new_hi
        ik = np.concatenate([keep_ik, split_ik])
        err = np.concatenate([keep_err, split_err])

    total = np.abs(err).sum(axis=0)
    raise QuadratureError(
        f"no convergence after {max_iter} refinement sweeps: "
        f"{len(lefts)} panels, error {float(total.max()):.3e} on [{a:.6g}, {b:.6g}]"
    )
