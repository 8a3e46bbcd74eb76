"""Fourier symbols: the transform of Q and the operator multiplier.

For radial kernels the transform of Q reduces to one radial integral
(n=1: a sine transform of profile/r; n=2: a J1 transform of the profile).
The nonlocal Laplacian then acts in frequency as
``m(xi) = 4 pi^2 |xi|^2 qhat(xi)^2``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import j0

from .._radial import geometric_edges, panel_quad
from . import kernel_qhat


def symbol_qhat(kernel, xi) -> np.ndarray:
    """Transform of the potential profile at radial frequency |xi|.

    Real and even by construction; the value at xi = 0 is the integral of
    Q over R^n (mass/n, hence exactly 1 for normalized kernels).
    """
    return kernel_qhat(kernel, xi)


def multiplier(kernel, xi) -> np.ndarray:
    """Fourier multiplier of the kernel's nonlocal Laplacian.

    ``m(xi) = 4 pi^2 |xi|^2 qhat(xi)^2 >= 0`` with ``m(0) = 0``; for a
    vanishing-rescaled kernel this equals ``4 pi^2 |xi|^2 qhat_base(delta xi)^2``,
    the dilation of the base symbol with the |xi|^2 factor kept in place.
    """
    xs = np.abs(np.asarray(xi, dtype=float))
    qh = symbol_qhat(kernel, xs)
    with np.errstate(invalid="ignore"):
        out = 4.0 * math.pi ** 2 * xs ** 2 * np.asarray(qh) ** 2
    if kernel.family == "pure-power":
        out = np.where(xs == 0.0, 0.0, out)  # 0 * inf at the origin
    return float(out) if np.ndim(xi) == 0 else out


def _cos_head_series(coef: float, alpha: float, a: float, xi: float,
                     kmax: int = 90) -> float:
    """``int_0^a coef r^{-alpha} cos(2 pi xi r) dr`` by term-wise integration."""
    z = 2.0 * math.pi * xi * a
    total = 0.0
    term_pow = 1.0
    fact = 1.0
    for k in range(kmax):
        m = 2 * k
        if k:
            term_pow *= z * z
            fact *= (2 * k - 1) * (2 * k)
        c = term_pow / (fact * (m + 1 - alpha))
        total += c if k % 2 == 0 else -c
        if abs(c) <= 1e-17 * max(abs(total), 1e-300):
            break
    return coef * a ** (1.0 - alpha) * total


def _j0_head_series(coef: float, alpha: float, a: float, xi: float,
                    kmax: int = 90) -> float:
    """``int_0^a coef r^{1-alpha} J0(2 pi xi r) dr`` by term-wise integration."""
    z = math.pi * xi * a
    total = 0.0
    term_pow = 1.0
    fact = 1.0
    for k in range(kmax):
        m = 2 * k
        if k:
            term_pow *= z * z
            fact *= k * k
        c = term_pow / (fact * (m + 2 - alpha))
        total += c if k % 2 == 0 else -c
        if abs(c) <= 1e-17 * max(abs(total), 1e-300):
            break
    return coef * a ** (2.0 - alpha) * total


def symbol_from_qprofile(qprof, xi, dim: int) -> float:
    """Independent route to the symbol: transform the tabulated Q directly.

    n=1: ``2 int_0^R Q(r) cos(2 pi xi r) dr``
    n=2: ``2 pi int_0^R Q(r) J0(2 pi xi r) r dr``

    Q's near-origin power behaviour (from the interpolant's first segment)
    is integrated by series so the singular head costs no accuracy.
    """
    x = abs(float(xi))
    R = qprof.support_radius
    pos = qprof.values > 0.0
    r0 = float(qprof.radii[pos][0])
    v0 = float(qprof.values[pos][0])
    if np.count_nonzero(pos) > 1:
        r1 = float(qprof.radii[pos][1])
        v1 = float(qprof.values[pos][1])
        slope = (math.log(v1) - math.log(v0)) / (math.log(r1) - math.log(r0))
    else:
        slope = 0.0
    coef = v0 * r0 ** (-slope)
    alpha = -slope
    a = min(r0, 8.0 / (2.0 * math.pi * x) if x > 0 else r0)
    if dim == 1:
        total = _cos_head_series(coef, alpha, a, x)
    else:
        total = _j0_head_series(coef, alpha, a, x)
    if a < R:
        cap = 1.0 / (3.0 * x) if x > 0 else math.inf
        rq, wq = panel_quad(geometric_edges(a, R, per_octave=8, max_step=cap))
        qv = qprof(rq)
        if dim == 1:
            total += float(np.sum(wq * qv * np.cos(2.0 * math.pi * x * rq)))
        else:
            total += float(np.sum(wq * qv * j0(2.0 * math.pi * x * rq) * rq))
    return 2.0 * total if dim == 1 else 2.0 * math.pi * total
