"""The potential profile Q: the radial antiderivative that turns the
nonlocal gradient into ``grad(Q * u)``.

``Q(r) = int_r^R profile(t) / t dt`` is nonincreasing, vanishes at the
support radius, and integrates to mass/n over R^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._radial import geometric_edges, panel_quad


def q_values(kernel, radii) -> np.ndarray:
    """Q at the requested radii, to near machine precision.

    The tail integral is accumulated outward over Gauss-Legendre panels;
    the stretch of the integrand inside the exact power-law head is done
    in closed form, so small radii (e.g. 1e-6) lose no accuracy.
    """
    rs = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(rs <= 0.0):
        raise ValueError("Q is only defined at positive radii")
    R = kernel.support_radius
    if not math.isfinite(R):
        raise ValueError("Q of a pure-power kernel diverges pointwise at 0 "
                         "and has no finite support; truncate first")
    head = kernel.power_head()
    out = np.zeros_like(rs)
    inside = rs < R
    for i in np.nonzero(inside)[0]:
        r = rs[i]
        total = 0.0
        start = r
        b = min(head.r_head, R)
        if r < b:
            # closed form of int_r^b coef * t^(-alpha-1) dt
            if head.alpha > 0:
                total += head.coef * (r ** (-head.alpha) - b ** (-head.alpha)) / head.alpha
            else:
                total += head.coef * (math.log(b) - math.log(r)) if head.alpha == 0 \
                    else head.coef * (b ** (-head.alpha) - r ** (-head.alpha)) / (-head.alpha)
            start = b
        if start < R:
            x, w = panel_quad(geometric_edges(start, R, per_octave=8))
            total += float(np.sum(w * kernel.profile(x) / x))
        out[i] = total
    return out if np.ndim(radii) else float(out[0])


@dataclass(frozen=True)
class QProfile:
    """Sampled Q with its interpolation rule (log-log piecewise linear)."""

    radii: np.ndarray
    values: np.ndarray
    support_radius: float
    interpolation: str = "log-log piecewise linear"

    def __call__(self, r) -> np.ndarray:
        rs = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(rs)
        pos = self.values > 0.0
        logr = np.log(self.radii[pos])
        logv = np.log(self.values[pos])
        inside = (rs > 0.0) & (rs < self.support_radius)
        if np.any(inside):
            lr = np.log(rs[inside])
            interp = np.interp(lr, logr, logv)
            lo = lr < logr[0]
            if np.any(lo) and len(logr) > 1:
                slope = (logv[1] - logv[0]) / (logr[1] - logr[0])
                interp[lo] = logv[0] + slope * (lr[lo] - logr[0])
            hi = lr > logr[-1]
            if np.any(hi) and len(logr) > 1:
                slope = (logv[-1] - logv[-2]) / (logr[-1] - logr[-2])
                interp[hi] = logv[-1] + slope * (lr[hi] - logr[-1])
            out[inside] = np.exp(interp)
        return out if np.ndim(r) else float(out[0])


def q_profile(kernel, radii) -> QProfile:
    """Sample Q on the given radii and wrap with the interpolation rule."""
    rs = np.asarray(radii, dtype=float)
    if rs.ndim != 1 or rs.size < 2 or np.any(np.diff(rs) <= 0) or rs[0] <= 0:
        raise ValueError("radii must be strictly increasing and positive")
    vals = q_values(kernel, rs)
    return QProfile(radii=rs, values=np.asarray(vals),
                    support_radius=kernel.support_radius)
