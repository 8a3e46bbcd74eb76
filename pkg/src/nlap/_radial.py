"""Quadrature engine for radial profiles with an algebraic singularity at 0.

Every integral this package needs against a kernel profile has the form
``int rho(r) g(r) r^k dr`` where ``rho(r) = A r^{-alpha}`` exactly on an
initial interval ``(0, r_head]`` and is merely smooth-away-from-zero
beyond it.  The routines here split such integrals into an analytic (or
series) head on the power-law part and Gauss-Legendre panels on the
rest, giving near machine precision at modest cost.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import j1, roots_legendre


class PowerHead(NamedTuple):
    """Exact power-law behaviour ``rho(r) = coef * r**(-alpha)`` on ``(0, r_head]``."""

    coef: float
    alpha: float
    r_head: float


@lru_cache(maxsize=8)
def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(order)
    return x, w


def panel_quad(edges: np.ndarray, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for the panels delimited by ``edges``."""
    gx, gw = _gl(order)
    e = np.asarray(edges, dtype=float)
    mid = 0.5 * (e[1:] + e[:-1])
    half = 0.5 * (e[1:] - e[:-1])
    x = (mid[:, None] + half[:, None] * gx).ravel()
    w = (half[:, None] * gw).ravel()
    return x, w


def geometric_edges(lo: float, hi: float, per_octave: int = 6,
                    max_step: float = math.inf) -> np.ndarray:
    """Edges from ``lo`` to ``hi``, geometric with an absolute step cap.

    The cap keeps panels short compared to an oscillation wavelength when
    integrating against ``sin`` or Bessel factors.
    """
    if hi <= lo:
        return np.array([lo, hi])
    ratio = 2.0 ** (1.0 / per_octave) - 1.0
    edges = [lo]
    r = lo
    floor_step = 1e-9 * (hi - lo) + 1e-300
    while r < hi:
        step = max(min(r * ratio, max_step), floor_step)
        r = min(r + step, hi)
        edges.append(r)
    return np.asarray(edges)


def head_power_integral(head: PowerHead, b: float, power: float) -> float:
    """``int_0^b coef * r^{power - alpha} dr`` in closed form."""
    expo = power - head.alpha + 1.0
    if expo <= 0.0:
        raise ValueError(f"divergent head integral: exponent {expo} <= 0")
    return head.coef * b ** expo / expo


def profile_integral(profile: Callable[[np.ndarray], np.ndarray],
                     head: PowerHead, support: float,
                     power: float, lo: float = 0.0, hi: float | None = None,
                     per_octave: int = 8) -> float:
    """``int_lo^hi rho(r) r^power dr`` with the singular head handled analytically."""
    if hi is None:
        hi = support
    hi = min(hi, support)
    if hi <= lo:
        return 0.0
    total = 0.0
    start = lo
    if lo == 0.0:
        b = min(head.r_head, hi)
        total += head_power_integral(head, b, power)
        start = b
    if start < hi:
        x, w = panel_quad(geometric_edges(start, hi, per_octave))
        total += float(np.sum(w * profile(x) * x ** power))
    return total


def cumulative_profile(profile: Callable[[np.ndarray], np.ndarray],
                       head: PowerHead, support: float,
                       radii: np.ndarray, power: float = 0.0) -> np.ndarray:
    """``int_0^{r_i} rho(t) t^power dt`` for every requested radius.

    Radii need not be sorted; the cumulative sums are evaluated on the
    sorted set and mapped back.
    """
    rs = np.asarray(radii, dtype=float)
    order = np.argsort(rs)
    sorted_rs = np.minimum(rs[order], support)
    out = np.empty_like(sorted_rs)
    acc = 0.0
    prev = 0.0
    for k, r in enumerate(sorted_rs):
        if r > prev:
            if prev == 0.0:
                b = min(head.r_head, r)
                acc += head_power_integral(head, b, power)
                prev = b
            if r > prev:
                x, w = panel_quad(geometric_edges(prev, r))
                acc += float(np.sum(w * profile(x) * x ** power))
                prev = r
        out[k] = acc
    result = np.empty_like(out)
    result[order] = out
    return result


def _sin_head_series(coef: float, alpha: float, a: float, xi: float,
                     kmax: int = 90) -> float:
    """``int_0^a coef r^{-1-alpha} sin(2 pi xi r) dr`` by term-wise integration.

    Stable for ``2 pi xi a <= ~10``; callers shrink ``a`` with frequency.
    """
    z = 2.0 * math.pi * xi * a
    total = 0.0
    term_pow = z
    fact = 1.0
    for k in range(kmax):
        m = 2 * k + 1
        if k:
            term_pow *= z * z
            fact *= (2 * k) * (2 * k + 1)
        c = term_pow / (fact * (m - alpha))
        total += c if k % 2 == 0 else -c
        if abs(c) <= 1e-17 * max(abs(total), 1e-300):
            break
    return coef * a ** (-alpha) * total


def _j1_head_series(coef: float, alpha: float, a: float, xi: float,
                    kmax: int = 90) -> float:
    """``int_0^a coef r^{-alpha} J1(2 pi xi r) dr`` by term-wise integration."""
    z = math.pi * xi * a  # J1 series runs in powers of (argument / 2)
    total = 0.0
    term_pow = z
    fact = 1.0
    for k in range(kmax):
        m = 2 * k + 1
        if k:
            term_pow *= z * z
            fact *= k * (k + 1)
        c = term_pow / (fact * (m + 1 - alpha))
        total += c if k % 2 == 0 else -c
        if abs(c) <= 1e-17 * max(abs(total), 1e-300):
            break
    return coef * a ** (1.0 - alpha) * total


def qhat_radial(profile: Callable[[np.ndarray], np.ndarray],
                head: PowerHead, support: float, dim: int,
                xi: np.ndarray, q_mass: float) -> np.ndarray:
    """Radial Fourier transform of the potential profile Q at frequencies ``xi``.

    dim 1:  qhat(xi) = (1 / (pi xi))  int_0^R rho(r) sin(2 pi xi r) / r dr
    dim 2:  qhat(xi) = (1 / xi)       int_0^R rho(r) J1(2 pi xi r) dr

    ``q_mass`` supplies the xi = 0 limit (the integral of Q over R^n).
    The integrand keeps the exact power head, integrated by a convergent
    series up to ``a ~ min(r_head, 8/(2 pi xi))``, with oscillation-capped
    Gauss-Legendre panels beyond.
    """
    xs = np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
    out = np.empty_like(xs)
    R = support
    for i, x in enumerate(xs):
        if x == 0.0:
            out[i] = q_mass
            continue
        a = min(head.r_head, 8.0 / (2.0 * math.pi * x), R)
        if dim == 1:
            val = _sin_head_series(head.coef, head.alpha, a, x)
        else:
            val = _j1_head_series(head.coef, head.alpha, a, x)
        if a < R:
            edges = geometric_edges(a, R, per_octave=6,
                                    max_step=1.0 / (3.0 * x))
            xq, wq = panel_quad(edges)
            if dim == 1:
                val += float(np.sum(wq * profile(xq)
                                    * np.sin(2.0 * math.pi * x * xq) / xq))
            else:
                val += float(np.sum(wq * profile(xq)
                                    * j1(2.0 * math.pi * x * xq)))
        out[i] = val / (math.pi * x) if dim == 1 else val / x
    if np.isscalar(xi) or np.asarray(xi).ndim == 0:
        return out[0]
    return out
