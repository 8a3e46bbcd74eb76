"""Discrete nonlocal gradient and divergence, plus the translation
operators that conjugate them to local derivatives.

Two independent backends realize the same operator:

* ``quadrature`` integrates the singular difference quotient directly.
  Stencil weights are exact radial cell masses of the kernel (1D) or
  Gauss-Legendre cell integrals near the singularity with midpoint tails
  (2D); the self cell contributes its analytically integrated mass times
  a five-point local derivative.  Reads beyond the box are zero.
* ``spectral`` multiplies the FFT of the field by the frequency response
  ``2*pi*i*xi_c*qhat(|xi|)`` per component and reads back the nodes.

Outputs are meaningful on nodes whose support-ball lies inside the box
(``grid.valid_mask``); the spectral path asserts the field vanishes on
the padding ring so periodic wraparound only ever touches zeros.
"""

from __future__ import annotations

import math

import numpy as np

from .._radial import cumulative_profile, panel_quad
from ..kernels import kernel_qhat
from ._select import pairsum
from .grid import Field, Grid

_SYMBOL_CACHE: dict = {}
_WEIGHT_CACHE: dict = {}


def _check_kernel(kernel, grid: Grid) -> None:
    if kernel.analytic_only:
        raise ValueError("kernel has unbounded support; truncate before "
                         "grid evaluation")
    if not kernel.grid_ready():
        raise ValueError("kernel must be normalized (or horizon-rescaled) "
                         "before grid evaluation")
    if kernel.support_radius > grid.pad + 1e-12:
        raise ValueError(
            f"kernel support {kernel.support_radius} exceeds the grid's "
            f"padding ring {grid.pad}; rebuild the grid with a larger box")


def _assert_zero_ring(values: np.ndarray, grid: Grid, radius: float) -> None:
    """The spectral backend wraps around periodically; demand (numerical)
    zeros on the outer ring it can reach."""
    ring = ~grid.valid_mask(radius)
    if not np.any(ring):
        return
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    worst = float(np.max(np.abs(values[ring])))
    if worst > 1e-12 * (1.0 + peak):
        raise ValueError(
            f"field is not zero on the padding ring (max {worst:.3e}); "
            "spectral wraparound would corrupt the result")


def spectral_symbols(kernel, grid: Grid) -> list[np.ndarray]:
    """Per-component frequency responses ``2*pi*i*xi_c*qhat(|xi|)`` on the
    grid's FFT frequencies, cached per (kernel, shape, h).

    On an even-sized axis the Nyquist bin is its own mirror image, so an
    odd symbol cannot be represented there; the component is zeroed on its
    own Nyquist plane (the usual convention for first-derivative symbols).
    This makes the realized operator an exact convolution, so the
    assembled Gram matrix reproduces the gradient energy identically.
    """
    key = (kernel, grid.shape, grid.h)
    hit = _SYMBOL_CACHE.get(key)
    if hit is not None:
        return hit
    freqs = [np.fft.fftfreq(n, d=grid.h) for n in grid.shape]
    odd_safe = []
    for f, n in zip(freqs, grid.shape):
        if n % 2 == 0:
            f = f.copy()
            f[n // 2] = 0.0
        odd_safe.append(f)
    if grid.dim == 1:
        mags = np.abs(freqs[0])
        comps = [odd_safe[0]]
    else:
        x1, x2 = np.meshgrid(freqs[0], freqs[1], indexing="ij")
        mags = np.hypot(x1, x2)
        comps = list(np.meshgrid(odd_safe[0], odd_safe[1], indexing="ij"))
    uniq, inv = np.unique(mags.ravel(), return_inverse=True)
    qh = kernel_qhat(kernel, uniq)[inv].reshape(mags.shape)
    syms = [2j * math.pi * c * qh for c in comps]
    _SYMBOL_CACHE[key] = syms
    return syms


def _quad_weights_1d(kernel, h: float):
    """Exact cell masses w_o = int over cell o of the profile, the folded
    factors w_o/(o*h), and the self-cell mass 2*int_0^(h/2) rho."""
    R = kernel.support_radius
    head = kernel.power_head()
    kmax = int(math.ceil(R / h - 0.5)) + 1
    o = np.arange(1, kmax + 1)
    lo = (o - 0.5) * h
    hi = np.minimum((o + 0.5) * h, R)
    keep = lo < R
    o, lo, hi = o[keep], lo[keep], hi[keep]
    cum = cumulative_profile(kernel.profile, head, R,
                             np.concatenate([lo, hi, [0.5 * h]]), power=0.0)
    masses = cum[len(o):2 * len(o)] - cum[:len(o)]
    w0 = 2.0 * cum[-1]
    folded = masses / (o * h)
    return folded, w0


def _quad_weights_2d(kernel, h: float):
    """Half-stencil vector weights: for each canonical offset (p, q) with
    p > 0 or (p == 0, q > 0), the cell mass of the profile (Gauss-Legendre
    4x4 within 6h of the origin, midpoint beyond) times the unit direction
    over the center distance; plus the polar-exact self-cell mass."""
    R = kernel.support_radius
    head = kernel.power_head()
    kmax = int(math.ceil(R / h + 0.5)) + 1
    gx, gw = np.polynomial.legendre.leggauss(4)
    ops, oqs, wxs, wys = [], [], [], []
    for p in range(0, kmax + 1):
        qstart = 1 if p == 0 else -kmax
        for q in range(qstart, kmax + 1):

            dd = h * math.hypot(p, q)
            if dd - 0.71 * h > R:
                continue
            if dd <= 6.0 * h:
                xs = p * h + 0.5 * h * gx
                ys = q * h + 0.5 * h * gx
                xx, yy = np.meshgrid(xs, ys, indexing="ij")
                ww = np.outer(gw, gw) * (0.25 * h * h)
                mass = float(np.sum(ww * kernel.profile(np.hypot(xx, yy))))
            else:
                mass = h * h * kernel.profile(dd) if dd <= R else 0.0
            if mass == 0.0:
                continue
            ops.append(p)
            oqs.append(q)
            wxs.append(mass * (p * h) / dd ** 2)
            wys.append(mass * (q * h) / dd ** 2)
    # self cell by polar integration: 8 * int_0^(pi/4) Crho2(h/(2 cos t)) dt
    theta, wt = panel_quad(np.array([0.0, math.pi / 4.0]))
    crho2 = cumulative_profile(kernel.profile, head, R,
                               0.5 * h / np.cos(theta), power=1.0)
    w00 = 8.0 * float(np.sum(wt * crho2))
    return (np.asarray(ops, dtype=np.int64), np.asarray(oqs, dtype=np.int64),
            np.asarray(wxs), np.asarray(wys), w00)


def quad_weights(kernel, h: float, dim: int):
    key = (kernel, h, dim)
    hit = _WEIGHT_CACHE.get(key)
    if hit is None:
        hit = _quad_weights_1d(kernel, h) if dim == 1 else _quad_weights_2d(kernel, h)
        _WEIGHT_CACHE[key] = hit
    return hit


def _d5(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Five-point central first derivative with zero extension."""
    pad = [(2, 2) if c == axis else (0, 0) for c in range(values.ndim)]
    up = np.pad(values, pad)
    sl = [slice(2, -2) if c == axis else slice(None) for c in range(values.ndim)]

    def shift(k):
        s = list(sl)
        s[axis] = slice(2 + k, up.shape[axis] - 2 + k)
        return up[tuple(s)]

    return (shift(-2) - 8.0 * shift(-1) + 8.0 * shift(1) - shift(2)) / (12.0 * h)


def _apply_gradient(values: np.ndarray, kernel, grid: Grid, backend: str) -> np.ndarray:
    if backend == "spectral":
        _assert_zero_ring(values, grid, kernel.support_radius)
        syms = spectral_symbols(kernel, grid)
        fu = np.fft.fftn(values)
        return np.stack([np.fft.ifftn(fu * s).real for s in syms], axis=-1)
    if backend != "quadrature":
        raise ValueError(f"unknown backend {backend!r}")
    u = np.ascontiguousarray(values)
    if grid.dim == 1:
        folded, w0 = quad_weights(kernel, grid.h, 1)
        g = np.zeros_like(u)
        pairsum.pairs_1d(u, folded, g)
        g += w0 * _d5(u, 0, grid.h)
        return g[:, None]
    op, oq, wx, wy, w00 = quad_weights(kernel, grid.h, 2)
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    pairsum.pairs_2d(u, op, oq, wx, wy, gx, gy)
    gx += 0.5 * w00 * _d5(u, 0, grid.h)
    gy += 0.5 * w00 * _d5(u, 1, grid.h)
    return np.stack([gx, gy], axis=-1)


def nl_gradient(u: Field, kernel, backend: str = "spectral") -> Field:
    """Nonlocal gradient of a scalar field; returns a vector field."""
    if u.is_vector:
        raise ValueError("nl_gradient expects a scalar field")
    _check_kernel(kernel, u.grid)
    return Field(u.grid, _apply_gradient(u.values, kernel, u.grid, backend))


def nl_divergence(v: Field, kernel, backend: str = "spectral") -> Field:
    """Nonlocal divergence of a vector field; returns a scalar field.

    In one dimension this is identical to the nonlocal gradient of the
    single component (the trace identity)."""
    if not v.is_vector:
        raise ValueError("nl_divergence expects a vector field")
    grid = v.grid
    _check_kernel(kernel, grid)
    if backend == "spectral":
        _assert_zero_ring(v.values, grid, kernel.support_radius)
        syms = spectral_symbols(kernel, grid)
        out = np.zeros(grid.shape)
        for c, s in enumerate(syms):
            out += np.fft.ifftn(np.fft.fftn(v.values[..., c]) * s).real
        return Field(grid, out)
    if backend != "quadrature":
        raise ValueError(f"unknown backend {backend!r}")
    if grid.dim == 1:
        comp = np.ascontiguousarray(v.values[..., 0])
        folded, w0 = quad_weights(kernel, grid.h, 1)
        out = np.zeros(grid.shape)
        pairsum.pairs_1d(comp, folded, out)
        out += w0 * _d5(comp, 0, grid.h)
        return Field(grid, out)
    op, oq, wx, wy, w00 = quad_weights(kernel, grid.h, 2)
    out = np.zeros(grid.shape)
    vx = np.ascontiguousarray(v.values[..., 0])
    vy = np.ascontiguousarray(v.values[..., 1])
    pairsum.pairs_2d_single(vx, op, oq, wx, out)
    pairsum.pairs_2d_single(vy, op, oq, wy, out)
    out += 0.5 * w00 * (_d5(vx, 0, grid.h) + _d5(vy, 1, grid.h))
    return Field(grid, out)


def ibp_defect(u: Field, v: Field, kernel, backend: str = "quadrature") -> float:
    """Integration-by-parts defect ``int grad_rho(u).v + int u div_rho(v)``
    by grid quadrature (h^n sums over the box); zero up to round-off for
    compactly supported fields."""
    grid = u.grid
    hn = grid.h ** grid.dim
    gu = nl_gradient(u, kernel, backend).values
    dv = nl_divergence(v, kernel, backend).values
    return float(hn * (np.sum(gu * v.values) + np.sum(u.values * dv)))


def translate_to_local(u: Field, kernel) -> Field:
    """Convolve with the potential profile Q (spectrally): the resulting
    field's local gradient is the nonlocal gradient of ``u``."""
    _check_kernel(kernel, u.grid)
    qh = _qhat_on_grid(kernel, u.grid)
    return Field(u.grid, np.fft.ifftn(np.fft.fftn(u.values) * qh).real)


def _qhat_on_grid(kernel, grid: Grid) -> np.ndarray:
    key = (kernel, grid.shape, grid.h, "qhat")
    hit = _SYMBOL_CACHE.get(key)
    if hit is not None:
        return hit
    freqs = [np.fft.fftfreq(n, d=grid.h) for n in grid.shape]
    if grid.dim == 1:
        mags = np.abs(freqs[0])
    else:
        x1, x2 = np.meshgrid(freqs[0], freqs[1], indexing="ij")
        mags = np.hypot(x1, x2)
    uniq, inv = np.unique(mags.ravel(), return_inverse=True)
    qh = kernel_qhat(kernel, uniq)[inv].reshape(mags.shape)
    _SYMBOL_CACHE[key] = qh
    return qh


def translate_from_local(v: Field, kernel, floor: float | None = None) -> Field:
    """Deconvolve the potential profile: inverse of translate_to_local.

    Divides by qhat in frequency; magnitudes below ``floor`` are clamped
    (sign kept).  Without a floor it is an error for the symbol to change
    sign inside the resolved band (a zero crossing makes the division
    ill-posed however the bins land) or to fall below 1e-6 of its peak
    (a million-fold amplification).
    """
    _check_kernel(kernel, v.grid)
    qh = _qhat_on_grid(kernel, v.grid)
    peak = float(np.max(np.abs(qh)))
    if floor is None:
        if np.any(qh <= 0.0) or np.any(np.abs(qh) < 1e-6 * peak):
            raise ValueError("qhat vanishes or nearly vanishes on the "
                             "discrete frequency set; supply a positive "
                             "regularization floor")
        safe = qh
    else:
        if floor <= 0.0:
            raise ValueError("floor must be positive")
        mag = np.abs(qh)
        sign = np.where(qh >= 0.0, 1.0, -1.0)
        safe = np.where(mag < floor, floor * sign, qh)
    return Field(v.grid, np.fft.ifftn(np.fft.fftn(v.values) / safe).real)
