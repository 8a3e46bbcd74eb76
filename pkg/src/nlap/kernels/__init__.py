"""Radial interaction kernels: construction, normalization, rescaling, analysis.

A kernel is a radial density ``rho(x) = profile(|x|)`` on R^n (n = 1 or 2)
with compact support (or a pure power law, kept for closed-form work only).
The normalized convention used throughout is ``supp rho = B(0, 1)`` and
``||rho||_L1 = n``, which makes the associated potential profile Q
integrate to exactly 1 and lets affine fields reproduce their ordinary
gradient under the nonlocal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .._radial import PowerHead, profile_integral, qhat_radial

__all__ = [
    "Kernel",
    "make_kernel",
    "normalize",
    "rescale",
    "s_infinity",
    "limit_kernel",
    "load_table",
    "angular_measure",
    "q_profile",
    "q_values",
    "QProfile",
    "symbol_qhat",
    "symbol_from_qprofile",
    "multiplier",
    "check_hypotheses",
    "HypothesisReport",
]

_FAMILIES = ("truncated-power", "pure-power", "tabulated")


def angular_measure(dim: int) -> float:
    """Surface measure of the unit sphere: 2 for n=1, 2*pi for n=2."""
    if dim == 1:
        return 2.0
    if dim == 2:
        return 2.0 * math.pi
    raise ValueError(f"unsupported dimension {dim}")


def _smooth_cutoff(r: np.ndarray) -> np.ndarray:
    """Quintic window: identically 1 on [0, 1/2], C^2-decay to 0 at 1."""
    x = np.clip(2.0 * (np.asarray(r, dtype=float) - 0.5), 0.0, 1.0)
    return 1.0 - x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x)


@dataclass(frozen=True)
class Kernel:
    """Immutable record of a radial kernel profile.

    The raw family profile is evaluated at ``r / stretch`` and multiplied
    by ``scale``; normalization and horizon rescaling only touch these two
    numbers, so every derived quantity (Q profile, symbol, masses) flows
    from one code path.
    """

    family: str
    dim: int
    params: tuple
    scale: float = 1.0
    stretch: float = 1.0
    exponents: tuple[float, float] | None = None
    normalized: bool = False
    delta: float | None = None      # horizon used by rescale, if any
    c_delta: float | None = None    # the rescale factor that was applied

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.dim not in (1, 2):
            raise ValueError(f"unsupported dimension {self.dim}")

    # -- raw family behaviour -------------------------------------------------

    def _base_support(self) -> float:
        if self.family == "pure-power":
            return math.inf
        if self.family == "truncated-power":
            return 1.0
        return float(self.params[0][-1])

    def _base_profile(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "truncated-power":
            s, cutoff = self.params
            alpha = self.dim + s - 1.0
            w = np.ones_like(r) if cutoff == "hard" else _smooth_cutoff(r)
            with np.errstate(divide="ignore", over="ignore"):
                vals = w * r ** (-alpha)
            return np.where(r <= 1.0, vals, 0.0)
        if self.family == "pure-power":
            (s,) = self.params
            alpha = self.dim + s - 1.0
            with np.errstate(divide="ignore", over="ignore"):
                return r ** (-alpha)
        radii = np.asarray(self.params[0])
        vals = np.asarray(self.params[1])
        return _table_eval(radii, vals, r)

    def _base_head(self) -> PowerHead:
        if self.family == "truncated-power":
            s, cutoff = self.params
            r_head = 1.0 if cutoff == "hard" else 0.5
            return PowerHead(1.0, self.dim + s - 1.0, r_head)
        if self.family == "pure-power":
            (s,) = self.params
            return PowerHead(1.0, self.dim + s - 1.0, math.inf)
        radii = np.asarray(self.params[0])
        vals = np.asarray(self.params[1])
        if vals[0] <= 0.0 or vals[1] <= 0.0:
            return PowerHead(0.0, 0.0, float(radii[0]))
        slope = (math.log(vals[1]) - math.log(vals[0])) / (
            math.log(radii[1]) - math.log(radii[0]))
        coef = float(vals[0] * radii[0] ** (-slope))
        return PowerHead(coef, -slope, float(radii[0]))

    # -- public surface --------------------------------------------------------

    @property
    def support_radius(self) -> float:
        return self.stretch * self._base_support()

    @property
    def analytic_only(self) -> bool:
        return not math.isfinite(self.support_radius)

    def profile(self, r) -> np.ndarray:
        """Radial density ``rho(r)``; zero beyond the support radius."""
        scalar = np.isscalar(r) or np.ndim(r) == 0
        out = self.scale * self._base_profile(np.asarray(r, dtype=float) / self.stretch)
        return float(out) if scalar else out

    def power_head(self) -> PowerHead:
        base = self._base_head()
        return PowerHead(self.scale * base.coef * self.stretch ** base.alpha,
                         base.alpha,
                         self.stretch * base.r_head)

    def mass(self) -> float:
        """Integral of rho over R^n (angular factor included)."""
        if self.analytic_only:
            raise ValueError("pure-power kernel has infinite mass on R^n")
        radial = profile_integral(self.profile, self.power_head(),
                                  self.support_radius, power=self.dim - 1)
        return angular_measure(self.dim) * radial

    def q_mass(self) -> float:
        """Integral of the potential profile Q over R^n; equals mass/n."""
        return self.mass() / self.dim

    def grid_ready(self) -> bool:
        """True when discretization consumers may use this kernel."""
        return (not self.analytic_only) and (self.normalized or self.delta is not None)


def _table_eval(radii: np.ndarray, vals: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Tabulated profile: log-log piecewise linear, power-extrapolated below
    the first radius, zero beyond the last; zero table entries force a
    linear-in-value fallback for the segments they touch."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = (r > 0.0) & (r <= radii[-1])
    if not np.any(inside):
        return out
    ri = r[inside]
    if np.all(vals > 0.0):
        logr = np.log(np.clip(ri, 1e-320, None))
        interp = np.interp(logr, np.log(radii), np.log(vals))
        # continue the first segment's power law below the table
        lo = logr < math.log(radii[0])
        if np.any(lo):
            slope = (math.log(vals[1]) - math.log(vals[0])) / (
                math.log(radii[1]) - math.log(radii[0]))
            interp[lo] = math.log(vals[0]) + slope * (logr[lo] - math.log(radii[0]))
        out[inside] = np.exp(interp)
    else:
        out[inside] = np.interp(ri, radii, vals, left=vals[0])
    return out


def make_kernel(family: str, dim: int, s: float | None = None,
                cutoff: str = "smooth",
                table: tuple[Sequence[float], Sequence[float]] | None = None) -> Kernel:
    """Construct an unnormalized kernel from a family recipe.

    ``truncated-power`` builds ``w(r) * r**-(n+s-1)`` supported in [0, 1]
    with ``cutoff`` either the built-in quintic window ("smooth") or no
    window at all ("hard").  ``pure-power`` has infinite support and is
    only usable analytically.  ``tabulated`` takes (radii, values) with
    strictly increasing radii.
    """
    if family in ("truncated-power", "pure-power"):
        if s is None or not (0.0 < s < 1.0):
            raise ValueError(f"power families need s in (0, 1); got {s}")
        if family == "truncated-power":
            if cutoff not in ("smooth", "hard"):
                raise ValueError(f"unknown cutoff {cutoff!r}")
            return Kernel(family, dim, (float(s), cutoff), exponents=(s, s))
        return Kernel(family, dim, (float(s),), exponents=(s, s))
    if family == "tabulated":
        if table is None:
            raise ValueError("tabulated family needs a (radii, values) table")
        radii = np.asarray(table[0], dtype=float)
        vals = np.asarray(table[1], dtype=float)
        if radii.ndim != 1 or radii.size < 2 or np.any(np.diff(radii) <= 0) \
                or radii[0] <= 0:
            raise ValueError("table radii must be strictly increasing and positive")
        if np.any(vals < 0):
            raise ValueError("table values must be nonnegative")
        if vals[0] <= 0.0:
            raise ValueError("tabulated profile must be strictly positive near 0")
        return Kernel(family, dim, (tuple(radii.tolist()), tuple(vals.tolist())))
    raise ValueError(f"unknown kernel family {family!r}")


def load_table(path) -> Kernel:
    """Read a two-column (radius, value) text table; '#' starts a comment."""
    radii, vals = [], []
    with open(path) as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ValueError(f"expected two columns, got {body!r}")
            radii.append(float(parts[0]))
            vals.append(float(parts[1]))
    return make_kernel("tabulated", dim=1, table=(radii, vals))


def normalize(kernel: Kernel) -> Kernel:
    """Rescale so that supp rho = B(0,1) and the mass over R^n equals n."""
    if kernel.analytic_only:
        raise ValueError("cannot normalize a kernel with infinite support")
    out = kernel
    R = out.support_radius
    if R > 1.0:
        out = replace(out, stretch=out.stretch / R)
    factor = out.dim / out.mass()
    out = replace(out, scale=out.scale * factor, normalized=True)
    return out


def rescale(kernel: Kernel, delta: float, mode: str) -> Kernel:
    """Horizon rescaling rho_delta(x) = c_delta * rho(x / delta).

    vanishing (delta <= 1): c_delta = delta**-n, mass-preserving, the
    kernel localizes; diverging (delta >= 1): c_delta = 1/rho(1/delta),
    pinning the profile to 1 at radius 1 as the support grows.
    """
    if not kernel.normalized:
        raise ValueError("rescale requires a normalized kernel")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if mode == "vanishing":
        if delta > 1.0:
            raise ValueError("vanishing mode needs delta <= 1")
        c = delta ** (-kernel.dim)
    elif mode == "diverging":
        if delta < 1.0:
            raise ValueError("diverging mode needs delta >= 1")
        val = kernel.profile(1.0 / delta)
        if val <= 0.0:
            raise ValueError("profile vanishes at 1/delta; cannot form c_delta")
        c = 1.0 / val
    else:
        raise ValueError(f"unknown rescale mode {mode!r}")
    return replace(kernel, scale=kernel.scale * c, stretch=kernel.stretch * delta,
                   normalized=(mode == "vanishing"), delta=float(delta),
                   c_delta=float(c))


def s_infinity(kernel: Kernel, deltas: Sequence[float] | None = None
               ) -> tuple[float, float, list[float]]:
    """Asymptotic fractional order from the near-origin profile decay.

    Evaluates ``log(rho(1/(e*delta)) / rho(1/delta)) - n + 1`` along an
    increasing horizon sequence (default 10^1..10^4) and reports the last
    value with the spread of the final two as the error bar.
    """
    if deltas is None:
        deltas = [10.0 ** k for k in range(1, 5)]
    deltas = list(deltas)
    if len(deltas) < 3 or deltas[-1] / deltas[0] < 1e3:
        raise ValueError("delta sequence must span at least three decades")
    if not (kernel.normalized or kernel.family == "pure-power"):
        raise ValueError("s_infinity requires a normalized kernel")
    ests = []
    for d in deltas:
        num = kernel.profile(1.0 / (math.e * d))
        den = kernel.profile(1.0 / d)
        if num <= 0.0 or den <= 0.0:
            raise ValueError(f"profile vanishes near radius {1.0 / d}")
        ests.append(math.log(num / den) - kernel.dim + 1.0)
    return ests[-1], abs(ests[-1] - ests[-2]), ests


def limit_kernel(kernel: Kernel, truncate_at: float | None = None) -> Kernel:
    """Diverging-horizon limit profile ``|x|**-(n + s_inf - 1)``.

    Analytic-only unless ``truncate_at`` is given, in which case the power
    law is hard-truncated at that radius (profile value unchanged inside).
    """
    s_inf, _, _ = s_infinity(kernel)
    s_inf = min(max(s_inf, 1e-9), 1.0 - 1e-9)
    pure = Kernel("pure-power", kernel.dim, (float(s_inf),),
                  exponents=(s_inf, s_inf))
    if truncate_at is None:
        return pure
    alpha = kernel.dim + s_inf - 1.0
    return Kernel("truncated-power", kernel.dim, (float(s_inf), "hard"),
                  scale=truncate_at ** (-alpha), stretch=float(truncate_at),
                  exponents=(s_inf, s_inf), delta=float(truncate_at), c_delta=1.0)


def pure_power_qhat_constant(dim: int, s: float) -> float:
    """Closed-form C with qhat(xi) = C |xi|^(s-1) for the pure power kernel."""
    if dim == 1:
        return (math.pi ** (s - 0.5) * math.gamma((1.0 - s) / 2.0)
                / (s * math.gamma(s / 2.0)))
    return (math.pi ** s * math.gamma((1.0 - s) / 2.0)
            / ((s + 1.0) * math.gamma((1.0 + s) / 2.0)))


def kernel_qhat(kernel: Kernel, xi) -> np.ndarray:
    """Radial symbol of Q for this kernel at radial frequencies ``xi``."""
    xs = np.abs(np.asarray(xi, dtype=float))
    if kernel.family == "pure-power":
        (s,) = kernel.params
        c = pure_power_qhat_constant(kernel.dim, s) * kernel.scale \
            * kernel.stretch ** (kernel.dim + s - 1.0)
        with np.errstate(divide="ignore"):
            out = np.where(xs > 0, c * xs ** (s - 1.0), np.inf)
        return float(out) if np.ndim(xi) == 0 else out
    return qhat_radial(kernel.profile, kernel.power_head(),
                       kernel.support_radius, kernel.dim, xs,
                       q_mass=kernel.q_mass())


from .qprofile import QProfile, q_profile, q_values           # noqa: E402
from .symbols import multiplier, symbol_from_qprofile, symbol_qhat  # noqa: E402
from .hypotheses import HypothesisReport, check_hypotheses    # noqa: E402
