"""Admissibility checks for kernel profiles (the H0-H4 battery).

Everything here is a sampled numerical surrogate for the continuum
conditions: positivity and local integrability (H0), monotonicity of the
reduced profile (H1), derivative growth bounds (H2), and almost-
monotonicity of ``r^(n+s-1) rho`` / ``r^(n+t-1) rho`` over an exponent
scan (H3/H4).  Verdicts are deterministic functions of the sampling grid,
which is therefore recorded in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .._radial import profile_integral

# Exponent scan for the almost-monotonicity checks.
_ST_GRID = tuple(round(0.10 + 0.05 * k, 2) for k in range(18))  # 0.10 .. 0.95
# An almost-monotone profile may dip below its running extreme by at most
# a factor 1e3 across the scan range; the strict margin keeps the exact
# boundary case (a 30-decade pure power drift) on the failing side.
_RATIO_FLOOR = 1e-3 * (1.0 + 1e-9)
_H2_CONSTANT_CAP = 1e6
_NU_GRID = (0.5, 1.0, 1.5, 2.0)


@dataclass
class HypothesisReport:
    """Verdicts and witnesses for H0-H4 on one kernel."""

    verdicts: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    epsilon: float = 0.0
    radii_range: tuple = (0.0, 0.0)
    radii_count: int = 0
    h3_window: tuple | None = None
    h4_window: tuple | None = None

    def all_pass(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    def to_text(self) -> str:
        lines = [f"epsilon = {self.epsilon!r}",
                 f"radii_min = {self.radii_range[0]!r}",
                 f"radii_max = {self.radii_range[1]!r}",
                 f"radii_count = {self.radii_count}"]
        for name in sorted(self.verdicts):
            lines.append(f"{name}.verdict = {self.verdicts[name]}")
        for key in sorted(self.witnesses):
            lines.append(f"{key} = {self.witnesses[key]!r}")
        if self.h3_window is not None:
            lines.append(f"h3.window_lo = {self.h3_window[0]!r}")
            lines.append(f"h3.window_hi = {self.h3_window[1]!r}")
        if self.h4_window is not None:
            lines.append(f"h4.window_lo = {self.h4_window[0]!r}")
            lines.append(f"h4.window_hi = {self.h4_window[1]!r}")
        return "\n".join(lines) + "\n"


def _default_radii(epsilon: float) -> np.ndarray:
    """Log grid over (0, epsilon]: 200/decade down to 1e-6, then a sparser
    deep extension to epsilon*1e-30 where the profile is its head power law."""
    hi = math.log10(epsilon)
    fine = np.logspace(-6.0, hi, max(int((hi + 6.0) * 200), 50))
    deep = np.logspace(hi - 30.0, -6.0, 20 * 24, endpoint=False)
    return np.unique(np.concatenate([deep, fine]))


def _running_ratio_decreasing(f: np.ndarray) -> tuple[float, int, int]:
    """min over sigma of (min_{t<=sigma} f) / f(sigma), with argmin indices."""
    run_min = np.minimum.accumulate(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(f > 0, run_min / f, np.where(run_min > 0, np.inf, 1.0))
    j = int(np.argmin(ratios))
    i = int(np.argmin(f[: j + 1]))
    return float(ratios[j]), i, j


def _running_ratio_increasing(f: np.ndarray) -> tuple[float, int, int]:
    """min over sigma of f(sigma) / (max_{t<=sigma} f), with argmin indices."""
    run_max = np.maximum.accumulate(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(run_max > 0, f / run_max, 1.0)
    j = int(np.argmin(ratios))
    i = int(np.argmax(f[: j + 1]))
    return float(ratios[j]), i, j


def check_hypotheses(kernel, radii=None, epsilon: float | None = None) -> HypothesisReport:
    """Run the H0-H4 battery on ``kernel`` over a near-origin sampling grid.

    ``epsilon`` bounds the locality window (default: 45% of the support
    radius, inside the pure power-law head of the built-in families so the
    cutoff region never masquerades as a singularity defect).
    """
    R = kernel.support_radius
    if epsilon is None:
        epsilon = 0.45 * (R if math.isfinite(R) else 1.0)
    rs = np.asarray(radii, dtype=float) if radii is not None else _default_radii(epsilon)
    rs = np.sort(rs)
    rep = HypothesisReport(epsilon=float(epsilon),
                           radii_range=(float(rs[0]), float(rs[-1])),
                           radii_count=int(rs.size))
    rho = kernel.profile(rs)
    n = kernel.dim

    # ---- H0: nonnegativity, positive infimum near 0, local integrability
    neg = rho < 0
    inf_near0 = float(np.min(rho[rs <= epsilon])) if np.any(rs <= epsilon) else 0.0
    try:
        head = kernel.power_head()
        near = profile_integral(kernel.profile, head, R, power=n - 1,
                                hi=min(1.0, R))
        far = 0.0
        if R > 1.0 and math.isfinite(R):
            far = profile_integral(kernel.profile, head, R, power=n - 2, lo=1.0)
        elif not math.isfinite(R):
            # pure power tail: coef * int_1^inf r^(n-2-alpha) dr, alpha = n+s-1
            coef, alpha, _ = head
            far = coef / (alpha - (n - 1.0))
        h0_integral = near + far
        integrable = math.isfinite(h0_integral)
    except ValueError:
        h0_integral, integrable = math.inf, False
    h0_ok = (not np.any(neg)) and inf_near0 > 0.0 and integrable
    rep.verdicts["h0"] = "pass" if h0_ok else "fail"
    rep.witnesses["h0.inf_near_zero"] = inf_near0
    rep.witnesses["h0.weighted_integral"] = float(h0_integral)
    if np.any(neg):
        rep.witnesses["h0.negative_radius"] = float(rs[neg][0])

    # ---- H1: f = r^(n-2) rho nonincreasing, and r^nu f nonincreasing for some nu
    f1 = rs ** (n - 2.0) * rho
    rel_tol = 1e-9
    rise = np.nonzero(f1[1:] > f1[:-1] * (1.0 + rel_tol))[0]
    h1_base = rise.size == 0
    nu_pass = None
    for nu in _NU_GRID:
        g = rs ** nu * f1
        if not np.any(g[1:] > g[:-1] * (1.0 + rel_tol)):
            nu_pass = nu
            break
    rep.verdicts["h1"] = "pass" if (h1_base and nu_pass is not None) else "fail"
    rep.witnesses["h1.nu"] = nu_pass if nu_pass is not None else "none"
    if not h1_base:
        k = int(rise[0])
        rep.witnesses["h1.rise_pair"] = (float(rs[k]), float(rs[k + 1]))

    # ---- H2: |f^(k)| <= C(k) r^-k f for k=1,2, fitted constants on [1e-6, eps]
    mask = (rs >= 1e-6) & (rs <= epsilon) & (f1 > 0)
    rr = rs[mask]
    if rr.size >= 7:
        tau = np.log(rr)
        lf = f1[mask]
        dft = np.gradient(lf, tau)
        d2ft = np.gradient(dft, tau)
        fp = dft / rr                      # df/dr
        fpp = (d2ft - dft) / rr ** 2       # d2f/dr2
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = float(np.nanmax(np.abs(fp) * rr / lf))
            c2 = float(np.nanmax(np.abs(fpp) * rr ** 2 / lf))
        h2_ok = np.isfinite(c1) and np.isfinite(c2) and max(c1, c2) <= _H2_CONSTANT_CAP
        rep.verdicts["h2"] = "pass" if h2_ok else "fail"
        rep.witnesses["h2.c1"] = c1
        rep.witnesses["h2.c2"] = c2
    else:
        rep.verdicts["h2"] = "inconclusive"

    # ---- H3/H4: almost-monotonicity exponent scan
    h3_pass, h4_pass = [], []
    worst3, worst4 = {}, {}
    for s in _ST_GRID:
        fs = rs ** (n + s - 1.0) * rho
        c3, i3, j3 = _running_ratio_decreasing(fs)
        c4, i4, j4 = _running_ratio_increasing(fs)
        worst3[s] = c3
        worst4[s] = c4
        if c3 > _RATIO_FLOOR:
            h3_pass.append(s)
        if c4 > _RATIO_FLOOR:
            h4_pass.append(s)
        if not h3_pass and s == _ST_GRID[-1]:
            rep.witnesses["h3.witness_pair"] = (float(rs[i3]), float(rs[j3]))
        if not h4_pass and s == _ST_GRID[-1]:
            rep.witnesses["h4.witness_pair"] = (float(rs[i4]), float(rs[j4]))
    rep.verdicts["h3"] = "pass" if h3_pass else "fail"
    rep.verdicts["h4"] = "pass" if h4_pass else "fail"
    rep.h3_window = (min(h3_pass), max(h3_pass)) if h3_pass else None
    rep.h4_window = (min(h4_pass), max(h4_pass)) if h4_pass else None
    rep.witnesses["h3.best_constant"] = max(worst3.values())
    rep.witnesses["h4.best_constant"] = max(worst4.values())
    rep.witnesses["h3.constants"] = {k: float(v) for k, v in worst3.items()}
    rep.witnesses["h4.constants"] = {k: float(v) for k, v in worst4.items()}
    return rep
