"""Horizon sweeps: eigenvalue and eigenfunction convergence as the
interaction radius shrinks to zero (local limit) or grows without bound
(fractional limit).

Each sweep rescales the base kernel per horizon, eigensolves on a grid
whose collar covers the horizon, and compares against an independent
reference computed by a different discretization: a classical
finite-difference Dirichlet eigensolve for the local limit (Richardson
refined over h and h/2) or the truncated power-law limit kernel for the
fractional one (with an R-versus-R/2 truncation-sensitivity rerun).  A
log-log least-squares fit summarizes the convergence rate.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate
import scipy.linalg
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg
import scipy.stats

from .fields import Field, build_grid
from .fields.assemble import assemble, assemble_operator
from .fields.grid import Grid
from .kernels import limit_kernel, rescale, s_infinity
from .spectra import DENSE_EIG_CUTOFF, eigs_linear, first_eig_p

RESIDUAL_THRESHOLD = 1e-5
TRUNCATION_SENSITIVITY = 0.02


# ---------------------------------------------------------------------------
# local finite-difference reference oracle


def _lattice_grid(domain, h: float) -> Grid:
    """Node lattice over the domain's bounding box with Dirichlet nodes
    on (or outside) the boundary; no collar — the local oracle does not
    interact beyond nearest neighbours."""
    lo, hi = domain.bounding_box()
    cells = []
    for a, b in zip(lo, hi):
        n = round((b - a) / h)
        if n < 2 or abs(n * h - (b - a)) > 1e-9 * max(1.0, b - a):
            raise ValueError(f"spacing {h} does not evenly divide the "
                             f"extent {b - a}")
        cells.append(n)
    shape = tuple(n + 1 for n in cells)
    origin = tuple(float(a) - 0.5 * h for a in lo)
    probe = Grid(dim=domain.dim, h=float(h), delta=0.0, domain=domain,
                 origin=origin, shape=shape, pad=0.0,
                 domain_mask=np.zeros(shape, dtype=bool),
                 collar_mask=np.zeros(shape, dtype=bool),
                 exterior_mask=np.zeros(shape, dtype=bool))
    inside = domain.inside(probe.points(), margin=-1e-9 * h)
    return Grid(dim=domain.dim, h=float(h), delta=0.0, domain=domain,
                origin=origin, shape=shape, pad=0.0, domain_mask=inside,
                collar_mask=np.zeros(shape, dtype=bool),
                exterior_mask=~inside)


def _fd_corner_gradients(u_box: np.ndarray, h: float) -> list:
    """Forward-difference gradient components co-located at cell corners,
    with the zero extension outside supplying the Dirichlet condition."""
    pad = np.pad(u_box, 1)
    dim = u_box.ndim
    base = tuple(slice(0, -1) for _ in range(dim))
    out = []
    for k in range(dim):
        hi = list(base)
        hi[k] = slice(1, None)
        out.append((pad[tuple(hi)] - pad[base]) / h)
    return out


def _fd_energy_grad(u_box: np.ndarray, h: float, p: float,
                    f_box: np.ndarray):
    """p-Dirichlet energy of the lattice field and its gradient array."""
    dim = u_box.ndim
    hn = h ** dim
    gs = _fd_corner_gradients(u_box, h)
    mag2 = sum(g * g for g in gs)
    if p == 2.0:
        w = np.ones_like(mag2)
    else:
        w = np.zeros_like(mag2)
        pos = mag2 > 0.0
        w[pos] = mag2[pos] ** (0.5 * p - 1.0)
    energy = (hn / p) * float(np.sum(mag2 ** (0.5 * p))) \
        - hn * float(np.sum(f_box * u_box))
    grad = -hn * f_box
    for k in range(dim):
        flux = w * gs[k]
        lo = [slice(1, None)] * dim
        lo[k] = slice(0, -1)
        hi = [slice(1, None)] * dim
        grad = grad + h ** (dim - 1) * (flux[tuple(lo)] - flux[tuple(hi)])
    return energy, grad


def _fd_solve_plap(grid: Grid, p: float, f_int: np.ndarray,
                   start: np.ndarray | None = None) -> np.ndarray:
    """Minimize the local p-Dirichlet energy on the lattice interior."""
    mask = grid.domain_mask
    inner = tuple(slice(1, -1) for _ in range(grid.dim))
    f_box = np.zeros(tuple(n - 2 for n in grid.shape))
    f_box[mask[inner]] = f_int

    def fun(x):
        u_box = np.zeros_like(f_box)
        u_box[mask[inner]] = x
        e, g = _fd_energy_grad(u_box, grid.h, p, f_box)
        return e, g[mask[inner]]

    x0 = np.zeros(int(mask.sum())) if start is None else start
    res = scipy.optimize.minimize(
        fun, x0, jac=True, method="L-BFGS-B",
        options=dict(maxiter=100_000, maxfun=200_000, ftol=1e-18,
                     gtol=1e-14))
    return res.x


def _fd_laplacian(grid: Grid) -> scipy.sparse.csr_matrix:
    """Sparse symmetric FD Dirichlet Laplacian on the masked lattice."""
    mask = grid.domain_mask
    n = int(mask.sum())
    index = -np.ones(grid.shape, dtype=np.int64)
    index[mask] = np.arange(n)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [
        np.full(n, 2.0 * grid.dim / grid.h ** 2)]
    for k in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        both = mask[tuple(lo)] & mask[tuple(hi)]
        a = index[tuple(lo)][both]
        b = index[tuple(hi)][both]
        off = np.full(a.size, -1.0 / grid.h ** 2)
        rows += [a, b]
        cols += [b, a]
        vals += [off, off]
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(vec)))
    return vec if vec[j] >= 0.0 else -vec


def _fd_eig_linear(grid: Grid, m: int):
    """Smallest m Dirichlet eigenpairs of the FD Laplacian; eigenvectors
    come back L^2(Omega)-normalized."""
    hn = grid.h ** grid.dim
    if grid.dim == 1:
        n = int(grid.domain_mask.sum())
        d = np.full(n, 2.0 / grid.h ** 2)
        e = np.full(n - 1, -1.0 / grid.h ** 2)
        w, v = scipy.linalg.eigh_tridiagonal(d, e, select="i",
                                             select_range=(0, m - 1))
    else:
        A = _fd_laplacian(grid)
        w, v = scipy.sparse.linalg.eigsh(A.tocsc(), k=m, sigma=0.0,
                                         which="LM")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    vecs = [_fix_sign(v[:, j]) / math.sqrt(hn) for j in range(m)]
    return list(map(float, w)), vecs


def _fd_first_eig(grid: Grid, p: float, tol: float = 1e-10,
                  seed: int = 0, max_outer: int = 300):
    """First eigenpair of the local p-Laplacian by inverse-power
    iteration with the lattice energy."""
    hn = grid.h ** grid.dim
    n = int(grid.domain_mask.sum())
    rng = np.random.default_rng(seed)
    u = np.maximum(rng.normal(size=n), 0.0)
    if not np.any(u):
        u[:] = 1.0
    u /= (hn * np.sum(np.abs(u) ** p)) ** (1.0 / p)
    inner = tuple(slice(1, -1) for _ in range(grid.dim))

    def ray(vec):
        u_box = np.zeros(tuple(s - 2 for s in grid.shape))
        u_box[grid.domain_mask[inner]] = vec
        mag2 = sum(g * g for g in _fd_corner_gradients(u_box, grid.h))
        return hn * float(np.sum(mag2 ** (0.5 * p))) / (
            hn * float(np.sum(np.abs(vec) ** p)))

    r = ray(u)
    v = None
    for _ in range(max_outer):
        f = np.abs(u) ** (p - 2.0) * u if p != 2.0 else u
        v = _fd_solve_plap(grid, p, f, start=v)
        nrm = (hn * np.sum(np.abs(v) ** p)) ** (1.0 / p)
        if nrm == 0.0:
            raise RuntimeError("local inverse-power step collapsed to zero")
        u = v / nrm
        rn = ray(u)
        done = abs(rn - r) <= tol * r
        r = rn
        if done:
            return r, _fix_sign(u)
    raise RuntimeError(f"local inverse-power iteration did not settle "
                       f"within {max_outer} outer steps")


@dataclass(eq=False)
class LocalReference:
    """Local Dirichlet eigenvalues by finite differences at two spacings,
    with the Richardson-extrapolated values as the headline numbers."""

    p: float
    m: int
    h: float
    lambdas: tuple          # Richardson extrapolation of (h, h/2)
    lambdas_coarse: tuple   # raw values at h
    lambdas_fine: tuple     # raw values at h/2
    fields: tuple           # eigenfunctions on the h/2 lattice


def local_reference(domain, p: float, m: int, h: float) -> LocalReference:
    """Classical FD Dirichlet p-Laplacian eigensolve at spacings h and
    h/2, Richardson-combined assuming second-order convergence."""
    if not p > 1.0:
        raise ValueError(f"exponent p must exceed 1; got {p}")
    if m < 1:
        raise ValueError(f"need m >= 1; got {m}")
    if p != 2.0 and m != 1:
        raise ValueError("only the first eigenpair is available for p != 2")
    runs = []
    for spacing in (h, h / 2):
        g = _lattice_grid(domain, spacing)
        if p == 2.0:
            lams, vecs = _fd_eig_linear(g, m)
        else:
            lam, vec = _fd_first_eig(g, p)
            lams, vecs = [lam], [vec]
        runs.append((g, lams, vecs))
    (g_c, lam_c, _), (g_f, lam_f, vec_f) = runs
    extrap = tuple((4.0 * bf - bc) / 3.0 for bc, bf in zip(lam_c, lam_f))
    fields = []
    for vec in vec_f:
        out = np.zeros(g_f.shape)
        out[g_f.domain_mask] = vec
        fields.append(Field(g_f, out))
    return LocalReference(p=float(p), m=int(m), h=float(h), lambdas=extrap,
                          lambdas_coarse=tuple(lam_c),
                          lambdas_fine=tuple(lam_f), fields=tuple(fields))


# ---------------------------------------------------------------------------
# fractional (diverging-horizon) reference


@dataclass(eq=False)
class FractionalReference:
    """Eigenpairs of the truncated limit-kernel operator, with the
    R-versus-R/2 truncation sensitivity."""

    p: float
    m: int
    h: float
    radius: float
    s_inf: float
    lambdas: tuple        # at truncation radius R
    lambdas_half: tuple   # at R/2
    shift: float          # max relative eigenvalue shift R -> R/2
    converged_in_radius: bool
    fields: tuple         # eigenfunctions of the R run
    kernel: object        # the truncated limit kernel


def _eig_at(grid, kernel, p, m, tol, seed):
    n = int(grid.domain_mask.sum())
    if p == 2.0:
        op = assemble(grid, kernel) if n < DENSE_EIG_CUTOFF \
            else assemble_operator(grid, kernel)
        es = eigs_linear(op, m)
        return list(es.lambdas), list(es.fields), list(es.residuals)
    lam, u, report = first_eig_p(grid, kernel, p, tol=tol, seed=seed)
    return [lam], [u], [report.residual]


def fractional_reference(domain, kernel, p: float, m: int, radius: float,
                         h: float, tol: float = 1e-8,
                         seed: int = 0) -> FractionalReference:
    """Limit-kernel eigensolve truncated at ``radius``, rerun at half the
    radius to quantify the committed tail-truncation error."""
    lo, hi = domain.bounding_box()
    diam = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
    if radius < 8.0 * diam:
        raise ValueError(f"truncation radius {radius} is below 8x the "
                         f"domain diameter {diam}")
    if p != 2.0 and m != 1:
        raise ValueError("only the first eigenpair is available for p != 2")
    s_inf = s_infinity(kernel)[0]
    results = []
    for r in (radius, radius / 2.0):
        ker_r = limit_kernel(kernel, truncate_at=r)
        grid_r = build_grid(domain, h, r)
        results.append(_eig_at(grid_r, ker_r, p, m, tol, seed))
    (lam_r, fields_r, _), (lam_h, _, _) = results
    shift = max(abs(a - b) / a for a, b in zip(lam_r, lam_h))
    return FractionalReference(
        p=float(p), m=int(m), h=float(h), radius=float(radius),
        s_inf=float(s_inf), lambdas=tuple(lam_r), lambdas_half=tuple(lam_h),
        shift=float(shift),
        converged_in_radius=shift <= TRUNCATION_SENSITIVITY,
        fields=tuple(fields_r),
        kernel=limit_kernel(kernel, truncate_at=radius))


# ---------------------------------------------------------------------------
# eigenfunction alignment


def _lp_norm(values: np.ndarray, mask: np.ndarray, hn: float,
             p: float) -> float:
    return float(hn * np.sum(np.abs(values[mask]) ** p)) ** (1.0 / p)


def align_and_distance(u: Field, u_ref: Field, p: float) -> float:
    """min over the sign of ``|sigma u - u_ref|`` in L^p(Omega).

    Both fields must be L^p(Omega)-normalized; when the reference lives
    on a different grid of the same dimension it is linearly interpolated
    onto the target grid (zero beyond its box) and renormalized there.
    """
    g = u.grid
    hn = g.h ** g.dim
    if abs(_lp_norm(u.values, g.domain_mask, hn, p) - 1.0) > 1e-6:
        raise ValueError("field must be L^p(Omega)-normalized")
    gr = u_ref.grid
    same = (gr.shape == g.shape and gr.h == g.h and gr.origin == g.origin)
    if same:
        ref = u_ref.values
    elif gr.dim != g.dim:
        raise ValueError("no interpolation rule between grids of "
                         "different dimension")
    elif g.dim == 1:
        ref = np.interp(g.axes()[0], gr.axes()[0], u_ref.values,
                        left=0.0, right=0.0)
    else:
        interp = scipy.interpolate.RegularGridInterpolator(
            tuple(gr.axes()), u_ref.values, method="linear",
            bounds_error=False, fill_value=0.0)
        ref = interp(g.points().reshape(-1, g.dim)).reshape(g.shape)
    nrm = _lp_norm(ref, g.domain_mask, hn, p)
    if nrm == 0.0:
        raise ValueError("reference field vanishes on the target interior")
    ref = ref / nrm
    ui = u.values[g.domain_mask]
    ri = ref[g.domain_mask]
    return min(float(hn * np.sum(np.abs(s * ui - ri) ** p)) ** (1.0 / p)
               for s in (1.0, -1.0))


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateEstimate:
    """Least-squares slope of log(error) against log(horizon)."""

    slope: float
    stderr: float
    interval: tuple   # 95% confidence bounds for the slope


def rate_estimate(deltas, errors) -> RateEstimate:
    """Fit log(error) = slope*log(delta) + c by least squares."""
    d = np.asarray(deltas, dtype=float)
    e = np.asarray(errors, dtype=float)
    if d.size != e.size or d.size < 3:
        raise ValueError("need at least 3 (delta, error) pairs")
    if np.any(d <= 0.0) or np.any(e <= 0.0):
        raise ValueError("deltas and errors must be positive")
    x, y = np.log(d), np.log(e)
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    resid = y - (slope * x + intercept)
    dof = d.size - 2
    sigma2 = float(resid @ resid) / dof
    se = math.sqrt(sigma2 / float(np.sum((x - x.mean()) ** 2)))
    tq = float(scipy.stats.t.ppf(0.975, dof))
    return RateEstimate(slope=float(slope), stderr=se,
                        interval=(float(slope - tq * se),
                                  float(slope + tq * se)))


# ---------------------------------------------------------------------------
# the sweep driver


@dataclass(frozen=True)
class SweepConfig:
    """A horizon sweep: which kernel, which limit, which horizons.

    In vanishing mode the spacing follows the horizon (h = delta/8 unless
    pinned, and any pinned h must satisfy h <= delta/4 so the horizon is
    resolved); in diverging mode the spacing is fixed and the box grows
    with the horizon.  For p != 2 only the first eigenpair exists
    variationally, so m is forced to 1.
    """

    kernel: object
    mode: str
    deltas: tuple
    domain: object
    p: float = 2.0
    m: int = 1
    h: float | None = None
    ref_h: float | None = None        # local-reference spacing (vanishing)
    ref_radius: float | None = None   # truncation radius (diverging)
    eig_tol: float = 1e-8
    residual_threshold: float = RESIDUAL_THRESHOLD
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.mode not in ("vanishing", "diverging"):
            raise ValueError(f"unknown sweep mode {self.mode!r}")
        d = tuple(float(x) for x in self.deltas)
        if not d or any(x <= 0.0 for x in d):
            raise ValueError("deltas must be positive")
        diffs = np.diff(d)
        if self.mode == "vanishing" and not np.all(diffs < 0.0):
            raise ValueError("vanishing sweeps need strictly decreasing "
                             "deltas")
        if self.mode == "diverging" and not np.all(diffs > 0.0):
            raise ValueError("diverging sweeps need strictly increasing "
                             "deltas")
        object.__setattr__(self, "deltas", d)
        if not self.p > 1.0:
            raise ValueError(f"exponent p must exceed 1; got {self.p}")
        if self.m < 1:
            raise ValueError(f"need m >= 1; got {self.m}")
        if self.p != 2.0 and self.m != 1:
            object.__setattr__(self, "m", 1)
        if self.mode == "diverging" and self.h is None:
            raise ValueError("diverging sweeps need a fixed spacing h")
        if self.mode == "vanishing" and self.h is not None:
            if self.h > min(d) / 4.0 + 1e-15:
                raise ValueError(f"spacing {self.h} does not resolve the "
                                 f"smallest horizon {min(d)} (need h <= "
                                 f"delta/4)")

    def grid_h(self, delta: float) -> float:
        if self.mode == "vanishing":
            return self.h if self.h is not None else delta / 8.0
        return float(self.h)


@dataclass(frozen=True)
class SweepRow:
    """One horizon's worth of sweep output."""

    delta: float
    c_delta: float
    lam: float
    residual: float
    ref_lambda: float
    eigfun_distance: float
    grid_h: float
    runtime_s: float


@dataclass(eq=False)
class SweepResult:
    """Sweep rows in horizon order plus the reference and the fitted
    rate; ``partial`` flags an aborted sweep."""

    config: SweepConfig
    rows: tuple
    reference: object
    rate: RateEstimate | None
    partial: bool = False
    failure: str | None = None


def _sweep_reference(config: SweepConfig):
    if config.mode == "vanishing":
        ref_h = config.ref_h
        if ref_h is None:
            ref_h = min(config.grid_h(d) for d in config.deltas) / 2.0
        return local_reference(config.domain, config.p, config.m, ref_h)
    lo, hi = config.domain.bounding_box()
    diam = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
    radius = config.ref_radius
    if radius is None:
        radius = max(8.0 * diam, 2.0 * max(config.deltas))
    return fractional_reference(config.domain, config.kernel, config.p,
                                config.m, radius, float(config.h),
                                tol=config.eig_tol, seed=config.seed)


def _sweep_one(config: SweepConfig, delta: float, ref_lambda: float,
               ref_field: Field) -> SweepRow:
    t0 = time.perf_counter()
    h = config.grid_h(delta)
    kernel_d = rescale(config.kernel, delta, mode=config.mode)
    grid = build_grid(config.domain, h, delta)
    lams, fields, residuals = _eig_at(grid, kernel_d, config.p, config.m,
                                      config.eig_tol, config.seed)
    lam = lams[config.m - 1]
    resid = residuals[config.m - 1]
    if resid > config.residual_threshold * max(1.0, lam):
        raise RuntimeError(f"residual {resid:.3e} at delta={delta} exceeds "
                           f"the threshold {config.residual_threshold:.1e} "
                           f"(scaled)")
    dist = align_and_distance(fields[config.m - 1], ref_field, config.p)
    return SweepRow(delta=float(delta), c_delta=float(kernel_d.c_delta),
                    lam=float(lam), residual=float(resid),
                    ref_lambda=float(ref_lambda),
                    eigfun_distance=float(dist), grid_h=float(h),
                    runtime_s=time.perf_counter() - t0)


def sweep(config: SweepConfig) -> SweepResult:
    """Run the horizon sweep against its independent reference.

    Rows come back in the configured horizon order regardless of thread
    completion order.  A failing horizon aborts the sweep: the completed
    rows are returned with ``partial=True`` and the failure message.
    """
    reference = _sweep_reference(config)
    ref_lambda = reference.lambdas[config.m - 1]
    ref_field = reference.fields[config.m - 1]
    rows, failure = [], None
    with concurrent.futures.ThreadPoolExecutor(
            max_workers=max(1, config.threads)) as pool:
        futures = [pool.submit(_sweep_one, config, d, ref_lambda, ref_field)
                   for d in config.deltas]
        for d, fut in zip(config.deltas, futures):
            try:
                rows.append(fut.result())
            except Exception as exc:   # noqa: BLE001 - flagged, not hidden
                failure = f"delta={d}: {exc}"
                break
    rate = None
    if failure is None and len(rows) >= 3:
        errors = [abs(r.lam - r.ref_lambda) for r in rows]
        if all(e > 0.0 for e in errors):
            rate = rate_estimate([r.delta for r in rows], errors)
    return SweepResult(config=config, rows=tuple(rows), reference=reference,
                       rate=rate, partial=failure is not None,
                       failure=failure)


CSV_HEADER = ("delta", "c_delta", "lambda", "residual", "ref_lambda",
              "eigfun_distance", "grid_h", "runtime_s")


def save_sweep(result: SweepResult, path) -> None:
    """Write the sweep table as CSV with the documented header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in result.rows:
            writer.writerow([repr(float(v)) for v in
                             (r.delta, r.c_delta, r.lam, r.residual,
                              r.ref_lambda, r.eigfun_distance, r.grid_h,
                              r.runtime_s)])


def load_sweep_rows(path) -> list:
    """Read a sweep CSV back into SweepRow records."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CSV_HEADER):
            raise ValueError(f"unexpected sweep CSV header: "
                             f"{reader.fieldnames}")
        for row in reader:
            out.append(SweepRow(
                delta=float(row["delta"]), c_delta=float(row["c_delta"]),
                lam=float(row["lambda"]), residual=float(row["residual"]),
                ref_lambda=float(row["ref_lambda"]),
                eigfun_distance=float(row["eigfun_distance"]),
                grid_h=float(row["grid_h"]),
                runtime_s=float(row["runtime_s"])))
    return out
