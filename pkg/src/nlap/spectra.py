"""Eigenvalue computation for the nonlocal Dirichlet operator.

For p = 2 the discrete problem is the generalized symmetric pencil
``A u = lambda M u`` with the assembled stiffness and the lumped mass;
below 2000 unknowns it is solved densely, above by shift-free Lanczos.
For other p only the first eigenpair is variationally accessible, and it
is computed by inverse-power iteration: repeatedly solve the p-Laplacian
problem whose right-hand side is the (p-1)-power of the current iterate,
renormalize in L^p, and watch the Rayleigh quotient settle.

Every reported pair carries a residual certificate: the field is rescaled
onto the fixed energy level set, the eigen-operator identity is evaluated
pointwise, and the mass-weighted l2 norm of the mismatch is recorded.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .fields import Field, read_field, write_field
from .fields.assemble import DiscreteOperator
from .fields.gradient import _check_kernel
from .solvers import PLapProblem, _grad_box, _gradT_box, solve_plap

DENSE_EIG_CUTOFF = 2000


# ---------------------------------------------------------------------------
# reports and containers


@dataclass(frozen=True)
class ResidualReport:
    """Residual certificate at a candidate eigenfield.

    ``alpha`` is the energy level height used for the rescaling,
    ``residual`` the mass-weighted l2 norm of the eigen-operator mismatch
    at the rescaled field, ``rayleigh`` the Rayleigh quotient of the
    field itself.
    """

    alpha: float
    residual: float
    rayleigh: float


@dataclass(eq=False)
class EigenSet:
    """Ascending eigenpairs with residual certificates.

    Eigenfields are normalized to unit L^p(Omega) norm; for p = 2 they
    are additionally mass-orthonormal (the lumped mass is a constant
    diagonal, so the two conventions agree).
    """

    p: float
    lambdas: tuple
    fields: tuple
    residuals: tuple

    def __len__(self) -> int:
        return len(self.lambdas)

    def pair(self, m: int):
        """1-based eigenpair access."""
        return self.lambdas[m - 1], self.fields[m - 1]


def save_eigenset(eigset: EigenSet, dirpath) -> None:
    """Write a CSV manifest (m, lambda, residual) and one field dump per
    eigenfunction into ``dirpath``."""
    os.makedirs(dirpath, exist_ok=True)
    with open(os.path.join(dirpath, "manifest.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "lambda", "residual"])
        for i, (lam, res) in enumerate(zip(eigset.lambdas, eigset.residuals),
                                       start=1):
            writer.writerow([i, f"{lam:.17g}", f"{res:.17g}"])
    for i, f in enumerate(eigset.fields, start=1):
        write_field(f, os.path.join(dirpath, f"eig_{i:03d}.fld"),
                    fmt="binary")


def load_eigenset(dirpath, grid, p: float, kernel=None) -> EigenSet:
    """Rebuild an EigenSet from :func:`save_eigenset` output; the grid
    must match the dumps (shape, spacing, origin)."""
    lambdas, residuals = [], []
    with open(os.path.join(dirpath, "manifest.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            lambdas.append(float(row["lambda"]))
            residuals.append(float(row["residual"]))
    fields = []
    for i in range(1, len(lambdas) + 1):
        values, header = read_field(os.path.join(dirpath, f"eig_{i:03d}.fld"))
        if header["shape"] != grid.shape or header["h"] != grid.h:
            raise ValueError("field dump geometry does not match the grid")
        fields.append(Field(grid, values))
    return EigenSet(p=p, lambdas=tuple(lambdas), fields=tuple(fields),
                    residuals=tuple(residuals))


# ---------------------------------------------------------------------------
# Rayleigh quotient and residual certificate


def _lp_norm_interior(u: Field, p: float) -> float:
    g = u.grid
    hn = g.h ** g.dim
    return float(hn * np.sum(np.abs(u.values[g.domain_mask]) ** p)) ** (1.0 / p)


def _require_admissible(u: Field, name: str = "field") -> None:
    if not np.any(u.values):
        raise ValueError(f"{name} is identically zero")
    if not u.dirichlet_admissible(tol=0.0):
        raise ValueError(f"{name} must vanish outside the interior nodes")


def rayleigh(u: Field, p: float, kernel) -> float:
    """``(gradient p-energy over the box) / (L^p(Omega) norm^p)``."""
    _require_admissible(u)
    _check_kernel(kernel, u.grid)
    g = u.grid
    hn = g.h ** g.dim
    gu = _grad_box(u.values, kernel, g)
    num = hn * float(np.sum(np.sum(gu * gu, axis=-1) ** (0.5 * p)))
    den = hn * float(np.sum(np.abs(u.values[g.domain_mask]) ** p))
    return num / den


def eigen_residual(u: Field, p: float, kernel,
                   alpha: float | None = None) -> ResidualReport:
    """Certificate that (rayleigh(u), u) is a discrete eigenpair.

    The field is rescaled so its gradient p-energy over p equals
    ``alpha`` (default 1/p, making the level set read 'energy = 1');
    at the rescaled field the difference between the p-power mass term
    and the scaled p-Laplacian is measured in the mass-weighted l2 norm.
    Zero exactly at discrete eigenpairs, and invariant in verdict under
    the choice of alpha (the residual scales by a power of alpha).
    """
    _require_admissible(u)
    _check_kernel(kernel, u.grid)
    if alpha is None:
        alpha = 1.0 / p
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    g = u.grid
    hn = g.h ** g.dim
    gu = _grad_box(u.values, kernel, g)
    energy_p = hn * float(np.sum(np.sum(gu * gu, axis=-1) ** (0.5 * p)))
    ray = energy_p / (hn * float(np.sum(np.abs(u.values[g.domain_mask]) ** p)))
    scale = (alpha * p / energy_p) ** (1.0 / p)
    ut = scale * u.values
    gut = scale * gu
    mag2 = np.sum(gut * gut, axis=-1)
    w = np.zeros_like(mag2)
    pos = mag2 > 0.0
    w[pos] = mag2[pos] ** (0.5 * p - 1.0)
    lap = _gradT_box(w[..., None] * gut, kernel, g)[g.domain_mask]
    ui = ut[g.domain_mask]
    bvec = np.abs(ui) ** (p - 2.0) * ui if p != 2.0 else ui
    Bval = (1.0 / p) * hn * float(np.sum(np.abs(ui) ** p))
    mism = bvec - (Bval / alpha) * lap
    return ResidualReport(alpha=float(alpha),
                          residual=float(np.sqrt(hn * np.sum(mism * mism))),
                          rayleigh=float(ray))


# ---------------------------------------------------------------------------
# linear (p = 2) eigensolve


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Deterministic sign: the largest-magnitude entry of each column is
    made positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0.0] = 1.0
    return vecs * signs


def eigs_linear(op: DiscreteOperator, m: int) -> EigenSet:
    """Smallest ``m`` eigenpairs of the stiffness/mass pencil.

    Dense symmetric solve below 2000 unknowns, otherwise shift-free
    Lanczos on the matrix-free apply; eigenvalues come out ascending and
    strictly positive, eigenfields mass-orthonormal.
    """
    n = op.n_dof
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= {n}; got {m}")
    g = op.grid
    hn = g.h ** g.dim
    if n < DENSE_EIG_CUTOFF:
        if op.stiffness is None:
            raise ValueError("operator has no dense stiffness; assemble() it "
                             "or raise the Lanczos path by problem size")
        w, v = scipy.linalg.eigh(op.stiffness, subset_by_index=[0, m - 1])
    else:
        lin = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=op.apply, dtype=float)
        v0 = np.full(n, 1.0 / math.sqrt(n))
        try:
            w, v = scipy.sparse.linalg.eigsh(lin, k=m, which="SA", v0=v0,
                                             maxiter=100 * n)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise RuntimeError(
                f"Lanczos did not converge within the iteration budget: "
                f"{exc}") from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    lam = w / hn
    if lam[0] <= 0.0:
        raise RuntimeError(f"nonpositive leading eigenvalue {lam[0]}; the "
                           "discrete Poincare bound failed")
    vecs = _fix_signs(v) / math.sqrt(hn)   # mass-orthonormal columns
    fields, residuals = [], []
    for j in range(m):
        out = np.zeros(g.shape)
        out[g.domain_mask] = vecs[:, j]
        f = Field(g, out)
        fields.append(f)
        residuals.append(eigen_residual(f, 2.0, op.kernel).residual)
    return EigenSet(p=2.0, lambdas=tuple(float(x) for x in lam),
                    fields=tuple(fields), residuals=tuple(residuals))


# ---------------------------------------------------------------------------
# inverse-power iteration for the first eigenpair, any p


def first_eig_p(grid, kernel, p: float, tol: float = 1e-8, seed: int = 0,
                max_outer: int = 500, inner_grad_tol: float = 1e-9,
                history: list | None = None):
    """First eigenpair by inverse-power iteration.

    From the positive part of a seeded random field, repeat: solve the
    p-Laplacian problem with right-hand side ``|u|^{p-2} u``, normalize
    the solution in L^p(Omega), recompute the Rayleigh quotient; stop
    when its relative change drops below ``tol``.  Returns
    ``(lambda_1, u_1, ResidualReport)``; ``history`` (optional list)
    collects the Rayleigh value per outer iterate, a nonincreasing
    sequence.

    Raises RuntimeError when ``max_outer`` is exhausted or an inner
    solve fails.
    """
    _check_kernel(kernel, grid)
    if not p > 1.0:
        raise ValueError(f"exponent p must exceed 1; got {p}")
    mask = grid.domain_mask
    n = int(np.count_nonzero(mask))
    rng = np.random.default_rng(seed)
    u = np.zeros(grid.shape)
    u[mask] = np.maximum(rng.normal(size=n), 0.0)
    if not np.any(u):
        u[mask] = 1.0
    uf = Field(grid, u)
    uf = Field(grid, u / _lp_norm_interior(uf, p))
    ray = rayleigh(uf, p, kernel)
    if history is not None:
        history.append(ray)
    vprev = None
    for _ in range(max_outer):
        ui = uf.values[mask]
        bvec = np.abs(ui) ** (p - 2.0) * ui if p != 2.0 else ui
        f = np.zeros(grid.shape)
        f[mask] = bvec
        problem = PLapProblem(grid, kernel, p=p, rhs=f,
                              grad_tol=inner_grad_tol, energy_tol=0.0)
        start = None if vprev is None else Field(grid, vprev)
        v = solve_plap(problem, start=start)
        vprev = v.values
        norm = _lp_norm_interior(v, p)
        if norm == 0.0:
            raise RuntimeError("inverse-power step collapsed to zero")
        uf = Field(grid, v.values / norm)
        new_ray = rayleigh(uf, p, kernel)
        if history is not None:
            history.append(new_ray)
        done = abs(new_ray - ray) <= tol * ray
        ray = new_ray
        if done:
            break
    else:
        raise RuntimeError(f"inverse-power iteration did not settle within "
                           f"{max_outer} outer steps")
    report = eigen_residual(uf, p, kernel)
    return ray, uf, report


# ---------------------------------------------------------------------------
# finite-dimensional min-max cross-check (p = 2)


@dataclass(frozen=True)
class MinMaxReport:
    """Subspace-sampling verdict for the min-max characterization."""

    trials: int
    subspace_minima: tuple   # per m: min over sampled subspaces of max Rayleigh
    attained: tuple          # per m: max Rayleigh over the leading eigenspace
    violations: tuple        # (m, trial, value) triples below lambda_m - 1e-8

    @property
    def passed(self) -> bool:
        return not self.violations


def courant_fischer_check(eigset: EigenSet, op: DiscreteOperator,
                          trials: int, seed: int = 0) -> MinMaxReport:
    """Sample random m-dimensional subspaces and verify that each one's
    maximal Rayleigh quotient dominates lambda_m, with equality attained
    on the span of the first m eigenfields."""
    if eigset.p != 2.0:
        raise ValueError("the min-max cross-check needs a p=2 eigenset")
    g = op.grid
    hn = g.h ** g.dim
    n = op.n_dof
    A = op.stiffness

    def apply_block(V):
        if A is not None:
            return A @ V
        return np.stack([op.apply(V[:, j]) for j in range(V.shape[1])],
                        axis=1)

    def max_rayleigh(V):
        KV = apply_block(V)
        a = V.T @ KV
        b = hn * (V.T @ V)
        return float(scipy.linalg.eigvalsh(a, b).max())

    minima, attained, violations = [], [], []
    for m in range(1, len(eigset) + 1):
        lam_m = eigset.lambdas[m - 1]
        E = np.stack([f.values[g.domain_mask] for f in eigset.fields[:m]],
                     axis=1)
        attained.append(max_rayleigh(E))
        worst = math.inf
        for t in range(trials):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(m, t)))
            V = rng.normal(size=(n, m))
            val = max_rayleigh(V)
            worst = min(worst, val)
            if val < lam_m - 1e-8:
                violations.append((m, t, val))
        minima.append(worst)
    return MinMaxReport(trials=trials, subspace_minima=tuple(minima),
                        attained=tuple(attained),
                        violations=tuple(violations))
