"""Dirichlet boundary-value solvers over the assembled nonlocal calculus.

Two problem classes share the zero-extension (volume-constraint) setup of
the fields package:

* ``LinearProblem`` — the anisotropic second-order form
  ``a(u, v) = int A grad u . grad v + int b u v`` against ``int f v``,
  solved as a symmetric positive-definite system on the interior nodes.
  Direct factorization below 4000 unknowns, diagonally preconditioned
  conjugate gradients above; either way the relative algebraic residual
  is certified at 1e-10.
* ``PLapProblem`` — minimization of the p-energy
  ``I[u] = (1/p) int |grad u|^p - int f u`` by first-order descent with a
  backtracking (sufficient-decrease) line search.  The line search is
  FFT-free: gradients of trial points along the ray are linear
  combinations of two cached transforms.

``monotonicity_gap`` evaluates the strong-monotonicity pairing of the
p-Laplacian applied to two admissible fields; it is the quantity whose
strict positivity certifies uniqueness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .fields import Field, Grid
from .fields.assemble import assemble
from .fields.gradient import _check_kernel, spectral_symbols

DIRECT_CUTOFF = 4000
ARMIJO_FACTOR = 1e-4
DECREMENT_RUN = 5


# ---------------------------------------------------------------------------
# shared spectral plumbing


def _grad_box(values: np.ndarray, kernel, grid: Grid) -> np.ndarray:
    """Nonlocal gradient of a box array -> (shape..., dim); assumes the
    field is admissible (zero off the interior), so no ring check."""
    syms = spectral_symbols(kernel, grid)
    fu = np.fft.fftn(values)
    return np.stack([np.fft.ifftn(fu * s).real for s in syms], axis=-1)


def _gradT_box(w: np.ndarray, kernel, grid: Grid) -> np.ndarray:
    """Transpose of _grad_box (correlation with the mirrored stencil)."""
    syms = spectral_symbols(kernel, grid)
    out = np.zeros(grid.shape)
    for c, s in enumerate(syms):
        out += np.fft.ifftn(np.fft.fftn(w[..., c]) * np.conj(s)).real
    return out


def _as_box_array(grid: Grid, data, name: str) -> np.ndarray:
    if isinstance(data, Field):
        data = data.values
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.shape, float(arr))
    if arr.shape == grid.shape or arr.shape == grid.shape + (grid.dim, grid.dim):
        return arr
    raise ValueError(f"{name} must be a scalar, a box array, or a box array "
                     f"of {grid.dim}x{grid.dim} matrices; got shape {arr.shape}")


# ---------------------------------------------------------------------------
# linear problem


@dataclass(eq=False)
class LinearProblem:
    """Second-order coefficient problem on the interior nodes.

    ``coef`` is the gradient-space coefficient A(x): a scalar, a box
    array, or a box array of symmetric matrices.  ``zero_order`` is b(x),
    either identically zero or bounded below by a positive constant.
    ``rhs`` is f, read on the interior nodes.
    """

    grid: Grid
    kernel: object
    rhs: object
    coef: object = 1.0
    zero_order: object = 0.0

    def __post_init__(self):
        _check_kernel(self.kernel, self.grid)
        g = self.grid
        self._coef_scalar = np.isscalar(self.coef) and not isinstance(
            self.coef, np.ndarray)
        A = _as_box_array(g, self.coef, "coef")
        if A.ndim == g.dim:  # scalar-valued coefficient
            low = float(A.min())
        else:
            if not np.allclose(A, np.swapaxes(A, -1, -2), rtol=0, atol=0):
                raise ValueError("coef matrices must be exactly symmetric")
            low = float(np.linalg.eigvalsh(A).min())
        if low <= 0.0:
            raise ValueError(f"ellipticity violated: min coefficient "
                             f"eigenvalue {low} is not positive")
        self._A = A
        b = _as_box_array(g, self.zero_order, "zero_order")
        if b.ndim != g.dim:
            raise ValueError("zero_order must be scalar-valued")
        b_int = b[g.domain_mask]
        if b_int.size and float(b_int.min()) < 0.0:
            raise ValueError("zero_order coefficient must be nonnegative")
        if b_int.size and 0.0 < float(b_int.max()) and float(b_int.min()) == 0.0:
            raise ValueError("zero_order must be identically zero or "
                             "uniformly positive")
        self._b_int = b_int
        f = _as_box_array(g, self.rhs, "rhs")
        if f.ndim != g.dim:
            raise ValueError("rhs must be scalar-valued")
        if not np.all(np.isfinite(f[g.domain_mask])):
            raise ValueError("rhs must be finite on the interior")
        self._f_int = f[g.domain_mask]

    @property
    def n_dof(self) -> int:
        return int(np.count_nonzero(self.grid.domain_mask))

    def _weight_gradient(self, gu: np.ndarray) -> np.ndarray:
        if self._A.ndim == self.grid.dim:
            return self._A[..., None] * gu
        return np.einsum("...ij,...j->...i", self._A, gu)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Stiffness-plus-mass operator on an interior DOF vector."""
        g = self.grid
        hn = g.h ** g.dim
        u = np.zeros(g.shape)
        u[g.domain_mask] = vec
        out = _gradT_box(self._weight_gradient(_grad_box(u, self.kernel, g)),
                         self.kernel, g)[g.domain_mask]
        return hn * (out + self._b_int * vec)

    def operator_matrix(self) -> np.ndarray:
        """Dense system matrix (column-by-column application)."""
        n = self.n_dof
        uniform = (n > 0 and self._coef_scalar
                   and np.all(self._b_int == self._b_int[0]))
        if uniform:
            # constant coefficients: one correlation table instead of n
            # operator applications
            hn = self.grid.h ** self.grid.dim
            K = float(self.coef) * assemble(self.grid, self.kernel,
                                            dense_cap=n).stiffness
            K = K + (hn * self._b_int[0]) * np.eye(n)
            return 0.5 * (K + K.T)
        cols = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            cols[:, j] = self.apply(e)
            e[j] = 0.0
        return 0.5 * (cols + cols.T)

    def _diagonal(self) -> np.ndarray:
        """diag(K) through weighted correlations of the impulse response."""
        g = self.grid
        hn = g.h ** g.dim
        syms = spectral_symbols(self.kernel, g)
        imps = [np.fft.ifftn(s).real for s in syms]
        if self._A.ndim == g.dim:
            wf = np.fft.fftn(self._A)
            diag = np.zeros(g.shape)
            for k in imps:
                diag += np.fft.ifftn(wf * np.conj(np.fft.fftn(k * k))).real
        else:
            diag = np.zeros(g.shape)
            for c, kc in enumerate(imps):
                for d, kd in enumerate(imps):
                    wf = np.fft.fftn(self._A[..., c, d])
                    diag += np.fft.ifftn(
                        wf * np.conj(np.fft.fftn(kc * kd))).real
        return hn * (diag[g.domain_mask] + self._b_int)


def solve_linear(problem: LinearProblem) -> Field:
    """Solve the interior system; certifies relative residual <= 1e-10."""
    g = problem.grid
    hn = g.h ** g.dim
    b = hn * problem._f_int
    n = problem.n_dof
    if n == 0:
        raise ValueError("grid has no interior nodes")
    if not np.any(b):
        x = np.zeros(n)
    elif n < DIRECT_CUTOFF:
        K = problem.operator_matrix()
        x = scipy.linalg.solve(K, b, assume_a="pos")
    else:
        diag = problem._diagonal()
        op = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=problem.apply, dtype=float)
        pre = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=lambda r: r / diag, dtype=float)
        x, info = scipy.sparse.linalg.cg(op, b, rtol=1e-12, atol=0.0,
                                         maxiter=20 * n, M=pre)
        if info != 0:
            raise RuntimeError(f"conjugate gradients did not converge "
                               f"(info={info})")
    resid = np.linalg.norm(problem.apply(x) - b)
    ref = np.linalg.norm(b)
    if ref > 0.0 and resid > 1e-10 * ref:
        raise RuntimeError(f"linear solve residual {resid / ref:.3e} "
                           "exceeds the 1e-10 certificate")
    out = np.zeros(g.shape)
    out[g.domain_mask] = x
    return Field(g, out)


# ---------------------------------------------------------------------------
# p-Laplacian problem


@dataclass(eq=False)
class PLapProblem:
    """Data and tolerances for minimizing the p-energy."""

    grid: Grid
    kernel: object
    p: float
    rhs: object = 0.0
    grad_tol: float = 1e-8
    energy_tol: float = 1e-12
    max_iter: int = 100_000

    def __post_init__(self):
        _check_kernel(self.kernel, self.grid)
        if not self.p > 1.0:
            raise ValueError(f"exponent p must exceed 1; got {self.p}")
        f = _as_box_array(self.grid, self.rhs, "rhs")
        if f.ndim != self.grid.dim:
            raise ValueError("rhs must be scalar-valued")
        if not np.all(np.isfinite(f[self.grid.domain_mask])):
            raise ValueError("rhs must be finite on the interior")
        self._f_int = f[self.grid.domain_mask]


def _gnorm_sq(gu: np.ndarray) -> np.ndarray:
    return np.sum(gu * gu, axis=-1)


def plap_energy(u: Field, problem: PLapProblem) -> float:
    """I[u] = (1/p) h^n sum |grad u|^p - h^n sum_interior f u."""
    g = problem.grid
    if not u.dirichlet_admissible(tol=0.0):
        raise ValueError("field is not zero outside the interior nodes")
    hn = g.h ** g.dim
    gu = _grad_box(u.values, problem.kernel, g)
    p = problem.p
    mag = np.sqrt(_gnorm_sq(gu))
    grad_part = hn / p * float(np.sum(mag ** p))
    f_part = hn * float(np.sum(problem._f_int * u.values[g.domain_mask]))
    return grad_part - f_part


def _energy_from_mag2(mag2: np.ndarray, p: float, hn: float,
                      fdotu: float) -> float:
    return hn / p * float(np.sum(mag2 ** (0.5 * p))) - hn * fdotu


def _descent_direction(gu: np.ndarray, p: float, eps2: float, kernel,
                       grid: Grid, f_int: np.ndarray) -> np.ndarray:
    """L2 gradient of the (possibly regularized) energy on interior nodes."""
    mag2 = _gnorm_sq(gu)
    if p < 2.0:
        w = (mag2 + eps2) ** (0.5 * p - 1.0)
    else:
        w = np.zeros_like(mag2)
        pos = mag2 > 0.0
        w[pos] = mag2[pos] ** (0.5 * p - 1.0)
        if p == 2.0:
            w[:] = 1.0
    flux = w[..., None] * gu
    return _gradT_box(flux, kernel, grid)[grid.domain_mask] - f_int


def solve_plap(problem: PLapProblem, start: Field | None = None,
               history: list | None = None) -> Field:
    """Minimize the p-energy by backtracking descent.

    ``start`` seeds the iteration (zero field by default); ``history``,
    if given, collects the accepted energy value per iterate (the
    sequence is nonincreasing by the sufficient-decrease rule).

    Raises RuntimeError when the iteration cap is exceeded.
    """
    g = problem.grid
    p = problem.p
    hn = g.h ** g.dim
    mask = g.domain_mask
    if start is None:
        v = np.zeros(int(np.count_nonzero(mask)))
    else:
        if start.values.shape != g.shape:
            raise ValueError("start field lives on a different grid")
        if not start.dirichlet_admissible(tol=0.0):
            raise ValueError("start field is not zero outside the interior")
        v = start.values[mask].copy()

    def grad_of(vec: np.ndarray) -> np.ndarray:
        u = np.zeros(g.shape)
        u[mask] = vec
        return _grad_box(u, problem.kernel, g)

    gu = grad_of(v)
    # regularization scale for p < 2, frozen at entry; the descent and the
    # line search act on the regularized energy, while the recorded
    # history stays unregularized (identical for p >= 2)
    eps2 = 0.0
    if p < 2.0:
        scale = 1e-8 * max(1.0, float(np.sqrt(_gnorm_sq(gu).max(initial=0.0))))
        eps2 = scale * scale

    def energies(mag2: np.ndarray, fdot: float) -> tuple[float, float]:
        reg = _energy_from_mag2(mag2 + eps2, p, hn, fdot)
        raw = reg if eps2 == 0.0 else _energy_from_mag2(mag2, p, hn, fdot)
        return reg, raw

    fdotu = float(np.sum(problem._f_int * v))
    energy, raw_energy = energies(_gnorm_sq(gu), fdotu)
    if history is not None:
        history.append(raw_energy)

    step = 1.0
    prev_v = prev_r = None
    small_decrements = 0
    for it in range(problem.max_iter):
        r = _descent_direction(gu, p, eps2, problem.kernel, g,
                               problem._f_int)
        gnorm = math.sqrt(hn * float(r @ r))
        if gnorm <= problem.grad_tol:
            break
        # Barzilai-Borwein trial step from the previous pair, safeguarded;
        # halving backtracking restores monotone decrease.
        if prev_v is not None:
            dv = v - prev_v
            dr = r - prev_r
            denom = float(dv @ dr)
            if denom > 0.0:
                step = float(dv @ dv) / denom
            else:
                step *= 2.0
        prev_v, prev_r = v.copy(), r.copy()
        gr = grad_of(r)
        slope = hn * float(r @ r)
        accepted = False
        for _ in range(60):
            trial_v = v - step * r
            mag2 = _gnorm_sq(gu - step * gr)
            trial_f = float(np.sum(problem._f_int * trial_v))
            trial_energy, trial_raw = energies(mag2, trial_f)
            if trial_energy <= energy - ARMIJO_FACTOR * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # step underflow: no further decrease representable
        v = trial_v
        gu = gu - step * gr
        decrement = energy - trial_energy
        energy, raw_energy = trial_energy, trial_raw
        if history is not None:
            history.append(raw_energy)
        if it % 50 == 49:  # refresh against linear-update drift
            gu = grad_of(v)
        if decrement <= problem.energy_tol * max(1.0, abs(energy)):
            small_decrements += 1
            if small_decrements >= DECREMENT_RUN:
                break
        else:
            small_decrements = 0
    else:
        raise RuntimeError(f"descent exceeded the iteration cap "
                           f"{problem.max_iter}")
    out = np.zeros(g.shape)
    out[mask] = v
    return Field(g, out)


# ---------------------------------------------------------------------------
# monotonicity certificate


def monotonicity_gap(u1: Field, u2: Field, p: float, kernel) -> float:
    """Pairing of the p-Laplacian difference with the field difference:

        h^n sum ( |g1|^{p-2} g1 - |g2|^{p-2} g2 ) . (g1 - g2)

    with g_i the nonlocal gradients; strictly positive whenever the
    fields differ (degenerate weights at g = 0 are taken by their zero
    limit for p > 2).
    """
    if not p > 1.0:
        raise ValueError(f"exponent p must exceed 1; got {p}")
    grid = u1.grid
    if u2.grid is not grid and u2.grid.shape != grid.shape:
        raise ValueError("fields live on different grids")
    for u in (u1, u2):
        if not u.dirichlet_admissible(tol=0.0):
            raise ValueError("fields must vanish outside the interior")
    _check_kernel(kernel, grid)
    hn = grid.h ** grid.dim
    g1 = _grad_box(u1.values, kernel, grid)
    g2 = _grad_box(u2.values, kernel, grid)

    def flux(gu):
        mag2 = _gnorm_sq(gu)
        w = np.zeros_like(mag2)
        pos = mag2 > 0.0
        w[pos] = mag2[pos] ** (0.5 * p - 1.0)
        return w[..., None] * gu

    diff = g1 - g2
    return hn * float(np.sum((flux(g1) - flux(g2)) * diff))
