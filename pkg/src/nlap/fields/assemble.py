"""Stiffness and mass operators over the interior degrees of freedom.

The stiffness is the Gram matrix A = G^T W G of the spectral nonlocal
gradient G restricted to interior nodes (fields extended by zero onto the
collar and exterior, the Dirichlet volume constraint), with W = h^n on
every box node.  Because G is a convolution, A's entries depend only on
index differences and come from one inverse FFT of the squared symbol
magnitude; the same identity powers a matrix-free apply for sizes where
the dense matrix is not wanted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .gradient import spectral_symbols

DENSE_CAP = 4096


@dataclass(eq=False)
class DiscreteOperator:
    """Assembled Dirichlet stiffness/mass pair with its provenance."""

    grid: Grid
    kernel: object
    backend: str
    stiffness: np.ndarray = field(repr=False)
    mass_diag: np.ndarray = field(repr=False)

    @property
    def n_dof(self) -> int:
        return self.mass_diag.shape[0]

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Interior DOF vector -> box field, zero off the domain mask."""
        out = np.zeros(self.grid.shape)
        out[self.grid.domain_mask] = vec
        return out

    def restrict(self, values: np.ndarray) -> np.ndarray:
        return values[self.grid.domain_mask]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-free A @ vec through the FFT identity A = h^n G^T G."""
        mult = _symbol_square(self.kernel, self.grid)
        u = self.embed(vec)
        out = np.fft.ifftn(np.fft.fftn(u) * mult).real
        return (self.grid.h ** self.grid.dim) * out[self.grid.domain_mask]

    def energy(self, vec: np.ndarray) -> float:
        return float(vec @ self.apply(vec))


def _symbol_square(kernel, grid: Grid) -> np.ndarray:
    syms = spectral_symbols(kernel, grid)
    out = np.zeros(grid.shape)
    for s in syms:
        out += np.abs(s) ** 2
    return out


def assemble(grid: Grid, kernel, dense_cap: int = DENSE_CAP) -> DiscreteOperator:
    """Build the dense stiffness matrix and the lumped h^n mass diagonal.

    Raises when the interior DOF count exceeds ``dense_cap``; matrix-free
    consumers can construct the operator with ``assemble_operator`` at any
    size.
    """
    op = assemble_operator(grid, kernel)
    n = int(np.count_nonzero(grid.domain_mask))
    if n == 0:
        raise ValueError("grid has no interior nodes")
    if n > dense_cap:
        raise ValueError(f"{n} interior DOFs exceed the dense cap {dense_cap}; "
                         "use assemble_operator for matrix-free application")
    corr = np.fft.ifftn(_symbol_square(kernel, grid)).real
    idx = np.argwhere(grid.domain_mask)
    hn = grid.h ** grid.dim
    if grid.dim == 1:
        d = (idx[:, 0][:, None] - idx[:, 0][None, :]) % grid.shape[0]
        A = hn * corr[d]
    else:
        d0 = (idx[:, 0][:, None] - idx[:, 0][None, :]) % grid.shape[0]
        d1 = (idx[:, 1][:, None] - idx[:, 1][None, :]) % grid.shape[1]
        A = hn * corr[d0, d1]
    A = 0.5 * (A + A.T)
    op.stiffness = A
    return op


def assemble_operator(grid: Grid, kernel) -> DiscreteOperator:
    """Operator record without the dense matrix (apply stays available)."""
    from .gradient import _check_kernel
    _check_kernel(kernel, grid)
    n = int(np.count_nonzero(grid.domain_mask))
    hn = grid.h ** grid.dim
    return DiscreteOperator(grid=grid, kernel=kernel, backend="spectral",
                            stiffness=None, mass_diag=np.full(n, hn))
