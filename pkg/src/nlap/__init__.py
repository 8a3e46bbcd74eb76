"""Nonlocal gradient calculus on grids, with horizon-limit eigenvalue studies.

The package is organized around radial interaction kernels (``nlap.kernels``),
finite-difference/spectral realizations of the induced nonlocal gradient and
its Gram operator (``nlap.fields``), variational solvers (``nlap.solvers``),
eigenvalue machinery (``nlap.spectra``), horizon sweeps toward the local
limit (``nlap.horizon``), and a command-line front end (``nlap.cli``).
"""

__version__ = "0.1.0"
