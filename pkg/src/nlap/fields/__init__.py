"""Grids, nodal fields, and discrete nonlocal vector calculus."""

from ._select import COMPILED, pairsum
from .assemble import DiscreteOperator, assemble, assemble_operator
from .gradient import (ibp_defect, nl_divergence, nl_gradient,
                       spectral_symbols, translate_from_local,
                       translate_to_local)
from .grid import Disk, Field, Grid, Interval, Rect, build_grid
from .io import read_field, region_codes, write_field

__all__ = [
    "COMPILED",
    "pairsum",
    "Grid",
    "Field",
    "Interval",
    "Rect",
    "Disk",
    "build_grid",
    "nl_gradient",
    "nl_divergence",
    "ibp_defect",
    "translate_to_local",
    "translate_from_local",
    "spectral_symbols",
    "assemble",
    "assemble_operator",
    "DiscreteOperator",
    "write_field",
    "read_field",
    "region_codes",
]
