"""Pick the pair-difference kernels at import: the compiled extension when
available, the pure-Python twin otherwise or when ``NLAP_FORCE_PYTHON``
is set in the environment."""

import os

from . import _pairsum_py

if os.environ.get("NLAP_FORCE_PYTHON"):
    pairsum = _pairsum_py
    COMPILED = False
else:
    try:
        from . import _pairsum as _native
        pairsum = _native
        COMPILED = True
    except ImportError:
        pairsum = _pairsum_py
        COMPILED = False
