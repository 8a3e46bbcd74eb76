"""Pure-Python twin of the compiled pair-difference kernels.

Identical semantics to ``_pairsum.pyx`` (zero extension beyond bounds),
implemented with a zero-padded copy and full-window slicing so each
offset costs one vectorized pass.
"""

from __future__ import annotations

import numpy as np


def pairs_1d(u: np.ndarray, weights: np.ndarray, out: np.ndarray) -> None:
    n = u.shape[0]
    m = weights.shape[0]
    up = np.zeros(n + 2 * m)
    up[m:m + n] = u
    for o in range(1, m + 1):
        w = weights[o - 1]
        if w == 0.0:
            continue
        out += w * (up[m + o:m + o + n] - up[m - o:m - o + n])


def _padded(u: np.ndarray, p: int, q: int) -> np.ndarray:
    up = np.zeros((u.shape[0] + 2 * p, u.shape[1] + 2 * q))
    up[p:p + u.shape[0], q:q + u.shape[1]] = u
    return up


def pairs_2d(u, op, oq, wx, wy, gx, gy) -> None:
    n0, n1 = u.shape
    pmax = int(np.max(np.abs(op))) if len(op) else 0
    qmax = int(np.max(np.abs(oq))) if len(oq) else 0
    up = _padded(u, pmax, qmax)
    for m in range(len(op)):
        p, q = int(op[m]), int(oq[m])
        d = (up[pmax + p:pmax + p + n0, qmax + q:qmax + q + n1]
             - up[pmax - p:pmax - p + n0, qmax - q:qmax - q + n1])
        if wx[m] != 0.0:
            gx += wx[m] * d
        if wy[m] != 0.0:
            gy += wy[m] * d


def pairs_2d_single(u, op, oq, w, out) -> None:
    n0, n1 = u.shape
    pmax = int(np.max(np.abs(op))) if len(op) else 0
    qmax = int(np.max(np.abs(oq))) if len(oq) else 0
    up = _padded(u, pmax, qmax)
    for m in range(len(op)):
        if w[m] == 0.0:
            continue
        p, q = int(op[m]), int(oq[m])
        out += w[m] * (up[pmax + p:pmax + p + n0, qmax + q:qmax + q + n1]
                       - up[pmax - p:pmax - p + n0, qmax - q:qmax - q + n1])
