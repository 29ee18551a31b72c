"""Compiled line kernels for the discrete convex conjugate.

The per-line conjugate ``out[j] = max_k (x[k] * s[j] - f[k])`` is computed
from the lower convex hull of the points ``(x[k], f[k])``: the maximum over
all samples equals the maximum over hull vertices, and the optimal vertex
index is monotone in ``s``.  Non-finite ``f`` entries are skipped, which is
how infinite dual values enter a conjugation.
"""
from __future__ import annotations

import os

import numpy as np

# numba reads this once at import; allow more workers than cores so that
# thread-count determinism can be exercised on small machines
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba  # noqa: E402
from numba import njit, prange  # noqa: E402


@njit(cache=True)
def conj_line(x, f, s, out, hull):
    """Discrete conjugate of one line; ``hull`` is int64 scratch of len(x)."""
    m = 0
    for k in range(x.shape[0]):
        fk = f[k]
        if not np.isfinite(fk):
            continue
        while m >= 2:
            a = hull[m - 2]
            b = hull[m - 1]
            # drop b when it lies on or above the chord from a to k
            if (f[b] - f[a]) * (x[k] - x[a]) >= (fk - f[a]) * (x[b] - x[a]):
                m -= 1
            else:
                break
        if m >= 1 and x[hull[m - 1]] == x[k]:
            if fk < f[hull[m - 1]]:
                hull[m - 1] = k
            continue
        hull[m] = k
        m += 1
    if m == 0:
        for j in range(s.shape[0]):
            out[j] = -np.inf
        return
    p = 0
    for j in range(s.shape[0]):
        sj = s[j]
        while p + 1 < m:
            c = hull[p]
            d = hull[p + 1]
            if x[d] * sj - f[d] >= x[c] * sj - f[c]:
                p += 1
            else:
                break
        c = hull[p]
        out[j] = x[c] * sj - f[c]


@njit(parallel=True, cache=True)
def conj_lines(x, F, s, out):
    """Apply ``conj_line`` to every row of the 2-D array ``F``."""
    nlines = F.shape[0]
    for i in prange(nlines):
        hull = np.empty(x.shape[0], dtype=np.int64)
        conj_line(x, F[i], s, out[i], hull)


def set_threads(n):
    numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))


def get_threads():
    return numba.get_num_threads()
