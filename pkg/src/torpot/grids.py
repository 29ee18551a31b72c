"""Tensor grids on the dual (polytope) side and the primal (R^n) side."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

UNIFORM_LIMIT = 32.0
MAX_DENOMINATOR = 1 << 16


def _denominator(value, lo, width):
    """Denominator of ``(value - lo) / width`` as a fraction, or None."""
    t = (value - lo) / width
    frac = Fraction(t).limit_denominator(MAX_DENOMINATOR)
    if abs(float(frac) - t) > 1e-12:
        return None
    return frac.denominator


def aligned_resolution(base, lo, width, breakpoints=()):
    """Smallest multiple of the breakpoint denominators that is ``>= base``.

    Keeping breakpoints on nodes makes piecewise-linear duals exact under
    node-based quadrature.
    """
    den = 1
    for b in breakpoints:
        d = _denominator(b, lo, width)
        if d is not None:
            den = den * d // math.gcd(den, d)
    return int(math.ceil(base / den) * den)


@dataclass(frozen=True)
class DualGrid:
    """Uniform tensor grid over the polytope bounding box with padding.

    ``axes[k]`` runs from ``lo[k] - pad*h[k]`` to ``hi[k] + pad*h[k]`` in
    ``m + 2*pad`` intervals, so the bounding-box corners are nodes.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    m: tuple[int, ...]
    pad: tuple[int, ...]

    @property
    def n(self):
        return len(self.lo)

    @property
    def h(self):
        return np.array([(b - a) / m for a, b, m in zip(self.lo, self.hi, self.m)])

    @property
    def axes(self):
        out = []
        for a, b, m, p in zip(self.lo, self.hi, self.m, self.pad):
            step = (b - a) / m
            out.append(a + step * np.arange(-p, m + p + 1, dtype=float))
        return out

    @property
    def shape(self):
        return tuple(m + 2 * p + 1 for m, p in zip(self.m, self.pad))

    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def subgrid(self):
        """Grid with every other node (used for refinement error estimates)."""
        return DualGrid(self.lo, self.hi, tuple(m // 2 for m in self.m),
                        tuple(p // 2 for p in self.pad))

    @classmethod
    def for_polytope(cls, P, resolution, breakpoints=(), inflate=0.05):
        bbox = P.bbox
        lo, hi, ms, pads = [], [], [], []
        for k in range(P.dim):
            a, b = float(bbox[k, 0]), float(bbox[k, 1])
            coords = list(P.vertices[:, k]) + [bp[k] for bp in breakpoints
                                               if len(bp) == P.dim and bp[k] is not None]
            m = aligned_resolution(resolution, a, b - a, coords)
            lo.append(a)
            hi.append(b)
            ms.append(m)
            pads.append(int(math.ceil(inflate * m)))
        return cls(tuple(lo), tuple(hi), tuple(ms), tuple(pads))


def primal_axis(radius, spacing, extra=()):
    """Sorted primal nodes covering ``[-radius, radius]``.

    Uniform with ``spacing`` on ``[-U, U]``, ``U = min(radius, 32)``, then
    geometric with ratio ``1 + spacing / U`` out to ``radius``.  ``extra``
    nodes (kinks, truncation radii) are merged in.
    """
    U = min(float(radius), UNIFORM_LIMIT)
    k = int(round(U / spacing))
    core = spacing * np.arange(-k, k + 1, dtype=float)
    parts = [core]
    if radius > U * (1 + 1e-12):
        ratio = 1.0 + spacing / U
        count = int(math.ceil(math.log(radius / U) / math.log(ratio)))
        tail = U * ratio ** np.arange(1, count + 1, dtype=float)
        tail = tail[tail < radius]
        parts += [tail, -tail, np.array([radius, -radius])]
    extra = np.asarray([e for e in extra if abs(e) <= radius], dtype=float)
    parts.append(extra)
    return np.unique(np.concatenate(parts))
