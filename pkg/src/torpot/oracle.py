"""Brute-force reference computations used only to cross-check the fast paths.

Nothing here is imported by the production modules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .monge_ampere import QuadratureResult

MASS_REL_TOL = 5e-3
MAX_SAMPLES = 4096


def brute_legendre(points, values, s):
    """``max_k (<x_k, s> - f_k)`` over all samples.

    Parameters
    ----------
    points : array_like, shape (k,) or (k, n)
    values : array_like, shape (k,)
    s : array_like, shape (n,) or (m, n)
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    f = np.asarray(values, dtype=float).reshape(-1)
    S = np.asarray(s, dtype=float)
    n = X.shape[1]
    single = S.ndim == 0 or (S.ndim == 1 and S.shape[0] == n and n > 1) or S.size == n == 1
    S = S.reshape(-1, n)
    ok = np.isfinite(f)
    X, f = X[ok], f[ok]
    out = np.array([np.max(X @ sj - f) for sj in S])
    return float(out[0]) if single else out


@dataclass(frozen=True)
class CellSet:
    """Axis-aligned tensor cells; ``edges[k]`` are the breakpoints along axis k."""

    edges: tuple

    @classmethod
    def box(cls, lo, hi, counts=1):
        lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
        counts = np.broadcast_to(np.atleast_1d(counts), lo.shape)
        return cls(tuple(np.linspace(a, b, int(c) + 1) for a, b, c in zip(lo, hi, counts)))

    @property
    def n(self):
        return len(self.edges)

    def __len__(self):
        return int(np.prod([len(e) - 1 for e in self.edges]))

    def corners(self):
        """``(lo, hi)`` arrays of shape (cells, n)."""
        los = np.stack(np.meshgrid(*[e[:-1] for e in self.edges], indexing="ij"), -1)
        his = np.stack(np.meshgrid(*[e[1:] for e in self.edges], indexing="ij"), -1)
        return los.reshape(-1, self.n), his.reshape(-1, self.n)

    @property
    def volume(self):
        return float(np.prod([e[-1] - e[0] for e in self.edges]))


def _fd_grad(F, X, step):
    X = np.atleast_2d(X)
    n = X.shape[1]
    g = np.empty_like(X)
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        g[:, k] = (np.asarray(F(X + e), dtype=float).reshape(-1)
                   - np.asarray(F(X - e), dtype=float).reshape(-1)) / (2 * step)
    return g


def _one_sided_1d(F, x, side, step):
    x = np.asarray(x, dtype=float)[:, None]
    f0 = np.asarray(F(x), dtype=float).reshape(-1)
    f1 = np.asarray(F(x + side * step), dtype=float).reshape(-1)
    return side * (f1 - f0) / step


def _interval_union_length(lo, hi):
    order = np.argsort(lo)
    total, cur_lo, cur_hi = 0.0, None, None
    for a, b in zip(lo[order], hi[order]):
        if cur_hi is None or a > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = a, b
        else:
            cur_hi = max(cur_hi, b)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def _boundary_samples(lo, hi, k):
    """``k`` points per edge on the boundary of each 2-D cell."""
    t = (np.arange(k) + 0.5) / k
    pts = []
    for (ax, ay), (bx, by) in (((0, 0), (1, 0)), ((1, 0), (1, 1)),
                               ((1, 1), (0, 1)), ((0, 1), (0, 0))):
        px = ax + (bx - ax) * t
        py = ay + (by - ay) * t
        pts.append(np.stack([px, py], -1))
    unit = np.concatenate(pts + [np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)])
    return lo[:, None, :] + unit[None] * (hi - lo)[:, None, :]


def _hull_area(pts):
    try:
        return ConvexHull(pts).volume
    except (QhullError, ValueError):
        return 0.0


def alexandrov_mass(F, cells, step=None, rel_tol=MASS_REL_TOL):
    """``n!`` times the volume of the subgradient image of the cells.

    In 1-D each cell ``[a, b]`` maps to ``[F'_-(a), F'_+(b)]`` and the length
    of the union is returned.  In 2-D each cell maps to the convex hull of
    gradient samples on its boundary; the sample count doubles (from 8 per
    cell) until the mass changes by less than ``rel_tol``.
    """
    if cells.n not in (1, 2):
        raise NotImplementedError("alexandrov_mass supports n in {1, 2}")
    scale = max(float(np.max(np.abs(np.concatenate(cells.edges)))), 1.0)
    step = step or 1e-7 * scale
    lo, hi = cells.corners()
    if cells.n == 1:
        left = _one_sided_1d(F, lo[:, 0], -1.0, step)
        right = _one_sided_1d(F, hi[:, 0], 1.0, step)
        return float(_interval_union_length(left, np.maximum(left, right)))
    k, prev = 2, None
    while True:
        pts = _boundary_samples(lo, hi, k)
        grads = _fd_grad(F, pts.reshape(-1, 2), step).reshape(pts.shape)
        mass = 2.0 * sum(_hull_area(g) for g in grads)
        if prev is not None and abs(mass - prev) <= rel_tol * max(abs(mass), 1e-300):
            return float(mass)
        if 4 * k + 4 > MAX_SAMPLES:
            return float(mass)
        prev, k = mass, 2 * k


# ---------------------------------------------------------------------------
# quadrature and differences
# ---------------------------------------------------------------------------


def _smoothstep(a, b):
    w = b - a

    def x_of(t):
        return a + w * t * t * (3 - 2 * t)

    def jac(t):
        return 6 * w * t * (1 - t)
    return x_of, jac


def quadrature_1d(f, a, b, tol=1e-10, max_depth=60, max_evals=200_000):
    """Adaptive Simpson on ``[a, b]`` with an endpoint-flattening substitution.

    ``x = a + (b - a)(3t^2 - 2t^3)`` has zero derivative at both ends, so
    integrable endpoint singularities of log or power type are multiplied by
    a vanishing Jacobian; non-finite products at the exact endpoints are taken
    as their limit 0.  Hitting ``max_depth`` with a large local error, or
    exhausting ``max_evals``, marks the result divergent.
    """
    x_of, jac = _smoothstep(float(a), float(b))
    evals = [0]

    def g(t):
        evals[0] += 1
        if t <= 0.0 or t >= 1.0:
            return 0.0
        with np.errstate(all="ignore"):
            v = float(f(x_of(t))) * jac(t)
        return v if math.isfinite(v) else math.inf

    divergent = [False]
    err = [0.0]

    def simpson(l, r, fl, fm, fr):
        return (r - l) / 6 * (fl + 4 * fm + fr)

    def rec(l, r, fl, fm, fr, whole, eps, depth):
        m = 0.5 * (l + r)
        lm, rm = 0.5 * (l + m), 0.5 * (m + r)
        flm, frm = g(lm), g(rm)
        left = simpson(l, m, fl, flm, fm)
        right = simpson(m, r, fm, frm, fr)
        delta = left + right - whole
        if not math.isfinite(delta):
            divergent[0] = True
            return math.inf
        if depth >= max_depth or evals[0] > max_evals:
            if abs(delta) > 15 * eps:
                divergent[0] = True
            err[0] += abs(delta) / 15
            return left + right + delta / 15
        if abs(delta) <= 15 * eps:
            err[0] += abs(delta) / 15
            return left + right + delta / 15
        return (rec(l, m, fl, flm, fm, left, eps / 2, depth + 1)
                + rec(m, r, fm, frm, fr, right, eps / 2, depth + 1))

    # start from a few panels so that narrow features are not skipped
    knots = np.linspace(0.0, 1.0, 17)
    total = 0.0
    for l, r in zip(knots[:-1], knots[1:]):
        fl, fm, fr = g(l), g(0.5 * (l + r)), g(r)
        total += rec(l, r, fl, fm, fr, simpson(l, r, fl, fm, fr), tol / 16, 0)
    return QuadratureResult(float(total), float(err[0]), evals[0], bool(divergent[0]))


def finite_difference_gradient(samples, point, step=None):
    """Central-difference gradient, one-sided at grid edges.

    ``samples`` is either a callable on arrays of shape ``(k, n)`` or a pair
    ``(axes, values)`` of a tensor grid, in which case ``point`` is snapped to
    the nearest node.
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if callable(samples):
        h = step or 1e-5 * max(1.0, float(np.max(np.abs(point))))
        return _fd_grad(samples, point[None, :], h)[0]
    axes, values = samples
    values = np.asarray(values, dtype=float)
    idx = [int(np.argmin(np.abs(np.asarray(ax) - p))) for ax, p in zip(axes, point)]
    g = np.empty(len(axes))
    for k, ax in enumerate(axes):
        ax = np.asarray(ax, dtype=float)
        i = idx[k]
        lo_i, hi_i = max(i - 1, 0), min(i + 1, len(ax) - 1)
        a, b = list(idx), list(idx)
        a[k], b[k] = lo_i, hi_i
        g[k] = (values[tuple(b)] - values[tuple(a)]) / (ax[hi_i] - ax[lo_i])
    return g


# ---------------------------------------------------------------------------
# random test instances
# ---------------------------------------------------------------------------


@dataclass
class PiecewiseLinear:
    """``F(x) = max_i (<a_i, x> + b_i)``."""

    slopes: np.ndarray
    offsets: np.ndarray

    @property
    def n(self):
        return self.slopes.shape[1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.max(x @ self.slopes.T + self.offsets, axis=-1)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return self.slopes[np.argmax(x @ self.slopes.T + self.offsets, axis=-1)]

    def vertices(self, tol=1e-9):
        """Points where ``n + 1`` pieces are simultaneously active."""
        from itertools import combinations

        A, b = self.slopes, self.offsets
        n = self.n
        out = []
        for idx in combinations(range(len(b)), n + 1):
            idx = list(idx)
            M = A[idx[1:]] - A[idx[0]]
            rhs = b[idx[0]] - b[idx[1:]]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, rhs)
            val = A[idx[0]] @ x + b[idx[0]]
            if self(x[None, :])[0] <= val + tol * (1 + abs(val)):
                out.append(x)
        return np.array(out).reshape(-1, n)


def random_piecewise_linear(rng, n, pieces=None, max_vertex=4.0, min_volume=0.1,
                            attempts=1000):
    """Random convex PL function with slopes in the unit box.

    Offsets come from a concave quadratic lift so every piece is active.
    Draws are rejected until all vertices lie in ``[-max_vertex, max_vertex]^n``
    and the slope hull has volume at least ``min_volume``.
    """
    for _ in range(attempts):
        k = pieces or int(rng.integers(n + 2, 9))
        A = rng.uniform(0.0, 1.0, size=(k, n))
        c = A.mean(axis=0)
        b = -2.0 * np.sum((A - c) ** 2, axis=1)
        F = PiecewiseLinear(A, b)
        V = F.vertices()
        if len(V) == 0 or np.max(np.abs(V)) > max_vertex:
            continue
        vol = np.ptp(A[:, 0]) if n == 1 else _hull_area(A)
        if vol >= min_volume:
            return F
    raise RuntimeError("no admissible random instance found")


__all__ = ["CellSet", "PiecewiseLinear", "alexandrov_mass", "brute_legendre",
           "finite_difference_gradient", "quadrature_1d", "random_piecewise_linear"]
