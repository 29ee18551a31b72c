"""Convex functions on R^n and their discrete Legendre-Fenchel transforms.

The transform on a tensor grid factorises over coordinates,

    G(s) = max_{x_n} ( x_n s_n + ... max_{x_1} (x_1 s_1 - F(x)) ... ),

so an n-dimensional conjugate is n passes of the 1-D line kernel in
``_kernels``.  Every value produced is an exact maximum over the sampled
primal nodes; approximation error comes only from sampling and truncation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import _kernels
from .config import DEFAULT_RADII, RunConfig
from .grids import DualGrid, primal_axis


class NonConvexError(ValueError):
    """Gridded input failed the discrete convexity check."""

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------


@dataclass
class ConvexFunctionRep:
    """A convex function on R^n.

    Either closed form (``value`` and optionally ``gradient`` callables acting
    on arrays of shape ``(..., n)``) or gridded (tensor ``axes`` and
    ``values``).  ``kinks`` lists primal coordinates where the function is not
    differentiable; they are inserted into primal grids so that
    piecewise-linear functions are sampled exactly.
    """

    n: int
    value: Callable | None = None
    gradient: Callable | None = None
    axes: list | None = None
    values: np.ndarray | None = None
    kinks: tuple = ()
    label: str = ""
    sampler: Callable | None = None
    one_sided: Callable | None = None
    _interp: object = field(default=None, repr=False)

    @classmethod
    def closed_form(cls, n, value, gradient=None, kinks=(), label="", one_sided=None,
                    sampler=None):
        return cls(n=n, value=value, gradient=gradient, kinks=tuple(kinks), label=label,
                   one_sided=one_sided, sampler=sampler)

    @classmethod
    def gridded(cls, axes, values, label="gridded"):
        axes = [np.asarray(a, dtype=float) for a in axes]
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(len(a) for a in axes):
            raise ValueError("values shape does not match the axes")
        if not np.all(np.isfinite(values)):
            raise ValueError("gridded primal samples must be finite")
        for a in axes:
            if np.any(np.diff(a) <= 0):
                raise ValueError("grid axes must be strictly increasing")
        return cls(n=len(axes), axes=axes, values=values, label=label)

    @property
    def kind(self):
        return "gridded" if self.values is not None else "closed-form"

    @property
    def box(self):
        if self.axes is None:
            return None
        return np.array([[a[0], a[-1]] for a in self.axes])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.value is not None:
            return self.value(x)
        if self._interp is None:
            # linear extrapolation keeps edge finite differences defined
            self._interp = RegularGridInterpolator(self.axes, self.values, bounds_error=False,
                                                   fill_value=None)
        if self.n == 1 and x.ndim == 0:
            x = x[None]
        return self._interp(x)

    def grad(self, x, step=None):
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return self.gradient(x)
        if step is None:
            step = self._default_step()
        out = np.empty(x.shape, dtype=float)
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = step
            out[..., k] = (self(x + e) - self(x - e)) / (2 * step)
        return out

    def _default_step(self):
        if self.axes is not None:
            return float(min(np.min(np.diff(a)) for a in self.axes))
        return 1e-5

    def sample(self, axes):
        """Values on the tensor grid spanned by ``axes``."""
        if self.sampler is not None:
            return self.sampler(axes)
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        if self.n == 1:
            return np.asarray(self(mesh), dtype=float).reshape(len(axes[0]))
        return np.asarray(self(mesh), dtype=float)


@dataclass
class DualFunction:
    """Samples of a Legendre transform on a ``DualGrid`` with a finiteness mask.

    ``values`` holds the last truncation level; ``levels`` keeps every level
    so monotonicity in R can be inspected.  ``exact`` is an optional closed
    form used for off-node evaluation.
    """

    polytope: object
    grid: DualGrid
    values: np.ndarray
    finite_mask: np.ndarray
    radii: tuple = ()
    levels: dict | None = None
    exact: Callable | None = None
    exact_grad: Callable | None = None
    label: str = ""

    @property
    def n(self):
        return self.grid.n

    @property
    def axes(self):
        return self.grid.axes

    @property
    def h(self):
        return self.grid.h

    @property
    def G(self):
        return np.where(self.finite_mask, self.values, np.inf)

    def points(self):
        return self.grid.points()

    def signed_distance(self):
        return self.polytope.signed_distance(self.points())

    def inside(self, tol=1e-12):
        return self.signed_distance() >= -tol

    def interior(self, margin_cells):
        return self.signed_distance() >= margin_cells * float(np.min(self.h)) * (1 - 1e-9)

    @classmethod
    def from_closed_form(cls, P, grid, G, grad=None, label=""):
        """Evaluate a closed-form dual on the nodes of ``P``; +inf elsewhere."""
        pts = grid.points()
        inside = P.signed_distance(pts) >= -1e-12
        vals = np.full(grid.shape, np.inf)
        with np.errstate(all="ignore"):
            v = np.asarray(G(pts[inside]), dtype=float)
        vals[inside] = v
        mask = np.isfinite(vals)
        return cls(P, grid, np.where(mask, vals, np.inf), mask, exact=G, exact_grad=grad,
                   label=label)

    def __call__(self, s):
        """Evaluate at arbitrary points: closed form if known, else multilinear.

        In 2-D the interpolant is linear on the same anti-diagonal triangles
        used for cell sums.  Corners with zero weight are ignored, so nodes and
        faces next to infinite nodes keep their finite values.
        """
        s = np.asarray(s, dtype=float)
        if self.exact is not None:
            return self.exact(s)
        pts = s.reshape(-1, self.n)
        V = self.G
        base, frac = [], []
        for k, ax in enumerate(self.axes):
            t = (pts[:, k] - ax[0]) / (ax[1] - ax[0])
            t = np.where(np.abs(t - np.round(t)) < 1e-9, np.round(t), t)
            i = np.clip(np.floor(t).astype(np.int64), 0, len(ax) - 2)
            base.append(i)
            frac.append(t - i)
        out = np.zeros(len(pts))
        outside = np.zeros(len(pts), dtype=bool)
        for k, ax in enumerate(self.axes):
            outside |= (frac[k] < 0) | (frac[k] > 1)
        for idx, w in _interp_weights(base, frac):
            v = V[tuple(idx)]
            with np.errstate(invalid="ignore"):
                out = out + np.where(w > 1e-9, w * v, 0.0)
        out[outside] = np.inf
        return out.reshape(s.shape[:-1])

    def check_convexity(self, tol=1e-9):
        """Axis-line convexity on runs of finite nodes."""
        return _check_lines(self.axes, self.G, tol, skip_inf=True)


def _interp_weights(base, frac):
    """``(corner index, weight)`` pairs for piecewise-linear interpolation."""
    n = len(base)
    if n == 2:
        i, j = base
        fx, fy = frac
        lower = fx + fy <= 1 + 1e-9
        zero = np.zeros_like(fx)
        return [((i, j), np.where(lower, 1 - fx - fy, zero)),
                ((i + 1, j), np.where(lower, fx, 1 - fy)),
                ((i, j + 1), np.where(lower, fy, 1 - fx)),
                ((i + 1, j + 1), np.where(lower, zero, fx + fy - 1))]
    out = []
    for corner in np.ndindex(*([2] * n)):
        w = np.ones_like(frac[0])
        for k, c in enumerate(corner):
            w = w * (frac[k] if c else 1 - frac[k])
        out.append(([b + c for b, c in zip(base, corner)], w))
    return out


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def discrete_conjugate(axes_in, values, axes_out):
    """``max_x (<x, s> - f(x))`` over the tensor grid ``axes_in``.

    Non-finite inputs are ignored; an output with no finite input is -inf.
    """
    A = np.asarray(values, dtype=float)
    n = len(axes_in)
    for k in range(n):
        A = np.moveaxis(A, k, -1)
        shape = A.shape
        lines = np.ascontiguousarray(A.reshape(-1, shape[-1]))
        out = np.empty((lines.shape[0], len(axes_out[k])))
        _kernels.conj_lines(np.ascontiguousarray(axes_in[k], dtype=float), lines,
                            np.ascontiguousarray(axes_out[k], dtype=float), out)
        A = np.moveaxis(out.reshape(shape[:-1] + (len(axes_out[k]),)), -1, k)
        if k < n - 1:
            A = -A
    return A


def primal_grid_axis(F, radii, config):
    """Primal axis for sampling ``F`` up to the last radius."""
    if F.kind == "gridded":
        return None
    extra = list(F.kinks) + [r for R in radii for r in (R, -R)]
    return primal_axis(radii[-1], config.spacing(F.n), extra)


def legendre_transform(F, P, config=None, radii=None, grid=None, breakpoints=(),
                       label=""):
    """Discrete Legendre transform of ``F`` on a grid over the polytope ``P``.

    Parameters
    ----------
    F : ConvexFunctionRep
    P : DelzantPolytope
        Supplies the bounding box of the dual grid (any box works).
    config : RunConfig, optional
    radii : sequence of float, optional
        Truncation schedule; overrides ``config.radii``.
    grid : DualGrid, optional
        Explicit dual grid; otherwise built from ``P`` and the resolution.
    breakpoints : sequence of tuples
        Dual points that should land on grid nodes.

    Returns
    -------
    DualFunction
        ``values`` is ``G_R`` at the last radius; ``finite_mask`` marks nodes
        where the last two levels agree to ``tol.sat * (1 + |G|)``.
    """
    config = config or RunConfig()
    if grid is None:
        grid = DualGrid.for_polytope(P, config.resolution(P.dim), breakpoints)
    if F.kind == "gridded":
        ok, violation = check_convexity(F, tol=config.tol.conv)
        if not ok:
            raise NonConvexError("gridded function is not convex", violation)
        axes_full = F.axes
        if radii is None:
            reach = min(min(abs(a[0]), abs(a[-1])) for a in axes_full)
            radii = (reach / 2, reach)
        samples = F.values
    else:
        radii = radii or config.radii or DEFAULT_RADII
        axis = primal_grid_axis(F, radii, config)
        axes_full = [axis] * F.n
        samples = F.sample(axes_full)
    radii = tuple(float(r) for r in radii)
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("truncation schedule must be increasing with at least two radii")
    levels = {}
    for R in radii:
        sel = [np.flatnonzero(np.abs(a) <= R * (1 + 1e-12)) for a in axes_full]
        sub = samples[np.ix_(*sel)]
        levels[R] = discrete_conjugate([a[i] for a, i in zip(axes_full, sel)], sub,
                                       grid.axes)
    last, prev = levels[radii[-1]], levels[radii[-2]]
    with np.errstate(invalid="ignore"):
        mask = np.isfinite(last) & (last - prev <= config.tol.sat * (1 + np.abs(last)))
    return DualFunction(P, grid, np.where(mask, last, np.inf), mask, radii, levels,
                        label=label or F.label)


def conjugate_to_primal(G, axes):
    """Primal function ``max_s (<x, s> - G(s))`` over the finite dual nodes."""
    return discrete_conjugate(G.axes, G.G, axes)


def biconjugate(F, P, config=None, radii=None, grid=None, breakpoints=()):
    """Transform twice; the result lives on the inner half of the last window.

    The second transform uses the unmasked values at the last radius, which
    is the conjugate of ``F`` restricted to that window.

    Returns
    -------
    ConvexFunctionRep
        Gridded ``F**`` on the core box.
    """
    config = config or RunConfig()
    G = legendre_transform(F, P, config, radii=radii, grid=grid, breakpoints=breakpoints)
    R = G.radii[-1]
    if F.kind == "gridded":
        axes = [a[np.abs(a) <= R / 2 * (1 + 1e-12)] for a in F.axes]
    else:
        axis = primal_grid_axis(F, G.radii, config)
        axes = [axis[np.abs(axis) <= R / 2 * (1 + 1e-12)]] * F.n
    # conjugate the last truncation level itself: masking first would drop
    # the slopes needed near the edge of the core box
    last = G.levels[R]
    return ConvexFunctionRep.gridded(axes, discrete_conjugate(G.axes, last, axes),
                                     label=f"{F.label}**")


# ---------------------------------------------------------------------------
# subgradients and diagnostics
# ---------------------------------------------------------------------------


@dataclass
class Subgradient:
    vector: np.ndarray
    interval: tuple | None = None


def subgradient(F, x, step=None):
    """A subgradient of ``F`` at ``x``; in 1-D also the one-sided slopes.

    Raises
    ------
    ValueError
        If ``x`` is within one step of the edge of a gridded box.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if F.kind == "gridded":
        step = step or F._default_step()
        box = F.box
        if np.any(x - step < box[:, 0]) or np.any(x + step > box[:, 1]):
            raise ValueError("point too close to the edge of the sampled box")
    vec = np.atleast_1d(F.grad(x, step) if F.gradient is None else F.gradient(x))
    interval = None
    if F.n == 1:
        if F.one_sided is not None:
            interval = tuple(float(v) for v in F.one_sided(x[0]))
        elif F.gradient is not None:
            interval = (float(vec[0]), float(vec[0]))
        else:
            h = step or F._default_step()
            f0 = float(F(x))
            interval = (float((f0 - F(x - h)) / h), float((F(x + h) - f0) / h))
    return Subgradient(vec, interval)


@dataclass
class GradientRange:
    lo: np.ndarray
    hi: np.ndarray
    samples: np.ndarray


def gradient_range(F, R, count=65):
    """Sample the gradient map on ``[-R, R]^n``."""
    axis = np.linspace(-R, R, count)
    if F.kind == "gridded":
        box = F.box
        step = F._default_step()
        axis = np.linspace(max(-R, box[:, 0].max() + step), min(R, box[:, 1].min() - step),
                           count)
    mesh = np.stack(np.meshgrid(*([axis] * F.n), indexing="ij"), axis=-1).reshape(-1, F.n)
    g = np.asarray(F.grad(mesh), dtype=float).reshape(-1, F.n)
    return GradientRange(g.min(axis=0), g.max(axis=0), g)


def _check_lines(axes, values, tol, skip_inf=False):
    values = np.asarray(values, dtype=float)
    for k, x in enumerate(axes):
        A = np.moveaxis(values, k, -1).reshape(-1, len(x))
        for row_index, row in enumerate(A):
            bad = _line_violation(x, row, tol, skip_inf)
            if bad is not None:
                return False, {"axis": k, "line": row_index, "indices": bad,
                               "values": [float(row[i]) for i in bad]}
    return True, None


def _line_violation(x, f, tol, skip_inf):
    idx = np.flatnonzero(np.isfinite(f)) if skip_inf else np.arange(len(f))
    if skip_inf and len(idx) >= 3:
        # only check contiguous runs
        runs = np.split(idx, np.flatnonzero(np.diff(idx) != 1) + 1)
    else:
        runs = [idx]
    for run in runs:
        if len(run) < 3:
            continue
        xa, xb, xc = x[run[:-2]], x[run[1:-1]], x[run[2:]]
        fa, fb, fc = f[run[:-2]], f[run[1:-1]], f[run[2:]]
        chord = ((xc - xb) * fa + (xb - xa) * fc) / (xc - xa)
        excess = fb - chord
        scale = tol + 1e-12 * np.maximum(np.abs(fa), np.maximum(np.abs(fb), np.abs(fc)))
        where = np.flatnonzero(excess > scale)
        if where.size:
            j = where[0]
            return [int(run[j]), int(run[j + 1]), int(run[j + 2])]
    return None


def check_convexity(F, tol=1e-9):
    """Discrete convexity along axis lines and, in 2-D, both diagonals.

    Returns
    -------
    ok : bool
    violation : dict or None
        The first violating triple of node indices with its values.
    """
    if isinstance(F, ConvexFunctionRep):
        axes, values = F.axes, F.values
    else:
        axes, values = F
        axes = [np.asarray(a, dtype=float) for a in axes]
        values = np.asarray(values, dtype=float)
    ok, bad = _check_lines(axes, values, tol)
    if not ok or len(axes) != 2:
        return ok, bad
    hx, hy = np.diff(axes[0]), np.diff(axes[1])
    if not (np.allclose(hx, hx[0]) and np.allclose(hy, hy[0])):
        return True, None
    for sign in (1, -1):
        V = values if sign == 1 else values[:, ::-1]
        for off in range(-V.shape[0] + 3, V.shape[1] - 2):
            d = np.diagonal(V, offset=off)
            t = np.arange(len(d), dtype=float)
            j = _line_violation(t, d, tol, False)
            if j is not None:
                return False, {"diagonal": sign, "offset": off, "indices": j,
                               "values": [float(d[i]) for i in j]}
    return True, None
