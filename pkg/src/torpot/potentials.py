"""Toric potentials: reference/potential pairs and the worked-example gallery.

A potential is stored through its convex profile ``Fphi`` on R^n next to a
reference profile ``F0``; the function on the manifold is ``Fphi - F0`` read
in logarithmic coordinates.  Dual functions are produced on demand, either by
transforming ``Fphi`` or, for potentials specified on the polytope side, by
evaluating a closed form on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable
from urllib.parse import parse_qsl

import numpy as np

from .config import DEFAULT_RADII, RunConfig
from .convexfn import ConvexFunctionRep, DualFunction, discrete_conjugate, legendre_transform
from .grids import DualGrid, primal_axis
from .polytope import DelzantPolytope, PolytopeError

TINY = 1e-300


class SpecError(ValueError):
    """Unknown gallery name or invalid parameters."""


# ---------------------------------------------------------------------------
# elementary pieces
# ---------------------------------------------------------------------------


def xlogx(t):
    """``t log t`` with the value 0 for ``0 <= t < 1e-300`` and +inf for t < 0."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t >= TINY, t, 1.0)
    out = np.where(t >= TINY, t * np.log(safe), 0.0)
    return np.where(t < 0, np.inf, out)


def _lse0(z):
    """``log(1 + sum exp(z))`` along the last axis."""
    zero = np.zeros(z.shape[:-1] + (1,))
    return np.logaddexp.reduce(np.concatenate([zero, z], axis=-1), axis=-1)


def _softmax0(z):
    zmax = np.maximum(z.max(axis=-1, keepdims=True), 0.0)
    e = np.exp(z - zmax)
    return e / (np.exp(-zmax) + e.sum(axis=-1, keepdims=True))


def fubini_study(n):
    """``F0(x) = 1/2 log(1 + sum exp(2 x_i))``, the simplex reference."""
    return ConvexFunctionRep.closed_form(
        n, lambda x: 0.5 * _lse0(2 * np.asarray(x, float)),
        lambda x: _softmax0(2 * np.asarray(x, float)), label=f"fs{n}")


def fubini_study_dual(s):
    s = np.asarray(s, dtype=float)
    return 0.5 * (xlogx(s).sum(axis=-1) + xlogx(1 - s.sum(axis=-1)))


def support_function(P):
    """``F_P`` as a closed-form convex function (exact vertex maximum)."""
    one_sided = None
    if P.dim == 1:
        lo, hi = float(P.vertices.min()), float(P.vertices.max())

        def one_sided(x):
            return (lo if x <= 0 else hi, hi if x >= 0 else lo)

    return ConvexFunctionRep.closed_form(P.dim, P.support_value, P.support_argmax,
                                         kinks=(0.0,), label="F_P", one_sided=one_sided)


def _newton_conjugate(P, G, grad, hess, x, iters=200):
    """Maximise ``<x, s> - G(s)`` over int P by damped Newton steps.

    Used for strictly convex duals with barrier-like boundary behaviour
    (``t log t`` terms), where the maximiser is interior for every ``x``.
    """
    x = np.asarray(x, dtype=float).reshape(-1, P.dim)
    N = x.shape[0]
    s = np.tile(P.chebyshev_center, (N, 1))
    active = np.ones(N, dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        sa, xa = s[idx], x[idx]
        g = grad(sa) - xa
        H = hess(sa)
        step = -np.linalg.solve(H, g[..., None])[..., 0]
        dec = -(g * step).sum(axis=-1)
        ell = P.facet_values(sa)
        ell_d = step @ P.U.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(ell_d < 0, ell / -ell_d, np.inf)
        t = np.minimum(1.0, 0.99 * ratio.min(axis=-1))
        f0 = G(sa) - (xa * sa).sum(axis=-1)
        for _ in range(80):
            snew = sa + t[:, None] * step
            f1 = G(snew) - (xa * snew).sum(axis=-1)
            bad = ~(f1 <= f0 - 0.25 * t * dec + 1e-15 * np.abs(f0))
            if not bad.any():
                break
            t = np.where(bad, 0.5 * t, t)
        s[idx] = np.where(bad[:, None], sa, snew)
        done = (dec < 1e-22) | bad
        active[idx[done]] = False
    return (x * s).sum(axis=-1) - G(s), s


def guillemin_dual(P):
    """Closed form ``G(s) = 1/2 sum l_i(s) log l_i(s)`` with gradient and Hessian."""
    U = P.U

    def G(s):
        return 0.5 * xlogx(P.facet_values(s)).sum(axis=-1)

    def grad(s):
        ell = P.facet_values(s)
        with np.errstate(divide="ignore"):
            return 0.5 * (np.log(ell) + 1.0) @ U

    def hess(s):
        ell = P.facet_values(s)
        return 0.5 * np.einsum("...i,ij,ik->...jk", 1.0 / ell, U, U)

    return G, grad, hess


def guillemin_primal(P, resolution=None):
    """Primal of the Guillemin dual: pointwise by Newton, grids by transform."""
    G, grad, hess = guillemin_dual(P)
    res = resolution or (1024 if P.dim == 1 else 512)
    grid = DualGrid.for_polytope(P, res, inflate=0.0)
    Gd = DualFunction.from_closed_form(P, grid, G)

    def value(x):
        x = np.asarray(x, dtype=float)
        v, _ = _newton_conjugate(P, G, grad, hess, x)
        return v.reshape(x.shape[:-1])

    def gradient(x):
        x = np.asarray(x, dtype=float)
        _, s = _newton_conjugate(P, G, grad, hess, x)
        return s.reshape(x.shape)

    def sampler(axes):
        return discrete_conjugate(Gd.axes, Gd.G, axes)

    return ConvexFunctionRep.closed_form(P.dim, value, gradient, label="guillemin",
                                         sampler=sampler)


def dual_defined_primal(P, G, resolution=None, label="dual-defined"):
    """Primal ``max_s (<x, s> - G(s))`` over a fine dual grid (brute maximum)."""
    res = resolution or (2048 if P.dim == 1 else 256)
    grid = DualGrid.for_polytope(P, res, inflate=0.0)
    Gd = DualFunction.from_closed_form(P, grid, G)
    pts = Gd.points()[Gd.finite_mask]
    gv = Gd.values[Gd.finite_mask]

    def _argmax(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, P.dim)
        best = np.empty(flat.shape[0])
        arg = np.empty(flat.shape[0], dtype=np.int64)
        for a in range(0, flat.shape[0], 256):
            vals = flat[a:a + 256] @ pts.T - gv
            arg[a:a + 256] = np.argmax(vals, axis=1)
            best[a:a + 256] = vals[np.arange(vals.shape[0]), arg[a:a + 256]]
        return best.reshape(x.shape[:-1]), pts[arg].reshape(x.shape)

    def sampler(axes):
        return discrete_conjugate(Gd.axes, Gd.G, axes)

    return ConvexFunctionRep.closed_form(P.dim, lambda x: _argmax(x)[0],
                                         lambda x: _argmax(x)[1], label=label,
                                         sampler=sampler)


# ---------------------------------------------------------------------------
# the potential bundle
# ---------------------------------------------------------------------------


@dataclass
class ToricPotential:
    """Reference profile ``F0`` and potential profile ``Fphi`` over ``polytope``.

    Attributes
    ----------
    G0_exact, Gphi_exact : callable, optional
        Closed-form transforms where known.  For ``dual_defined`` potentials
        ``Gphi_exact`` *is* the definition and is evaluated on grids directly.
    breakpoints : tuple
        Dual points kept on grid nodes.
    radii : tuple, optional
        Preferred truncation schedule when the run config has none.
    """

    polytope: DelzantPolytope
    F0: ConvexFunctionRep
    Fphi: ConvexFunctionRep
    label: str
    params: dict = field(default_factory=dict)
    G0_exact: Callable | None = None
    Gphi_exact: Callable | None = None
    Gphi_grad: Callable | None = None
    dual_defined: bool = False
    breakpoints: tuple = ()
    radii: tuple | None = None
    fixed_grid: DualGrid | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.polytope.dim

    def schedule(self, config):
        return config.radii or self.radii or DEFAULT_RADII

    def grid(self, config):
        if self.fixed_grid is not None:
            return self.fixed_grid
        return DualGrid.for_polytope(self.polytope, config.resolution(self.n),
                                     self.breakpoints)

    def dual(self, config=None):
        """``G_phi`` on the dual grid."""
        config = config or RunConfig()
        key = ("phi", config)
        if key not in self._cache:
            self._cache[key] = self.dual_on(self.grid(config), config)
        return self._cache[key]

    def dual_on(self, grid, config=None):
        """``G_phi`` on an explicit grid (uncached)."""
        config = config or RunConfig()
        if self.dual_defined:
            G = DualFunction.from_closed_form(self.polytope, grid, self.Gphi_exact,
                                              self.Gphi_grad, label=self.label)
            G.radii = tuple(self.schedule(config))
        else:
            G = legendre_transform(self.Fphi, self.polytope, config,
                                   radii=self.schedule(config), grid=grid,
                                   label=self.label)
            G.exact, G.exact_grad = self.Gphi_exact, self.Gphi_grad
        return G

    def dual0(self, config=None):
        """``G_0`` on the same grid, always computed by transform."""
        config = config or RunConfig()
        key = ("ref", config)
        if key not in self._cache:
            self._cache[key] = legendre_transform(
                self.F0, self.polytope, config, radii=self.schedule(config),
                grid=self.grid(config), label=f"{self.label}:ref")
            self._cache[key].exact = self.G0_exact
        return self._cache[key]

    def primal_axis(self, config=None, radius=None):
        config = config or RunConfig()
        radii = self.schedule(config)
        R = radius or radii[-1]
        extra = list(self.Fphi.kinks) + [r for Rk in radii for r in (Rk, -Rk)]
        return primal_axis(R, config.spacing(self.n), extra)

    def shifted(self, c, label=None):
        """Potential with ``Fphi - c`` (so ``Gphi + c``)."""
        F = self.Fphi
        Fn = ConvexFunctionRep.closed_form(
            F.n, lambda x: F(x) - c, F.gradient, kinks=F.kinks, label=f"{F.label}-{c}",
            one_sided=F.one_sided,
            sampler=None if F.sampler is None else (lambda axes: F.sampler(axes) - c))
        G = self.Gphi_exact
        return ToricPotential(
            self.polytope, self.F0, Fn, label or f"{self.label}-{c}", dict(self.params),
            self.G0_exact, None if G is None else (lambda s: G(s) + c), self.Gphi_grad,
            self.dual_defined, self.breakpoints, self.radii, self.fixed_grid)


def phi_values(T, x):
    """``phi = Fphi - F0`` in logarithmic coordinates."""
    return np.asarray(T.Fphi(x)) - np.asarray(T.F0(x))


@dataclass
class SupPhi:
    value: float
    primal_value: float
    agree: bool


def sup_phi(T, config=None, tol=1e-3):
    """``sup phi`` as ``max (G0 - Gphi)`` over common finite nodes.

    Raises
    ------
    ValueError
        If ``Gphi`` is finite at a node where ``G0`` is not.
    """
    config = config or RunConfig()
    G0, G = T.dual0(config), T.dual(config)
    inside = G.inside()
    if np.any(G.finite_mask & ~G0.finite_mask & inside):
        raise ValueError("Gphi finite where G0 is infinite: input is not toric psh")
    both = G.finite_mask & G0.finite_mask
    if not both.any():
        raise ValueError("no common finite dual nodes")
    value = float(np.max(G0.values[both] - G.values[both]))
    axis = T.primal_axis(config)
    axes = [axis] * T.n
    primal = float(np.max(np.asarray(T.Fphi.sample(axes)) - np.asarray(T.F0.sample(axes))))
    return SupPhi(value, primal, abs(value - primal) <= tol * (1 + abs(value)))


# ---------------------------------------------------------------------------
# gallery
# ---------------------------------------------------------------------------


def _fs_potential(n):
    P = DelzantPolytope.simplex(n)
    F0 = fubini_study(n)
    return ToricPotential(P, F0, F0, f"pn_fs(n={n})", {"n": n}, fubini_study_dual,
                          fubini_study_dual)


def _f1_potential(a, b):
    if a <= 0 or b <= 0:
        raise SpecError("f1 needs a > 0 and b > 0")
    P = DelzantPolytope.hirzebruch_f1(a, b)

    def value(x):
        x = np.asarray(x, dtype=float)
        z = 2 * x
        return 0.5 * a * _lse0(z) + 0.5 * b * np.logaddexp.reduce(z, axis=-1)

    def gradient(x):
        z = 2 * np.asarray(x, dtype=float)
        zmax = z.max(axis=-1, keepdims=True)
        e = np.exp(z - zmax)
        return a * _softmax0(z) + b * e / e.sum(axis=-1, keepdims=True)

    def G0(s):
        s = np.asarray(s, dtype=float)
        t = s.sum(axis=-1)
        return 0.5 * (xlogx(s[..., 0]) + xlogx(s[..., 1]) + xlogx(a + b - t)
                      + xlogx(t - b) - xlogx(t) - a * math.log(a))

    F0 = ConvexFunctionRep.closed_form(2, value, gradient, label="f1")
    return ToricPotential(P, F0, F0, f"f1(a={a},b={b})", {"a": a, "b": b}, G0, G0)


def _interval_reference():
    return DelzantPolytope.interval(), fubini_study(1)


def _ex310_potential(eps, C):
    if not 0 < eps < 1:
        raise SpecError("ex310 needs 0 < eps < 1")
    if C <= 0:
        raise SpecError("ex310 needs C > 0")
    P, F0 = _interval_reference()

    def value(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return (1 - eps) * np.maximum(x, 0) + eps * np.maximum(x, -C)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return (1 - eps) * (x >= 0) + eps * (x >= -C)

    def one_sided(x):
        left = (1 - eps) * (x > 0) + eps * (x > -C)
        return float(left), float((1 - eps) * (x >= 0) + eps * (x >= -C))

    def G(s):
        s = np.asarray(s, dtype=float)[..., 0]
        return np.maximum(C * (eps - s), 0.0)

    F = ConvexFunctionRep.closed_form(1, value, gradient, kinks=(0.0, -C),
                                      label="ex310", one_sided=one_sided)
    radii = (max(8.0, 2 * C), max(16.0, 4 * C), max(32.0, 8 * C))
    return ToricPotential(P, F0, F, f"ex310(eps={eps},C={C})", {"eps": eps, "C": C},
                          fubini_study_dual, G, breakpoints=((eps,),), radii=radii)


def _ex46_potential(alpha):
    if not 0 < alpha < 1:
        raise SpecError("ex46 needs 0 < alpha < 1")
    P, F0 = _interval_reference()

    def value(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return np.where(x <= 0, np.exp(alpha * np.minimum(x, 0)), x + 1)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, alpha * np.exp(alpha * np.minimum(x, 0)), 1.0)

    def one_sided(x):
        if x == 0:
            return alpha, 1.0
        g = float(gradient(np.array([x]))[0])
        return g, g

    def G(s):
        s = np.asarray(s, dtype=float)[..., 0]
        r = s / alpha
        return np.where(s <= alpha, xlogx(r) - r, -1.0)

    def Ggrad(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(s <= alpha, np.log(s / alpha) / alpha, 0.0)

    F = ConvexFunctionRep.closed_form(1, value, gradient, kinks=(0.0,), label="ex46",
                                      one_sided=one_sided)
    # e^{alpha x} decays slowly; the vertex node only saturates once
    # e^{-alpha R} is below the saturation tolerance
    radii = (16.0 / alpha, 32.0 / alpha, 64.0 / alpha)
    return ToricPotential(P, F0, F, f"ex46(alpha={alpha})", {"alpha": alpha},
                          fubini_study_dual, G, Ggrad, breakpoints=((alpha,),), radii=radii)


E3 = math.exp(3.0)
_B311 = 1 - 1 / (3 * math.exp(1.5)) + 2 / (9 * math.exp(1.5))
_A311 = E3 - 2 * math.exp(1.5) / 3
_X311 = 2 * (E3 - _A311 / _B311)


def ex311iii_value(x):
    """C^1 convex profile: 0 on x <= 0, quadratic-then-linear on (0, e^3),
    ``x - 2 sqrt(x) / ln x`` on x >= e^3."""
    x = np.asarray(x, dtype=float)
    big = np.maximum(x, E3)
    tail = big - 2 * np.sqrt(big) / np.log(big)
    mid = np.where(x <= _X311, _B311 * np.maximum(x, 0) ** 2 / (2 * _X311),
                   _B311 * (_X311 / 2 + (x - _X311)))
    return np.where(x <= 0, 0.0, np.where(x >= E3, tail, mid))


def ex311iii_slope(x):
    x = np.asarray(x, dtype=float)
    big = np.maximum(x, E3)
    lg, rt = np.log(big), np.sqrt(big)
    tail = 1 - 1 / (rt * lg) + 2 / (rt * lg * lg)
    mid = np.where(x <= _X311, _B311 * np.maximum(x, 0) / _X311, _B311)
    return np.where(x <= 0, 0.0, np.where(x >= E3, tail, mid))


def _ex311iii_potential():
    P, F0 = _interval_reference()
    F = ConvexFunctionRep.closed_form(
        1, lambda x: ex311iii_value(np.asarray(x, float)[..., 0]),
        lambda x: ex311iii_slope(np.asarray(x, float)), kinks=(0.0, _X311, E3),
        label="ex311iii")
    return ToricPotential(P, F0, F, "ex311iii", {}, fubini_study_dual,
                          radii=(1024.0, 2048.0, 4096.0))


def _phi1_potential(n):
    P = DelzantPolytope.simplex(n)
    e1 = np.zeros(n)
    e1[0] = 1.0

    def G(s):
        s = np.asarray(s, dtype=float)
        return np.where(np.all(s == e1, axis=-1), 0.0, np.inf)

    F = ConvexFunctionRep.closed_form(
        n, lambda x: np.asarray(x, float)[..., 0],
        lambda x: np.broadcast_to(e1, np.shape(x)).copy(), label="phi1")
    return ToricPotential(P, fubini_study(n), F, f"phi1(n={n})", {"n": n},
                          fubini_study_dual, G)


def _phi2_potential(n):
    P = DelzantPolytope.simplex(n)

    def G(s):
        s = np.asarray(s, dtype=float)
        on_face = np.all(s >= 0, axis=-1) & (np.abs(s.sum(axis=-1) - 1) <= 1e-12)
        return np.where(on_face, 0.0, np.inf)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.eye(n)[np.argmax(x, axis=-1)]

    F = ConvexFunctionRep.closed_form(n, lambda x: np.asarray(x, float).max(axis=-1),
                                      gradient, kinks=(0.0,), label="phi2")
    return ToricPotential(P, fubini_study(n), F, f"phi2(n={n})", {"n": n},
                          fubini_study_dual, G)


def _guillemin_potential(P):
    G, grad, _ = guillemin_dual(P)
    F = guillemin_primal(P)
    return ToricPotential(P, F, F, "guillemin", {}, G, G, grad, dual_defined=True)


def _sqrt_cusp_potential():
    P, F0 = _interval_reference()

    def G(s):
        return -np.sqrt(np.asarray(s, dtype=float)[..., 0])

    def grad(s):
        with np.errstate(divide="ignore"):
            return -0.5 / np.sqrt(np.asarray(s, dtype=float))

    def value(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return np.where(x <= -0.5, -0.25 / np.minimum(x, -0.5), x + 1)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= -0.5, 0.25 / np.minimum(x, -0.5) ** 2, 1.0)

    F = ConvexFunctionRep.closed_form(1, value, gradient, label="sqrt_cusp")
    return ToricPotential(P, F0, F, "sqrt_cusp", {}, fubini_study_dual, G, grad,
                          dual_defined=True)


def reference_potential(P):
    """``(F0, G0)``: Fubini-Study on the standard simplex, Guillemin otherwise."""
    if _is_standard_simplex(P):
        return fubini_study(P.dim), fubini_study_dual
    return guillemin_primal(P), guillemin_dual(P)[0]


def _zero_potential(P):
    F0, G0 = reference_potential(P)

    def G(s):
        return np.zeros(np.shape(s)[:-1])

    def grad(s):
        return np.zeros(np.shape(s))

    return ToricPotential(P, F0, support_function(P), "zero", {}, G0, G, grad,
                          dual_defined=True)


def _is_standard_simplex(P):
    try:
        return P == DelzantPolytope.simplex(P.dim)
    except PolytopeError:
        return False


def from_dual(P, G, grad=None, label="dual", F0=None, G0=None):
    """Potential specified by a closed-form dual on ``P``."""
    if F0 is None:
        F0, G0 = reference_potential(P)
    return ToricPotential(P, F0, dual_defined_primal(P, G, label=label), label, {}, G0, G,
                          grad, dual_defined=True)


GALLERY = {
    "pn_fs": "pn_fs?n=<int>             simplex reference 1/2 log(1 + sum e^{2x_i})",
    "f1": "f1?a=<a>&b=<b>            blow-up reference on {s >= 0, b <= s1+s2 <= a+b}",
    "ex310": "ex310?eps=<e>&C=<C>       (1-e) max(x,0) + e max(x,-C) on P^1",
    "ex46": "ex46?alpha=<a>            e^{a x} (x <= 0), x + 1 (x >= 0) on P^1",
    "ex311iii": "ex311iii                  x - 2 sqrt(x)/ln x tail, infinite 1/2-moment",
    "phi1": "phi1?n=<int>              F = x_1 on the simplex (positive Lelong number)",
    "phi2": "phi2?n=<int>              F = max_i x_i on the simplex",
    "guillemin": "guillemin                 1/2 sum l_i log l_i on --polytope (default [0,1])",
    "sqrt_cusp": "sqrt_cusp                 control with G(s) = -sqrt(s) on [0,1]",
    "zero": "zero                      F = F_P, i.e. G = 0 on --polytope (default [0,1])",
}
_ALIASES = {"pn_fubini_study": "pn_fs", "vs-zero": "zero"}
_PARAMS = {"pn_fs": {"n"}, "f1": {"a", "b"}, "ex310": {"eps", "C"}, "ex46": {"alpha"},
           "ex311iii": set(), "phi1": {"n"}, "phi2": {"n"}, "guillemin": set(),
           "sqrt_cusp": set(), "zero": set()}


def gallery(name, params=None, polytope=None):
    """Build a gallery potential by name.

    Raises
    ------
    SpecError
        Unknown name, unknown parameter, or parameter out of range.
    """
    name = _ALIASES.get(name, name)
    if name not in _PARAMS:
        raise SpecError(f"unknown gallery potential {name!r}")
    params = dict(params or {})
    unknown = set(params) - _PARAMS[name]
    if unknown:
        raise SpecError(f"unknown parameters for {name}: {sorted(unknown)}")
    try:
        if name in ("pn_fs", "phi1", "phi2"):
            n = int(params.get("n", 1))
            if n < 1 or n > 3:
                raise SpecError("n must be 1, 2 or 3")
            return {"pn_fs": _fs_potential, "phi1": _phi1_potential,
                    "phi2": _phi2_potential}[name](n)
        if name == "f1":
            return _f1_potential(float(params.get("a", 1)), float(params.get("b", 1)))
        if name == "ex310":
            return _ex310_potential(float(params.get("eps", 0.1)), float(params.get("C", 5)))
        if name == "ex46":
            return _ex46_potential(float(params.get("alpha", 0.5)))
        if name == "ex311iii":
            return _ex311iii_potential()
        if name == "sqrt_cusp":
            return _sqrt_cusp_potential()
        P = polytope or DelzantPolytope.interval()
        return _guillemin_potential(P) if name == "guillemin" else _zero_potential(P)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"invalid parameters for {name}: {exc}") from None


def parse_potential_spec(text, polytope=None):
    """Parse ``gallery:<name>?k=v&...`` (the ``gallery:`` prefix is optional)."""
    body = text[len("gallery:"):] if text.startswith("gallery:") else text
    name, _, query = body.partition("?")
    try:
        params = dict(parse_qsl(query, keep_blank_values=True, strict_parsing=bool(query)))
    except ValueError:
        raise SpecError(f"malformed parameter string {query!r}") from None
    return gallery(name, params, polytope)
