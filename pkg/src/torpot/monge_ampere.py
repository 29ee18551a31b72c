"""Real Monge-Ampere masses and pushforward integrals on the dual side.

The gradient image of ``MA(F)`` is computed through the dual: for a
measurable weight ``w`` on R^n,

    int w dMA(F) = n! int_{int P} w(grad G(s)) ds,

so every integral here is a sum over dual-grid cells on which the sampled
``G`` is finite.  In two dimensions each grid square is split along its
anti-diagonal into two triangles, which tiles facets with normals
``+-e_i`` and ``+-(1, 1)`` exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from urllib.parse import parse_qsl

import numpy as np
from scipy import integrate

from .config import RunConfig
from .convexfn import DualFunction
from .grids import DualGrid

MARGIN_STEPS = (16, 8, 4, 2)
DECADES = tuple(10.0 ** -k for k in range(2, 9))
# log-radius doubles between windows: e^1.5, e^3, ..., e^48
PRIMAL_WINDOWS = tuple(math.exp(1.5 * 2 ** k) for k in range(6))


@dataclass
class QuadratureResult:
    """Value with a two-level error estimate.

    ``unresolved`` is the n!-weighted volume of P not covered by cells with
    finite corners; ``divergent`` is set when refinement keeps growing the
    value.
    """

    value: float
    error_estimate: float
    cells_used: int
    divergent: bool = False
    unresolved: float = 0.0
    notes: list = field(default_factory=list)
    levels: list = field(default_factory=list)

    def to_dict(self):
        return {"value": self.value, "error_estimate": self.error_estimate,
                "cells_used": self.cells_used, "divergent": self.divergent,
                "unresolved": self.unresolved, "notes": list(self.notes)}


@dataclass
class Cells:
    """Simplicial cells of a dual grid whose corners are all finite."""

    grad: np.ndarray
    centroid: np.ndarray
    vol: np.ndarray
    dist: np.ndarray
    corners: np.ndarray

    def __len__(self):
        return len(self.vol)


def coarsen(G):
    """Every-other-node restriction of a dual function."""
    grid = G.grid
    m = tuple(k // 2 for k in grid.m)
    pad = tuple(p // 2 for p in grid.pad)
    hi = tuple(lo + 2 * h * mm for lo, h, mm in zip(grid.lo, grid.h, m))
    sl = tuple(slice(p % 2, p % 2 + 2 * (mm + 2 * pp) + 1, 2)
               for p, mm, pp in zip(grid.pad, m, pad))
    coarse = DualGrid(grid.lo, hi, m, pad)
    return DualFunction(G.polytope, coarse, G.values[sl], G.finite_mask[sl], G.radii,
                        exact=G.exact, exact_grad=G.exact_grad, label=G.label)


def cells(G, values=None):
    """Enumerate cells with finite corners and their affine gradients."""
    V = G.G if values is None else values
    axes = G.axes
    h = G.h
    P = G.polytope
    if G.n == 1:
        x = axes[0]
        ok = np.isfinite(V[:-1]) & np.isfinite(V[1:])
        i = np.flatnonzero(ok)
        grad = ((V[i + 1] - V[i]) / h[0])[:, None]
        centroid = ((x[i] + x[i + 1]) / 2)[:, None]
        corners = np.stack([i, i + 1], axis=1)
        vol = np.full(len(i), h[0])
        pts = x[corners][..., None]
    elif G.n == 2:
        ni, nj = V.shape
        idx = np.arange(ni * nj).reshape(ni, nj)
        a, b = idx[:-1, :-1], idx[1:, :-1]
        c, d = idx[:-1, 1:], idx[1:, 1:]
        flat = V.ravel()
        tri1 = np.stack([a, b, c], axis=-1).reshape(-1, 3)
        tri2 = np.stack([d, c, b], axis=-1).reshape(-1, 3)
        corners = np.concatenate([tri1, tri2])
        ok = np.all(np.isfinite(flat[corners]), axis=1)
        corners = corners[ok]
        k1 = int(ok[:len(tri1)].sum())
        v = flat[corners]
        g = np.empty((len(corners), 2))
        # tri1 = (a, b=a+e1, c=a+e2); tri2 = (d, c=d-e1, b=d-e2)
        g[:k1, 0] = (v[:k1, 1] - v[:k1, 0]) / h[0]
        g[:k1, 1] = (v[:k1, 2] - v[:k1, 0]) / h[1]
        g[k1:, 0] = (v[k1:, 0] - v[k1:, 1]) / h[0]
        g[k1:, 1] = (v[k1:, 0] - v[k1:, 2]) / h[1]
        grad = g
        P_pts = G.points().reshape(-1, 2)
        pts = P_pts[corners]
        centroid = pts.mean(axis=1)
        vol = np.full(len(corners), h[0] * h[1] / 2)
    else:
        raise NotImplementedError("cell operations support n <= 2")
    dist = P.signed_distance(pts).min(axis=1)
    return Cells(grad, centroid, vol, dist, corners)


def _nfact(n):
    return float(math.factorial(n))


def _margin_probe(per_cell, dist, h, tol_div):
    """Partial sums over cells at distance >= delta for shrinking delta."""
    sums = [float(np.sum(per_cell[dist >= k * h * (1 - 1e-9)])) for k in MARGIN_STEPS]
    return sums, _growth_diverges(sums, tol_div, decay_guard=True)


def _growth_diverges(levels, tol_div, decay_guard=True):
    """True when every successive increment is a relative gain above tol_div
    (and, with the guard, increments are not shrinking geometrically)."""
    lv = [v for v in levels]
    if any(not math.isfinite(v) for v in lv):
        return True
    inc = np.diff(lv)
    if len(inc) < 3:
        return False
    last = inc[-3:]
    base = np.abs(np.asarray(lv[-4:-1]))
    grows = np.all(last > tol_div * np.maximum(base, 1e-300))
    if not decay_guard:
        return bool(grows)
    steady = np.all(last[1:] >= 0.9 * last[:-1])
    return bool(grows and steady)


def _quad(G, integrand, config, what="integral"):
    """Cell sum of ``integrand(cells) * vol`` with error and divergence checks."""
    c = cells(G)
    per = integrand(c) * c.vol
    value = float(np.sum(per))
    sums, divergent = _margin_probe(per, c.dist, float(np.min(G.h)), config.tol.div)
    try:
        cc = cells(coarsen(G))
        coarse = float(np.sum(integrand(cc) * cc.vol))
        err = abs(value - coarse)
    except (ValueError, IndexError):
        err = float("nan")
    return QuadratureResult(value, err, len(c), divergent, levels=sums + [value])


# ---------------------------------------------------------------------------
# weights and energies
# ---------------------------------------------------------------------------


def weight_from_spec(spec):
    """``one``, ``norm_pow?q=``, ``indicator_ball?r=``, ``exp_norm?eps=``."""
    name, _, query = spec.partition("?")
    p = {k: float(v) for k, v in parse_qsl(query)}
    if name == "one":
        return lambda x: np.ones(x.shape[0])
    if name == "norm_pow":
        q = p["q"]
        return lambda x: np.linalg.norm(x, axis=-1) ** q
    if name == "indicator_ball":
        r = p["r"]
        return lambda x: (np.linalg.norm(x, axis=-1) <= r).astype(float)
    if name == "exp_norm":
        eps = p["eps"]
        return lambda x: np.exp(eps * np.linalg.norm(x, axis=-1))
    raise ValueError(f"unknown weight {spec!r}")


def chi_from_spec(spec):
    """``chi:linear`` (t) or ``chi:pow?p=`` (-(-t)^p)."""
    body = spec[4:] if spec.startswith("chi:") else spec
    name, _, query = body.partition("?")
    p = {k: float(v) for k, v in parse_qsl(query)}
    if name == "linear":
        return lambda t: np.asarray(t, dtype=float)
    if name == "pow":
        e = p["p"]
        return lambda t: -np.power(-np.minimum(np.asarray(t, dtype=float), 0.0), e)
    raise ValueError(f"unknown weight function {spec!r}")


def check_chi(chi):
    """Require chi increasing on (-inf, 0] with chi(0) <= 0."""
    t = -np.concatenate([np.logspace(3, -6, 200), [0.0]])
    v = np.asarray(chi(t), dtype=float)
    if v[-1] > 0 or np.any(np.diff(v) < -1e-12 * (1 + np.abs(v[1:]))):
        raise ValueError("chi must be increasing on (-inf, 0] with chi(0) <= 0")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _dual_of(T, config):
    if isinstance(T, DualFunction):
        return T
    return T.dual(config)


def total_mass(T, config=None):
    """``n!`` times the volume of cells on which ``G_phi`` is finite.

    Returns
    -------
    QuadratureResult, bool
        The mass and the full-mass flag.
    """
    config = config or RunConfig()
    G = _dual_of(T, config)
    n = G.n
    res = _quad(G, lambda c: np.full(len(c), _nfact(n)), config, "mass")
    res.divergent = False
    full = _nfact(n) * G.polytope.volume
    res.unresolved = max(0.0, full - res.value)
    flag = res.value >= full * (1 - config.tol.mass)
    return res, bool(flag)


def pushforward_integral(T, weight, config=None):
    """``n! sum w(grad G) vol`` over finite cells.

    ``weight`` is a callable on arrays of shape ``(k, n)`` or a spec string.
    """
    config = config or RunConfig()
    if isinstance(weight, str):
        weight = weight_from_spec(weight)
    G = _dual_of(T, config)
    n = G.n

    def integrand(c):
        w = np.asarray(weight(c.grad), dtype=float)
        bad = np.flatnonzero(~np.isfinite(w))
        if bad.size:
            raise ValueError(f"weight is not finite on the cell centred at "
                             f"{c.centroid[bad[0]].tolist()}")
        return _nfact(n) * w

    res = _quad(G, integrand, config)
    full = _nfact(n) * G.polytope.volume
    covered = _nfact(n) * float(np.sum(cells(G).vol))
    res.unresolved = max(0.0, full - covered)
    if covered < full * (1 - config.tol.mass):
        res.notes.append("potential lacks full mass; integral covers the finite region only")
    if res.cells_used == 0:
        res.notes.append("dual domain has empty interior; no cells contribute")
    return res


def primal_windows(F, weight, radii=None):
    """``int_{|x| <= R} w(x) dF'`` for 1-D profiles with a closed-form slope.

    ``weight(x, F(x), s)`` is averaged by Simpson's rule over the slopes
    ``s`` spanned by each interval of a log-spaced mesh (``x`` at the
    midpoint) and multiplied by the slope increment, so slope jumps at kinks
    are included.
    """
    if radii is None:
        radii = PRIMAL_WINDOWS
    R = radii[-1]
    pos = np.concatenate([[0.0], np.logspace(-6, math.log10(R), 6000)])
    pos = np.unique(np.concatenate([pos, list(radii), [abs(k) for k in F.kinks]]))
    x = np.concatenate([-pos[::-1], pos[1:]])
    x = np.unique(np.concatenate([x, list(F.kinks)]))
    slope = np.asarray(F.grad(x[:, None]), dtype=float).reshape(-1)
    mid = 0.5 * (x[1:] + x[:-1])
    fmid = np.asarray(F(mid[:, None]), dtype=float).reshape(-1)
    s0, s1 = slope[:-1], slope[1:]
    w = (np.asarray(weight(mid, fmid, s0), dtype=float)
         + 4 * np.asarray(weight(mid, fmid, 0.5 * (s0 + s1)), dtype=float)
         + np.asarray(weight(mid, fmid, s1), dtype=float)) / 6
    dmu = np.diff(slope)
    out = []
    for r in radii:
        sel = (x[:-1] >= -r) & (x[1:] <= r)
        out.append(float(np.sum(w[sel] * dmu[sel])))
    return list(radii), out


def primal_moment_windows(F, q, radii=None):
    """``int_{|x| <= R} |x|^q dF'`` over the window radii."""
    return primal_windows(F, lambda x, f, s: np.abs(x) ** q, radii)


def moment(T, q, config=None):
    """``int |x|^q dMA(Fphi)`` with divergence detection.

    The value is the dual pushforward.  For one-dimensional potentials with a
    closed-form primal slope, divergence is judged on primal windows whose
    log-radius doubles (e^1.5, e^3, ..., e^48); otherwise on the shrinking
    boundary margins of the dual cell sum.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    config = config or RunConfig()
    res = pushforward_integral(T, f"norm_pow?q={q}", config)
    n = _dual_of(T, config).n
    if n > q:
        res.notes.append(f"q*={n * q / (n - q)!r}")
    if (not isinstance(T, DualFunction) and n == 1 and not T.dual_defined
            and T.Fphi.gradient is not None):
        radii, vals = primal_moment_windows(T.Fphi, q)
        res.levels = vals
        res.divergent = _growth_diverges(vals, config.tol.div, decay_guard=False)
        res.notes.append("divergence judged on primal windows")
    return res


def energy_functional(T, chi, config=None):
    """Both sides of the a priori estimate for a weight ``chi``.

    The potential is first normalised by ``c = max(0, sup(Fphi - F_P))``
    (equivalently ``max(0, -min G_phi)``).

    Returns
    -------
    dict
        ``lhs`` = ``int_P -chi(-G)``, ``rhs`` = ``int_P -chi((Fphi - F0)(grad G))``
        and the applied ``shift``.
    """
    config = config or RunConfig()
    if isinstance(chi, str):
        chi = chi_from_spec(chi)
    check_chi(chi)
    G = T.dual(config)
    fin = G.finite_mask & G.inside()
    shift = max(0.0, -float(np.min(G.values[fin])))
    Gn = G.G + shift
    c = cells(G, Gn)
    corner_vals = Gn.ravel()[c.corners] if G.n > 1 else Gn[c.corners]
    lhs_cell = np.mean(-np.asarray(chi(-corner_vals), dtype=float), axis=1)
    lhs = float(np.sum(lhs_cell * c.vol))
    x = c.grad
    gap = np.asarray(T.Fphi(x), dtype=float) - shift - np.asarray(T.F0(x), dtype=float)
    rhs = float(np.sum(-np.asarray(chi(np.minimum(gap, 0.0)), dtype=float) * c.vol))
    return {"lhs": lhs, "rhs": rhs, "shift": shift, "cells_used": len(c),
            "max_gap": float(np.max(gap)) if len(gap) else 0.0}


def _deep_probe_1d(G, fn):
    """``int fn(s) ds`` over ``[lo + d, hi - d]`` for d = 1e-2 ... 1e-8 (x width).

    Midpoint sums on meshes that are geometric towards both endpoints.
    """
    P = G.polytope
    lo, hi = float(P.vertices.min()), float(P.vertices.max())
    w = hi - lo
    vals = []
    for d in DECADES:
        u = np.geomspace(d, 0.5, 600)
        edges = np.unique(np.concatenate([lo + w * u, hi - w * u]))
        mid = 0.5 * (edges[1:] + edges[:-1])
        with np.errstate(over="ignore", invalid="ignore"):
            vals.append(float(np.sum(np.asarray(fn(mid), dtype=float) * np.diff(edges))))
    return vals


def exp_gradient_norm_integral(G, eps, config=None):
    """``int_P exp(eps |grad G|)`` with divergence detection."""
    config = config or RunConfig()
    if eps <= 0:
        raise ValueError("eps must be positive")

    def f(g):
        with np.errstate(over="ignore"):
            return np.exp(eps * g)

    if G.n == 1 and G.exact_grad is not None:
        def fn(mid):
            g = np.asarray(G.exact_grad(mid[:, None]), dtype=float).reshape(-1)
            return f(np.abs(g))

        vals = _deep_probe_1d(G, fn)
        div = _growth_diverges(vals, config.tol.div)
        err = abs(vals[-1] - vals[-2]) if math.isfinite(vals[-1]) else float("inf")
        return QuadratureResult(vals[-1], err, 0, div, levels=vals,
                                notes=["boundary layers probed to 1e-8"])

    def integrand(c):
        if G.exact_grad is not None:
            g = np.asarray(G.exact_grad(c.centroid), dtype=float)
        else:
            g = c.grad
        return f(np.linalg.norm(g, axis=-1))

    return _quad(G, integrand, config)


def dual_power_integral(G, p, config=None, center=0.0, primal=None):
    """``int_P |G - center|^p`` by corner averages, with divergence detection.

    When a 1-D primal profile with a closed-form slope is given, divergence is
    judged on primal windows of ``|x F'(x) - F(x) - center|^p dF'`` instead,
    which reaches much closer to the boundary than the dual grid.
    """
    config = config or RunConfig()
    V = G.G
    c = cells(G)
    cv = (V.ravel() if G.n > 1 else V)[c.corners]
    per = np.mean(np.abs(cv - center) ** p, axis=1) * c.vol
    value = float(np.sum(per))
    sums, divergent = _margin_probe(per, c.dist, float(np.min(G.h)), config.tol.div)
    cg = coarsen(G)
    cc = cells(cg)
    cvc = (cg.G.ravel() if G.n > 1 else cg.G)[cc.corners]
    coarse = float(np.sum(np.mean(np.abs(cvc - center) ** p, axis=1) * cc.vol))
    full = G.polytope.volume
    covered = float(np.sum(c.vol))
    res = QuadratureResult(value, abs(value - coarse), len(c), divergent,
                           unresolved=max(0.0, full - covered), levels=sums + [value])
    if primal is not None and G.n == 1 and primal.gradient is not None:
        _, vals = primal_windows(primal, lambda x, f, s: np.abs(x * s - f - center) ** p)
        res.levels = vals
        res.divergent = _growth_diverges(vals, config.tol.div, decay_guard=False)
        res.notes.append("divergence judged on primal windows")
    return res


def lemma42_I(lam, n):
    """``int_0^1 (t^{n-1} + 1/lam) log(1 + t^{1-n}/lam) dt``.

    Substituting ``t = u^{1/n}`` removes the endpoint singularity for n >= 2.
    """
    if lam <= 0 or n < 1:
        raise ValueError("need lam > 0 and n >= 1")
    inv = 1.0 / lam
    if n == 1:
        return (1 + inv) * math.log1p(inv)

    def integrand(u):
        if u == 0.0:
            return 0.0
        t = u ** (1.0 / n)
        dt = t / (n * u)
        return (t ** (n - 1) + inv) * math.log1p(inv * t ** (1 - n)) * dt

    val, _ = integrate.quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val
