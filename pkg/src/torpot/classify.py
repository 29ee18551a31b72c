"""Membership and regularity classes of toric potentials, with certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_RADII, RunConfig
from .convexfn import DualFunction, gradient_range
from .grids import primal_axis
from .monge_ampere import (_deep_probe_1d, _growth_diverges, cells, check_chi,
                           chi_from_spec, dual_power_integral,
                           exp_gradient_norm_integral, _margin_probe)
from .potentials import sup_phi, support_function

C_MAX = 1e3
GROWTH_RATIO = 1.25
LOGLIP_SCALES = tuple(2.0 ** -k for k in range(2, 13))
DEFAULT_EPS = (0.125, 0.25, 0.5, 1.0, 1.5)
GROWTH_EPS = (0.5, 0.25)


class GrowthError(ValueError):
    """The growth constant does not stabilise as the box grows."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _sup_axis(n, R, config, kinks=()):
    """Primal evaluation axis for sup-type constants (coarser in 2-D)."""
    spacing = config.spacing(n) if n == 1 else 0.125
    return primal_axis(R, spacing, list(kinks) + [R, -R])


def _box_levels(fn, n, radii, config, kinks=()):
    """``max fn`` over ``[-R, R]^n`` for the last two radii."""
    R_prev, R_last = radii[-2], radii[-1]
    axis = _sup_axis(n, R_last, config, kinks)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1)
    vals = np.asarray(fn(mesh, [axis] * n), dtype=float)
    inner = np.all(np.abs(mesh) <= R_prev * (1 + 1e-12), axis=-1)
    return float(np.max(vals[inner])), float(np.max(vals)), vals, mesh


def _stable(a, b, tol):
    return abs(b - a) <= tol * (1 + abs(b))


def solve_loglog(m, d):
    """Smallest ``C >= d`` with ``C log(C / d) >= m`` (vectorised bisection)."""
    m = np.asarray(m, dtype=float)
    d = np.broadcast_to(np.asarray(d, dtype=float), m.shape)
    lo = d.copy()
    hi = np.maximum(np.e * d, m) * 2 + 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ok = mid * np.log(mid / d) >= m
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return np.where(m <= 0, 0.0, hi)


def _stable_fit(band_values):
    """Max over bands, or None if the finest three bands keep growing."""
    vals = [v for v in band_values if v is not None and np.isfinite(v)]
    if len(vals) < 4 or len(vals) != len(band_values):
        return None
    coarse = max(vals[:-3])
    fine = max(vals[-3:])
    C = max(vals)
    if C > C_MAX or fine > GROWTH_RATIO * coarse:
        return None
    return float(C)


def _dual(T, config):
    return T if isinstance(T, DualFunction) else T.dual(config)


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


@dataclass
class PshResult:
    flag: bool
    C: float
    C_levels: tuple
    sup_stable: bool
    gradient_in_P: bool
    gradient_box: tuple


def classify_psh(F, P, config=None, radii=None):
    """``F <= F_P + C`` with a certificate.

    Two criteria are evaluated and reported: the constant ``C = sup(F - F_P)``
    stabilises between the last two boxes, and sampled gradients lie in P.
    """
    config = config or RunConfig()
    radii = radii or config.radii or DEFAULT_RADII
    FP = support_function(P)
    c_prev, c_last, _, _ = _box_levels(lambda x, axes: F.sample(axes) - FP(x), P.dim,
                                       radii, config, F.kinks)
    stable = _stable(c_prev, c_last, config.tol.stab)
    gr = gradient_range(F, radii[-1])
    in_P = bool(np.all(P.signed_distance(gr.samples) >= -config.tol.P))
    return PshResult(bool(stable and in_P), c_last, (c_prev, c_last), bool(stable), in_P,
                     (gr.lo.tolist(), gr.hi.tolist()))


@dataclass
class EnergyResult:
    in_E_tor: bool
    Ep: dict
    Ep_norms: dict
    interior_nodes: int
    infinite_interior_nodes: int


def classify_energy(T, p_list=(1, 2), config=None, psh=None):
    """Finiteness of ``G_phi`` on int P and ``L^p`` membership of ``G_phi``."""
    config = config or RunConfig()
    if psh is None:
        psh = classify_psh(T.Fphi, T.polytope, config, T.schedule(config)) \
            if not T.dual_defined else None
    if psh is not None and not psh.flag:
        raise ValueError("potential is not toric psh")
    G = _dual(T, config)
    interior = G.interior(config.margin_cells)
    bad = int(np.sum(interior & ~G.finite_mask))
    in_E = bad == 0 and bool(interior.any())
    Ep, norms = {}, {}
    for p in p_list:
        if not in_E:
            Ep[str(p)], norms[str(p)] = False, None
            continue
        primal = None if isinstance(T, DualFunction) or T.dual_defined else T.Fphi
        r = dual_power_integral(G, p, config, primal=primal)
        ok = (not r.divergent) and math.isfinite(r.value)
        Ep[str(p)] = bool(ok)
        norms[str(p)] = r.value ** (1.0 / p) if ok else None
    return EnergyResult(in_E, Ep, norms, int(interior.sum()), bad)


def classify_chi(T, chi, config=None):
    """Finiteness of ``int_P -chi(min G - G)``."""
    config = config or RunConfig()
    if isinstance(chi, str):
        chi = chi_from_spec(chi)
    check_chi(chi)
    G = _dual(T, config)
    fin = G.finite_mask & G.inside()
    if not fin.any():
        raise ValueError("G is infinite everywhere")
    gmin = float(np.min(G.values[fin]))

    def integrand(values):
        with np.errstate(over="ignore", invalid="ignore"):
            return -np.asarray(chi(gmin - values), dtype=float)

    if G.n == 1 and G.exact is not None:
        gmin = min(gmin, float(np.min(G.exact(np.linspace(*G.polytope.bbox[0], 4097)[:, None]))))
        vals = _deep_probe_1d(G, lambda s: integrand(np.asarray(G.exact(s[:, None]))))
        return bool(not _growth_diverges(vals, config.tol.div))
    c = cells(G)
    V = G.G.ravel() if G.n > 1 else G.G
    per = np.mean(integrand(V[c.corners]), axis=1) * c.vol
    _, div = _margin_probe(per, c.dist, float(np.min(G.h)), config.tol.div)
    return bool(np.all(np.isfinite(per)) and not div)


def lelong_numbers(T, config=None):
    """``nu(v) = min over dom G of sum of the chart functionals at v``.

    Returns
    -------
    dict
        ``{"vertex_k": nu}`` in vertex order; for 1-D primal potentials a
        second dict with the slope-gap cross-check is attached under
        ``"_slope_check"``.
    """
    config = config or RunConfig()
    G = _dual(T, config)
    P = G.polytope
    fin = G.finite_mask
    if not fin.any():
        raise ValueError("empty finite mask")
    pts = G.points()[fin]
    ell = np.maximum(P.facet_values(pts), 0.0)
    out = {}
    for k, chart in enumerate(P.vertex_charts):
        out[f"vertex_{k}"] = float(np.min(ell[:, list(chart)].sum(axis=1)))
    if (not isinstance(T, DualFunction) and P.dim == 1 and not T.dual_defined
            and T.Fphi.gradient is not None):
        R = T.schedule(config)[-1]
        lo, hi = float(P.vertices[0, 0]), float(P.vertices[-1, 0])
        left = float(np.asarray(T.Fphi.grad(np.array([[-R]]))).ravel()[0])
        right = float(np.asarray(T.Fphi.grad(np.array([[R]]))).ravel()[0])
        out["_slope_check"] = {"vertex_0": max(0.0, left - lo),
                               "vertex_1": max(0.0, hi - right)}
    return out


def growth_certificate(F, P, eps, config=None, radii=None):
    """``M_eps`` with ``F >= (1 - eps) F_P - M_eps`` after centring P.

    The polytope is translated by its stored translation vector (vertex
    centroid by default) so that 0 is interior; then
    ``M = max(0, sup((1 - eps) F_{P - t} - F_t))`` where ``F_t = F - <t, x>``.

    Raises
    ------
    GrowthError
        If ``M`` keeps changing between the last two boxes.
    """
    config = config or RunConfig()
    radii = radii or config.radii or DEFAULT_RADII
    theta = P.translation
    FP = support_function(P)

    def excess(x, axes):
        lin = x @ theta
        return (1 - eps) * (FP(x) - lin) - (F.sample(axes) - lin)

    m_prev, m_last, _, _ = _box_levels(excess, P.dim, radii, config, F.kinks)
    m_prev, m_last = max(0.0, m_prev), max(0.0, m_last)
    if not _stable(m_prev, m_last, config.tol.stab):
        raise GrowthError(f"M_eps not stable: {m_prev} -> {m_last}")
    return m_last


def sup_bound_check(T, config=None):
    """Both sides of ``sup phi <= C_P + int|G| / ((2^{1/(n+1)} - 1) vol P)``."""
    config = config or RunConfig()
    lhs = sup_phi(T, config).value
    G0 = T.dual0(config)
    fin0 = G0.finite_mask & G0.inside()
    C_P = float(np.max(G0.values[fin0]))
    r = dual_power_integral(T.dual(config), 1, config)
    if r.divergent or not math.isfinite(r.value):
        raise ValueError("int |G_phi| diverges")
    n = T.n
    rhs = C_P + r.value / ((2 ** (1 / (n + 1)) - 1) * T.polytope.volume)
    return lhs, rhs


def lemma28_bound(G, config=None):
    """``(|min G|, int|G| / ((2^{1/(n+1)} - 1) vol P))`` for a dual function."""
    config = config or RunConfig()
    fin = G.finite_mask & G.inside()
    gmin = abs(float(np.min(G.values[fin])))
    r = dual_power_integral(G, 1, config)
    n = G.n
    return gmin, r.value / ((2 ** (1 / (n + 1)) - 1) * G.polytope.volume)


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------


def _random_points(P, count, rng):
    lo, hi = P.bbox[:, 0], P.bbox[:, 1]
    out = []
    while sum(len(o) for o in out) < count:
        s = rng.uniform(lo, hi, size=(4 * count, P.dim))
        out.append(s[P.signed_distance(s) > 0])
    return np.concatenate(out)[:count]


def _boundary_points(P, count, rng):
    """Points on facets (and the vertices) of P."""
    pts = [P.vertices]
    if P.dim == 1:
        return P.vertices.copy()
    inner = _random_points(P, count, rng)
    for s in inner:
        # walk from s to the boundary along a random direction
        d = rng.normal(size=P.dim)
        d /= np.linalg.norm(d)
        ell, ud = P.facet_values(s), P.U @ d
        with np.errstate(divide="ignore"):
            t = np.where(ud < 0, ell / -ud, np.inf).min()
        pts.append((s + t * d)[None])
    return np.concatenate(pts)


def loglip_fit(G, config=None, pairs=64, seed=None):
    """Fit ``|G(s) - G(s')| <= C r log(C / r)`` on dyadic separations ``r``.

    Returns
    -------
    C : float or None
        ``None`` when the per-scale constants keep growing at the finest
        scales or exceed ``C_MAX``.
    per_scale : list of float
    """
    config = config or RunConfig()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    P = G.polytope
    base = np.concatenate([_random_points(P, pairs, rng), _boundary_points(P, pairs, rng)])
    rmin = 0.0 if G.exact is not None else 2 * float(np.max(G.h))
    per = []
    for r in LOGLIP_SCALES:
        if r < rmin:
            continue
        d = rng.normal(size=base.shape)
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        a = base
        b = base + r * d
        flip = P.signed_distance(b) < 0
        b[flip] = base[flip] - r * d[flip]
        ok = P.signed_distance(b) >= 0
        if G.exact is not None:
            ok &= P.signed_distance(a) >= 0
        with np.errstate(invalid="ignore"):
            diff = np.abs(np.asarray(G(b[ok])) - np.asarray(G(a[ok])))
        if diff.size == 0:
            continue
        m = float(np.max(diff)) / r
        per.append(float(solve_loglog(m, r)) if np.isfinite(m) else float("inf"))
    return _stable_fit(per), per


def gradlog_fit(G, config=None, seed=None):
    """Fit ``|grad G(s)| <= C log(C / dist(s, boundary))`` over distance bands."""
    config = config or RunConfig()
    P = G.polytope
    rng = np.random.default_rng(config.seed if seed is None else seed)
    if G.exact_grad is not None:
        bands = np.geomspace(0.25, 1e-8, 12)
        pts, dist = [], []
        for dd in bands:
            if P.dim == 1:
                lo, hi = P.vertices[0, 0], P.vertices[-1, 0]
                s = np.array([[lo + dd], [hi - dd]])
            else:
                s = []
                for _ in range(32):
                    b = _boundary_points(P, 1, rng)[-1]
                    # step inward along the steepest inward facet normal
                    k = int(np.argmin(np.abs(P.facet_values(b[None])[0])))
                    u = P.U[k] / np.linalg.norm(P.U[k])
                    s.append(b + dd * u)
                s = np.array(s)
                s = s[P.signed_distance(s) > 0]
            pts.append(s)
            dist.append(P.signed_distance(s))
        per = []
        for s, dd in zip(pts, dist):
            if len(s) == 0:
                per.append(None)
                continue
            g = np.linalg.norm(np.asarray(G.exact_grad(s), dtype=float), axis=-1)
            per.append(float(np.max(solve_loglog(g, dd))) if np.all(np.isfinite(g))
                       else float("inf"))
        return _stable_fit(per), per
    c = cells(G)
    h = float(np.max(G.h))
    centroid_dist = P.signed_distance(c.centroid)
    g = np.linalg.norm(c.grad, axis=1)
    edges = h * 2.0 ** np.arange(0, 12)
    per = []
    for lo_e, hi_e in zip(edges[::-1][1:], edges[::-1][:-1]):
        sel = (centroid_dist >= lo_e) & (centroid_dist < hi_e)
        if sel.any():
            per.append(float(np.max(solve_loglog(g[sel], centroid_dist[sel]))))
    return _stable_fit(per), per


@dataclass
class RegularityResult:
    bounded: bool
    sup_norm: float | None
    primal_sup_norm: float | None
    loglip_C: float | None
    gradlog_C: float | None
    eps_star: float | None
    eps_finite: dict = field(default_factory=dict)
    loglip_scales: list = field(default_factory=list)
    gradlog_bands: list = field(default_factory=list)


def primal_sup_norm(T, config=None):
    """``sup |Fphi - F_P|`` over the last primal box."""
    config = config or RunConfig()
    FP = support_function(T.polytope)
    radii = T.schedule(config)
    _, _, vals, _ = _box_levels(lambda x, axes: np.abs(T.Fphi.sample(axes) - FP(x)), T.n,
                                radii, config, T.Fphi.kinks)
    return float(np.max(vals))


def regularity(T, eps_list=DEFAULT_EPS, config=None):
    """Boundedness, Log-Lipschitz and gradient-log fits, and ``eps*``."""
    config = config or RunConfig()
    G = _dual(T, config)
    inside = G.inside()
    bounded = bool(np.all(G.finite_mask[inside]))
    sup_norm = float(np.max(np.abs(G.values[inside & G.finite_mask])))
    primal = None
    if bounded and not isinstance(T, DualFunction):
        primal = primal_sup_norm(T, config)
    if not bounded:
        sup_norm = None
    eps_finite = {}
    for eps in sorted(eps_list):
        r = exp_gradient_norm_integral(G, eps, config)
        eps_finite[str(eps)] = bool(not r.divergent and math.isfinite(r.value))
    finite_eps = [float(e) for e, ok in eps_finite.items() if ok]
    eps_star = max(finite_eps) if finite_eps else None
    ll, ll_scales = (None, [])
    gl, gl_bands = (None, [])
    if bounded:
        ll, ll_scales = loglip_fit(G, config)
        gl, gl_bands = gradlog_fit(G, config)
    return RegularityResult(bounded, sup_norm, primal, ll, gl, eps_star, eps_finite,
                            ll_scales, gl_bands)


def prop43_check(G, eps, pairs=1000, config=None, seed=None):
    """Check the quantitative Log-Lipschitz bound at random pairs.

    Uses ``c = inradius / (2 circumradius)`` about the vertex centroid and
    ``C = (n + 3) / (eps c) max(1, ||exp(eps |grad G|)||_1)``.

    Returns
    -------
    dict
        ``ok``, ``c``, ``C``, ``worst_ratio`` (max of lhs / rhs) and the
        number of pairs checked.
    """
    config = config or RunConfig()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    P = G.polytope
    n = P.dim
    bc = P.ball_constants(translate=True)
    c = bc.b / (2 * bc.a)
    integral = exp_gradient_norm_integral(G, eps, config)
    C = (n + 3) / (eps * c) * max(1.0, integral.value)
    a = _random_points(P, pairs, rng)
    r = np.exp(rng.uniform(np.log(1e-6), np.log(2 / np.e), size=pairs))
    d = rng.normal(size=a.shape)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    b = a + r[:, None] * d
    ok = P.signed_distance(b) > 0
    a, b, r = a[ok], b[ok], r[ok]
    lhs = np.abs(np.asarray(G(a)) - np.asarray(G(b)))
    rhs = 2 * C * r * np.log(2 / (c * r ** n))
    return {"ok": bool(np.all(lhs <= rhs)), "c": c, "C": C,
            "worst_ratio": float(np.max(lhs / rhs)), "pairs": int(ok.sum()),
            "exp_integral": integral.value}


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------


@dataclass
class ClassificationReport:
    is_toric_psh: bool
    C: float | None
    in_E_tor: bool
    Ep: dict
    bounded: bool | None
    sup_norm: float | None
    lelong: dict
    loglip_C: float | None
    gradlog_C: float | None
    eps_star: float | None
    growth: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"is_toric_psh": self.is_toric_psh, "C": self.C, "in_E_tor": self.in_E_tor,
                "Ep": dict(self.Ep), "bounded": self.bounded, "sup_norm": self.sup_norm,
                "lelong": dict(self.lelong), "loglip_C": self.loglip_C,
                "gradlog_C": self.gradlog_C, "eps_star": self.eps_star,
                "growth": dict(self.growth), "notes": list(self.notes)}


def classify(T, config=None, p_list=(1, 2), eps_list=DEFAULT_EPS):
    """Run every classifier on a potential and assemble the report."""
    config = config or RunConfig()
    notes = []
    radii = T.schedule(config)
    if T.dual_defined:
        psh_flag, C = True, None
        G = T.dual(config)
        fin = G.finite_mask & G.inside()
        C = 0.0 - float(np.min(G.values[fin]))
        notes.append("potential specified by its dual; C = -min G")
        psh = None
    else:
        psh = classify_psh(T.Fphi, T.polytope, config, radii)
        psh_flag, C = psh.flag, psh.C
        if not psh.flag:
            notes.append("not toric psh: sup(F - F_P) unstable or gradients leave P")
    if not psh_flag:
        return ClassificationReport(False, C, False, {str(p): False for p in p_list}, None,
                                    None, {}, None, None, None, notes=notes)
    energy = classify_energy(T, p_list, config, psh=psh)
    lel = lelong_numbers(T, config)
    lel.pop("_slope_check", None)
    notes.append("Lelong numbers use the vertex-chart formula (derived)")
    growth = {}
    if not T.dual_defined:
        for eps in GROWTH_EPS:
            try:
                growth[str(eps)] = growth_certificate(T.Fphi, T.polytope, eps, config, radii)
            except GrowthError:
                growth[str(eps)] = None
    report = ClassificationReport(True, C, energy.in_E_tor, energy.Ep, None, None, lel,
                                  None, None, None, growth, notes)
    if energy.in_E_tor:
        reg = regularity(T, eps_list, config)
        report.bounded = reg.bounded
        report.sup_norm = reg.sup_norm
        report.loglip_C = reg.loglip_C
        report.gradlog_C = reg.gradlog_C
        report.eps_star = reg.eps_star
        if reg.primal_sup_norm is not None:
            notes.append(f"primal sup |F - F_P| = {reg.primal_sup_norm!r}")
    return report
