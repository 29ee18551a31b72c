"""``d_p`` distances between toric potentials and the ex310 convergence modes."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import RunConfig
from .convexfn import DualFunction
from .grids import DualGrid
from .monge_ampere import QuadratureResult, _margin_probe, _nfact, cells, coarsen

MODE_RATIO = 0.1
MODE_JS = (2, 4, 8, 16, 32, 64)


class GridMismatchError(ValueError):
    """The two dual functions do not live on the same grid."""


def _check_common(G1, G2):
    if G1.grid != G2.grid:
        raise GridMismatchError(f"grids differ: {G1.grid} vs {G2.grid}")
    if not np.allclose(G1.polytope.U, G2.polytope.U) or \
            not np.allclose(G1.polytope.lam, G2.polytope.lam):
        raise GridMismatchError("dual functions live on different polytopes")


def _gap(G1, G2):
    both = G1.finite_mask & G2.finite_mask
    with np.errstate(invalid="ignore"):
        d = np.where(both, np.abs(G1.values - G2.values), np.inf)
    return DualFunction(G1.polytope, G1.grid, d, both, G1.radii, label="gap")


def dp_distance(G1, G2, p=1.0, config=None):
    """``(int_P |G1 - G2|^p)^(1/p)`` by cell quadrature on a shared grid.

    Nodes in the interior (beyond the margin) where exactly one of the two
    duals is infinite make the distance divergent.

    Returns
    -------
    QuadratureResult
        ``value`` is the distance, ``levels`` the margin partial sums of the
        p-th power.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    config = config or RunConfig()
    _check_common(G1, G2)
    interior = G1.interior(config.margin_cells)
    clash = interior & (G1.finite_mask != G2.finite_mask)
    if clash.any():
        res = QuadratureResult(math.inf, math.inf, 0, divergent=True)
        res.notes.append(f"finite masks disagree at {int(clash.sum())} interior nodes")
        return res
    D = _gap(G1, G2)
    c = cells(D)
    flat = D.values.ravel() if D.n > 1 else D.values
    per = np.mean(flat[c.corners] ** p, axis=1) * c.vol
    total = float(np.sum(per))
    sums, divergent = _margin_probe(per, c.dist, float(np.min(D.h)), config.tol.div)
    try:
        cd = coarsen(D)
        cc = cells(cd)
        cflat = cd.values.ravel() if cd.n > 1 else cd.values
        coarse = float(np.sum(np.mean(cflat[cc.corners] ** p, axis=1) * cc.vol))
        err = abs(total ** (1 / p) - coarse ** (1 / p))
    except (ValueError, IndexError):
        err = float("nan")
    res = QuadratureResult(total ** (1 / p), err, len(c), divergent, levels=sums + [total])
    res.unresolved = max(0.0, G1.polytope.volume - float(np.sum(c.vol)))
    return res


def common_duals(Ta, Tb, config=None):
    """Transforms of two potentials over the same polytope on one shared grid."""
    config = config or RunConfig()
    P = Ta.polytope
    if P.dim != Tb.polytope.dim or not np.allclose(P.vertices, Tb.polytope.vertices):
        raise GridMismatchError("potentials live on different polytopes")
    grid = DualGrid.for_polytope(P, config.resolution(P.dim),
                                 tuple(Ta.breakpoints) + tuple(Tb.breakpoints))
    return Ta.dual_on(grid, config), Tb.dual_on(grid, config)


def distance(Ta, Tb, p=1.0, config=None):
    """``d_p`` between two toric potentials."""
    G1, G2 = common_duals(Ta, Tb, config)
    return dp_distance(G1, G2, p, config)


def pushforward_gap(Ta, Tb, p=1.0, config=None):
    """``int |F_a - F_b|^p dMA(F_a)`` evaluated along the gradient of ``G_a``."""
    config = config or RunConfig()
    G = Ta.dual(config)
    c = cells(G)
    x = c.grad
    gap = np.abs(np.asarray(Ta.Fphi(x), dtype=float) - np.asarray(Tb.Fphi(x), dtype=float))
    per = _nfact(G.n) * gap ** p * c.vol
    total = float(np.sum(per))
    sums, divergent = _margin_probe(per, c.dist, float(np.min(G.h)), config.tol.div)
    return QuadratureResult(total, float("nan"), len(c), divergent, levels=sums + [total])


# ---------------------------------------------------------------------------
# ex310 modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceModes:
    l1: bool
    linf: bool
    e1: bool


@dataclass
class ModeReport:
    """Per-index proxies and the limit flags derived from them."""

    js: list
    eps: list
    C: list
    l1_proxy: list
    linf_proxy: list
    e1_proxy: list
    modes: ConvergenceModes
    notes: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["modes"] = asdict(self.modes)
        return d


def tends_to_zero(seq, ratio=MODE_RATIO):
    """Sequence-limit test: the last term is at most ``ratio`` times the first."""
    seq = [abs(float(v)) for v in seq]
    if len(seq) < 2:
        raise ValueError("need at least two terms")
    if seq[0] == 0.0:
        return seq[-1] == 0.0
    return seq[-1] <= ratio * seq[0]


def ex310_modes(eps_seq, C_seq, config=None, js=None):
    """Numerical proxies for the L1, L-infinity and d_1 modes of ex310.

    Each ``G_j`` is obtained by transforming the ex310 primal profile on a
    grid with ``s = eps_j`` as a node.  The proxies are the measure of the
    support of ``G_j``, ``max |G_j|`` and ``d_1(G_j, 0)``.
    """
    from .potentials import gallery

    config = config or RunConfig()
    eps_seq = [float(e) for e in eps_seq]
    C_seq = [float(c) for c in C_seq]
    if len(eps_seq) != len(C_seq):
        raise ValueError("eps and C sequences differ in length")
    if any(not 0 < e < 1 for e in eps_seq) or any(c <= 0 for c in C_seq):
        raise ValueError("need eps in (0, 1) and C > 0")
    l1, linf, e1 = [], [], []
    for e, C in zip(eps_seq, C_seq):
        T = gallery("ex310", {"eps": e, "C": C})
        G = T.dual(config)
        zero = DualFunction.from_closed_form(G.polytope, G.grid,
                                             lambda s: np.zeros(len(s)), label="zero")
        c = cells(G)
        flat = G.values
        support = np.max(np.abs(flat[c.corners]), axis=1) > 0
        l1.append(float(np.sum(c.vol[support])))
        inside = G.finite_mask & G.inside()
        linf.append(float(np.max(np.abs(G.values[inside]))))
        e1.append(dp_distance(G, zero, 1, config).value)
    modes = ConvergenceModes(tends_to_zero(l1), tends_to_zero(linf), tends_to_zero(e1))
    rep = ModeReport(list(js) if js is not None else list(range(1, len(eps_seq) + 1)),
                     eps_seq, C_seq, l1, linf, e1, modes)
    if modes.linf and not (modes.l1 and modes.e1):
        rep.notes.append("uniform mode without L1 or d_1 mode: proxies inconsistent")
    return rep


REGIMES = {
    "1/j,j": (lambda j: 1.0 / j, lambda j: float(j)),
    "1/j,j^2": (lambda j: 1.0 / j, lambda j: float(j * j)),
    "1/j^2,j": (lambda j: 1.0 / (j * j), lambda j: float(j)),
}


def ex310_regime(name, js=MODE_JS, config=None):
    """Run :func:`ex310_modes` for one of the named parameter regimes."""
    if name not in REGIMES:
        raise KeyError(f"unknown regime {name!r}; choose from {sorted(REGIMES)}")
    fe, fc = REGIMES[name]
    return ex310_modes([fe(j) for j in js], [fc(j) for j in js], config, js=js)


__all__ = ["ConvergenceModes", "GridMismatchError", "ModeReport", "common_duals",
           "distance", "dp_distance", "ex310_modes", "ex310_regime", "pushforward_gap",
           "tends_to_zero", "REGIMES"]
