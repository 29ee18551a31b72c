"""Text grid files for primal samples and dual transforms.

Layout::

    n=2; kind=dual
    axis 0: -0.05,1.05,1+m+2p
    axis 1: ...
    polytope: {"dim": 2, "facets": [...]}
    <values row-major, one per line>

``inf`` is allowed only in dual files; NaN is never allowed.  Values are
written with ``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .convexfn import ConvexFunctionRep, DualFunction
from .grids import DualGrid
from .polytope import DelzantPolytope, parse_polytope

KINDS = ("primal", "dual")


class GridFileError(ValueError):
    """Malformed grid file."""


@dataclass
class GridFile:
    n: int
    kind: str
    axes: list
    values: np.ndarray
    polytope: dict | None = None


def format_grid(axes, values, kind, polytope=None):
    if kind not in KINDS:
        raise GridFileError(f"kind must be one of {KINDS}")
    values = np.asarray(values, dtype=float)
    if np.isnan(values).any():
        raise GridFileError("NaN values cannot be written")
    if kind == "primal" and not np.all(np.isfinite(values)):
        raise GridFileError("primal grid files must be finite")
    lines = [f"n={len(axes)}; kind={kind}"]
    for k, ax in enumerate(axes):
        ax = np.asarray(ax, dtype=float)
        if len(ax) > 1 and not np.allclose(np.diff(ax), (ax[-1] - ax[0]) / (len(ax) - 1),
                                           rtol=1e-9, atol=1e-12):
            raise GridFileError(f"axis {k} is not uniform")
        lines.append(f"axis {k}: {float(ax[0])!r},{float(ax[-1])!r},{len(ax)}")
    if polytope is not None:
        lines.append("polytope: " + json.dumps(polytope.to_dict(), separators=(",", ":")))
    lines.extend("inf" if v == np.inf else repr(float(v)) for v in values.ravel())
    return "\n".join(lines) + "\n"


def write_grid(path, axes, values, kind, polytope=None):
    Path(path).write_text(format_grid(axes, values, kind, polytope))


def write_dual(path, G):
    write_grid(path, G.axes, G.values, "dual", G.polytope)


def parse_grid(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise GridFileError("grid file must start with 'n=<dim>'")
    head = dict(part.strip().split("=", 1) for part in lines[0].split(";") if "=" in part)
    try:
        n = int(head["n"])
    except (KeyError, ValueError):
        raise GridFileError("bad dimension header") from None
    kind = head.get("kind", "primal")
    if kind not in KINDS or n < 1:
        raise GridFileError(f"bad header {lines[0]!r}")
    axes, polytope, i = [], None, 1
    while i < len(lines) and (lines[i].startswith("axis") or lines[i].startswith("polytope:")):
        ln = lines[i]
        if ln.startswith("polytope:"):
            polytope = json.loads(ln.split(":", 1)[1])
        else:
            try:
                lo, hi, count = ln.split(":", 1)[1].split(",")
                count = int(count)
                if count < 2:
                    raise ValueError
                axes.append(np.linspace(float(lo), float(hi), count))
            except ValueError:
                raise GridFileError(f"bad axis line {ln!r}") from None
        i += 1
    if len(axes) != n:
        raise GridFileError(f"expected {n} axis lines, found {len(axes)}")
    try:
        vals = np.array([float(v) for v in lines[i:]])
    except ValueError as exc:
        raise GridFileError(f"bad value: {exc}") from None
    shape = tuple(len(a) for a in axes)
    if vals.size != int(np.prod(shape)):
        raise GridFileError(f"expected {int(np.prod(shape))} values, found {vals.size}")
    if np.isnan(vals).any():
        raise GridFileError("NaN values are not allowed")
    if np.isneginf(vals).any() or (kind == "primal" and np.isinf(vals).any()):
        raise GridFileError("infinite values are only allowed (as +inf) in dual files")
    return GridFile(n, kind, axes, vals.reshape(shape), polytope)


def read_grid(path):
    return parse_grid(Path(path).read_text())


def dual_grid_for(gf, P):
    """Recover the ``DualGrid`` whose axes are those of a dual file over ``P``."""
    lo, hi, ms, pads = [], [], [], []
    for k, ax in enumerate(gf.axes):
        a, b = float(P.bbox[k, 0]), float(P.bbox[k, 1])
        h = ax[1] - ax[0]
        pad = int(round((a - ax[0]) / h))
        m = len(ax) - 1 - 2 * pad
        if m < 1 or abs(a + m * h - b) > 1e-9 * max(1.0, abs(b)) or pad < 0:
            raise GridFileError(f"axis {k} does not align with the polytope bounding box")
        lo.append(a)
        hi.append(b)
        ms.append(m)
        pads.append(pad)
    return DualGrid(tuple(lo), tuple(hi), tuple(ms), tuple(pads))


def dual_function(gf, P):
    grid = dual_grid_for(gf, P)
    vals = np.asarray(gf.values, dtype=float)
    mask = np.isfinite(vals)
    return DualFunction(P, grid, vals, mask, label="file")


def potential_from_file(path, polytope=None):
    """Toric potential from a primal or dual grid file."""
    from dataclasses import replace

    from .potentials import ToricPotential, from_dual, reference_potential

    gf = read_grid(path)
    if polytope is None:
        if gf.polytope is not None:
            polytope = parse_polytope(gf.polytope)
        elif gf.n == 1:
            polytope = DelzantPolytope.interval()
        else:
            polytope = DelzantPolytope.simplex(gf.n)
    if polytope.dim != gf.n:
        raise GridFileError("grid dimension does not match the polytope")
    label = Path(path).name
    if gf.kind == "dual":
        G = dual_function(gf, polytope)
        T = from_dual(polytope, G, label=label)
        return replace(T, fixed_grid=G.grid)
    F = ConvexFunctionRep.gridded(gf.axes, gf.values, label=label)
    reach = min(min(abs(a[0]), abs(a[-1])) for a in gf.axes)
    F0, G0 = reference_potential(polytope)
    return ToricPotential(polytope, F0, F, label, {}, G0, radii=(reach / 2, reach))
