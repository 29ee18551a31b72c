"""Delzant polytopes in H-representation.

A polytope is stored as a list of facets ``l_i(s) = <s, u_i> - lambda_i >= 0``
with primitive integer normals ``u_i``.  Vertices and vertex charts are
derived at construction time by brute-force enumeration of n-subsets of
facets, which is plenty for the handful of facets toric examples carry.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

TOL_FEAS = 1e-9
MAX_FACETS = 20
MAX_VOLUME_DIM = 4


class PolytopeError(ValueError):
    """Raised for malformed, unbounded or degenerate polytope data."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class Facet:
    u: tuple[int, ...]
    lam: float

    def __post_init__(self):
        if any(int(c) != c for c in self.u):
            raise PolytopeError(f"facet normal {self.u} is not an integer vector")
        g = reduce(math.gcd, (abs(int(c)) for c in self.u), 0)
        if g != 1:
            raise PolytopeError(f"facet normal {self.u} is not primitive (gcd={g})")

    def value(self, s):
        return np.asarray(s, dtype=float) @ np.asarray(self.u, dtype=float) - self.lam


@dataclass(frozen=True)
class BallConstants:
    """Radii with ``B(0, b) <= P <= B(0, a)`` about the (translated) origin."""

    b: float
    a: float


@dataclass
class VertexCheck:
    vertex: tuple[float, ...]
    active: tuple[int, ...]
    det: float | None


@dataclass
class ValidationReport:
    valid: bool
    vertices: list[VertexCheck]
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "valid": self.valid,
            "vertices": [
                {"vertex": list(v.vertex), "active": list(v.active),
                 "count": len(v.active), "abs_det": v.det}
                for v in self.vertices
            ],
            "notes": list(self.notes),
        }


class DelzantPolytope:
    """Compact convex polytope ``{s : <s, u_i> >= lambda_i}``.

    Parameters
    ----------
    facets : sequence of Facet
    translation : array_like, optional
        Explicit vector used when an origin-centred copy is needed
        (``centered``).  Defaults to the vertex centroid.
    """

    def __init__(self, facets, translation=None):
        facets = tuple(facets)
        if not facets:
            raise PolytopeError("polytope needs at least one facet")
        dims = {len(f.u) for f in facets}
        if len(dims) != 1:
            raise PolytopeError("facet normals have inconsistent dimensions")
        self.dim = dims.pop()
        if len(facets) < self.dim + 1:
            raise PolytopeError(
                f"{len(facets)} facets cannot bound a polytope in dimension {self.dim}")
        if len(facets) > MAX_FACETS:
            raise PolytopeError(f"more than {MAX_FACETS} facets are not supported")
        self.facets = facets
        self.U = np.array([f.u for f in facets], dtype=float)
        self.lam = np.array([f.lam for f in facets], dtype=float)
        self._check_bounded()
        self._check_interior()
        self.vertices, self.vertex_charts = self._enumerate_vertices()
        self._translation = None if translation is None else np.asarray(translation, float)
        if self._translation is not None and self._translation.shape != (self.dim,):
            raise PolytopeError("translation has the wrong dimension")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_arrays(cls, normals, offsets, translation=None):
        return cls([Facet(tuple(int(c) for c in u), float(l))
                    for u, l in zip(normals, offsets)], translation=translation)

    @classmethod
    def simplex(cls, n):
        normals = [tuple(int(i == k) for i in range(n)) for k in range(n)]
        normals.append(tuple([-1] * n))
        return cls.from_arrays(normals, [0.0] * n + [-1.0])

    @classmethod
    def interval(cls, lo=0.0, hi=1.0):
        return cls.from_arrays([(1,), (-1,)], [lo, -hi])

    @classmethod
    def box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        n = lo.size
        normals, offsets = [], []
        for k in range(n):
            e = [0] * n
            e[k] = 1
            normals.append(tuple(e))
            offsets.append(lo[k])
            e = [0] * n
            e[k] = -1
            normals.append(tuple(e))
            offsets.append(-hi[k])
        return cls.from_arrays(normals, offsets)

    @classmethod
    def hirzebruch_f1(cls, a=1.0, b=1.0):
        """Polytope ``{s >= 0, b <= s1 + s2 <= a + b}`` of the blown-up plane."""
        return cls.from_arrays([(1, 0), (0, 1), (-1, -1), (1, 1)],
                               [0.0, 0.0, -(a + b), b])

    def _check_bounded(self):
        n = self.dim
        if np.linalg.matrix_rank(self.U) < n:
            _, _, vt = np.linalg.svd(self.U)
            raise PolytopeError("facet normals do not span R^n: polytope is unbounded",
                                certificate={"recession_direction": vt[-1].tolist()})
        # a recession direction d satisfies U d >= 0 with U d != 0
        res = linprog(-self.U.sum(axis=0), A_ub=-self.U, b_ub=np.zeros(len(self.U)),
                      bounds=[(-1, 1)] * n, method="highs")
        if res.status == 0 and -res.fun > 1e-9:
            raise PolytopeError("polytope is unbounded",
                                certificate={"recession_direction": res.x.tolist()})

    def _check_interior(self):
        n = self.dim
        norms = np.linalg.norm(self.U, axis=1)
        # Chebyshev centre: maximise r with <s,u_i> - lambda_i >= r |u_i|
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A = np.hstack([-self.U, norms[:, None]])
        res = linprog(c, A_ub=A, b_ub=-self.lam, bounds=[(None, None)] * n + [(None, 1e6)],
                      method="highs")
        if res.status != 0:
            raise PolytopeError("polytope is empty", certificate={"lp_status": int(res.status)})
        if res.x[-1] <= 1e-9:
            raise PolytopeError("polytope has empty interior",
                                certificate={"chebyshev_radius": float(res.x[-1])})
        self.chebyshev_center = res.x[:n]
        self.chebyshev_radius = float(res.x[-1])

    def _enumerate_vertices(self):
        n = self.dim
        found = []
        for idx in itertools.combinations(range(len(self.facets)), n):
            A = self.U[list(idx)]
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            v = np.linalg.solve(A, self.lam[list(idx)])
            if np.all(self.U @ v - self.lam >= -TOL_FEAS):
                if not any(np.allclose(v, w, atol=1e-9) for w in found):
                    found.append(v)
        if len(found) < n + 1:
            raise PolytopeError("vertex enumeration found too few vertices")
        # lexicographic order keeps vertex labels stable
        found.sort(key=lambda v: tuple(np.round(v, 12)))
        vertices = np.array(found)
        charts = []
        for v in vertices:
            active = np.flatnonzero(np.abs(self.U @ v - self.lam) <= 1e-7)
            charts.append(tuple(int(i) for i in active))
        return vertices, charts

    # -- geometry ------------------------------------------------------------

    def facet_values(self, s):
        """Return ``l_i(s)`` for every facet (last axis indexes facets)."""
        s = np.asarray(s, dtype=float)
        return s @ self.U.T - self.lam

    def contains(self, s, tol=TOL_FEAS):
        return np.all(self.facet_values(s) >= -tol, axis=-1)

    def support_value(self, x):
        """Support function ``F_P(x) = max_{s in P} <x, s>``, evaluated on vertices."""
        x = np.asarray(x, dtype=float)
        return np.max(x @ self.vertices.T, axis=-1)

    def support_argmax(self, x):
        """Vertex attaining ``F_P(x)`` (a subgradient of the support function)."""
        x = np.asarray(x, dtype=float)
        return self.vertices[np.argmax(x @ self.vertices.T, axis=-1)]

    def boundary_distance(self, s):
        """Euclidean distance from an interior point to the boundary."""
        s = np.asarray(s, dtype=float)
        d = self.signed_distance(s)
        if np.any(d <= 0):
            raise PolytopeError("point is not in the interior of P")
        return d

    def signed_distance(self, s):
        """``min_i l_i(s) / |u_i|``; positive inside, negative outside."""
        norms = np.linalg.norm(self.U, axis=1)
        return np.min(self.facet_values(s) / norms, axis=-1)

    @cached_property
    def volume(self):
        n = self.dim
        if n > MAX_VOLUME_DIM:
            raise NotImplementedError(f"volume is only supported for n <= {MAX_VOLUME_DIM}")
        if n == 1:
            return float(self.vertices.max() - self.vertices.min())
        # cone from an interior point over the simplicial facets returned by qhull
        hull = ConvexHull(self.vertices)
        c = self.chebyshev_center
        total = 0.0
        for simplex in hull.simplices:
            total += abs(np.linalg.det(self.vertices[simplex] - c))
        return total / math.factorial(n)

    @property
    def bbox(self):
        return np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)], axis=1)

    @property
    def translation(self):
        if self._translation is not None:
            return self._translation
        return self.vertices.mean(axis=0)

    def translated(self, theta):
        """Return ``P + theta``; facet offsets move by ``<theta, u_i>``."""
        theta = np.asarray(theta, dtype=float)
        return DelzantPolytope(
            [Facet(f.u, float(f.lam + np.dot(theta, f.u))) for f in self.facets])

    def dilated(self, factor):
        if factor <= 0:
            raise ValueError("dilation factor must be positive")
        return DelzantPolytope([Facet(f.u, float(factor * f.lam)) for f in self.facets])

    def centered(self):
        """Copy translated so that the stored translation vector moves to 0."""
        return self.translated(-self.translation)

    def contains_origin_in_interior(self):
        return bool(np.all(self.lam < -TOL_FEAS))

    def ball_constants(self, translate=False):
        P = self
        if not self.contains_origin_in_interior():
            if not translate:
                raise PolytopeError("0 is not in the interior of P; pass translate=True")
            P = self.centered()
        norms = np.linalg.norm(P.U, axis=1)
        b = float(np.min(-P.lam / norms))
        a = float(np.max(np.linalg.norm(P.vertices, axis=1)))
        return BallConstants(b=b, a=a)

    # -- Delzant condition ---------------------------------------------------

    def validate(self, tol=1e-7):
        checks, notes = [], []
        valid = True
        for v, chart in zip(self.vertices, self.vertex_charts):
            det = None
            if len(chart) == self.dim:
                det = float(abs(round(np.linalg.det(self.U[list(chart)]), 9)))
                if abs(det - 1.0) > tol:
                    valid = False
                    notes.append(f"vertex {v.tolist()}: |det| = {det}")
            else:
                valid = False
                notes.append(f"vertex {v.tolist()}: {len(chart)} active facets")
            checks.append(VertexCheck(tuple(float(c) for c in v), chart, det))
        return ValidationReport(valid=valid, vertices=checks, notes=notes)

    # -- serialisation -------------------------------------------------------

    def to_dict(self):
        d = {"dim": self.dim,
             "facets": [{"u": list(f.u), "lambda": f.lam} for f in self.facets]}
        if self._translation is not None:
            d["translate"] = self._translation.tolist()
        return d

    def __repr__(self):
        return f"DelzantPolytope(dim={self.dim}, facets={len(self.facets)})"

    def __eq__(self, other):
        if not isinstance(other, DelzantPolytope):
            return NotImplemented
        return self.facets == other.facets

    def __hash__(self):
        return hash(self.facets)


_ALLOWED_KEYS = {"dim", "facets", "translate"}
_FACET_KEYS = {"u", "lambda"}


def parse_polytope(spec):
    """Build a polytope from a JSON document (str, path or already-parsed dict)."""
    if isinstance(spec, Path) or (isinstance(spec, str) and not spec.lstrip().startswith("{")):
        spec = Path(spec).read_text()
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise PolytopeError(f"invalid polytope JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise PolytopeError("polytope spec must be a JSON object")
    unknown = set(spec) - _ALLOWED_KEYS
    if unknown:
        raise PolytopeError(f"unknown polytope fields: {sorted(unknown)}")
    if "dim" not in spec or "facets" not in spec:
        raise PolytopeError("polytope spec needs 'dim' and 'facets'")
    dim = spec["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise PolytopeError("'dim' must be a positive integer")
    facets = []
    for entry in spec["facets"]:
        if not isinstance(entry, dict) or set(entry) != _FACET_KEYS:
            raise PolytopeError(f"facet entries need exactly {sorted(_FACET_KEYS)}: {entry}")
        u = entry["u"]
        if len(u) != dim or any(not isinstance(c, (int, float)) or int(c) != c for c in u):
            raise PolytopeError(f"facet normal {u} is not an integer vector of length {dim}")
        facets.append(Facet(tuple(int(c) for c in u), float(entry["lambda"])))
    translate = spec.get("translate")
    return DelzantPolytope(facets, translation=translate)


def support_value(P, x):
    return P.support_value(x)


def facet_values(P, s):
    return P.facet_values(s)


def boundary_distance(P, s):
    return P.boundary_distance(s)


def validate_delzant(P):
    return P.validate()


def ball_constants(P, translate=False):
    return P.ball_constants(translate=translate)
