"""Command-line interface.

Exit codes: 0 on success (including negative classifications and divergent
integrals), 2 for malformed input, 3 when a mathematical precondition fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .classify import DEFAULT_EPS, GrowthError, classify
from .config import RunConfig, Tolerances, resolve_threads
from .convexfn import NonConvexError
from .gridio import GridFileError, potential_from_file, write_dual
from .metric import GridMismatchError, distance
from .monge_ampere import cells, moment, total_mass
from .polytope import PolytopeError, parse_polytope
from .potentials import GALLERY, SpecError, parse_potential_spec

EXIT_OK, EXIT_SPEC, EXIT_MATH = 0, 2, 3


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _emit(args, payload, rows=None, header=None):
    """Write JSON (or CSV when rows are given and --format csv)."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in r])
        text = buf.getvalue()
    else:
        text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args):
    tol = Tolerances()
    if args.tol:
        kw = {}
        for item in args.tol.split(","):
            name, sep, val = item.partition("=")
            if not sep:
                raise CLIError(f"--tol expects name=value pairs, got {item!r}", EXIT_SPEC)
            try:
                kw[name.strip()] = float(val)
            except ValueError:
                raise CLIError(f"bad tolerance value {val!r}", EXIT_SPEC) from None
        try:
            tol = tol.override(**kw)
        except ValueError as exc:
            raise CLIError(str(exc), EXIT_SPEC) from None
    radii = None
    if args.radii:
        try:
            radii = tuple(float(r) for r in args.radii.split(","))
        except ValueError:
            raise CLIError(f"bad --radii {args.radii!r}", EXIT_SPEC) from None
    try:
        return RunConfig(grid_resolution=args.grid, radii=radii, tol=tol,
                         threads=args.threads, seed=args.seed, output=args.output,
                         format=args.format)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_SPEC) from None


def _polytope(args):
    if not getattr(args, "polytope", None):
        return None
    return parse_polytope(args.polytope)


def _potential(spec, args):
    P = _polytope(args)
    if spec.startswith("gallery:") or spec in GALLERY or spec == "vs-zero" \
            or spec.split("?")[0] in GALLERY:
        return parse_potential_spec(spec, P)
    path = Path(spec)
    if path.exists():
        return potential_from_file(path, P)
    raise SpecError(f"not a gallery spec or grid file: {spec!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_transform(args, config):
    T = _potential(args.spec, args)
    G = T.dual(config)
    P = T.polytope
    fin = G.finite_mask & G.inside()
    finite_vol = float(np.sum(cells(G).vol)) if fin.any() else 0.0
    summary = {
        "label": T.label, "n": G.n, "shape": list(G.grid.shape),
        "radii": list(G.radii), "G_min": float(np.min(G.values[fin])) if fin.any() else None,
        "G_max": float(np.max(G.values[fin])) if fin.any() else None,
        "finite_nodes": int(G.finite_mask.sum()),
        "mask_area_fraction": finite_vol / P.volume,
        "dual_file": args.dual_out,
    }
    if args.oracle:
        from .oracle import brute_legendre

        axis = T.primal_axis(config)
        mesh = np.stack(np.meshgrid(*([axis] * G.n), indexing="ij"), -1).reshape(-1, G.n)
        vals = np.asarray(T.Fphi.sample([axis] * G.n), dtype=float).reshape(-1)
        idx = np.flatnonzero(G.finite_mask.ravel())[:: max(1, int(fin.sum()) // 16)]
        pts = G.points().reshape(-1, G.n)[idx]
        brute = brute_legendre(mesh, vals, pts)
        summary["oracle_max_abs_diff"] = float(np.max(np.abs(brute - G.values.ravel()[idx])))
    if args.dual_out:
        write_dual(args.dual_out, G)
    _emit(args, summary)


def cmd_classify(args, config):
    T = _potential(args.spec, args)
    eps = tuple(args.eps) if args.eps else DEFAULT_EPS
    report = classify(T, config, tuple(args.p), eps)
    out = report.to_dict()
    out["label"] = T.label
    out["seed"] = config.seed
    _emit(args, out)


def cmd_mass(args, config):
    T = _potential(args.spec, args)
    res, full = total_mass(T, config)
    P = T.polytope
    out = {"label": T.label, "total_mass": res.value, "expected": math.factorial(P.dim) * P.volume,
           "full_mass": full, "error_estimate": res.error_estimate,
           "unresolved": res.unresolved, "cells": res.cells_used}
    if args.oracle and P.dim <= 2 and not T.dual_defined:
        from .oracle import CellSet, alexandrov_mass

        R = T.schedule(config)[-1]
        out["oracle_alexandrov_mass"] = alexandrov_mass(
            T.Fphi, CellSet.box([-R] * P.dim, [R] * P.dim))
    _emit(args, out)


def cmd_moments(args, config):
    T = _potential(args.spec, args)
    rows, table = [], []
    for q in args.q:
        r = moment(T, q, config)
        table.append({"q": q, "value": r.value, "divergent": r.divergent,
                      "error_estimate": r.error_estimate, "levels": r.levels,
                      "notes": r.notes})
        rows.append((q, r.value, int(r.divergent), r.error_estimate))
    out = {"label": T.label, "moments": table}
    if len(table) == 1:
        out.update({k: table[0][k] for k in ("q", "value", "divergent")})
    _emit(args, out, rows, ["q", "value", "divergent", "error_estimate"])


def cmd_distance(args, config):
    specs = [s for s in (args.a, args.b) if s] + list(args.specs or [])
    if len(specs) != 2:
        raise CLIError("distance needs exactly two potentials", EXIT_SPEC)
    A, B = (_potential(s, args) for s in specs)
    r = distance(A, B, args.p, config)
    _emit(args, {"a": A.label, "b": B.label, "p": args.p, "value": r.value,
                 "error_estimate": r.error_estimate, "divergent": r.divergent,
                 "notes": r.notes})


def _node_gradient(G):
    """Per-axis node derivatives: central where both neighbours are finite,
    one-sided next to infinite nodes."""
    V = np.where(G.finite_mask, G.values, np.nan)
    out = []
    for k, h in enumerate(G.h):
        fwd = np.full(V.shape, np.nan)
        bwd = np.full(V.shape, np.nan)
        lo = [slice(None)] * G.n
        hi = [slice(None)] * G.n
        lo[k], hi[k] = slice(0, -1), slice(1, None)
        d = (V[tuple(hi)] - V[tuple(lo)]) / h
        fwd[tuple(lo)] = d
        bwd[tuple(hi)] = d
        with np.errstate(invalid="ignore"):
            both = np.where(np.isnan(fwd), bwd, np.where(np.isnan(bwd), fwd, 0.5 * (fwd + bwd)))
        out.append(both)
    return out


def cmd_plotdata(args, config):
    T = _potential(args.spec, args)
    G = T.dual(config)
    P = T.polytope
    pts = G.points().reshape(-1, G.n)
    vals = G.values.ravel()
    keep = G.finite_mask.ravel() & (P.signed_distance(pts) >= -1e-12)
    if args.slice is not None and G.n == 2:
        axis, _, at = args.slice.partition("=")
        k = int(axis.strip().lstrip("s"))
        ax = G.axes[k]
        node = ax[int(np.argmin(np.abs(ax - float(at))))]
        keep &= pts[:, k] == node
    gnorm = np.sqrt(sum(g.ravel() ** 2 for g in _node_gradient(G)))
    dist = np.maximum(P.signed_distance(pts), 0.0)
    cols = [f"s{k}" for k in range(G.n)] + ["G", "grad_norm", "dist"]
    rows = [list(pts[i]) + [vals[i], gnorm[i], dist[i]] for i in np.flatnonzero(keep)]
    if args.format == "json":
        _emit(args, {"label": T.label, "columns": cols, "rows": rows})
    else:
        _emit(args, None, rows, cols)


def cmd_gallery(args, config):
    _emit(args, {"gallery": {k: v for k, v in GALLERY.items()},
                 "aliases": {"pn_fubini_study": "pn_fs", "vs-zero": "zero"}})


def cmd_validate(args, config):
    P = parse_polytope(args.polytope_file)
    rep = P.validate()
    out = rep.to_dict()
    out["volume"] = P.volume
    out["vertices_list"] = P.vertices.tolist()
    _emit(args, out)
    if not rep.valid:
        raise CLIError("polytope is not Delzant", EXIT_SPEC)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=None,
                        help="dual grid intervals per axis (default 512 in 1-D, 256 in 2-D)")
    common.add_argument("--radii", default=None, help="comma-separated truncation radii")
    common.add_argument("--tol", default=None, help="tolerance overrides, e.g. sat=1e-7,div=0.1")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default TORPOT_THREADS or core count)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default csv for plotdata, json otherwise)")
    common.add_argument("--polytope", default=None, help="polytope JSON file or literal")
    common.add_argument("--oracle", action="store_true",
                        help="add brute-force cross-checks to the output")

    parser = argparse.ArgumentParser(prog="torpot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common], help="Legendre transform to a dual grid")
    p.add_argument("spec")
    p.add_argument("--dual-out", default=None, help="path of the dual grid file")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("classify", parents=[common], help="membership and regularity report")
    p.add_argument("spec")
    p.add_argument("--p", type=float, nargs="+", default=[1, 2])
    p.add_argument("--eps", type=float, nargs="+", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("mass", parents=[common], help="total Monge-Ampere mass")
    p.add_argument("spec")
    p.set_defaults(func=cmd_mass)

    p = sub.add_parser("moments", parents=[common], help="moments of the Monge-Ampere measure")
    p.add_argument("spec")
    p.add_argument("--q", type=float, nargs="+", default=[1.0])
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("distance", parents=[common], help="d_p distance of two potentials")
    p.add_argument("specs", nargs="*")
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--p", type=float, default=1.0)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("plotdata", parents=[common], help="columns s, G, |grad G|, dist")
    p.add_argument("spec")
    p.add_argument("--slice", default=None, help="2-D slice such as s0=0.25")
    p.set_defaults(func=cmd_plotdata, default_format="csv")

    p = sub.add_parser("gallery", parents=[common], help="list gallery potentials")
    p.set_defaults(func=cmd_gallery)

    p = sub.add_parser("validate", parents=[common], help="check the Delzant condition")
    p.add_argument("polytope_file")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = getattr(args, "default_format", "json")
    try:
        config = _config(args)
        _kernels.set_threads(resolve_threads(args.threads))
        args.func(args, config)
    except CLIError as exc:
        print(f"torpot: {exc}", file=sys.stderr)
        return exc.code
    except (SpecError, PolytopeError, GridFileError, GridMismatchError,
            json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"torpot: invalid input: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NonConvexError, GrowthError, ValueError, NotImplementedError) as exc:
        print(f"torpot: precondition failed: {exc}", file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["build_parser", "main"]
