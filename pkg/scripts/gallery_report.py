"""Classify every gallery potential and print one JSON report per entry."""
from __future__ import annotations

import time
from dataclasses import dataclass

from _common import dump, parse_config

from torpot.classify import classify
from torpot.config import RunConfig
from torpot.polytope import DelzantPolytope
from torpot.potentials import parse_potential_spec

SPECS = ("pn_fs?n=1", "pn_fs?n=2", "f1", "ex310", "ex46?alpha=0.5", "ex311iii", "phi1?n=1",
         "phi1?n=2", "phi2?n=2", "guillemin", "guillemin@simplex2", "sqrt_cusp", "zero")


@dataclass(frozen=True)
class GalleryConfig:
    specs: tuple = SPECS
    grid: int = 0
    output: str = ""


def main():
    cfg = parse_config(GalleryConfig, __doc__)
    run = RunConfig(grid_resolution=cfg.grid or None)
    out = {}
    for spec in cfg.specs:
        text, _, poly = spec.partition("@")
        P = DelzantPolytope.simplex(2) if poly == "simplex2" else None
        t0 = time.perf_counter()
        rep = classify(parse_potential_spec(text, P), run).to_dict()
        rep["seconds"] = round(time.perf_counter() - t0, 3)
        out[spec] = rep
    dump(out, cfg.output)


if __name__ == "__main__":
    main()
