"""Sup-norm error of F** against F on the core box for the gallery profiles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from _common import dump, parse_config

from torpot.config import RunConfig
from torpot.convexfn import biconjugate
from torpot.potentials import parse_potential_spec

SPECS = ("pn_fs?n=1", "pn_fs?n=2", "f1", "ex310", "ex46", "ex311iii", "phi1?n=2",
         "phi2?n=2", "guillemin", "sqrt_cusp")


@dataclass(frozen=True)
class BiconjConfig:
    specs: tuple = SPECS
    grid_1d: int = 8192
    grid_2d: int = 1024
    radii: tuple = (8.0, 16.0, 32.0)
    output: str = ""


def main():
    cfg = parse_config(BiconjConfig, __doc__)
    out = {}
    for spec in cfg.specs:
        T = parse_potential_spec(spec)
        # f1 has Fphi = F0
        F = T.Fphi
        run = RunConfig(grid_resolution=cfg.grid_1d if T.n == 1 else cfg.grid_2d)
        Fss = biconjugate(F, T.polytope, run, radii=cfg.radii, breakpoints=T.breakpoints)
        out[spec] = float(np.max(np.abs(Fss.values - F.sample(Fss.axes))))
    dump(out, cfg.output)


if __name__ == "__main__":
    main()
