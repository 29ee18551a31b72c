"""Truncated |x|^q moments of ex311iii on growing primal windows."""
from __future__ import annotations

import math
from dataclasses import dataclass

from _common import dump, parse_config

from torpot.monge_ampere import primal_moment_windows
from torpot.potentials import gallery


@dataclass(frozen=True)
class MomentConfig:
    qs: tuple = (0.3, 0.4, 0.5, 1.0)
    log_radii: tuple = (1.5, 3.0, 6.0, 12.0, 24.0, 48.0)
    output: str = ""


def main():
    cfg = parse_config(MomentConfig, __doc__)
    F = gallery("ex311iii").Fphi
    radii = [math.exp(t) for t in cfg.log_radii]
    out = {"log_radii": list(cfg.log_radii), "moments": {}}
    for q in cfg.qs:
        _, vals = primal_moment_windows(F, q, radii)
        out["moments"][str(q)] = vals
    # (1/18) int_{e^3}^R dx / (x ln x) for the q = 1/2 tail
    out["tail_lower_bound"] = [max(0.0, math.log(t / 3.0) / 18) for t in cfg.log_radii]
    dump(out, cfg.output)


if __name__ == "__main__":
    main()
