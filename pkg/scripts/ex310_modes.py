"""Convergence-mode proxies for the ex310 family in the three parameter regimes."""
from __future__ import annotations

from dataclasses import dataclass

from _common import dump, parse_config

from torpot.metric import REGIMES, ex310_regime


@dataclass(frozen=True)
class ModesConfig:
    js: tuple = (2, 4, 8, 16, 32, 64)
    output: str = ""


def main():
    cfg = parse_config(ModesConfig, __doc__)
    dump({name: ex310_regime(name, cfg.js).to_dict() for name in REGIMES}, cfg.output)


if __name__ == "__main__":
    main()
