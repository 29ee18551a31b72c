"""Run configuration shared by the library entry points and the CLI."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

DEFAULT_RADII = (8.0, 16.0, 32.0)


@dataclass(frozen=True)
class Tolerances:
    """Named numerical tolerances.

    Attributes
    ----------
    sat : float
        Relative saturation tolerance for the finiteness mask,
        ``G_R - G_R' <= sat * (1 + |G_R|)``.
    conv : float
        Absolute slack for discrete convexity checks.
    mass : float
        Relative slack for the full-mass flag.
    div : float
        Relative growth per refinement that counts as non-saturation.
    lelong : float
        Lelong numbers below this are reported as zero.
    P : float
        Inflation of the polytope when testing gradient containment.
    stab : float
        Relative tolerance for sup-type constants to count as stable in R.
    """

    sat: float = 1e-6
    conv: float = 1e-9
    mass: float = 1e-2
    div: float = 0.05
    lelong: float = 1e-2
    P: float = 1e-6
    stab: float = 1e-6

    def override(self, **kw):
        unknown = set(kw) - set(self.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tolerance names: {sorted(unknown)}")
        return replace(self, **kw)


@dataclass(frozen=True)
class RunConfig:
    """Grid and truncation settings.

    Parameters
    ----------
    grid_resolution : int, optional
        Number of dual-grid intervals across the polytope bounding box on
        each axis.  ``None`` selects 512 in one dimension and 256 otherwise.
    radii : tuple of float, optional
        Increasing truncation radii.  ``None`` lets the potential choose
        (most use ``DEFAULT_RADII``).
    primal_spacing : float, optional
        Uniform primal spacing on ``[-32, 32]``; geometric beyond.
        ``None`` selects 1/64 in one dimension and 1/32 otherwise.
    margin_cells : int
        Width, in dual cells, of the boundary layer excluded from
        interior-finiteness tests.
    """

    grid_resolution: int | None = None
    radii: tuple[float, ...] | None = None
    primal_spacing: float | None = None
    margin_cells: int = 2
    tol: Tolerances = field(default_factory=Tolerances)
    threads: int | None = None
    seed: int = 0
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.grid_resolution is not None and self.grid_resolution < 16:
            raise ValueError("grid_resolution must be at least 16")
        if self.radii is not None:
            r = tuple(float(v) for v in self.radii)
            if len(r) < 2 or any(b <= a for a, b in zip(r, r[1:])) or r[0] <= 0:
                raise ValueError("radii must be positive, strictly increasing, length >= 2")
            object.__setattr__(self, "radii", r)
        if self.format not in ("json", "csv"):
            raise ValueError("format must be 'json' or 'csv'")

    def resolution(self, n):
        if self.grid_resolution is not None:
            return self.grid_resolution
        return 512 if n == 1 else 256

    def spacing(self, n):
        if self.primal_spacing is not None:
            return self.primal_spacing
        return 1.0 / 64 if n == 1 else 1.0 / 32

    def with_(self, **kw):
        return replace(self, **kw)


def resolve_threads(requested=None):
    """Thread count from the argument, ``TORPOT_THREADS``, or the core count."""
    if requested is None:
        env = os.environ.get("TORPOT_THREADS")
        requested = int(env) if env else (os.cpu_count() or 1)
    if requested < 1:
        raise ValueError("thread count must be positive")
    return int(requested)
