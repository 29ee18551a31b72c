"""Shared helpers for the experiment scripts."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path


def parse_config(cls, description):
    """Build ``cls`` from command-line flags named after its fields."""
    parser = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            parser.add_argument(f"--{f.name.replace('_', '-')}", type=kind, nargs="+",
                                default=default)
        else:
            parser.add_argument(f"--{f.name.replace('_', '-')}", type=type(default),
                                default=default)
    args = parser.parse_args()
    values = {f.name: getattr(args, f.name) for f in dataclasses.fields(cls)}
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    return cls(**values)


def dump(payload, output):
    text = json.dumps(payload, indent=2, sort_keys=True, default=float)
    if output:
        Path(output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
