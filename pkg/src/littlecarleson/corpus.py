"""Test functions built from small JSON-style descriptions.

Every function is supported in the torus (-1/2, 1/2) and zero elsewhere on (-2, 2).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .dyadic import Interval
from .errors import StructuralError
from .fourier import SampledFunction, from_cells
from .hausdorff_young import poisson_function
from .values import LP, SCALAR, SCHATTEN, Space

KINDS = ("constant", "character", "step", "random-schatten", "poisson")

DEFAULT_CORPUS = [
    {"id": "constant", "kind": "constant", "value": 24.0},
    {"id": "character", "kind": "character", "m": 3, "amplitude": 32.0},
    {"id": "step", "kind": "step", "space": {"kind": "lp", "d": 3, "p": 2.0},
     "lo": "-1/4", "hi": "1/8", "value": [[24.0, 0.0], [0.0, 12.0], [6.0, 0.0]]},
    {"id": "spike", "kind": "step", "lo": "1/16", "hi": "5/64", "value": 40.0},
    {"id": "schatten", "kind": "random-schatten", "d": 2, "p": 3.0, "blocks": 16, "scale": 8.0},
]


def _complex(v):
    """A number or a [re, im] pair; lists of those become arrays."""
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    if isinstance(v, list):
        return np.array([_complex(t) for t in v])
    raise StructuralError(f"cannot read a complex value from {v!r}")


def _space(entry: dict, default: Space) -> Space:
    s = entry.get("space")
    return Space.from_dict(s) if s else default


def build(entry: dict, n_cells: int, seed: int = 0) -> SampledFunction:
    """Sample one corpus entry on ``n_cells`` cells."""
    kind = entry.get("kind")
    name = entry.get("id", kind)
    if kind == "constant":
        space = _space(entry, Space(SCALAR))
        val = np.broadcast_to(_complex(entry.get("value", 1.0)), space.shape)
        return from_cells(space, n_cells, lambda x: np.broadcast_to(val, x.shape + space.shape), name)
    if kind == "character":
        m = int(entry.get("m", 1))
        amp = float(entry.get("amplitude", 1.0))
        return from_cells(Space(SCALAR), n_cells, lambda x: amp * np.exp(2j * np.pi * m * x), name)
    if kind == "step":
        space = _space(entry, Space(SCALAR))
        lo, hi = Fraction(entry.get("lo", "-1/2")), Fraction(entry.get("hi", "1/2"))
        val = np.broadcast_to(_complex(entry.get("value", 1.0)), space.shape)
        return from_cells(space, n_cells, lambda x: np.broadcast_to(val, x.shape + space.shape), name,
                          support=Interval(lo, hi))
    if kind == "random-schatten":
        d, p = int(entry.get("d", 2)), float(entry.get("p", 2.0))
        blocks = int(entry.get("blocks", 16))
        scale = float(entry.get("scale", 1.0))
        rng = np.random.default_rng([seed, int(entry.get("seed", 0))])
        mats = scale * (rng.standard_normal((blocks, d, d)) + 1j * rng.standard_normal((blocks, d, d)))
        space = Space(SCHATTEN, d, p)

        def fill(x):
            idx = np.minimum(((x + 0.5) * blocks).astype(int), blocks - 1)
            return mats[idx]

        return from_cells(space, n_cells, fill, name)
    if kind == "poisson":
        return poisson_function(float(entry.get("r", 0.5)), n_cells, name)
    raise StructuralError(f"unknown corpus kind {kind!r}; expected one of {KINDS}")


def build_corpus(entries, n_cells: int, seed: int = 0) -> list[SampledFunction]:
    return [build(e, n_cells, seed) for e in entries]


def validate_entry(entry: dict) -> None:
    if not isinstance(entry, dict) or entry.get("kind") not in KINDS:
        raise StructuralError(f"corpus entry {entry!r} needs a kind in {KINDS}")
    if entry["kind"] == "step":
        lo, hi = Fraction(entry.get("lo", "-1/2")), Fraction(entry.get("hi", "1/2"))
        if not -Fraction(1, 2) <= lo < hi <= Fraction(1, 2):
            raise StructuralError("step support must lie in the torus")
    if entry.get("space", {}).get("kind", LP) not in (SCALAR, LP, SCHATTEN):
        raise StructuralError("bad space kind")
