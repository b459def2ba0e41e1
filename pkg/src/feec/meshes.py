"""Reference meshes: builders and the bundled JSON fixtures."""
from __future__ import annotations

import json
import math
from fractions import Fraction
from importlib import resources

from .simplicial import Complex, build_complex

BUNDLED = ("two_triangles", "square", "disk", "annulus", "tet_fan")


def interval(N: int = 3) -> Complex:
    """[0,1] split into N equal segments."""
    return build_complex([(i, i + 1) for i in range(N)], [[Fraction(i, N)] for i in range(N + 1)])


def two_triangles() -> Complex:
    return build_complex([(0, 1, 2), (0, 2, 3)], [[0, 0], [1, 0], [1, 1], [0, 1]])


def unit_square(N: int = 2) -> Complex:
    """N x N grid on [0,1]^2, each square split along its (i,j)-(i+1,j+1) diagonal."""
    coords = [[Fraction(i, N), Fraction(j, N)] for j in range(N + 1) for i in range(N + 1)]

    def v(i, j):
        return j * (N + 1) + i

    cells = []
    for j in range(N):
        for i in range(N):
            cells.append((v(i, j), v(i + 1, j), v(i + 1, j + 1)))
            cells.append((v(i, j), v(i + 1, j + 1), v(i, j + 1)))
    return build_complex(cells, coords)


def disk() -> Complex:
    """Center, 6 vertices at radius 1/2, 12 on the unit circle; 24 triangles."""
    coords = [[0, 0]]
    coords += [[0.5 * math.cos(j * math.pi / 3), 0.5 * math.sin(j * math.pi / 3)] for j in range(6)]
    coords += [[math.cos(i * math.pi / 6), math.sin(i * math.pi / 6)] for i in range(12)]

    def a(j):
        return 1 + j % 6

    def b(i):
        return 7 + i % 12

    cells = [(0, a(j), a(j + 1)) for j in range(6)]
    for j in range(6):
        cells += [(a(j), b(2 * j), b(2 * j + 1)), (a(j), b(2 * j + 1), a(j + 1)), (a(j + 1), b(2 * j + 1), b(2 * j + 2))]
    return build_complex(cells, coords)


def annulus() -> Complex:
    """Square annulus between the diamonds |x|+|y| = 1 and |x|+|y| = 2; 8 triangles."""
    outer = [[2, 0], [0, 2], [-2, 0], [0, -2]]
    inner = [[1, 0], [0, 1], [-1, 0], [0, -1]]
    cells = []
    for j in range(4):
        o0, o1, i0, i1 = j, (j + 1) % 4, 4 + j, 4 + (j + 1) % 4
        cells += [(o0, o1, i0), (o1, i1, i0)]
    return build_complex(cells, outer + inner)


def tet_fan() -> Complex:
    """Four tetrahedra around the segment (0,0,0)-(0,0,1)."""
    half = Fraction(1, 2)
    ring = [[1, 0, half], [0, 1, half], [-1, 0, half], [0, -1, half]]
    cells = [(0, 1, 2 + j, 2 + (j + 1) % 4) for j in range(4)]
    return build_complex(cells, [[0, 0, 0], [0, 0, 1]] + ring)


def mesh_to_json(c: Complex, **extra) -> dict:
    def enc(x):
        if isinstance(x, int):
            return x
        if isinstance(x, Fraction) or hasattr(x, "denominator"):
            return int(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
        return float(x)

    boundary = sorted(s for s in c.boundary if not any(set(s) < set(t) for t in c.boundary))
    out = {"vertices": [[enc(x) for x in p] for p in c.coords], "cells": [list(s) for s in c.cells],
           "boundary": [list(s) for s in boundary]}
    out.update(extra)
    return out


def mesh_from_json(data: dict) -> Complex:
    """Mesh JSON: vertices (numbers or "p/q" strings), 0-based cells, boundary "auto" | null | facet list."""
    try:
        vertices, cells = data["vertices"], data["cells"]
    except (KeyError, TypeError):
        raise ValueError("mesh JSON needs 'vertices' and 'cells'") from None
    return build_complex(cells, vertices, data.get("boundary", "auto"))


def load_bundled(name: str) -> Complex:
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled mesh {name!r}; choose from {', '.join(BUNDLED)}")
    text = resources.files("feec").joinpath("data", f"{name}.json").read_text()
    return mesh_from_json(json.loads(text))


def bundled_metadata(name: str) -> dict:
    text = resources.files("feec").joinpath("data", f"{name}.json").read_text()
    data = json.loads(text)
    return {k: v for k, v in data.items() if k not in ("vertices", "cells", "boundary")}
