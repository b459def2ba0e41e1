"""Simplicial complexes, relative chains, boundary operators and Betti numbers.

Every simplex is a strictly increasing tuple of vertex IDs and is oriented
by that order.  The boundary incidence o(F, T) is (-1)^i where i is the
position of the vertex of T omitted in F.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .barycentric import SimplexGeometry
from .linear import LinearMap
from .rational import SparseQ

Simplex = tuple[int, ...]


class ComplexError(ValueError):
    pass


@dataclass(eq=False)
class Complex:
    coords: list
    simplices: dict[int, list[Simplex]]
    boundary: frozenset
    _index: dict = field(default_factory=dict, repr=False)
    _star: dict = field(default_factory=dict, repr=False)
    _geometry: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for k, simps in self.simplices.items():
            for i, s in enumerate(simps):
                self._index[s] = i
        for cell in self.cells:
            for m in range(len(cell)):
                for face in combinations(cell, m + 1):
                    self._star.setdefault(face, []).append(cell)

    @property
    def dim(self) -> int:
        return max(self.simplices)

    @property
    def ambient_dim(self) -> int:
        return len(self.coords[0])

    @property
    def cells(self) -> list[Simplex]:
        return self.simplices[self.dim]

    def index(self, simplex: Simplex) -> int:
        return self._index[tuple(simplex)]

    def __contains__(self, simplex) -> bool:
        return tuple(simplex) in self._index

    def star(self, simplex: Simplex) -> list[Simplex]:
        """Top cells containing the simplex, in canonical order."""
        return self._star[tuple(simplex)]

    def in_boundary(self, simplex: Simplex) -> bool:
        return tuple(simplex) in self.boundary

    def interior(self, k: int) -> list[Simplex]:
        """k-simplices not in the boundary subcomplex U."""
        return [s for s in self.simplices.get(k, []) if s not in self.boundary]

    def all_simplices(self) -> list[Simplex]:
        return [s for k in sorted(self.simplices) for s in self.simplices[k]]

    def geometry(self, simplex: Simplex) -> SimplexGeometry:
        simplex = tuple(simplex)
        geom = self._geometry.get(simplex)
        if geom is None:
            geom = SimplexGeometry.from_points([self.coords[v] for v in simplex])
            self._geometry[simplex] = geom
        return geom

    def with_boundary(self, boundary) -> "Complex":
        return Complex(self.coords, self.simplices, frozenset(_close(boundary)))

    def without_boundary(self) -> "Complex":
        return Complex(self.coords, self.simplices, frozenset())

    def relabeled(self, permutation: Sequence[int]) -> "Complex":
        """Same complex with vertex v renamed permutation[v]."""
        coords = [None] * len(self.coords)
        for v, p in enumerate(permutation):
            coords[p] = self.coords[v]
        cells = [tuple(sorted(permutation[v] for v in c)) for c in self.cells]
        bnd = [tuple(sorted(permutation[v] for v in s)) for s in self.boundary]
        return build_complex(cells, coords, boundary=bnd)


def _close(simplices: Iterable[Simplex]) -> set[Simplex]:
    out = set()
    for s in simplices:
        s = tuple(sorted(s))
        for m in range(len(s)):
            out.update(combinations(s, m + 1))
    return out


def _normalize_coord(x):
    # dyadic floats are exact; keep them rational so geometry stays exact
    if isinstance(x, float):
        if x.is_integer():
            return int(x)
        num, den = x.as_integer_ratio()
        if den <= 2**20:
            return Fraction(num, den)
    if isinstance(x, str):
        return Fraction(x)
    return x


def build_complex(cells, coords, boundary="auto") -> Complex:
    """Generate all subsimplices, validate the input and mark the boundary subcomplex."""
    cells = [tuple(int(v) for v in c) for c in cells]
    if not cells:
        raise ComplexError("no cells given")
    coords = [[_normalize_coord(x) for x in p] for p in coords]
    if not coords or len({len(p) for p in coords}) != 1:
        raise ComplexError("vertex coordinates must all have the same dimension")
    sizes = {len(c) for c in cells}
    if len(sizes) != 1:
        raise ComplexError(f"inconsistent cell dimension: cells have {sorted(sizes)} vertices")
    n = sizes.pop() - 1
    used = set()
    for c in cells:
        if len(set(c)) != len(c):
            raise ComplexError(f"cell {list(c)} repeats a vertex")
        for v in c:
            if not 0 <= v < len(coords):
                raise ComplexError(f"cell {list(c)} references vertex {v}, but only {len(coords)} vertices exist")
        used.update(c)
    if len(used) != len(coords):
        missing = sorted(set(range(len(coords))) - used)
        raise ComplexError(f"vertices {missing} are not used by any cell")
    sorted_cells = sorted({tuple(sorted(c)) for c in cells})
    if len(sorted_cells) != len(cells):
        raise ComplexError("duplicate cells")
    simplices: dict[int, set[Simplex]] = {m: set() for m in range(n + 1)}
    for c in sorted_cells:
        for m in range(n + 1):
            simplices[m].update(combinations(c, m + 1))
    ordered = {m: sorted(s) for m, s in simplices.items()}
    if n > len(coords[0]):
        raise ComplexError(f"{n}-cells cannot be embedded in R^{len(coords[0])}")
    for c in sorted_cells:
        try:
            SimplexGeometry.from_points([coords[v] for v in c])
        except ValueError as exc:
            raise ComplexError(f"cell {list(c)}: {exc}") from None
    facet_cells: dict[Simplex, list[Simplex]] = {}
    if n >= 1:
        for c in sorted_cells:
            for f in combinations(c, n):
                facet_cells.setdefault(f, []).append(c)
        if n == len(coords[0]):
            _check_embedding(facet_cells, coords)
    if isinstance(boundary, str):
        if boundary != "auto":
            raise ComplexError(f"unknown boundary mode {boundary!r}")
        marked = [f for f, cs in facet_cells.items() if len(cs) == 1] if n >= 1 else []
    elif boundary is None:
        marked = []
    else:
        marked = [tuple(sorted(int(v) for v in s)) for s in boundary]
        all_simplices = {s for ss in simplices.values() for s in ss}
        for s in marked:
            if s not in all_simplices:
                raise ComplexError(f"boundary simplex {list(s)} is not in the complex")
    return Complex(coords, ordered, frozenset(_close(marked)))


def _check_embedding(facet_cells, coords) -> None:
    """Top cells sharing a facet must lie on opposite sides of it (no overlaps)."""
    for f, cs in facet_cells.items():
        if len(cs) > 2:
            raise ComplexError(f"facet {list(f)} is shared by {len(cs)} cells")
        if len(cs) == 2:
            sides = []
            for c in cs:
                apex = next(v for v in c if v not in f)
                pts = np.array([coords[v] for v in f] + [coords[apex]], dtype=float)
                sides.append(np.sign(np.linalg.det(pts[1:] - pts[0])))
            if sides[0] == sides[1]:
                raise ComplexError(f"cells {list(cs[0])} and {list(cs[1])} overlap across facet {list(f)}")


def incidence(face: Simplex, simplex: Simplex) -> int:
    """o(F, T) for a facet F of T."""
    omitted = [i for i, v in enumerate(simplex) if v not in face]
    if len(omitted) != 1 or len(face) != len(simplex) - 1:
        raise ValueError(f"{face} is not a facet of {simplex}")
    return -1 if omitted[0] % 2 else 1


def chain_basis(c: Complex, k: int, relative: bool) -> list[Simplex]:
    return c.interior(k) if relative else list(c.simplices.get(k, []))


def boundary_matrix(c: Complex, k: int, relative: bool = False) -> LinearMap:
    """∂_k : C_k(T,U) -> C_{k-1}(T,U) in canonical simplex order."""
    if not 1 <= k <= c.dim:
        raise ValueError(f"boundary degree {k} out of range 1..{c.dim}")
    cols = chain_basis(c, k, relative)
    rows = chain_basis(c, k - 1, relative)
    row_pos = {s: i for i, s in enumerate(rows)}
    mat = SparseQ((len(rows), len(cols)))
    for j, s in enumerate(cols):
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            if face in row_pos:
                mat.set(row_pos[face], j, (-1) ** i)
    return LinearMap(mat, tuple(rows), tuple(cols))


def betti_numbers(c: Complex, relative: bool = False) -> list[int]:
    """b_k = dim ker ∂_k − rank ∂_{k+1}, exact ranks."""
    ranks = {k: boundary_matrix(c, k, relative).exact_rank() for k in range(1, c.dim + 1)}
    out = []
    for k in range(c.dim + 1):
        size = len(chain_basis(c, k, relative))
        out.append(size - ranks.get(k, 0) - ranks.get(k + 1, 0))
    return out


def euler_characteristic(c: Complex, relative: bool = False) -> int:
    return sum((-1) ** k * len(chain_basis(c, k, relative)) for k in range(c.dim + 1))


@dataclass
class Chain:
    k: int
    coefficients: dict[Simplex, float]

    def boundary(self, c: Complex, relative: bool = False) -> "Chain":
        if self.k == 0:
            return Chain(-1, {})
        out: dict[Simplex, float] = {}
        for s, v in self.coefficients.items():
            if relative and c.in_boundary(s):
                continue
            for i in range(len(s)):
                face = s[:i] + s[i + 1:]
                if relative and c.in_boundary(face):
                    continue
                out[face] = out.get(face, 0) + (-1) ** i * v
        return Chain(self.k - 1, {f: v for f, v in out.items() if v != 0})
