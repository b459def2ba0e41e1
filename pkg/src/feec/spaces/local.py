"""Exact bases of the polynomial form spaces on a single simplex."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from ..barycentric import LocalForm, enumerate_multiindices, wedge, whitney_form
from ..coords import monomial_index, pad, scalar_mean_row, top_integral_row, trace_matrix
from ..rational import independent_columns, nullspace, qzeros, solve_in_span
from .sequence import FULL, TRIMMED, SpaceTag

PLAIN = "plain"
RING = "ring"
UNDERLINE = "underline"
UNDERLINE_RING = "underline_ring"
VARIANTS = (PLAIN, RING, UNDERLINE, UNDERLINE_RING)


def space_degree(tag: SpaceTag) -> int:
    """Polynomial degree bound of the coefficients."""
    return max(tag.order, 0)


@dataclass(frozen=True, eq=False)
class LocalBasis:
    """Columns of ``matrix`` are basis forms in the monomial index MI(m, k, R)."""

    m: int
    k: int
    tag: SpaceTag
    variant: str
    matrix: np.ndarray
    labels: tuple | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def R(self) -> int:
        return space_degree(self.tag)

    def padded(self, R: int) -> np.ndarray:
        return pad(self.matrix, monomial_index(self.m, self.k, R).size)

    def forms(self) -> list[LocalForm]:
        idx = monomial_index(self.m, self.k, self.R)
        return [idx.form(self.matrix[:, j]) for j in range(self.dim)]

    def coordinates(self, vec: np.ndarray):
        """Exact coordinates of a monomial vector in this basis, or None if outside the span."""
        vec = np.asarray(vec, dtype=object)
        size = self.matrix.shape[0]
        if vec.shape[0] > size:
            if any(x != 0 for x in vec[size:].reshape(-1)):
                return None
            vec = vec[:size]
        else:
            vec = pad(vec, size)
        if self.dim == 0:
            return qzeros((0,) + vec.shape[1:]) if all(x == 0 for x in vec.reshape(-1)) else None
        return solve_in_span(self.matrix, vec)


@lru_cache(maxsize=None)
def _monomial(m: int, alpha: tuple[int, ...]) -> LocalForm:
    return LocalForm(m, 0, {(alpha, ()): 1})


def spanning_set(m: int, tag: SpaceTag, k: int) -> tuple[list[tuple], list[LocalForm]]:
    """Labels and forms of the defining spanning set (not independent in general)."""
    if k < 0 or k > m:
        return [], []
    r = tag.order
    labels, forms = [], []
    if tag.family == FULL:
        if r < 0:
            return [], []
        for alpha in enumerate_multiindices(r, m):
            mono = _monomial(m, alpha)
            for sigma in combinations(range(m + 1), k):
                labels.append((alpha, sigma))
                forms.append(LocalForm(m, k, {(alpha, sigma): 1}) if k else mono)
        return labels, forms
    if r < 1:
        return [], []
    for alpha in enumerate_multiindices(r - 1, m):
        mono = _monomial(m, alpha)
        for rho in combinations(range(m + 1), k + 1):
            labels.append((alpha, rho))
            forms.append(wedge(mono, _whitney(rho, m)))
    return labels, forms


@lru_cache(maxsize=None)
def _whitney(rho: tuple[int, ...], m: int) -> LocalForm:
    return whitney_form(rho, m)


@lru_cache(maxsize=None)
def _spanning_matrix(m: int, tag: SpaceTag, k: int) -> tuple[tuple, np.ndarray]:
    labels, forms = spanning_set(m, tag, k)
    idx = monomial_index(m, k, space_degree(tag))
    mat = qzeros((idx.size, len(forms)))
    for j, f in enumerate(forms):
        mat[:, j] = idx.vector(f)
    return tuple(labels), mat


@lru_cache(maxsize=None)
def local_basis(m: int, tag: SpaceTag, k: int, variant: str = PLAIN) -> LocalBasis:
    """Basis of the tagged space on an m-simplex in one of the four variants.

    ``plain`` keeps the first independent members of the spanning set (so each
    basis element is a spanning member with a label).  ``ring`` imposes zero
    traces on all facets; the underline variants remove the constants (k=0)
    or the volume form (k=m, ring) via a zero-integral constraint.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if k < 0 or k > m:
        raise ValueError(f"form degree {k} out of range for a {m}-simplex")
    R = space_degree(tag)
    if variant == PLAIN:
        labels, span = _spanning_matrix(m, tag, k)
        cols = independent_columns(span) if span.shape[1] else []
        return LocalBasis(m, k, tag, PLAIN, span[:, cols], tuple(labels[c] for c in cols))
    if variant == RING:
        plain = local_basis(m, tag, k, PLAIN)
        constraints = [trace_matrix(m, k, R, facet).dot(plain.matrix)
                       for facet in combinations(range(m + 1), m) if k <= m - 1 and m >= 1]
        return LocalBasis(m, k, tag, RING, _restrict(plain.matrix, constraints))
    if variant == UNDERLINE:
        plain = local_basis(m, tag, k, PLAIN)
        if k != 0:
            return LocalBasis(m, k, tag, UNDERLINE, plain.matrix, plain.labels)
        row = scalar_mean_row(m, R).reshape(1, -1).dot(plain.matrix)
        return LocalBasis(m, k, tag, UNDERLINE, _restrict(plain.matrix, [row]))
    ring = local_basis(m, tag, k, RING)
    if k != m:
        return LocalBasis(m, k, tag, UNDERLINE_RING, ring.matrix)
    row = top_integral_row(m, R).reshape(1, -1).dot(ring.matrix)
    return LocalBasis(m, k, tag, UNDERLINE_RING, _restrict(ring.matrix, [row]))


def _restrict(basis: np.ndarray, constraints: list[np.ndarray]) -> np.ndarray:
    if basis.shape[1] == 0 or not constraints:
        return basis
    system = np.vstack(constraints)
    kernel = nullspace(system)
    if kernel.shape[1] == 0:
        return qzeros((basis.shape[0], 0))
    return basis.dot(kernel)


def bubble_variant(k: int, m: int) -> str:
    """Interior block variant of an m-simplex at degree k in the geometric decomposition."""
    return UNDERLINE_RING if k == m else RING


def bubble_basis(m: int, tag: SpaceTag, k: int) -> LocalBasis:
    return local_basis(m, tag, k, bubble_variant(k, m))


def _binom(a: int, b: int) -> int:
    if b == 0:
        return 1
    if b < 0 or a < b:
        return 0
    return math.comb(a, b)


def dimension_formula(n: int, tag: SpaceTag, k: int, variant: str = PLAIN, printed: bool = False) -> int:
    """Closed-form dimension; ``printed`` selects the published ring/full formula."""
    if k < 0 or k > n:
        return 0
    r = tag.order
    if tag.family == TRIMMED and r < 1:
        return 0
    if tag.family == FULL and r < 0:
        return 0
    if variant in (PLAIN, UNDERLINE):
        if tag.family == FULL:
            d = _binom(n + r, n) * _binom(n, k)
        else:
            d = _binom(r + k - 1, k) * _binom(n + r, n - k)
        return d - 1 if variant == UNDERLINE and k == 0 else d
    if tag.family == FULL:
        d = _binom(r + 1, n - k) * _binom(r + k, k) if printed else _binom(r - 1, n - k) * _binom(r + k, k)
    else:
        d = _binom(n, k) * _binom(r + k - 1, n)
    if variant == UNDERLINE_RING and k == n:
        return max(d - 1, 0)
    return d
