"""Coordinate vectors for local forms and cached operator matrices.

A k-form of polynomial degree <= R on an n-simplex is a vector over the
monomials ``x^β dx_σ`` (``x_i = λ_i`` for i >= 1, ``σ ⊆ {1..n}``).  The
ordering is graded in ``|β|`` and β-major, so the index for degree R is a
prefix of the index for any larger degree and vectors can be zero-padded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable

import numpy as np

from .barycentric import (
    Alternator,
    LocalForm,
    MultiIndex,
    SimplexGeometry,
    _det_exact,
    exterior_derivative,
    multiindex_up_to,
    reference_integral,
    trace,
)
from .rational import ONE, qzeros


@dataclass(frozen=True, eq=False)
class MonomialIndex:
    n: int
    k: int
    R: int
    keys: tuple[tuple[MultiIndex, Alternator], ...]
    position: dict

    @property
    def size(self) -> int:
        return len(self.keys)

    @property
    def alternators(self) -> list[Alternator]:
        return list(combinations(range(1, self.n + 1), self.k))

    def vector(self, form: LocalForm) -> np.ndarray:
        if form.n != self.n or form.k != self.k:
            raise ValueError(f"form (n={form.n},k={form.k}) does not match index (n={self.n},k={self.k})")
        out = qzeros(self.size)
        for key, c in form.terms.items():
            pos = self.position.get(key)
            if pos is None:
                raise ValueError(f"form has degree {form.degree} > {self.R}")
            out[pos] = c
        return out

    def form(self, vec) -> LocalForm:
        terms = {}
        for pos, c in enumerate(vec):
            if c != 0:
                terms[self.keys[pos]] = c
        return LocalForm._trusted(self.n, self.k, terms)


@lru_cache(maxsize=None)
def monomial_index(n: int, k: int, R: int) -> MonomialIndex:
    sigmas = list(combinations(range(1, n + 1), k)) if 0 <= k <= n else []
    keys = tuple((alpha, s) for alpha in multiindex_up_to(max(R, 0), n) for s in sigmas)
    return MonomialIndex(n, k, R, keys, {key: i for i, key in enumerate(keys)})


def pad(vec: np.ndarray, size: int) -> np.ndarray:
    """Zero-pad coordinate vectors (or column blocks) to a larger degree index."""
    vec = np.asarray(vec)
    if vec.shape[0] == size:
        return vec
    if vec.shape[0] > size:
        raise ValueError("cannot pad to a smaller index")
    extra = (size - vec.shape[0],) + vec.shape[1:]
    filler = qzeros(extra) if vec.dtype == object else np.zeros(extra)
    return np.concatenate([vec, filler], axis=0)


def operator_matrix(src: MonomialIndex, dst: MonomialIndex, op: Callable[[LocalForm], LocalForm]) -> np.ndarray:
    out = qzeros((dst.size, src.size))
    for j, (alpha, sigma) in enumerate(src.keys):
        image = op(LocalForm._trusted(src.n, src.k, {(alpha, sigma): ONE}))
        for key, c in image.terms.items():
            out[dst.position[key], j] = c
    return out


@lru_cache(maxsize=None)
def d_matrix(n: int, k: int, R: int) -> np.ndarray:
    """Exterior derivative MI(n,k,R) -> MI(n,k+1,R)."""
    return operator_matrix(monomial_index(n, k, R), monomial_index(n, k + 1, R), exterior_derivative)


@lru_cache(maxsize=None)
def trace_matrix(n: int, k: int, R: int, face: Alternator) -> np.ndarray:
    """Trace onto the face given by vertex positions; MI(n,k,R) -> MI(|face|-1,k,R)."""
    m = len(face) - 1
    return operator_matrix(monomial_index(n, k, R), monomial_index(m, k, R), lambda w: trace(w, face))


@lru_cache(maxsize=None)
def top_integral_row(n: int, R: int) -> np.ndarray:
    """Row vector of ∫_T over MI(n,n,R) (metric-free, vertex-order orientation)."""
    idx = monomial_index(n, n, R)
    row = qzeros(idx.size)
    for j, (alpha, _) in enumerate(idx.keys):
        row[j] = reference_integral(alpha)
    return row


@lru_cache(maxsize=None)
def scalar_mean_row(n: int, R: int) -> np.ndarray:
    """Row vector proportional to ∫_T ω for 0-forms (reference-normalized)."""
    idx = monomial_index(n, 0, R)
    row = qzeros(idx.size)
    for j, (alpha, _) in enumerate(idx.keys):
        row[j] = reference_integral(alpha)
    return row


@lru_cache(maxsize=None)
def _monomial_moments(n: int, R: int) -> np.ndarray:
    """A_ij = n! ∫ x^{β_i+β_j} on the reference simplex, exact."""
    betas = multiindex_up_to(R, n)
    size = len(betas)
    out = qzeros((size, size))
    fact = math.factorial(n)
    for i, a in enumerate(betas):
        for j in range(i, size):
            b = betas[j]
            v = fact * reference_integral(tuple(x + y for x, y in zip(a, b)))
            out[i, j] = v
            out[j, i] = v
    return out


@lru_cache(maxsize=None)
def _monomial_moments_float(n: int, R: int) -> np.ndarray:
    return _monomial_moments(n, R).astype(float)


def metric_minors(geom: SimplexGeometry, k: int, exact: bool = False) -> np.ndarray:
    n = geom.dim
    sigmas = list(combinations(range(1, n + 1), k))
    gram = geom.gram if exact else np.asarray(geom.gram, dtype=float)
    size = len(sigmas)
    out = qzeros((size, size)) if exact else np.zeros((size, size))
    for i, s in enumerate(sigmas):
        for j, t in enumerate(sigmas):
            if k == 0:
                out[i, j] = ONE if exact else 1.0
            elif exact:
                out[i, j] = _det_exact(gram[np.ix_(s, t)])
            else:
                out[i, j] = np.linalg.det(gram[np.ix_(s, t)])
    return out


def mass_matrix(geom: SimplexGeometry, k: int, R: int, exact: bool = False) -> np.ndarray:
    """L² Gram matrix of MI(n,k,R) on the simplex under the embedding metric."""
    cache = _geometry_cache(geom)
    key = ("mass", k, R, exact)
    if key in cache:
        return cache[key]
    n = geom.dim
    if exact:
        if not geom.exact or isinstance(geom.volume, float):
            raise ValueError("exact mass matrix needs rational geometry and volume")
        a = _monomial_moments(n, R)
        g = metric_minors(geom, k, exact=True)
        out = np.kron(a, g) * geom.volume
    else:
        a = _monomial_moments_float(n, R)
        g = metric_minors(geom, k, exact=False)
        out = np.kron(a, g) * float(geom.volume)
    cache[key] = out
    return out


def _geometry_cache(geom: SimplexGeometry) -> dict:
    cache = geom.__dict__.get("_cache")
    if cache is None:
        cache = {}
        object.__setattr__(geom, "_cache", cache)
    return cache


def evaluate(vec, index: MonomialIndex, bary: np.ndarray) -> np.ndarray:
    """Components along dλ_σ (σ ⊆ {1..n}) at barycentric points; shape (P, C(n,k))."""
    bary = np.asarray(bary, dtype=float)
    sigmas = index.alternators
    col = {s: i for i, s in enumerate(sigmas)}
    out = np.zeros((bary.shape[0], len(sigmas)))
    vec = np.asarray(vec)
    for pos, (alpha, sigma) in enumerate(index.keys):
        c = float(vec[pos])
        if c == 0.0:
            continue
        out[:, col[sigma]] += c * np.prod(bary ** np.asarray(alpha, dtype=float), axis=1)
    return out
