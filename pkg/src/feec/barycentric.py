"""Polynomial differential forms on a single simplex, in barycentric coordinates.

A form on an n-simplex is stored over the monomials ``λ^α dλ_σ`` with
``α(0) = 0`` and ``σ ⊆ {1..n}``.  Eliminating ``λ_0 = 1 - Σ λ_i`` and
``dλ_0 = -Σ dλ_i`` makes the representation unique, so forms compare by
their term dictionaries.  All coefficients are exact rationals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Mapping

import numpy as np
from gmpy2 import mpq

from .rational import ONE, ZERO, as_rational

MultiIndex = tuple[int, ...]
Alternator = tuple[int, ...]
Term = tuple[MultiIndex, Alternator]


def enumerate_multiindices(r: int, n: int) -> list[MultiIndex]:
    """All multiindices of length n+1 with absolute value r, first entry descending."""
    if r < 0 or n < 0:
        return []
    if n == 0:
        return [(r,)]
    out = []
    for first in range(r, -1, -1):
        out.extend((first,) + rest for rest in enumerate_multiindices(r - first, n - 1))
    return out


def enumerate_alternators(k: int, n: int, lower: int = 1) -> list[Alternator]:
    """Strictly increasing maps {lower..k} -> {0..n}, as tuples, in lexicographic order."""
    length = k - lower + 1
    if length < 0:
        return []
    return list(combinations(range(n + 1), length))


def multiindex_up_to(degree: int, n: int) -> list[MultiIndex]:
    """Canonical monomials (first entry 0) of total degree <= degree, graded then descending."""
    if n == 0:
        return [(0,)]
    out = []
    for d in range(degree + 1):
        out.extend((0,) + rest for rest in enumerate_multiindices(d, n - 1))
    return out


def _sort_with_sign(indices: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    seq = list(indices)
    if len(set(seq)) != len(seq):
        return 0, ()
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return sign, tuple(seq)


@lru_cache(maxsize=None)
def _lambda0_power(n: int, a: int) -> tuple[tuple[MultiIndex, int], ...]:
    """Expansion of λ_0^a = (1 - λ_1 - ... - λ_n)^a over canonical monomials."""
    out = []
    for total in range(a + 1):
        for gamma in (enumerate_multiindices(total, n - 1) if n > 0 else [()]):
            if n == 0 and total > 0:
                continue
            coeff = math.factorial(a) // (math.factorial(a - total) * math.prod(math.factorial(g) for g in gamma))
            out.append(((0,) + tuple(gamma), (-1) ** total * coeff))
    return tuple(out)


def _normalize_alternator(n: int, sigma: tuple[int, ...]) -> list[tuple[int, Alternator]]:
    sign, s = _sort_with_sign(sigma)
    if sign == 0:
        return []
    if not s or s[0] != 0:
        return [(sign, s)]
    rest = s[1:]
    out = []
    for i in range(1, n + 1):
        if i in rest:
            continue
        sg, t = _sort_with_sign((i,) + rest)
        out.append((-sign * sg, t))
    return out


def _add_into(acc: dict, key, value) -> None:
    v = acc.get(key, ZERO) + value
    if v == 0:
        acc.pop(key, None)
    else:
        acc[key] = v


def normalize(n: int, raw: Iterable[tuple[MultiIndex, tuple[int, ...], object]]) -> dict[Term, mpq]:
    """Canonical term dictionary from arbitrary barycentric terms (α, σ, c)."""
    acc: dict[Term, mpq] = {}
    for alpha, sigma, coeff in raw:
        c = as_rational(coeff)
        if c == 0:
            continue
        if len(alpha) != n + 1:
            raise ValueError(f"multiindex {alpha} does not have length {n + 1}")
        alts = _normalize_alternator(n, tuple(sigma))
        if not alts:
            continue
        if alpha[0] == 0:
            polys = [(tuple(alpha), 1)]
        else:
            polys = [
                (tuple(a + b for a, b in zip((0,) + tuple(alpha[1:]), gamma)), g)
                for gamma, g in _lambda0_power(n, alpha[0])
            ]
        for s_sign, s in alts:
            for beta, g in polys:
                _add_into(acc, (beta, s), c * s_sign * g)
    return acc


@dataclass(frozen=True, eq=False)
class LocalForm:
    """A polynomial k-form on an n-simplex in canonical barycentric form."""

    n: int
    k: int
    terms: Mapping[Term, mpq] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.k:
            raise ValueError("form degree must be non-negative")
        clean = normalize(self.n, ((a, s, c) for (a, s), c in dict(self.terms).items()))
        for (_, s) in clean:
            if len(s) != self.k:
                raise ValueError(f"alternator {s} does not have degree {self.k}")
        object.__setattr__(self, "terms", clean)

    @classmethod
    def _trusted(cls, n: int, k: int, terms: dict[Term, mpq]) -> "LocalForm":
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "k", k)
        object.__setattr__(obj, "terms", terms)
        return obj

    @classmethod
    def zero(cls, n: int, k: int) -> "LocalForm":
        return cls._trusted(n, k, {})

    @classmethod
    def constant(cls, n: int, value=1) -> "LocalForm":
        return cls(n, 0, {((0,) * (n + 1), ()): value})

    @classmethod
    def monomial(cls, alpha: MultiIndex, sigma: Alternator = (), coeff=1) -> "LocalForm":
        n = len(alpha) - 1
        return cls(n, len(sigma), {(tuple(alpha), tuple(sigma)): coeff})

    @classmethod
    def coordinate(cls, n: int, i: int) -> "LocalForm":
        alpha = [0] * (n + 1)
        alpha[i] = 1
        return cls.monomial(tuple(alpha))

    @classmethod
    def differential(cls, n: int, i: int) -> "LocalForm":
        """dλ_i on the n-simplex."""
        return cls.monomial((0,) * (n + 1), (i,))

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        """Polynomial degree of the coefficients (-1 for the zero form)."""
        return max((sum(a) for a, _ in self.terms), default=-1)

    def _check(self, other: "LocalForm") -> None:
        if not isinstance(other, LocalForm):
            raise TypeError("expected a LocalForm")
        if other.n != self.n or other.k != self.k:
            raise ValueError(f"mismatched forms: (n={self.n},k={self.k}) vs (n={other.n},k={other.k})")

    def __add__(self, other: "LocalForm") -> "LocalForm":
        self._check(other)
        acc = dict(self.terms)
        for key, v in other.terms.items():
            _add_into(acc, key, v)
        return LocalForm._trusted(self.n, self.k, acc)

    def __neg__(self) -> "LocalForm":
        return LocalForm._trusted(self.n, self.k, {key: -v for key, v in self.terms.items()})

    def __sub__(self, other: "LocalForm") -> "LocalForm":
        return self + (-other)

    def __mul__(self, scalar) -> "LocalForm":
        if isinstance(scalar, LocalForm):
            return wedge(self, scalar)
        c = as_rational(scalar)
        if c == 0:
            return LocalForm.zero(self.n, self.k)
        return LocalForm._trusted(self.n, self.k, {key: c * v for key, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalForm):
            return NotImplemented
        return self.n == other.n and self.k == other.k and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.k, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return f"LocalForm(n={self.n}, k={self.k}, 0)"
        parts = []
        for (alpha, sigma), c in sorted(self.terms.items()):
            mono = "".join(f"λ{i}^{a}" if a > 1 else f"λ{i}" for i, a in enumerate(alpha) if a)
            alt = "∧".join(f"dλ{i}" for i in sigma)
            parts.append(f"{c}" + (f"·{mono}" if mono else "") + (f"·{alt}" if alt else ""))
        return f"LocalForm(n={self.n}, k={self.k}, " + " + ".join(parts) + ")"


def wedge(omega: LocalForm, eta: LocalForm) -> LocalForm:
    """Exterior product; zero when the degrees exceed the simplex dimension."""
    if omega.n != eta.n:
        raise ValueError(f"wedge of forms on different simplices (n={omega.n} vs n={eta.n})")
    n = omega.n
    k = omega.k + eta.k
    acc: dict[Term, mpq] = {}
    if k > n:
        return LocalForm.zero(n, k)
    for (a, s), c in omega.terms.items():
        for (b, t), e in eta.terms.items():
            sign, u = _sort_with_sign(s + t)
            if sign == 0:
                continue
            _add_into(acc, (tuple(x + y for x, y in zip(a, b)), u), sign * c * e)
    return LocalForm._trusted(n, k, acc)


def exterior_derivative(omega: LocalForm) -> LocalForm:
    n, k = omega.n, omega.k
    acc: dict[Term, mpq] = {}
    if k >= n:
        return LocalForm.zero(n, k + 1)
    for (alpha, sigma), c in omega.terms.items():
        for i in range(1, n + 1):
            if alpha[i] == 0 or i in sigma:
                continue
            sign, s = _sort_with_sign((i,) + sigma)
            lowered = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
            _add_into(acc, (lowered, s), c * alpha[i] * sign)
    return LocalForm._trusted(n, k + 1, acc)


def whitney_form(rho: Alternator, n: int) -> LocalForm:
    """φ_ρ = Σ_i (-1)^i λ_{ρ(i)} dλ_{ρ without ρ(i)} on the n-simplex."""
    rho = tuple(rho)
    if list(rho) != sorted(set(rho)) or (rho and (rho[0] < 0 or rho[-1] > n)):
        raise ValueError(f"{rho} is not a strictly increasing map into 0..{n}")
    k = len(rho) - 1
    raw = []
    for i, v in enumerate(rho):
        alpha = [0] * (n + 1)
        alpha[v] = 1
        raw.append((tuple(alpha), rho[:i] + rho[i + 1:], (-1) ** i))
    return LocalForm._trusted(n, k, normalize(n, raw))


def lift_index(face: Alternator, local: int) -> int:
    return face[local]


def trace(omega: LocalForm, face: Alternator) -> LocalForm:
    """Pullback of ω to the subsimplex whose vertices (positions in the parent) are ``face``."""
    face = tuple(face)
    n = omega.n
    if list(face) != sorted(set(face)) or not face or face[0] < 0 or face[-1] > n:
        raise ValueError(f"{face} is not a face of the {n}-simplex")
    m = len(face) - 1
    if omega.k > m:
        return LocalForm.zero(m, omega.k)
    position = {v: p for p, v in enumerate(face)}
    raw = []
    for (alpha, sigma), c in omega.terms.items():
        if any(alpha[i] and i not in position for i in range(1, n + 1)):
            continue
        if any(i not in position for i in sigma):
            continue
        beta = [0] * (m + 1)
        for i in range(1, n + 1):
            if alpha[i]:
                beta[position[i]] += alpha[i]
        raw.append((tuple(beta), tuple(position[i] for i in sigma), c))
    return LocalForm._trusted(m, omega.k, normalize(m, raw))


@dataclass(frozen=True, eq=False)
class SimplexGeometry:
    """Affine embedding of an m-simplex into R^N.

    ``gram[i, j] = <∇λ_i, ∇λ_j>`` for i, j in 0..m.  When the vertices are
    rational the Gram matrix is exact; the volume is exact whenever it is
    rational, otherwise a float.
    """

    points: np.ndarray
    gram: np.ndarray
    volume: object
    exact: bool

    @property
    def dim(self) -> int:
        return self.points.shape[0] - 1

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points, exact: bool | None = None) -> "SimplexGeometry":
        pts = np.array(points, dtype=object)
        if pts.ndim != 2:
            raise ValueError("points must be a (m+1) x N array")
        m = pts.shape[0] - 1
        if exact is None:
            exact = all(not isinstance(x, (float, np.floating)) for x in pts.reshape(-1))
        if exact:
            q = np.vectorize(as_rational, otypes=[object])(pts) if pts.size else pts
            edges = (q[1:] - q[0]).T if m > 0 else np.zeros((pts.shape[1], 0), dtype=object)
            metric = edges.T.dot(edges) if m > 0 else np.zeros((0, 0), dtype=object)
            from .rational import inverse

            det = _det_exact(metric) if m > 0 else ONE
            if det == 0:
                raise ValueError("degenerate simplex (volume 0)")
            inv = inverse(metric) if m > 0 else metric
            vol_sq = det / mpq(math.factorial(m) ** 2)
            volume = _exact_sqrt(vol_sq)
            if volume is None:
                volume = math.sqrt(float(vol_sq))
            gram = _full_gram(inv, m, exact=True)
            return cls(q, gram, volume, True)
        f = pts.astype(float)
        edges = (f[1:] - f[0]).T
        metric = edges.T @ edges if m > 0 else np.zeros((0, 0))
        det = np.linalg.det(metric) if m > 0 else 1.0
        scale = max(1.0, float(np.max(np.abs(metric)))) if m > 0 else 1.0
        if m > 0 and det <= 1e-14 * scale**m:
            raise ValueError("degenerate simplex (volume 0)")
        inv = np.linalg.inv(metric) if m > 0 else metric
        gram = _full_gram(inv, m, exact=False)
        return cls(f, gram, math.sqrt(det) / math.factorial(m), False)

    def gradients(self) -> np.ndarray:
        """Rows are ∇λ_i (i = 0..m) as vectors in R^N, in floats."""
        f = np.asarray(self.points, dtype=float)
        m = self.dim
        if m == 0:
            return np.zeros((1, f.shape[1]))
        edges = (f[1:] - f[0]).T
        pinv = np.linalg.pinv(edges)
        return np.vstack([-pinv.sum(axis=0), pinv])

    def orientation(self) -> int:
        """Sign of the vertex ordering relative to R^N; only defined when m = N."""
        if self.dim != self.ambient_dim:
            raise ValueError("orientation needs a full-dimensional simplex")
        if self.exact:
            det = _det_exact((self.points[1:] - self.points[0]).T)
        else:
            f = np.asarray(self.points, dtype=float)
            det = np.linalg.det((f[1:] - f[0]).T)
        return 1 if det > 0 else -1


def _full_gram(inv_metric, m: int, exact: bool) -> np.ndarray:
    size = m + 1
    if exact:
        g = np.empty((size, size), dtype=object)
        g.fill(ZERO)
    else:
        g = np.zeros((size, size))
    if m == 0:
        return g
    g[1:, 1:] = inv_metric
    g[0, 1:] = -inv_metric.sum(axis=0)
    g[1:, 0] = -inv_metric.sum(axis=1)
    g[0, 0] = inv_metric.sum()
    return g


def _det_exact(a: np.ndarray):
    a = np.array(a, dtype=object, copy=True)
    n = a.shape[0]
    det = ONE
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i, c] != 0), None)
        if piv is None:
            return ZERO
        if piv != c:
            a[[c, piv]] = a[[piv, c]]
            det = -det
        det *= a[c, c]
        for i in range(c + 1, n):
            if a[i, c] != 0:
                a[i] = a[i] - (a[i, c] / a[c, c]) * a[c]
    return det


def _exact_sqrt(x: mpq):
    num, den = int(x.numerator), int(x.denominator)
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return mpq(rn, rd)
    return None


def reference_integral(alpha: MultiIndex) -> mpq:
    """∫ λ^α over the simplex divided by (n! vol): Π α_i! / (|α| + n)!."""
    n = len(alpha) - 1
    return mpq(math.prod(math.factorial(a) for a in alpha), math.factorial(sum(alpha) + n))


def integrate_monomial(alpha: MultiIndex, geom: SimplexGeometry):
    n = len(alpha) - 1
    if n != geom.dim:
        raise ValueError("multiindex length does not match the simplex dimension")
    if geom.volume == 0:
        raise ValueError("degenerate simplex (volume 0)")
    return math.factorial(n) * geom.volume * reference_integral(tuple(alpha))


def integrate_form(omega: LocalForm, geom: SimplexGeometry | None = None):
    """∫_T ω for top-degree forms (vertex-order orientation) or mean-value integrals of 0-forms."""
    n = omega.n
    if omega.k == n:
        return sum((c * reference_integral(alpha) for (alpha, _), c in omega.terms.items()), ZERO)
    if omega.k == 0:
        if geom is None:
            raise ValueError("integrating a 0-form needs the simplex geometry")
        return sum((c * integrate_monomial(alpha, geom) for (alpha, _), c in omega.terms.items()), ZERO)
    raise ValueError(f"cannot integrate a {omega.k}-form over a {n}-simplex")


def volume_form(geom: SimplexGeometry) -> LocalForm:
    """vol_T = n! vol(T) dλ_1∧…∧dλ_n (exact only when the volume is rational)."""
    n = geom.dim
    return LocalForm(n, n, {((0,) * (n + 1), tuple(range(1, n + 1))): math.factorial(n) * as_rational(geom.volume)})


def gram_minor(gram: np.ndarray, sigma: Alternator, tau: Alternator):
    if len(sigma) != len(tau):
        raise ValueError("alternators of different degree")
    if not sigma:
        return ONE if gram.dtype == object else 1.0
    sub = gram[np.ix_(sigma, tau)]
    if gram.dtype == object:
        return _det_exact(sub)
    return float(np.linalg.det(sub))


def inner_product(omega: LocalForm, eta: LocalForm, geom: SimplexGeometry):
    """∫_T <ω, η> under the Euclidean metric of the embedding."""
    if omega.k != eta.k or omega.n != eta.n:
        raise ValueError("inner product of forms with different degree or dimension")
    if omega.n != geom.dim:
        raise ValueError("geometry does not match the simplex dimension")
    total = ZERO if geom.exact else 0.0
    minors: dict = {}
    for (a, s), c in omega.terms.items():
        for (b, t), e in eta.terms.items():
            key = (s, t)
            if key not in minors:
                minors[key] = gram_minor(geom.gram, s, t)
            g = minors[key]
            if g == 0:
                continue
            value = integrate_monomial(tuple(x + y for x, y in zip(a, b)), geom)
            if geom.exact and isinstance(value, type(ZERO)):
                total += c * e * g * value
            else:
                total += float(c) * float(e) * float(g) * float(value)
    return total


def iter_terms(omega: LocalForm) -> Iterator[tuple[MultiIndex, Alternator, mpq]]:
    for (alpha, sigma), c in omega.terms.items():
        yield alpha, sigma, c
