"""Exact rational linear algebra on numpy object arrays of ``gmpy2.mpq``.

Dense routines are meant for the small local systems (a few hundred rows at
most).  :class:`SparseQ` covers global incidence-like matrices where only the
rank or exact products are needed.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational

import numpy as np
import scipy.sparse as sp
from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)


def as_rational(x) -> mpq:
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, (Integral, Fraction, Rational)):
        return mpq(int(x.numerator), int(x.denominator))
    if isinstance(x, float):
        return mpq(x)
    if isinstance(x, str):
        return mpq(Fraction(x))
    if isinstance(x, np.integer):
        return mpq(int(x))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def qzeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def qeye(n: int) -> np.ndarray:
    out = qzeros((n, n))
    for i in range(n):
        out[i, i] = ONE
    return out


def qarray(data) -> np.ndarray:
    arr = np.array(data, dtype=object)
    flat = arr.reshape(-1)
    for i, x in enumerate(flat):
        flat[i] = as_rational(x)
    return flat.reshape(arr.shape)


def to_float(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=object).astype(float)


def is_zero(a: np.ndarray) -> bool:
    return all(x == 0 for x in np.asarray(a, dtype=object).reshape(-1))


def rref(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with first-come pivots (column order, then row order)."""
    a = np.array(matrix, dtype=object, copy=True)
    if a.ndim != 2:
        raise ValueError("rref expects a 2D array")
    nrows, ncols = a.shape
    pivots: list[int] = []
    row = 0
    for col in range(ncols):
        if row == nrows:
            break
        candidates = [i for i in range(row, nrows) if a[i, col] != 0]
        if not candidates:
            continue
        p = candidates[0]
        if p != row:
            a[[row, p]] = a[[p, row]]
        a[row] = a[row] / a[row, col]
        for i in range(nrows):
            if i != row and a[i, col] != 0:
                a[i] = a[i] - a[i, col] * a[row]
        pivots.append(col)
        row += 1
    return a, pivots


def rank(matrix: np.ndarray) -> int:
    a = np.asarray(matrix, dtype=object)
    if a.size == 0:
        return 0
    return len(rref(a)[1])


def independent_columns(matrix: np.ndarray) -> list[int]:
    a = np.asarray(matrix, dtype=object)
    if a.shape[1] == 0:
        return []
    if a.shape[0] == 0:
        return []
    return rref(a)[1]


def nullspace(matrix: np.ndarray) -> np.ndarray:
    """Columns form a basis of the kernel; one column per free variable, in order."""
    a = np.asarray(matrix, dtype=object)
    ncols = a.shape[1]
    if a.shape[0] == 0:
        return qeye(ncols)
    reduced, pivots = rref(a)
    free = [j for j in range(ncols) if j not in set(pivots)]
    basis = qzeros((ncols, len(free)))
    for t, f in enumerate(free):
        basis[f, t] = ONE
        for i, p in enumerate(pivots):
            basis[p, t] = -reduced[i, f]
    return basis


def inverse(matrix: np.ndarray) -> np.ndarray:
    a = np.asarray(matrix, dtype=object)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse expects a square matrix")
    reduced, pivots = rref(np.hstack([a, qeye(n)]))
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise np.linalg.LinAlgError("singular matrix")
    return reduced[:, n:]


def left_inverse(matrix: np.ndarray) -> np.ndarray:
    """An exact left inverse L (L @ M = I) of a full-column-rank matrix M.

    L is supported on the first-come independent rows of M, so applying it to
    a vector outside the column span silently projects; callers that care must
    check membership.
    """
    a = np.asarray(matrix, dtype=object)
    nrows, ncols = a.shape
    if ncols == 0:
        return qzeros((0, nrows))
    rows = independent_columns(a.T)
    if len(rows) != ncols:
        raise np.linalg.LinAlgError("matrix does not have full column rank")
    out = qzeros((ncols, nrows))
    out[:, rows] = inverse(a[rows, :])
    return out


def solve_in_span(matrix: np.ndarray, rhs: np.ndarray):
    """Exact solution c of M c = rhs, or None when rhs is outside the column span."""
    a = np.asarray(matrix, dtype=object)
    b = np.asarray(rhs, dtype=object)
    vector = b.ndim == 1
    if vector:
        b = b.reshape(-1, 1)
    ncols = a.shape[1]
    reduced, pivots = rref(np.hstack([a, b]))
    if any(p >= ncols for p in pivots):
        return None
    sol = qzeros((ncols, b.shape[1]))
    for i, p in enumerate(pivots):
        sol[p] = reduced[i, ncols:]
    return sol[:, 0] if vector else sol


class SparseQ:
    """Row-dictionary sparse matrix with exact rational entries."""

    def __init__(self, shape: tuple[int, int], rows: dict[int, dict[int, mpq]] | None = None):
        self.shape = (int(shape[0]), int(shape[1]))
        self.rows: dict[int, dict[int, mpq]] = {}
        for i, row in (rows or {}).items():
            clean = {j: as_rational(v) for j, v in row.items() if v != 0}
            if clean:
                self.rows[i] = clean

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseQ":
        a = np.asarray(a, dtype=object)
        rows = {}
        for i in range(a.shape[0]):
            row = {j: a[i, j] for j in range(a.shape[1]) if a[i, j] != 0}
            if row:
                rows[i] = row
        return cls(a.shape, rows)

    def set(self, i: int, j: int, value) -> None:
        value = as_rational(value)
        row = self.rows.setdefault(i, {})
        if value == 0:
            row.pop(j, None)
        else:
            row[j] = value

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def to_dense(self) -> np.ndarray:
        out = qzeros(self.shape)
        for i, row in self.rows.items():
            for j, v in row.items():
                out[i, j] = v
        return out

    def to_scipy(self) -> sp.csr_matrix:
        ii, jj, vv = [], [], []
        for i, row in self.rows.items():
            for j, v in row.items():
                ii.append(i)
                jj.append(j)
                vv.append(float(v))
        return sp.csr_matrix((vv, (ii, jj)), shape=self.shape)

    def transpose(self) -> "SparseQ":
        out: dict[int, dict[int, mpq]] = {}
        for i, row in self.rows.items():
            for j, v in row.items():
                out.setdefault(j, {})[i] = v
        return SparseQ((self.shape[1], self.shape[0]), out)

    @property
    def T(self) -> "SparseQ":
        return self.transpose()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=object)
        if x.shape[0] != self.shape[1]:
            raise ValueError("dimension mismatch")
        out = qzeros((self.shape[0],) + x.shape[1:])
        for i, row in self.rows.items():
            acc = out[i]
            for j, v in row.items():
                acc = acc + v * x[j]
            out[i] = acc
        return out

    def __matmul__(self, other):
        if isinstance(other, SparseQ):
            if self.shape[1] != other.shape[0]:
                raise ValueError("dimension mismatch")
            rows: dict[int, dict[int, mpq]] = {}
            for i, row in self.rows.items():
                acc: dict[int, mpq] = {}
                for j, v in row.items():
                    for l, w in other.rows.get(j, {}).items():
                        acc[l] = acc.get(l, ZERO) + v * w
                rows[i] = acc
            return SparseQ((self.shape[0], other.shape[1]), rows)
        return self.matvec(other)

    def is_zero(self) -> bool:
        return not self.rows

    def rank(self) -> int:
        """Exact rank by incremental sparse echelon reduction."""
        pivot_rows: dict[int, dict[int, mpq]] = {}
        for i in sorted(self.rows):
            row = dict(self.rows[i])
            while row:
                lead = min(row)
                if lead in pivot_rows:
                    factor = row[lead]
                    for j, v in pivot_rows[lead].items():
                        nv = row.get(j, ZERO) - factor * v
                        if nv == 0:
                            row.pop(j, None)
                        else:
                            row[j] = nv
                else:
                    inv = ONE / row[lead]
                    pivot_rows[lead] = {j: v * inv for j, v in row.items()}
                    break
        return len(pivot_rows)
