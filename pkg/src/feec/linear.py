from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.sparse as sp

from .rational import SparseQ


@dataclass(frozen=True)
class LinearMap:
    """A matrix with row and column layout descriptors."""

    matrix: Any
    rows: tuple
    cols: tuple

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def to_scipy(self) -> sp.csr_matrix:
        if isinstance(self.matrix, SparseQ):
            return self.matrix.to_scipy()
        if sp.issparse(self.matrix):
            return self.matrix.tocsr()
        return sp.csr_matrix(np.asarray(self.matrix, dtype=float))

    def to_dense_float(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def exact_rank(self) -> int:
        if isinstance(self.matrix, SparseQ):
            return self.matrix.rank()
        return SparseQ.from_dense(np.asarray(self.matrix, dtype=object)).rank()

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        if self.cols != other.rows:
            raise ValueError("layout mismatch in composition")
        return LinearMap(self.matrix @ other.matrix, self.rows, other.cols)
