"""Geometric-decomposition coordinates for global finite element spaces.

A global k-form is stored as one Whitney coefficient per k-simplex plus one
coefficient block per simplex for its extended interior bubbles.  All
orientations follow ascending global vertex IDs, so the Whitney and bubble
bases of a simplex are the same seen from every cell that contains it.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from ..barycentric import LocalForm, whitney_form
from ..coords import d_matrix, monomial_index, pad, top_integral_row, trace_matrix
from ..linear import LinearMap
from ..rational import ZERO, as_rational, left_inverse, qzeros
from ..simplicial import Complex, Simplex
from .assignment import CellConfig, SequenceAssignment, face_positions
from .extension import extension_operator
from .local import bubble_basis


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CellSpace:
    """Local layout of one cell configuration at degree k, with exact synthesis maps."""

    config: CellConfig
    k: int
    R: int
    entries: tuple  # per local dof: (face positions, j) with j = -1 for the Whitney dof
    blocks: dict  # face positions -> slice into the local layout
    synth: np.ndarray  # MI(n,k,R) x L
    bubble_bases: dict  # face positions -> padded bubble basis on the face

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def decomp(self) -> np.ndarray:
        """Exact coordinates of any form of the cell space (left inverse of synth)."""
        cached = self.__dict__.get("_decomp")
        if cached is None:
            cached = left_inverse(self.synth) if self.size else qzeros((0, self.synth.shape[0]))
            object.__setattr__(self, "_decomp", cached)
        return cached

    @property
    def synth_float(self) -> np.ndarray:
        cached = self.__dict__.get("_synth_f")
        if cached is None:
            cached = self.synth.astype(float)
            object.__setattr__(self, "_synth_f", cached)
        return cached

    @property
    def decomp_float(self) -> np.ndarray:
        cached = self.__dict__.get("_decomp_f")
        if cached is None:
            cached = self.decomp.astype(float)
            object.__setattr__(self, "_decomp_f", cached)
        return cached


@lru_cache(maxsize=None)
def cell_space(config: CellConfig, k: int) -> CellSpace:
    n, R = config.n, config.R
    idx = monomial_index(n, k, R)
    entries, blocks, columns, bases = [], {}, [], {}
    for face in combinations(range(n + 1), k + 1):
        blocks[("W",) + face] = slice(len(entries), len(entries) + 1)
        entries.append((face, -1))
        columns.append(idx.vector(whitney_form(face, n)))
    for face in face_positions(n):
        m = len(face) - 1
        if m < k:
            continue
        tag = config.tag(face, k)
        basis = bubble_basis(m, tag, k)
        padded = basis.padded(R)
        bases[face] = padded
        start = len(entries)
        if basis.dim:
            ext = extension_operator(m, n, k, tag, face, R)
            image = ext.dot(padded)
            for j in range(basis.dim):
                entries.append((face, j))
                columns.append(image[:, j])
        blocks[face] = slice(start, len(entries))
    synth = np.stack(columns, axis=1) if columns else qzeros((idx.size, 0))
    return CellSpace(config, k, R, tuple(entries), blocks, synth, bases)


@lru_cache(maxsize=None)
def cell_d(config: CellConfig, k: int) -> np.ndarray:
    """d in local layout coordinates, degree k -> k+1 (exact)."""
    src, dst = cell_space(config, k), cell_space(config, k + 1)
    image = d_matrix(config.n, k, config.R).dot(src.synth)
    out = dst.decomp.dot(image)
    if any(x != 0 for x in (dst.synth.dot(out) - image).reshape(-1)):
        raise DecompositionError(f"d does not map the degree-{k} space into the degree-{k + 1} space")
    return out


def decompose_cell_columns(space: CellSpace, columns: np.ndarray) -> np.ndarray:
    """Geometric decomposition recursion on a block of local forms (exact, column-wise).

    Whitney coefficients are k!∫_G tr ω; then for m = k..n each m-face takes the
    coordinates of the trace of the remaining residual in its bubble basis, and
    the extension is subtracted.  Raises if any trace leaves its bubble space.
    """
    n, k, R = space.n, space.k, space.R
    cols = np.asarray(columns, dtype=object)
    if cols.ndim == 1:
        cols = cols.reshape(-1, 1)
    resid = pad(cols, space.synth.shape[0])
    out = qzeros((space.size, resid.shape[1]))
    fact = math.factorial(k)
    row = top_integral_row(k, R).reshape(1, -1)
    for face in combinations(range(n + 1), k + 1):
        s = space.blocks[("W",) + face]
        out[s] = fact * row.dot(trace_matrix(n, k, R, face).dot(resid))
    resid = resid - space.synth.dot(out)
    for m in range(k, n + 1):
        level = qzeros(out.shape)
        for face in combinations(range(n + 1), m + 1):
            s = space.blocks[face]
            local = trace_matrix(n, k, R, face).dot(resid)
            if s.stop == s.start:
                if any(x != 0 for x in local.reshape(-1)):
                    raise DecompositionError(f"trace on local face {face} is not in its (empty) bubble space")
                continue
            coords = _coordinates(space, face, local)
            if coords is None:
                raise DecompositionError(f"trace on local face {face} is not in its bubble space")
            level[s] = coords
        out = out + level
        resid = resid - space.synth.dot(level)
    if any(x != 0 for x in resid.reshape(-1)):
        raise DecompositionError("form is not in the cell space")
    return out


def _coordinates(space: CellSpace, face: tuple[int, ...], vecs: np.ndarray):
    cache = space.__dict__.setdefault("_bubble_inv", {})
    basis = space.bubble_bases[face]
    inv = cache.get(face)
    if inv is None:
        inv = left_inverse(basis)
        cache[face] = inv
    coords = inv.dot(vecs)
    if any(x != 0 for x in (basis.dot(coords) - vecs).reshape(-1)):
        return None
    return coords


@dataclass(eq=False)
class Layout:
    """Global dof layout of PΛ^k(T[,U]).

    Dofs: Whitney coefficients for k-simplices (in canonical order), then the
    bubble blocks for all simplices of dimension >= k (zero-width blocks kept).
    Simplices in U carry no dofs when ``relative``.
    """

    assignment: SequenceAssignment
    k: int
    relative: bool = False
    whitney: list = field(init=False)
    bubbles: list = field(init=False)
    _whitney_pos: dict = field(init=False, repr=False)
    _bubble_slice: dict = field(init=False, repr=False)
    _cell_maps: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        c = self.complex
        keep = (lambda s: not c.in_boundary(s)) if self.relative else (lambda s: True)
        self.whitney = [s for s in c.simplices.get(self.k, []) if keep(s)]
        self._whitney_pos = {s: i for i, s in enumerate(self.whitney)}
        offset = len(self.whitney)
        self.bubbles = []
        self._bubble_slice = {}
        for m in range(self.k, c.dim + 1):
            for s in c.simplices[m]:
                if not keep(s):
                    continue
                size = bubble_basis(m, self.assignment.tag(s, self.k), self.k).dim
                self.bubbles.append((s, size))
                self._bubble_slice[s] = slice(offset, offset + size)
                offset += size
        self.size = offset

    @property
    def complex(self) -> Complex:
        return self.assignment.complex

    def whitney_index(self, simplex: Simplex):
        return self._whitney_pos.get(tuple(simplex))

    def bubble_slice(self, simplex: Simplex):
        return self._bubble_slice.get(tuple(simplex))

    @property
    def whitney_size(self) -> int:
        return len(self.whitney)

    def describe(self) -> dict:
        return {
            "k": self.k,
            "relative": self.relative,
            "whitney": [list(s) for s in self.whitney],
            "bubbles": [[list(s), size, str(self.assignment.tag(s, self.k))] for s, size in self.bubbles],
        }

    @property
    def hash(self) -> str:
        cached = self.__dict__.get("_hash")
        if cached is None:
            text = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
            cached = hashlib.sha256(text.encode()).hexdigest()
            self._hash = cached
        return cached

    def cell_map(self, cell: Simplex) -> tuple[CellSpace, np.ndarray]:
        """Cell space and, per local dof, its global index (-1 for dofs dropped on U)."""
        cached = self._cell_maps.get(cell)
        if cached is not None:
            return cached
        space = cell_space(self.assignment.cell_config(cell), self.k)
        glob = np.full(space.size, -1, dtype=int)
        for i, (face, j) in enumerate(space.entries):
            simplex = tuple(cell[p] for p in face)
            if j < 0:
                pos = self.whitney_index(simplex)
                if pos is not None:
                    glob[i] = pos
            else:
                s = self.bubble_slice(simplex)
                if s is not None:
                    glob[i] = s.start + j
        self._cell_maps[cell] = (space, glob)
        return space, glob

    def owners(self) -> np.ndarray:
        """For each global dof, the first cell (by index) whose layout contains it."""
        cached = self.__dict__.get("_owners")
        if cached is not None:
            return cached
        owner = np.full(self.size, -1, dtype=int)
        for ci, cell in enumerate(self.complex.cells):
            _, glob = self.cell_map(cell)
            for g in glob:
                if g >= 0 and owner[g] < 0:
                    owner[g] = ci
        self._owners = owner
        return owner

    def gather(self, coeffs: np.ndarray, cell: Simplex) -> np.ndarray:
        space, glob = self.cell_map(cell)
        coeffs = np.asarray(coeffs)
        zero = ZERO if coeffs.dtype == object else 0.0
        out = np.empty((space.size,) + coeffs.shape[1:], dtype=coeffs.dtype)
        for i, g in enumerate(glob):
            out[i] = coeffs[g] if g >= 0 else zero
        return out

    def synthesize(self, coeffs: np.ndarray, cell: Simplex) -> np.ndarray:
        """Monomial coordinates MI(n,k,R_cell) of the form restricted to the cell."""
        space, _ = self.cell_map(cell)
        local = self.gather(coeffs, cell)
        if local.dtype == object:
            return space.synth.dot(local)
        return space.synth_float.dot(local)


@dataclass(eq=False)
class GlobalForm:
    layout: Layout
    coefficients: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coefficients.shape[0] != self.layout.size:
            raise ValueError(f"coefficient vector has length {self.coefficients.shape[0]}, layout needs {self.layout.size}")

    @property
    def k(self) -> int:
        return self.layout.k

    @property
    def exact(self) -> bool:
        return self.coefficients.dtype == object

    @classmethod
    def zero(cls, layout: Layout, exact: bool = True) -> "GlobalForm":
        return cls(layout, qzeros(layout.size) if exact else np.zeros(layout.size))

    def whitney_part(self) -> np.ndarray:
        return self.coefficients[: self.layout.whitney_size]

    def interior(self, simplex: Simplex) -> np.ndarray:
        return self.coefficients[self.layout.bubble_slice(simplex)]

    def local_form(self, cell: Simplex) -> LocalForm:
        if not self.exact:
            raise ValueError("local_form needs exact coefficients")
        space, _ = self.layout.cell_map(cell)
        return monomial_index(space.n, self.k, space.R).form(self.layout.synthesize(self.coefficients, cell))

    def to_float(self) -> "GlobalForm":
        return GlobalForm(self.layout, np.asarray(self.coefficients, dtype=float) if self.exact else self.coefficients)

    def __add__(self, other: "GlobalForm") -> "GlobalForm":
        _same_layout(self, other)
        return GlobalForm(self.layout, self.coefficients + other.coefficients)

    def __sub__(self, other: "GlobalForm") -> "GlobalForm":
        _same_layout(self, other)
        return GlobalForm(self.layout, self.coefficients - other.coefficients)

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, type(ZERO)):
                return str(x) if x.denominator != 1 else int(x.numerator)
            return float(x)

        return {
            "layout-hash": self.layout.hash,
            "k": self.k,
            "whitney": [enc(x) for x in self.whitney_part()],
            "interior": {",".join(map(str, s)): [enc(x) for x in self.interior(s)] for s, size in self.layout.bubbles if size},
        }

    @classmethod
    def from_json(cls, layout: Layout, data: dict) -> "GlobalForm":
        if data.get("layout-hash") not in (None, layout.hash):
            raise ValueError("form was written for a different layout (layout-hash mismatch)")
        values = list(data.get("whitney", []))
        exact = all(not isinstance(x, float) for x in values) and all(
            not isinstance(x, float) for v in data.get("interior", {}).values() for x in v)
        coeffs = qzeros(layout.size) if exact else np.zeros(layout.size)
        conv = as_rational if exact else float
        if len(values) != layout.whitney_size:
            raise ValueError(f"expected {layout.whitney_size} Whitney coefficients, got {len(values)}")
        for i, x in enumerate(values):
            coeffs[i] = conv(x)
        for key, block in data.get("interior", {}).items():
            simplex = tuple(int(v) for v in key.split(","))
            s = layout.bubble_slice(simplex)
            if s is None or s.stop - s.start != len(block):
                raise ValueError(f"interior block for {list(simplex)} does not match the layout")
            for j, x in enumerate(block):
                coeffs[s.start + j] = conv(x)
        return cls(layout, coeffs)


def _same_layout(a: GlobalForm, b: GlobalForm) -> None:
    if a.layout is not b.layout and a.layout.hash != b.layout.hash:
        raise ValueError("forms live in different layouts")


def assemble_global_d(layout_k: Layout, layout_k1: Layout) -> LinearMap:
    """d^k in geometric-decomposition coordinates (exact sparse)."""
    if layout_k.assignment is not layout_k1.assignment or layout_k1.k != layout_k.k + 1:
        raise ValueError("layouts must come from the same assignment at consecutive degrees")
    if layout_k.relative != layout_k1.relative:
        raise ValueError("layouts must both be absolute or both relative")
    from ..rational import SparseQ

    mat = SparseQ((layout_k1.size, layout_k.size))
    owners = layout_k1.owners()
    cells = layout_k.complex.cells
    for ci, cell in enumerate(cells):
        cfg = layout_k.assignment.cell_config(cell)
        dloc = cell_d(cfg, layout_k.k)
        _, gcol = layout_k.cell_map(cell)
        _, grow = layout_k1.cell_map(cell)
        for i, g in enumerate(grow):
            if g < 0 or owners[g] != ci:
                continue
            for j, h in enumerate(gcol):
                if h >= 0 and dloc[i, j] != 0:
                    mat.set(int(g), int(h), dloc[i, j])
    return LinearMap(mat, ("layout", layout_k1.hash), ("layout", layout_k.hash))


def decompose_piecewise(layout: Layout, pieces: dict, check: bool = True) -> GlobalForm:
    """Global coordinates of a piecewise form given as monomial vectors (or LocalForms) per cell.

    Raises DecompositionError on trace mismatches between cells, on
    non-membership, and (relative layouts) on nonzero dofs on U.
    """
    c = layout.complex
    exact = None
    coeffs = None
    seen = None
    for cell in c.cells:
        if cell not in pieces:
            raise DecompositionError(f"no piece given for cell {list(cell)}")
        space, glob = layout.cell_map(cell)
        piece = pieces[cell]
        if isinstance(piece, LocalForm):
            vec = monomial_index(space.n, layout.k, space.R).vector(piece) if piece.degree <= space.R else None
            if vec is None:
                raise DecompositionError(f"piece on cell {list(cell)} has degree {piece.degree} > {space.R}")
        else:
            vec = np.asarray(piece)
            if vec.shape[0] > space.synth.shape[0]:
                tail = vec[space.synth.shape[0]:]
                if any(x != 0 for x in tail):
                    raise DecompositionError(f"piece on cell {list(cell)} exceeds the cell degree")
                vec = vec[: space.synth.shape[0]]
            vec = pad(vec, space.synth.shape[0])
        if exact is None:
            exact = vec.dtype == object
            coeffs = qzeros(layout.size) if exact else np.zeros(layout.size)
            seen = np.zeros(layout.size, dtype=bool)
        if exact:
            local = decompose_cell_columns(space, vec)[:, 0] if check else space.decomp.dot(vec)
        else:
            local = space.decomp_float.dot(np.asarray(vec, dtype=float))
        for i, g in enumerate(glob):
            if g < 0:
                if exact and local[i] != 0:
                    face, _ = space.entries[i]
                    raise DecompositionError(
                        f"form does not vanish on boundary simplex {[cell[p] for p in face]}")
                continue
            if seen[g]:
                if exact and coeffs[g] != local[i]:
                    face, _ = space.entries[i]
                    raise DecompositionError(
                        f"trace mismatch on simplex {[cell[p] for p in face]} between adjacent cells")
            else:
                coeffs[g] = local[i]
                seen[g] = True
    return GlobalForm(layout, coeffs)


@dataclass
class Decomposition:
    whitney: dict
    interior: dict
    form: GlobalForm


def geometric_decompose(layout: Layout, pieces: dict) -> Decomposition:
    """Split a piecewise form into its Whitney part and per-simplex interior parts (exact)."""
    form = decompose_piecewise(layout, pieces, check=True)
    whitney = {s: form.coefficients[i] for i, s in enumerate(layout.whitney)}
    interior = {}
    for s, size in layout.bubbles:
        m = len(s) - 1
        basis = bubble_basis(m, layout.assignment.tag(s, layout.k), layout.k)
        interior[s] = monomial_index(m, layout.k, basis.R).form(basis.matrix.dot(form.interior(s))) if size else LocalForm.zero(m, layout.k)
    return Decomposition(whitney, interior, form)


def reassemble(layout: Layout, decomposition: Decomposition) -> dict:
    return {cell: layout.synthesize(decomposition.form.coefficients, cell) for cell in layout.complex.cells}


def global_extension(assignment: SequenceAssignment, simplex: Simplex, omega: LocalForm) -> dict:
    """Ext_F ω on every top cell containing F; zero elsewhere."""
    simplex = tuple(simplex)
    c = assignment.complex
    if simplex not in c:
        raise ValueError(f"simplex {list(simplex)} is not in the complex")
    k = omega.k
    m = len(simplex) - 1
    tag = assignment.tag(simplex, k)
    basis = bubble_basis(m, tag, k)
    vec = monomial_index(m, k, basis.R).vector(omega) if omega.degree <= basis.R else None
    if vec is None or basis.coordinates(vec) is None:
        raise ValueError(f"form is not in the interior space of {list(simplex)}")
    out = {}
    for cell in c.cells:
        R = assignment.cell_config(cell).R
        if set(simplex) <= set(cell):
            face = tuple(cell.index(v) for v in simplex)
            ext = extension_operator(m, c.dim, k, tag, face, R)
            out[cell] = monomial_index(c.dim, k, R).form(ext.dot(pad(vec, monomial_index(m, k, R).size)))
        else:
            out[cell] = LocalForm.zero(c.dim, k)
    return out


def random_global_form(layout: Layout, rng, exact: bool = True, low: int = -3, high: int = 3) -> GlobalForm:
    if exact:
        from gmpy2 import mpq

        coeffs = qzeros(layout.size)
        for i in range(layout.size):
            coeffs[i] = mpq(rng.randint(low, high), rng.randint(1, 4))
        return GlobalForm(layout, coeffs)
    return GlobalForm(layout, np.array([rng.uniform(-1, 1) for _ in range(layout.size)]))
