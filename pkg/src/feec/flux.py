"""Generalized inverses of d and the partially localized flux reconstruction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .coords import d_matrix, mass_matrix
from .interpolants import whitney_assignment
from .rational import SparseQ, left_inverse, nullspace, qeye, qzeros, rank
from .runtime import parallel_map, record_global_solve
from .simplicial import Simplex
from .spaces.assignment import SequenceAssignment
from .spaces.layout import GlobalForm, Layout, assemble_global_d
from .spaces.local import bubble_basis

CLOSEDNESS_TOL = 1e-10
LEVEL_TOL = 1e-9
FULL_RECONSTRUCTION_TOL = 1e-8


class NotClosedError(ValueError):
    def __init__(self, ratio: float):
        super().__init__(f"input is not closed: ||dω||/||ω|| = {ratio:.3e} > {CLOSEDNESS_TOL:g}")
        self.ratio = ratio


class HarmonicResidualError(RuntimeError):
    """Closed input that is not exact; carries the residual norm and the best potential."""

    def __init__(self, residual: float, relative: float, xi: GlobalForm):
        super().__init__(f"input is closed but not exact: harmonic residual {residual:.3e} (relative {relative:.3e})")
        self.residual = residual
        self.relative = relative
        self.xi = xi


class LevelResidualError(RuntimeError):
    pass


def layout_for(assignment: SequenceAssignment, k: int, relative: bool = False) -> Layout:
    """Layouts cached on the assignment so masses and d matrices are reused."""
    cache = assignment.__dict__.setdefault("_layouts", {})
    key = (k, relative)
    if key not in cache:
        cache[key] = Layout(assignment, k, relative)
    return cache[key]


def layout_mass(layout: Layout) -> sp.csr_matrix:
    """Global L² Gram matrix in layout coordinates (float, sparse)."""
    cached = layout.__dict__.get("_mass")
    if cached is not None:
        return cached
    c = layout.complex
    rows, cols, vals = [], [], []
    for cell in c.cells:
        space, glob = layout.cell_map(cell)
        keep = np.nonzero(glob >= 0)[0]
        if keep.size == 0:
            continue
        S = space.synth_float[:, keep]
        M = mass_matrix(c.geometry(cell), layout.k, space.R)
        local = S.T @ M @ S
        g = glob[keep]
        rows.append(np.repeat(g, g.size))
        cols.append(np.tile(g, g.size))
        vals.append(local.reshape(-1))
    if rows:
        mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(layout.size, layout.size))
    else:
        mat = sp.csr_matrix((layout.size, layout.size))
    layout._mass = mat
    return mat


def l2_norm(layout: Layout, coeffs: np.ndarray) -> float:
    x = np.asarray(coeffs, dtype=float)
    return float(np.sqrt(max(x @ (layout_mass(layout) @ x), 0.0)))


@dataclass(eq=False)
class GeneralizedInverse:
    """Mass-weighted Moore–Penrose inverse P of a matrix D (P D P = P, D P D = D)."""

    D: np.ndarray
    P: np.ndarray
    rank: int
    singular_values: np.ndarray
    domain: tuple = ()
    codomain: tuple = ()

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.P @ np.asarray(x, dtype=float)

    def contract_defect(self) -> float:
        """||D P D − D|| / ||D|| (0 for a zero map)."""
        nd = np.linalg.norm(self.D)
        if nd == 0:
            return 0.0
        return float(np.linalg.norm(self.D @ self.P @ self.D - self.D) / nd)

    @property
    def condition_number(self) -> float:
        s = self.singular_values[: self.rank]
        return float(s[0] / s[-1]) if s.size else 1.0


def _cholesky_factor(M: np.ndarray) -> np.ndarray:
    if M.shape[0] == 0:
        return M
    return np.linalg.cholesky(M)


def weighted_pinv(D: np.ndarray, Ma: np.ndarray, Mb: np.ndarray, rank: int, domain=(), codomain=()) -> GeneralizedInverse:
    """P minimizing ||D x − y||_{Mb} and then ||x||_{Ma}; singular values truncated at the exact rank."""
    D = np.asarray(D, dtype=float)
    na, nb = D.shape[1], D.shape[0]
    if na == 0 or nb == 0 or rank == 0:
        return GeneralizedInverse(D, np.zeros((na, nb)), 0, np.zeros(0), domain, codomain)
    La = _cholesky_factor(Ma)
    Lb = _cholesky_factor(Mb)
    A = Lb.T @ D @ sla.solve_triangular(La, np.eye(na), lower=True).T
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    ur, sr, vr = u[:, :rank], s[:rank], vt[:rank]
    Apinv = vr.T @ (ur.T / sr[:, None])
    P = sla.solve_triangular(La.T, Apinv @ Lb.T, lower=False)
    return GeneralizedInverse(D, P, rank, s, domain, codomain)


def pseudo_inverse_whitney(c, k: int, relative: bool = False) -> GeneralizedInverse:
    """P_W for d^{k-1}: WΛ^{k-1}(T,U) -> WΛ^k(T,U) under the L² inner products."""
    a = whitney_assignment(c)
    La, Lb = layout_for(a, k - 1, relative), layout_for(a, k, relative)
    Dq = assemble_global_d(La, Lb)
    rank = Dq.exact_rank()
    record_global_solve("whitney_pseudo_inverse")
    return weighted_pinv(Dq.to_dense_float(), layout_mass(La).toarray(), layout_mass(Lb).toarray(), rank,
                         ("whitney", k - 1), ("whitney", k))


def _bubble_d(m: int, tag_a, tag_b, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Exact d from the degree k-1 bubble basis to degree-k bubble coordinates on an m-simplex."""
    Ba = bubble_basis(m, tag_a, k - 1)
    Bb = bubble_basis(m, tag_b, k)
    R = max(Ba.R, Bb.R, 1)
    image = d_matrix(m, k - 1, R).dot(Ba.padded(R))
    target = Bb.padded(R)
    if Bb.dim == 0:
        if any(x != 0 for x in image.reshape(-1)):
            raise LevelResidualError("d leaves the interior space")
        return np.zeros((0, Ba.dim), dtype=object), Ba.padded(R), target, R
    coords = left_inverse(target).dot(image)
    if any(x != 0 for x in (target.dot(coords) - image).reshape(-1)):
        raise LevelResidualError("d leaves the interior space")
    return coords, Ba.padded(R), target, R


def pseudo_inverse_local(assignment: SequenceAssignment, simplex: Simplex, k: int) -> GeneralizedInverse:
    """P_F for d^{k-1} on the interior (underline-ring) spaces of F."""
    simplex = tuple(simplex)
    cache = assignment.__dict__.setdefault("_local_inverses", {})
    key = (simplex, k)
    if key in cache:
        return cache[key]
    m = len(simplex) - 1
    Dq, Ba, Bb, R = _bubble_d(m, assignment.tag(simplex, k - 1), assignment.tag(simplex, k), k)
    geom = assignment.complex.geometry(simplex)
    Baf, Bbf = Ba.astype(float), Bb.astype(float)
    Ma = Baf.T @ mass_matrix(geom, k - 1, R) @ Baf
    Mb = Bbf.T @ mass_matrix(geom, k, R) @ Bbf
    rank = SparseQ.from_dense(Dq).rank() if Dq.size else 0
    inv = weighted_pinv(Dq.astype(float), Ma, Mb, rank, ("interior", simplex, k - 1), ("interior", simplex, k))
    cache[key] = inv
    return inv


@dataclass(eq=False)
class FluxResult:
    xi_hi: GlobalForm
    omega0: GlobalForm
    report: dict = field(default_factory=dict)


def _embed_whitney(target: Layout, whitney_coeffs: np.ndarray) -> np.ndarray:
    out = np.zeros(target.size)
    out[: target.whitney_size] = whitney_coeffs
    return out


def _global_d_float(layout_a: Layout, layout_b: Layout) -> sp.csr_matrix:
    key = ("_dfloat", layout_b.hash)
    cached = layout_a.__dict__.get(key)
    if cached is None:
        cached = assemble_global_d(layout_a, layout_b).to_scipy()
        layout_a.__dict__[key] = cached
    return cached


def flux_reconstruct(omega: GlobalForm, order=None) -> FluxResult:
    """ξ_hi = Σ_m ξ^m and ω_0 = I_W ω with ω = ω_0 + dξ_hi, from independent local solves per level."""
    layout = omega.layout
    k = layout.k
    if k < 1:
        raise ValueError("flux reconstruction needs a form of degree k >= 1")
    a = layout.assignment
    c = layout.complex
    x = np.asarray(omega.coefficients, dtype=float)
    norm = l2_norm(layout, x)
    if k < c.dim and norm > 0:
        nxt = layout_for(a, k + 1, layout.relative)
        dx = _global_d_float(layout, nxt) @ x
        ratio = l2_norm(nxt, dx) / norm
        if ratio > CLOSEDNESS_TOL:
            raise NotClosedError(ratio)
    lower = layout_for(a, k - 1, layout.relative)
    D = _global_d_float(lower, layout)
    res = x.copy()
    res[: layout.whitney_size] = 0.0
    xi = np.zeros(lower.size)
    levels = []
    for m in range(k, c.dim + 1):
        level = [s for s in c.simplices[m] if lower.bubble_slice(s) is not None and layout.bubble_slice(s) is not None]
        if order is not None:
            level = order(level)

        def solve(s, res=res):
            inv = pseudo_inverse_local(a, s, k)
            return s, inv.apply(res[layout.bubble_slice(s)])

        xim = np.zeros(lower.size)
        for s, y in parallel_map(solve, level):
            xim[lower.bubble_slice(s)] = y
        res = res - D @ xim
        xi = xi + xim
        done = np.concatenate([res[layout.bubble_slice(s)] for l in range(k, m + 1) for s in c.simplices[l]
                               if layout.bubble_slice(s) is not None] or [np.zeros(0)])
        defect = float(np.abs(done).max()) if done.size else 0.0
        levels.append({"m": m, "solves": len(level), "max_block_residual": defect})
        if defect > LEVEL_TOL * max(1.0, np.abs(x).max(initial=0.0)):
            raise LevelResidualError(f"level {m}: interior residual {defect:.3e} does not vanish (input not closed?)")
    wl = Layout(whitney_assignment(c), k, layout.relative)
    omega0 = GlobalForm(wl, x[: layout.whitney_size].copy())
    total = x - _embed_whitney(layout, omega0.coefficients) - D @ xi
    rel = l2_norm(layout, total) / norm if norm > 0 else 0.0
    report = {"residual": rel, "levels": levels, "local_solves": sum(l["solves"] for l in levels)}
    return FluxResult(GlobalForm(lower, xi), omega0, report)


def full_reconstruct(omega: GlobalForm, order=None) -> tuple[GlobalForm, dict]:
    """ξ = P_W ω_0 + ξ_hi with dξ = ω; raises HarmonicResidualError when ω is not exact."""
    layout = omega.layout
    result = flux_reconstruct(omega, order)
    k = layout.k
    PW = pseudo_inverse_whitney(layout.complex, k, layout.relative)
    low = PW.apply(result.omega0.coefficients)
    lower = result.xi_hi.layout
    xi = result.xi_hi.coefficients + _embed_whitney(lower, low)
    D = _global_d_float(lower, layout)
    x = np.asarray(omega.coefficients, dtype=float)
    resid = l2_norm(layout, D @ xi - x)
    norm = l2_norm(layout, x)
    rel = resid / norm if norm > 0 else 0.0
    report = dict(result.report)
    report.update({"full_residual": rel, "harmonic_residual": resid})
    out = GlobalForm(lower, xi, {"report": report})
    if rel > FULL_RECONSTRUCTION_TOL:
        raise HarmonicResidualError(resid, rel, out)
    return out, report


def cohomology_dims(assignment: SequenceAssignment, relative: bool = False) -> list[int]:
    """dim ker d^k − rank d^{k−1} of the finite element complex, exact ranks."""
    n = assignment.complex.dim
    layouts = [layout_for(assignment, k, relative) for k in range(n + 1)]
    ranks = [assemble_global_d(layouts[k], layouts[k + 1]).exact_rank() for k in range(n)]
    out = []
    for k in range(n + 1):
        rk = ranks[k] if k < n else 0
        rkm = ranks[k - 1] if k > 0 else 0
        out.append(layouts[k].size - rk - rkm)
    return out


def whitney_cohomology_dims(c, relative: bool = False) -> list[int]:
    return cohomology_dims(whitney_assignment(c), relative)


def closed_nonexact_form(layout: Layout) -> GlobalForm | None:
    """A closed k-form outside the range of d (exact arithmetic), or None when cohomology vanishes."""
    a, k, rel = layout.assignment, layout.k, layout.relative
    n = layout.complex.dim
    if k < n:
        kernel = nullspace(assemble_global_d(layout, layout_for(a, k + 1, rel)).matrix.to_dense())
    else:
        kernel = qeye(layout.size)
    if k > 0:
        image = assemble_global_d(layout_for(a, k - 1, rel), layout).matrix.to_dense()
    else:
        image = qzeros((layout.size, 0))
    base = rank(image) if image.shape[1] else 0
    for j in range(kernel.shape[1]):
        v = kernel[:, j : j + 1]
        if rank(np.hstack([image, v]) if image.shape[1] else v) > base:
            return GlobalForm(layout, v[:, 0].copy())
    return None
