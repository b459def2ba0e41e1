"""Whitney interpolant I_W and the commuting canonical interpolant I_P."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .barycentric import LocalForm, exterior_derivative, integrate_form, trace
from .coords import d_matrix, evaluate, mass_matrix, metric_minors, monomial_index, pad, trace_matrix
from .quadrature import simplex_rule
from .rational import qzeros
from .simplicial import Complex, Simplex
from .spaces.assignment import SequenceAssignment, uniform_assignment
from .spaces.layout import GlobalForm, Layout
from .spaces.local import bubble_basis


class LocalSolveError(RuntimeError):
    pass


RESIDUAL_GATE = 1e-12


@dataclass(eq=False)
class PiecewiseForm:
    """One LocalForm per top cell; traces are expected to agree on shared faces."""

    complex: Complex
    k: int
    pieces: dict

    def d(self) -> "PiecewiseForm":
        return PiecewiseForm(self.complex, self.k + 1, {c: exterior_derivative(w) for c, w in self.pieces.items()})

    def trace(self, simplex: Simplex) -> LocalForm:
        simplex = tuple(simplex)
        cell = self.complex.star(simplex)[0]
        return trace(self.pieces[cell], tuple(cell.index(v) for v in simplex))

    def trace_mismatches(self) -> list[Simplex]:
        bad = []
        for m in range(self.complex.dim):
            for s in self.complex.simplices[m]:
                star = self.complex.star(s)
                ref = trace(self.pieces[star[0]], tuple(star[0].index(v) for v in s))
                for cell in star[1:]:
                    if trace(self.pieces[cell], tuple(cell.index(v) for v in s)) != ref:
                        bad.append(s)
                        break
        return bad

    @property
    def degree(self) -> int:
        return max((w.degree for w in self.pieces.values()), default=0)

    @classmethod
    def from_global(cls, form: GlobalForm) -> "PiecewiseForm":
        c = form.layout.complex
        return cls(c, form.k, {cell: form.local_form(cell) for cell in c.cells})


@dataclass(eq=False)
class CallableForm:
    """A smooth k-form given by ambient components.

    ``func(points)`` returns shape (P, C(N,k)) with columns over increasing
    ambient index tuples; ``derivative`` does the same for dω.  Integrals use
    simplex quadrature of ``quadrature_order``.
    """

    k: int
    func: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    quadrature_order: int = 6


def whitney_assignment(c: Complex) -> SequenceAssignment:
    return uniform_assignment(c, "trimmed", 1)


def _pullback_matrix(c: Complex, simplex: Simplex, k: int) -> np.ndarray:
    """Maps ambient components over dx_I to components over dλ_J (J ⊆ 1..m) on the simplex."""
    pts = np.array([[float(x) for x in c.coords[v]] for v in simplex])
    m = len(simplex) - 1
    N = pts.shape[1]
    edges = (pts[1:] - pts[0]).T if m else np.zeros((N, 0))
    amb = list(combinations(range(N), k))
    loc = list(combinations(range(m), k))
    out = np.zeros((len(loc), len(amb)))
    for a, I in enumerate(amb):
        for b, J in enumerate(loc):
            out[b, a] = 1.0 if k == 0 else np.linalg.det(edges[np.ix_(I, J)])
    return out


def _callable_on(c: Complex, simplex: Simplex, func, k: int, bary: np.ndarray) -> np.ndarray:
    pts = np.array([[float(x) for x in c.coords[v]] for v in simplex])
    phys = bary @ pts
    vals = np.asarray(func(phys), dtype=float).reshape(len(phys), -1)
    return vals @ _pullback_matrix(c, simplex, k).T


def simplex_integral(omega, c: Complex, simplex: Simplex, k: int):
    """∫_S tr ω over a k-simplex (exact for piecewise polynomial input)."""
    if isinstance(omega, PiecewiseForm):
        return integrate_form(omega.trace(simplex))
    bary, w = simplex_rule(k, omega.quadrature_order)
    vals = _callable_on(c, simplex, omega.func, k, bary)
    return float(np.dot(w, vals[:, 0]))


def interpolate_whitney(omega, c: Complex, k: int | None = None, relative: bool = False) -> GlobalForm:
    """I_W ω: the Whitney form with the same k-simplex integrals (coefficient k!∫_F tr ω)."""
    k = omega.k if k is None else k
    layout = Layout(whitney_assignment(c), k, relative)
    return j_whitney(omega, layout)


def j_whitney(omega, layout: Layout) -> GlobalForm:
    """Whitney block k!∫_F tr ω for every k-simplex of the layout; bubble blocks zero."""
    k = layout.k
    exact = isinstance(omega, PiecewiseForm)
    coeffs = qzeros(layout.size) if exact else np.zeros(layout.size)
    fact = math.factorial(k)
    for i, s in enumerate(layout.whitney):
        coeffs[i] = fact * simplex_integral(omega, layout.complex, s, k)
    meta = {} if exact else {"quadrature_order": omega.quadrature_order, "approximate": True}
    return GlobalForm(layout, coeffs, meta)


@dataclass
class LocalSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    basis: np.ndarray  # bubble basis on the face in MI(m,k,Rbig), float
    cycle_rows: int


def local_system(assignment: SequenceAssignment, simplex: Simplex, k: int, residual, Rbig: int) -> LocalSystem:
    """Stacked (cycles)/(cocycles) equations for J_F with the embedding metric of F.

    ``residual`` is the trace of ω − J_W ω − Σ_{l<m} J_l ω on F, either as float
    monomial coordinates in MI(m,k,Rbig) or as a pair (coords, callable part).
    """
    c = assignment.complex
    m = len(simplex) - 1
    geom = c.geometry(simplex)
    tag_k = assignment.tag(simplex, k)
    B = pad(bubble_basis(m, tag_k, k).padded(max(Rbig, bubble_basis(m, tag_k, k).R)), monomial_index(m, k, Rbig).size).astype(float)
    poly, extra = residual if isinstance(residual, tuple) else (residual, None)
    Mk = mass_matrix(geom, k, Rbig)
    rows, rhs = [], []
    ncycle = 0
    if k >= 1:
        tag_km = assignment.tag(simplex, k - 1)
        P = bubble_basis(m, tag_km, k - 1)
        if P.dim:
            Pm = pad(P.padded(max(Rbig, P.R)), monomial_index(m, k - 1, Rbig).size).astype(float)
            dP = d_matrix(m, k - 1, Rbig).astype(float) @ Pm
            rows.append(dP.T @ Mk @ B)
            r = dP.T @ Mk @ poly
            if extra is not None:
                r = r + extra["cycle"](dP)
            rhs.append(r)
            ncycle = dP.shape[1]
    if k < m and B.shape[1]:
        Mk1 = mass_matrix(geom, k + 1, Rbig)
        D = d_matrix(m, k, Rbig).astype(float)
        dB = D @ B
        rows.append(dB.T @ Mk1 @ dB)
        r = dB.T @ Mk1 @ (D @ poly)
        if extra is not None:
            r = r + extra["cocycle"](dB)
        rhs.append(r)
    if not rows:
        return LocalSystem(np.zeros((0, B.shape[1])), np.zeros(0), B, 0)
    return LocalSystem(np.vstack(rows), np.concatenate(rhs), B, ncycle)


def solve_local_system(system: LocalSystem, label: str = "") -> np.ndarray:
    b = system.matrix.shape[1]
    if b == 0:
        return np.zeros(0)
    K, rhs = system.matrix, system.rhs
    u, s, vt = np.linalg.svd(K, full_matrices=False)
    if s.size < b or s[-1] <= 1e-13 * s[0]:
        raise LocalSolveError(f"singular local system on {label} (rank deficient, σ_min/σ_max = {s[-1] / s[0] if s.size else 0:.2e})")
    sol = vt.T @ ((u.T @ rhs) / s)
    scale = np.linalg.norm(rhs) + np.linalg.norm(K) * np.linalg.norm(sol)
    res = np.linalg.norm(K @ sol - rhs)
    if scale > 0 and res > RESIDUAL_GATE * scale:
        raise LocalSolveError(f"local system on {label} is inconsistent: relative residual {res / scale:.2e}")
    return sol


def j_local(assignment: SequenceAssignment, simplex: Simplex, k: int, residual: LocalForm) -> np.ndarray:
    """Interior coefficients J_F ω from the residual trace on F (a LocalForm on F)."""
    m = len(simplex) - 1
    Rbig = max(residual.degree, assignment.max_order, 1)
    vec = monomial_index(m, k, Rbig).vector(residual).astype(float)
    return solve_local_system(local_system(assignment, simplex, k, vec, Rbig), str(list(simplex)))


def _callable_extra(c: Complex, simplex: Simplex, k: int, omega: CallableForm, Rbig: int) -> dict:
    """Quadrature contributions ⟨ω, dρ⟩ and ⟨dω, dβ⟩ for the callable part of the residual."""
    m = len(simplex) - 1
    geom = c.geometry(simplex)
    order = omega.quadrature_order + Rbig
    bary, w = simplex_rule(m, order)
    wphys = w * math.factorial(m) * float(geom.volume)
    vals = _callable_on(c, simplex, omega.func, k, bary)
    G = metric_minors(geom, k)

    def cycle(test_coords):
        idx = monomial_index(m, k, Rbig)
        out = np.zeros(test_coords.shape[1])
        for j in range(test_coords.shape[1]):
            tv = evaluate(test_coords[:, j], idx, bary)
            out[j] = np.sum(wphys * np.einsum("pi,ij,pj->p", vals, G, tv))
        return out

    def cocycle(test_coords):
        if omega.derivative is None:
            raise ValueError("callable input needs its exterior derivative for the cocycle equations")
        dvals = _callable_on(c, simplex, omega.derivative, k + 1, bary)
        G1 = metric_minors(geom, k + 1)
        idx = monomial_index(m, k + 1, Rbig)
        out = np.zeros(test_coords.shape[1])
        for j in range(test_coords.shape[1]):
            tv = evaluate(test_coords[:, j], idx, bary)
            out[j] = np.sum(wphys * np.einsum("pi,ij,pj->p", dvals, G1, tv))
        return out

    return {"cycle": cycle, "cocycle": cocycle}


def interpolate_canonical(omega, layout: Layout, order=None) -> GlobalForm:
    """I_P ω = J_W ω + J_k ω + ... + J_n ω (float coefficients).

    Levels are processed by increasing dimension; within one level the local
    solves are independent.  ``order`` optionally permutes the processing order
    inside each level.
    """
    a = layout.assignment
    c = layout.complex
    k = layout.k
    callable_input = isinstance(omega, CallableForm)
    base = j_whitney(omega, layout)
    coeffs = np.asarray(base.coefficients, dtype=float).copy()
    Rin = 0 if callable_input else omega.degree
    for m in range(k, c.dim + 1):
        level = [s for s, size in layout.bubbles if len(s) - 1 == m and size]
        if order is not None:
            level = order(level)
        updates = {}
        for s in level:
            cell = c.star(s)[0]
            face = tuple(cell.index(v) for v in s)
            space, _ = layout.cell_map(cell)
            Rbig = max(Rin, space.R, 1)
            approx = pad(layout.synthesize(coeffs, cell), monomial_index(c.dim, k, Rbig).size)
            tr = trace_matrix(c.dim, k, Rbig, face).astype(float)
            if callable_input:
                residual = (-(tr @ approx), _callable_extra(c, s, k, omega, Rbig))
            else:
                piece = monomial_index(c.dim, k, Rbig).vector(omega.pieces[cell]).astype(float)
                residual = tr @ (piece - approx)
            system = local_system(a, s, k, residual, Rbig)
            updates[s] = solve_local_system(system, str(list(s)))
        for s, sol in updates.items():
            coeffs[layout.bubble_slice(s)] = sol
    return GlobalForm(layout, coeffs, dict(base.metadata))
