from __future__ import annotations

import random

import numpy as np
import pytest

from feec.barycentric import LocalForm, integrate_form
from feec.coords import monomial_index
from feec.interpolants import (
    CallableForm,
    PiecewiseForm,
    interpolate_canonical,
    interpolate_whitney,
    j_local,
    j_whitney,
    local_system,
    whitney_assignment,
)
from feec.spaces.assignment import random_assignment, uniform_assignment
from feec.spaces.layout import Layout, assemble_global_d, random_global_form
from feec.spaces.sequence import FULL, TRIMMED


def _piecewise(c, family, r, k, seed, relative=False):
    layout = Layout(uniform_assignment(c, family, r), k, relative)
    return PiecewiseForm.from_global(random_global_form(layout, random.Random(seed)))


def test_whitney_interpolant_is_a_projection(two_triangles):
    for k in range(3):
        layout = Layout(whitney_assignment(two_triangles), k)
        g = random_global_form(layout, random.Random(k))
        back = interpolate_whitney(PiecewiseForm.from_global(g), two_triangles)
        assert all(back.coefficients == g.coefficients)


@pytest.mark.parametrize("seed", range(4))
def test_whitney_interpolant_commutes_exactly(square, seed):
    for k in range(2):
        omega = _piecewise(square, TRIMMED, 3, k, seed)
        low, high = interpolate_whitney(omega, square), interpolate_whitney(omega.d(), square)
        d = assemble_global_d(low.layout, Layout(low.layout.assignment, k + 1))
        assert all(d.matrix.matvec(low.coefficients) == high.coefficients)


def test_constant_function_has_equal_vertex_values(two_triangles):
    omega = PiecewiseForm(two_triangles, 0, {cell: LocalForm.constant(2, 5) for cell in two_triangles.cells})
    g = interpolate_whitney(omega, two_triangles)
    assert all(x == 5 for x in g.coefficients)


def test_whitney_coefficients_are_simplex_integrals(two_triangles):
    omega = _piecewise(two_triangles, FULL, 3, 1, 0)
    g = interpolate_whitney(omega, two_triangles)
    for i, edge in enumerate(g.layout.whitney):
        assert g.coefficients[i] == integrate_form(omega.trace(edge))


def test_whitney_interpolant_is_local(two_triangles):
    # λ2 dλ2 on (0,2,3) belongs to vertex 3, so its trace on the shared edge (0,2) is zero
    pieces = {(0, 1, 2): LocalForm.zero(2, 1), (0, 2, 3): LocalForm.monomial((0, 0, 1), (2,))}
    omega = PiecewiseForm(two_triangles, 1, pieces)
    assert omega.trace_mismatches() == []
    g = interpolate_whitney(omega, two_triangles)
    for i, edge in enumerate(g.layout.whitney):
        if set(edge) <= {0, 1, 2}:
            assert g.coefficients[i] == 0


def test_callable_input_uses_quadrature(two_triangles):
    # ω = x dy: ∫ over the edge (1,0)-(1,1) is 1, over the diagonal (0,0)-(1,1) is 1/2
    omega = CallableForm(1, lambda p: np.column_stack([np.zeros(len(p)), p[:, 0]]))
    g = interpolate_whitney(omega, two_triangles)
    values = dict(zip(g.layout.whitney, g.coefficients))
    assert values[(1, 2)] == pytest.approx(1.0)
    assert values[(0, 2)] == pytest.approx(0.5)
    assert values[(0, 1)] == pytest.approx(0.0)
    assert g.metadata["approximate"]


def test_j_whitney_leaves_bubbles_zero(two_triangles):
    layout = Layout(uniform_assignment(two_triangles, TRIMMED, 2), 1)
    omega = _piecewise(two_triangles, TRIMMED, 2, 1, 3)
    g = j_whitney(omega, layout)
    assert all(x == 0 for x in g.coefficients[layout.whitney_size:])


def test_j_local_of_zero_is_zero(two_triangles):
    a = uniform_assignment(two_triangles, FULL, 3)
    sol = j_local(a, (0, 1, 2), 0, LocalForm.zero(2, 0))
    assert np.all(sol == 0) and sol.size == 1


@pytest.mark.parametrize("k", [0, 1, 2])
def test_local_systems_determine_the_bubbles(two_triangles, k):
    a = uniform_assignment(two_triangles, TRIMMED, 3)
    system = local_system(a, (0, 1, 2), k, np.zeros(monomial_index(2, k, 3).size), 3)
    normal = system.matrix.T @ system.matrix
    np.linalg.cholesky(normal)
    cocycle = system.matrix[system.cycle_rows:]
    if k < 2:
        assert np.allclose(cocycle, cocycle.T)


@pytest.mark.parametrize("family,r", [(TRIMMED, 1), (TRIMMED, 2), (FULL, 2), (FULL, 3), (TRIMMED, 3)])
def test_canonical_interpolant_is_identity_on_the_space(square, family, r):
    a = uniform_assignment(square, family, r)
    for k in range(3):
        layout = Layout(a, k)
        g = random_global_form(layout, random.Random(k))
        ip = interpolate_canonical(PiecewiseForm.from_global(g), layout)
        ref = g.coefficients.astype(float)
        assert np.abs(ip.coefficients - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


@pytest.mark.parametrize("family,r", [(TRIMMED, 1), (FULL, 2), (TRIMMED, 2)])
def test_canonical_interpolant_commutes(square, family, r):
    a = uniform_assignment(square, family, r)
    for k in range(2):
        la, lb = Layout(a, k), Layout(a, k + 1)
        omega = _piecewise(square, TRIMMED, r + 2, k, 11 + k)
        D = assemble_global_d(la, lb).to_dense_float()
        left = D @ interpolate_canonical(omega, la).coefficients
        right = interpolate_canonical(omega.d(), lb).coefficients
        assert np.abs(left - right).max() <= 1e-9 * max(1.0, np.abs(right).max())


def test_canonical_interpolant_commutes_on_mixed_orders(disk):
    a = random_assignment(disk, random.Random(5), max_extra=1)
    la, lb = Layout(a, 0), Layout(a, 1)
    omega = _piecewise(disk, TRIMMED, a.max_order + 1, 0, 2)
    D = assemble_global_d(la, lb).to_dense_float()
    left = D @ interpolate_canonical(omega, la).coefficients
    right = interpolate_canonical(omega.d(), lb).coefficients
    assert np.abs(left - right).max() <= 1e-9 * max(1.0, np.abs(right).max())


def test_relative_input_keeps_zero_boundary_traces(square):
    # ω vanishing on the boundary interpolates into the relative space exactly like into the absolute one
    a = uniform_assignment(square, TRIMMED, 2)
    for k in range(2):
        omega = _piecewise(square, TRIMMED, 3, k, 4, relative=True)
        absolute = interpolate_canonical(omega, Layout(a, k))
        relative = interpolate_canonical(omega, Layout(a, k, relative=True))
        lab = Layout(a, k)
        boundary = [i for i, s in enumerate(lab.whitney) if square.in_boundary(s)]
        assert np.abs(absolute.coefficients[boundary]).max() == 0
        for cell in square.cells:
            diff = relative.layout.synthesize(relative.coefficients, cell) - lab.synthesize(absolute.coefficients, cell)
            assert np.abs(diff).max() <= 1e-10
