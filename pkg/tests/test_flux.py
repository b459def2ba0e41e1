from __future__ import annotations

import random

import numpy as np
import pytest
import scipy.linalg as sla

from feec import meshes
from feec.barycentric import integrate_form
from feec.flux import (
    HarmonicResidualError,
    NotClosedError,
    closed_nonexact_form,
    cohomology_dims,
    flux_reconstruct,
    full_reconstruct,
    layout_for,
    layout_mass,
    pseudo_inverse_local,
    pseudo_inverse_whitney,
    whitney_cohomology_dims,
)
from feec.interpolants import PiecewiseForm, interpolate_whitney, whitney_assignment
from feec.simplicial import build_complex
from feec.spaces.assignment import random_assignment, uniform_assignment
from feec.spaces.layout import GlobalForm, assemble_global_d, random_global_form
from feec.spaces.sequence import FULL, TRIMMED


def _exact_form(a, k, seed, relative=False):
    lower, layout = layout_for(a, k - 1, relative), layout_for(a, k, relative)
    xi = random_global_form(lower, random.Random(seed))
    return GlobalForm(layout, assemble_global_d(lower, layout).matrix.matvec(xi.coefficients))


def _least_squares_distance(layout_a, layout_b, omega):
    """min_x ‖D x − ω‖ in the L² norm of layout_b, via a plain least-squares solve."""
    D = assemble_global_d(layout_a, layout_b).to_dense_float()
    L = np.linalg.cholesky(layout_mass(layout_b).toarray())
    x, *_ = sla.lstsq(L.T @ D, L.T @ omega)
    r = D @ x - omega
    return float(np.sqrt(r @ layout_mass(layout_b).toarray() @ r))


def test_whitney_pseudo_inverse_reconstructs_exact_forms(disk):
    a = whitney_assignment(disk)
    for k in (1, 2):
        omega = _exact_form(a, k, k).coefficients.astype(float)
        P = pseudo_inverse_whitney(disk, k)
        assert np.abs(P.D @ P.apply(omega) - omega).max() <= 1e-10 * np.abs(omega).max()
        assert P.contract_defect() <= 1e-10
        assert np.all(P.apply(np.zeros_like(omega)) == 0)


def test_whitney_pseudo_inverse_residual_is_the_harmonic_obstruction(annulus):
    a = whitney_assignment(annulus)
    l0, l1 = layout_for(a, 0), layout_for(a, 1)
    h = closed_nonexact_form(l1).coefficients.astype(float)
    P = pseudo_inverse_whitney(annulus, 1)
    r = P.D @ P.apply(h) - h
    residual = float(np.sqrt(r @ layout_mass(l1).toarray() @ r))
    assert residual > 1e-3
    assert residual == pytest.approx(_least_squares_distance(l0, l1, h), rel=1e-10)


def test_local_pseudo_inverse_on_a_cell(two_triangles):
    a = uniform_assignment(two_triangles, FULL, 3)
    for k in (1, 2):
        inv = pseudo_inverse_local(a, (0, 1, 2), k)
        assert inv.contract_defect() <= 1e-10
        xi = np.random.default_rng(k).uniform(-1, 1, inv.D.shape[1])
        beta = inv.D @ xi
        assert np.linalg.norm(inv.D @ inv.apply(beta) - beta) <= 1e-10 * np.linalg.norm(beta)
        assert np.all(inv.apply(np.zeros(inv.D.shape[0])) == 0)


def test_local_condition_numbers_do_not_depend_on_mesh_size():
    base = [[0, 0], [1, 0], [0, 1]]
    small = build_complex([(0, 1, 2)], base)
    large = build_complex([(0, 1, 2)], [[8 * x for x in p] for p in base])
    for k in (1, 2):
        c1 = pseudo_inverse_local(uniform_assignment(small, TRIMMED, 3), (0, 1, 2), k).condition_number
        c2 = pseudo_inverse_local(uniform_assignment(large, TRIMMED, 3), (0, 1, 2), k).condition_number
        assert c1 == pytest.approx(c2, rel=1e-8)


@pytest.mark.parametrize("family,r", [(TRIMMED, 1), (TRIMMED, 2), (FULL, 2), (TRIMMED, 3), (FULL, 3)])
def test_flux_reconstruction_in_2d(square, family, r):
    a = uniform_assignment(square, family, r)
    for relative in (False, True):
        for k in (1, 2):
            omega = _exact_form(a, k, 10 * k + r, relative)
            result = flux_reconstruct(omega.to_float())
            assert result.report["residual"] < 1e-9
            xi, report = full_reconstruct(omega.to_float())
            assert report["full_residual"] < 1e-8


def test_flux_reconstruction_in_3d(two_tets):
    for family, r in [(TRIMMED, 2), (FULL, 3)]:
        a = uniform_assignment(two_tets, family, r)
        for k in (1, 2, 3):
            xi, report = full_reconstruct(_exact_form(a, k, k).to_float())
            assert report["residual"] < 1e-9 and report["full_residual"] < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_flux_reconstruction_on_mixed_orders(disk, seed):
    a = random_assignment(disk, random.Random(seed), max_extra=2)
    for k in (1, 2):
        xi, report = full_reconstruct(_exact_form(a, k, seed).to_float())
        assert report["residual"] < 1e-9 and report["full_residual"] < 1e-8


def test_lowest_order_part_is_the_whitney_interpolant(square):
    a = uniform_assignment(square, TRIMMED, 3)
    omega = _exact_form(a, 1, 5)
    result = flux_reconstruct(omega.to_float())
    iw = interpolate_whitney(PiecewiseForm.from_global(omega), square)
    assert np.abs(result.omega0.coefficients - iw.coefficients.astype(float)).max() <= 1e-12


def test_whitney_input_needs_no_local_corrections(square):
    a = uniform_assignment(square, TRIMMED, 1)
    omega = _exact_form(a, 1, 1).to_float()
    result = flux_reconstruct(omega)
    assert np.all(result.xi_hi.coefficients == 0)
    assert np.array_equal(result.omega0.coefficients, omega.coefficients)


def test_divergence_reconstruction_on_two_triangles(two_triangles):
    # ω is a piecewise quadratic density; ω_0 keeps the cell integrals and bubbles carry the rest
    a = uniform_assignment(two_triangles, FULL, 3)
    layout = layout_for(a, 2)
    omega = random_global_form(layout, random.Random(2))
    result = flux_reconstruct(omega.to_float())
    pieces = PiecewiseForm.from_global(omega)
    for i, cell in enumerate(result.omega0.layout.whitney):
        assert result.omega0.coefficients[i] == pytest.approx(2 * float(integrate_form(pieces.pieces[cell])), abs=1e-14)
    lower = result.xi_hi.layout
    assert np.all(result.xi_hi.coefficients[: lower.whitney_size] == 0)
    assert result.report["residual"] < 1e-12


def test_processing_order_does_not_matter(disk):
    a = random_assignment(disk, random.Random(1), max_extra=1)
    omega = _exact_form(a, 1, 3).to_float()
    base = flux_reconstruct(omega).xi_hi.coefficients
    shuffled = flux_reconstruct(omega, order=lambda level: random.Random(7).sample(level, len(level))).xi_hi.coefficients
    assert np.abs(base - shuffled).max() < 1e-12


def test_zero_form_gives_zero(disk):
    layout = layout_for(uniform_assignment(disk, TRIMMED, 2), 1)
    xi, report = full_reconstruct(GlobalForm.zero(layout, exact=False))
    assert np.all(xi.coefficients == 0) and report["full_residual"] == 0


def test_non_closed_input_is_rejected(square):
    layout = layout_for(uniform_assignment(square, TRIMMED, 2), 1)
    with pytest.raises(NotClosedError):
        flux_reconstruct(random_global_form(layout, random.Random(0)).to_float())


def test_harmonic_input_is_flagged(annulus):
    a = uniform_assignment(annulus, TRIMMED, 2)
    l0, l1 = layout_for(a, 0), layout_for(a, 1)
    h = closed_nonexact_form(l1)
    with pytest.raises(HarmonicResidualError) as info:
        full_reconstruct(h.to_float())
    w = whitney_assignment(annulus)
    iw = interpolate_whitney(PiecewiseForm.from_global(h), annulus).coefficients.astype(float)
    expected = _least_squares_distance(layout_for(w, 0), layout_for(w, 1), iw)
    assert info.value.residual == pytest.approx(expected, rel=1e-9)
    assert info.value.residual >= _least_squares_distance(l0, l1, h.coefficients.astype(float)) - 1e-12


def test_cohomology_matches_betti_numbers(disk, annulus):
    assert cohomology_dims(uniform_assignment(disk, FULL, 2)) == [1, 0, 0]
    assert cohomology_dims(uniform_assignment(disk, TRIMMED, 2), relative=True) == [0, 0, 1]
    assert cohomology_dims(uniform_assignment(annulus, TRIMMED, 2)) == [1, 1, 0]
    assert whitney_cohomology_dims(annulus, relative=True) == [0, 1, 1]


def test_cohomology_in_3d():
    c = meshes.tet_fan()
    assert whitney_cohomology_dims(c) == [1, 0, 0, 0]
    assert whitney_cohomology_dims(c, relative=True) == [0, 0, 0, 1]
