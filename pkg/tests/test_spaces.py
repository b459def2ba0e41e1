from __future__ import annotations

import random

import pytest

from feec.barycentric import LocalForm, trace, whitney_form
from feec.simplicial import build_complex
from feec.spaces.assignment import (
    AssignmentError,
    SequenceAssignment,
    assignment_from_spec,
    random_assignment,
    uniform_assignment,
)
from feec.spaces.extension import ext_full, ext_trimmed
from feec.spaces.layout import (
    GlobalForm,
    Layout,
    assemble_global_d,
    decompose_piecewise,
    DecompositionError,
    geometric_decompose,
    global_extension,
    random_global_form,
    reassemble,
)
from feec.spaces.local import RING, UNDERLINE, UNDERLINE_RING, VARIANTS, bubble_basis, dimension_formula, local_basis
from feec.spaces.sequence import FULL, TRIMMED, SequenceType, SpaceTag, check_admissible, full, trimmed

from properties import extension_failures, global_dd_is_zero, roundtrip_failures


def test_admissible_sequences():
    assert not check_admissible(SequenceType((full(1), full(2))))
    assert check_admissible(SequenceType.uniform_trimmed(3, 2))
    assert check_admissible(SequenceType.full_sequence(3, 3))
    assert check_admissible(SequenceType((full(2), trimmed(2), full(1))))


def test_p2_p1_p1_is_not_admissible():
    # d maps P_1Λ^1 only onto P_0Λ^2 on a triangle, so this sequence is not exact
    assert not check_admissible(SequenceType((full(2), full(1), full(1))))


def test_space_tag_order():
    assert trimmed(1) < full(1) < trimmed(2) < full(2)
    assert SpaceTag.parse("P3-") == trimmed(3)
    assert SpaceTag.parse("P0") == full(0)
    with pytest.raises(ValueError):
        SpaceTag("serendipity", 1)


def test_hierarchy_conditions(two_triangles):
    uniform = uniform_assignment(two_triangles, TRIMMED, 2)
    assert uniform.check_hierarchy()
    types = dict(uniform.types)
    types[(0, 2)] = SequenceType.uniform_trimmed(3, 2)
    violated = SequenceAssignment(two_triangles, types)
    assert not violated.check_hierarchy()
    assert {(f, s) for f, s, _ in violated.hierarchy_violations()} == {((0, 2), (0, 1, 2)), ((0, 2), (0, 2, 3))}
    with pytest.raises(AssignmentError, match="hierarchy"):
        violated.validate()
    types = dict(uniform.types)
    types[(0, 1, 2)] = SequenceType.uniform_trimmed(3, 2)
    assert SequenceAssignment(two_triangles, types).check_hierarchy()


def test_whitney_containment_is_required(two_triangles):
    with pytest.raises(AssignmentError, match="Whitney"):
        uniform_assignment(two_triangles, FULL, 1)


def test_order_spec_overrides(two_triangles):
    spec = {"default": {"family": "trimmed", "order": 1},
            "overrides": [{"simplex": [0, 1, 2], "family": "trimmed", "order": 3}]}
    a = assignment_from_spec(two_triangles, spec)
    assert a.tag((0, 1, 2), 1) == trimmed(3)
    assert a.tag((0, 2, 3), 1) == trimmed(1)
    with pytest.raises(AssignmentError):
        assignment_from_spec(two_triangles, {"default": {"family": "trimmed"}})
    with pytest.raises(AssignmentError):
        assignment_from_spec(two_triangles, {"default": {"family": "trimmed", "order": 1},
                                             "overrides": [{"simplex": [0, 9], "family": "full", "order": 2}]})


@pytest.mark.parametrize("seed", range(5))
def test_random_assignments_are_valid(disk, seed):
    a = random_assignment(disk, random.Random(seed), max_extra=2)
    assert not a.problems()


def test_local_basis_dimensions_by_hand():
    assert local_basis(3, full(2), 1).dim == 30
    assert local_basis(2, trimmed(1), 1).dim == 3
    assert local_basis(2, full(3), 0, RING).dim == 1
    assert local_basis(2, trimmed(1), 1, RING).dim == 0


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("family", [FULL, TRIMMED])
def test_dimension_formulas(n, family):
    for r in range(5):
        for k in range(n + 1):
            for variant in VARIANTS:
                tag = SpaceTag(family, r)
                assert local_basis(n, tag, k, variant).dim == dimension_formula(n, tag, k, variant), (r, k, variant)


def test_published_full_ring_formula_overcounts():
    tag = full(3)
    assert local_basis(2, tag, 0, RING).dim == dimension_formula(2, tag, 0, RING) == 1
    assert dimension_formula(2, tag, 0, RING, printed=True) == 6


def test_underline_removes_one_direction():
    assert local_basis(2, full(2), 0, UNDERLINE).dim == local_basis(2, full(2), 0).dim - 1
    assert local_basis(2, full(2), 2, UNDERLINE_RING).dim == local_basis(2, full(2), 2).dim - 1


def test_extension_identity_when_face_is_the_simplex():
    omega = LocalForm.monomial((0, 1, 1), (1,))
    assert ext_trimmed(omega, (0, 1, 2), 2) == omega
    assert ext_full(omega, (0, 1, 2), 2) == omega


def test_whitney_edge_form_extends_to_the_triangle_form():
    assert ext_trimmed(whitney_form((0, 1), 1), (0, 1), 2) == whitney_form((0, 1), 2)
    assert ext_trimmed(whitney_form((0, 1), 1), (1, 2), 2) == whitney_form((1, 2), 2)


def test_edge_bubble_extension_is_local():
    bubble = LocalForm.monomial((1, 1))
    ext = ext_full(bubble, (0, 1), 2, 2)
    assert trace(ext, (0, 1)) == bubble
    assert trace(ext, (1, 2)).is_zero()
    assert trace(ext, (0, 2)).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("tag", [trimmed(1), trimmed(2), full(1), full(2), trimmed(3)])
def test_extension_properties(n, tag):
    for k in range(n + 1):
        assert extension_failures(n, tag, k) == []


def test_global_extension_of_a_cell_bubble(two_triangles):
    a = uniform_assignment(two_triangles, FULL, 3)
    bubble = bubble_basis(2, full(3), 0).forms()[0]
    ext = global_extension(a, (0, 1, 2), bubble)
    assert ext[(0, 1, 2)] == bubble
    assert ext[(0, 2, 3)].is_zero()


def test_global_extension_of_an_edge_bubble(two_triangles):
    a = uniform_assignment(two_triangles, FULL, 2)
    bubble = bubble_basis(1, full(2), 0).forms()[0]
    ext = global_extension(a, (0, 2), bubble)
    left, right = ext[(0, 1, 2)], ext[(0, 2, 3)]
    assert not left.is_zero() and not right.is_zero()
    assert trace(left, (0, 2)) == trace(right, (0, 1)) == bubble
    zero = global_extension(a, (0, 2), LocalForm.zero(1, 0))
    assert all(w.is_zero() for w in zero.values())


def test_whitney_form_decomposes_to_itself(two_triangles):
    a = uniform_assignment(two_triangles, TRIMMED, 3)
    layout = Layout(a, 1)
    pieces = {cell: whitney_form((0, 1), 2) * 0 for cell in two_triangles.cells}
    pieces[(0, 1, 2)] = whitney_form((0, 2), 2)
    pieces[(0, 2, 3)] = whitney_form((0, 1), 2)
    dec = geometric_decompose(layout, pieces)
    assert dec.whitney[(0, 2)] == 1
    assert all(v == 0 for s, v in dec.whitney.items() if s != (0, 2))
    assert all(w.is_zero() for w in dec.interior.values())


def test_cubic_lagrange_split_on_one_triangle():
    c = build_complex([(0, 1, 2)], [[0, 0], [1, 0], [0, 1]], boundary=None)
    layout = Layout(uniform_assignment(c, FULL, 3), 0)
    lam = [LocalForm.coordinate(2, i) for i in range(3)]
    edge_bubble = LocalForm.monomial((1, 1, 0)) * 4
    omega = lam[0] * 2 + lam[1] * 3 + edge_bubble + LocalForm.monomial((1, 1, 1)) * 27
    dec = geometric_decompose(layout, {(0, 1, 2): omega})
    assert [dec.whitney[(v,)] for v in range(3)] == [2, 3, 0]
    assert dec.interior[(0, 1)] == LocalForm.monomial((1, 1)) * 4
    assert dec.interior[(0, 2)].is_zero() and dec.interior[(1, 2)].is_zero()
    # the edge part extends through its cubic representative λ0λ1(λ0+λ1) = λ0λ1(1−λ2)
    assert dec.interior[(0, 1, 2)] == LocalForm.monomial((1, 1, 1)) * 31
    assert reassemble(layout, dec)[(0, 1, 2)].tolist() == layout.synthesize(dec.form.coefficients, (0, 1, 2)).tolist()


@pytest.mark.parametrize("family,r", [(TRIMMED, 1), (TRIMMED, 2), (FULL, 2), (TRIMMED, 3), (FULL, 3)])
def test_decomposition_round_trip(two_triangles, family, r):
    a = uniform_assignment(two_triangles, family, r)
    for k in range(3):
        assert roundtrip_failures(Layout(a, k), range(10)) == 0
        assert roundtrip_failures(Layout(a, k, relative=True), range(5)) == 0


def test_mismatched_traces_are_rejected(two_triangles):
    layout = Layout(uniform_assignment(two_triangles, TRIMMED, 1), 0)
    pieces = {(0, 1, 2): LocalForm.constant(2), (0, 2, 3): LocalForm.constant(2, 2)}
    with pytest.raises(DecompositionError, match="trace mismatch"):
        decompose_piecewise(layout, pieces)


def test_relative_layout_rejects_boundary_values(two_triangles):
    layout = Layout(uniform_assignment(two_triangles, TRIMMED, 1), 0, relative=True)
    pieces = {cell: LocalForm.constant(2) for cell in two_triangles.cells}
    with pytest.raises(DecompositionError, match="boundary"):
        decompose_piecewise(layout, pieces)


def test_d_of_constant_is_zero(disk):
    a = uniform_assignment(disk, FULL, 2)
    l0, l1 = Layout(a, 0), Layout(a, 1)
    pieces = {cell: LocalForm.constant(2) for cell in disk.cells}
    one = decompose_piecewise(l0, pieces)
    d = assemble_global_d(l0, l1)
    assert all(x == 0 for x in d.matrix.matvec(one.coefficients))
    assert d.exact_rank() == l0.size - 1


@pytest.mark.parametrize("family,r", [(TRIMMED, 1), (FULL, 2), (TRIMMED, 3)])
def test_global_d_squared_is_zero(square, family, r):
    a = uniform_assignment(square, family, r)
    assert global_dd_is_zero(a)
    assert global_dd_is_zero(a, relative=True)


def test_global_d_squared_on_mixed_orders(disk):
    a = random_assignment(disk, random.Random(3), max_extra=2)
    assert global_dd_is_zero(a)


def test_global_d_squared_in_3d(two_tets):
    assert global_dd_is_zero(uniform_assignment(two_tets, TRIMMED, 2))


def test_global_form_json_round_trip(two_triangles):
    layout = Layout(uniform_assignment(two_triangles, FULL, 3), 1)
    g = random_global_form(layout, random.Random(0))
    back = GlobalForm.from_json(layout, g.to_json())
    assert all(back.coefficients == g.coefficients)
    with pytest.raises(ValueError):
        GlobalForm.from_json(Layout(uniform_assignment(two_triangles, FULL, 2), 1), g.to_json())


def test_layout_blocks(two_triangles):
    layout = Layout(uniform_assignment(two_triangles, TRIMMED, 2), 1)
    assert layout.whitney_size == 5
    assert layout.size == layout.whitney_size + sum(size for _, size in layout.bubbles)
    assert layout.size == 5 + 5 + 2 * 2
