from __future__ import annotations

from fractions import Fraction

import pytest

from feec import meshes
from feec.simplicial import ComplexError, betti_numbers, boundary_matrix, build_complex, euler_characteristic


@pytest.mark.parametrize("name", meshes.BUNDLED)
def test_bundled_betti_numbers(name):
    c = meshes.load_bundled(name)
    meta = meshes.bundled_metadata(name)
    assert betti_numbers(c) == meta["betti"]
    assert betti_numbers(c, relative=True) == meta["relative_betti"]


@pytest.mark.parametrize("builder,betti,relative", [
    (meshes.interval, [1, 0], [0, 1]),
    (meshes.two_triangles, [1, 0, 0], [0, 0, 1]),
    (meshes.annulus, [1, 1, 0], [0, 1, 1]),
    (meshes.tet_fan, [1, 0, 0, 0], [0, 0, 0, 1]),
])
def test_betti_numbers(builder, betti, relative):
    c = builder()
    assert betti_numbers(c) == betti
    assert betti_numbers(c, True) == relative


@pytest.mark.parametrize("builder", [meshes.interval, meshes.two_triangles, meshes.disk, meshes.annulus, meshes.tet_fan])
def test_euler_characteristic_matches_betti(builder):
    c = builder()
    for rel in (False, True):
        assert euler_characteristic(c, rel) == sum((-1) ** k * b for k, b in enumerate(betti_numbers(c, rel)))


@pytest.mark.parametrize("builder", [meshes.two_triangles, meshes.disk, meshes.tet_fan])
def test_boundary_of_boundary_is_zero(builder):
    c = builder()
    for rel in (False, True):
        for k in range(2, c.dim + 1):
            prod = boundary_matrix(c, k - 1, rel).matrix @ boundary_matrix(c, k, rel).matrix
            assert prod.is_zero()


def test_simplices_and_boundary(two_triangles):
    c = two_triangles
    assert c.simplices[1] == [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]
    assert c.in_boundary((0, 1)) and not c.in_boundary((0, 2))
    assert c.interior(1) == [(0, 2)]
    assert c.star((0, 2)) == [(0, 1, 2), (0, 2, 3)]


def test_cells_are_sorted_and_coordinates_exact():
    c = build_complex([(2, 1, 0)], [[0, 0], [0.5, 0], ["0", "1/3"]])
    assert c.cells == [(0, 1, 2)]
    assert c.coords[1][0] == Fraction(1, 2)
    assert c.coords[2][1] == Fraction(1, 3)


def test_relabeling_preserves_topology(disk):
    perm = list(reversed(range(len(disk.coords))))
    assert betti_numbers(disk.relabeled(perm)) == betti_numbers(disk)


@pytest.mark.parametrize("cells,coords,message", [
    ([], [[0, 0]], "no cells"),
    ([(0, 1, 2)], [[0, 0], [1, 0], [2, 0]], "cell"),
    ([(0, 1, 2)], [[0, 0], [1, 0], [0, 1], [5, 5]], "not used"),
    ([(0, 1, 3)], [[0, 0], [1, 0], [0, 1]], "references vertex 3"),
    ([(0, 0, 1)], [[0, 0], [1, 0]], "repeats"),
    ([(0, 1, 2), (2, 1, 0)], [[0, 0], [1, 0], [0, 1]], "duplicate"),
    ([(0, 1, 2), (0, 1)], [[0, 0], [1, 0], [0, 1]], "inconsistent"),
    ([(0, 1, 2), (0, 1, 3)], [[0, 0], [1, 0], [0, 1], [1, 1]], "overlap"),
    ([(0, 1, 2, 3)], [[0, 0], [1, 0], [0, 1], [1, 1]], "embedded"),
])
def test_invalid_meshes_are_rejected(cells, coords, message):
    with pytest.raises(ComplexError, match=message):
        build_complex(cells, coords)


def test_explicit_boundary_must_exist():
    with pytest.raises(ComplexError):
        build_complex([(0, 1, 2)], [[0, 0], [1, 0], [0, 1]], boundary=[(0, 3)])


def test_no_boundary_makes_relative_equal_absolute(two_triangles):
    c = two_triangles.without_boundary()
    assert betti_numbers(c, True) == betti_numbers(c)


def test_mesh_json_round_trip(annulus):
    data = meshes.mesh_to_json(annulus)
    back = meshes.mesh_from_json(data)
    assert back.cells == annulus.cells
    assert back.boundary == annulus.boundary
