"""Per-simplex sequence types over a complex, with hierarchy and validity checks."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations

from ..simplicial import Complex, ComplexError, Simplex
from .sequence import FULL, TRIMMED, SequenceType, SpaceTag, check_admissible, contains_whitney


class AssignmentError(ValueError):
    pass


def face_positions(n: int) -> list[tuple[int, ...]]:
    """Local faces of an n-simplex by vertex positions, ordered by dimension then lexicographically."""
    return [f for m in range(n + 1) for f in combinations(range(n + 1), m + 1)]


@dataclass(frozen=True)
class CellConfig:
    """Sequence types on all faces of one top cell, keyed by local face positions."""

    n: int
    types: tuple[SequenceType, ...]

    def tag(self, face: tuple[int, ...], k: int) -> SpaceTag:
        return self.types[_face_order(self.n)[face]][k]

    @property
    def R(self) -> int:
        return max(1, max(t.order for seq in self.types for t in seq.tags))


_FACE_ORDER: dict[int, dict] = {}


def _face_order(n: int) -> dict:
    order = _FACE_ORDER.get(n)
    if order is None:
        order = {f: i for i, f in enumerate(face_positions(n))}
        _FACE_ORDER[n] = order
    return order


@dataclass(eq=False)
class SequenceAssignment:
    complex: Complex
    types: dict[Simplex, SequenceType]
    _configs: dict = field(default_factory=dict, repr=False)

    def tag(self, simplex: Simplex, k: int) -> SpaceTag:
        return self.types[tuple(simplex)][k]

    @property
    def max_order(self) -> int:
        return max(t.order for seq in self.types.values() for t in seq.tags)

    def cell_config(self, cell: Simplex) -> CellConfig:
        cfg = self._configs.get(cell)
        if cfg is None:
            n = len(cell) - 1
            cfg = CellConfig(n, tuple(self.types[tuple(cell[p] for p in f)] for f in face_positions(n)))
            self._configs[cell] = cfg
        return cfg

    def hierarchy_violations(self) -> list[tuple[Simplex, Simplex, int]]:
        out = []
        for simplex, seq in self.types.items():
            m = len(simplex) - 1
            for d in range(m):
                for face in combinations(simplex, d + 1):
                    sub = self.types[face]
                    for k in range(d + 1):
                        if not sub[k] <= seq[k]:
                            out.append((face, simplex, k))
        return out

    def check_hierarchy(self) -> bool:
        return not self.hierarchy_violations()

    def problems(self) -> list[str]:
        msgs = []
        for simplex in self.complex.all_simplices():
            if simplex not in self.types:
                msgs.append(f"simplex {list(simplex)} has no sequence type")
        if msgs:
            return msgs
        for simplex, seq in self.types.items():
            m = len(simplex) - 1
            if len(seq) < m + 1:
                msgs.append(f"simplex {list(simplex)}: sequence type has no tag for degree {len(seq)}")
                continue
            local = seq.restrict(m)
            if not check_admissible(local):
                msgs.append(f"simplex {list(simplex)}: sequence type {local} is not admissible")
            for k in range(m + 1):
                if not contains_whitney(seq[k], k, m):
                    msgs.append(f"simplex {list(simplex)}: {seq[k]} at degree {k} does not contain the Whitney forms")
        for face, simplex, k in self.hierarchy_violations():
            msgs.append(f"hierarchy violated at degree {k}: {self.types[face][k]} on {list(face)} "
                        f"exceeds {self.types[simplex][k]} on {list(simplex)}")
        return msgs

    def validate(self) -> "SequenceAssignment":
        msgs = self.problems()
        if msgs:
            raise AssignmentError("; ".join(msgs[:5]) + (" ..." if len(msgs) > 5 else ""))
        return self

    def describe(self) -> list:
        return [[list(s), [str(t) for t in self.types[s].restrict(len(s) - 1).tags]]
                for s in self.complex.all_simplices()]


def default_type(family: str, r: int, n: int) -> SequenceType:
    if family == TRIMMED:
        return SequenceType.uniform_trimmed(r, n)
    if family == FULL:
        return SequenceType.full_sequence(r, n)
    raise AssignmentError(f"unknown family {family!r}")


def uniform_assignment(c: Complex, family: str, r: int) -> SequenceAssignment:
    seq = default_type(family, r, c.dim)
    return SequenceAssignment(c, {s: seq for s in c.all_simplices()}).validate()


def assignment_from_spec(c: Complex, spec: dict) -> SequenceAssignment:
    """Order-spec JSON: {"default": {"family", "order"}, "overrides": [{"simplex", "k"?, "family", "order"}]}."""
    try:
        default = spec["default"]
        base = default_type(default["family"], int(default["order"]), c.dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise AssignmentError(f"malformed order spec: {exc}") from None
    types = {s: base for s in c.all_simplices()}
    for item in spec.get("overrides", []):
        try:
            simplex = tuple(sorted(int(v) for v in item["simplex"]))
            family, order = item["family"], int(item["order"])
        except (KeyError, TypeError, ValueError) as exc:
            raise AssignmentError(f"malformed override {item!r}: {exc}") from None
        if simplex not in c:
            raise AssignmentError(f"override simplex {list(simplex)} is not in the mesh")
        if "k" in item:
            k = int(item["k"])
            tags = list(types[simplex].tags)
            if not 0 <= k < len(tags):
                raise AssignmentError(f"override degree {k} out of range")
            tags[k] = SpaceTag(family, order)
            types[simplex] = SequenceType(tuple(tags))
        else:
            types[simplex] = default_type(family, order, c.dim)
    return SequenceAssignment(c, types).validate()


def shaped_type(shape: tuple[str, ...], r: int) -> SequenceType:
    """Sequence type from a step pattern: shape[0] is the degree-0 family, later entries 'stay'/'drop'."""
    tags = [SpaceTag(shape[0], r)]
    for step in shape[1:]:
        prev = tags[-1]
        tags.append(SpaceTag(TRIMMED, prev.order) if step == "stay" else SpaceTag(FULL, prev.order - 1))
    return SequenceType(tuple(tags))


def minimal_shape_order(shape: tuple[str, ...], n: int) -> int:
    r = 0
    while True:
        seq = shaped_type(shape, r)
        if all(contains_whitney(seq[k], k, m) for m in range(n + 1) for k in range(m + 1)):
            return r
        r += 1


def random_assignment(c: Complex, rng: random.Random, max_extra: int = 1, shape=None) -> SequenceAssignment:
    """Non-uniform hierarchical assignment: random cell orders, faces take the minimum over their star."""
    n = c.dim
    if shape is None:
        shape = (rng.choice([FULL, TRIMMED]),) + tuple(rng.choice(["stay", "drop"]) for _ in range(n))
    base = minimal_shape_order(shape, n)
    cell_order = {cell: base + rng.randint(0, max_extra) for cell in c.cells}
    types = {}
    for s in c.all_simplices():
        types[s] = shaped_type(shape, min(cell_order[t] for t in c.star(s)))
    try:
        return SequenceAssignment(c, types).validate()
    except AssignmentError as exc:
        raise ComplexError(f"random assignment generator produced an invalid assignment: {exc}") from None
