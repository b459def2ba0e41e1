"""Formal space symbols P_r / P_r⁻ and admissible sequence types."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

FULL = "full"
TRIMMED = "trimmed"


@dataclass(frozen=True, order=False)
class SpaceTag:
    family: str
    order: int

    def __post_init__(self):
        if self.family not in (FULL, TRIMMED):
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def rank_key(self) -> int:
        # P_r⁻ < P_r < P_{r+1}⁻
        return 2 * self.order + (1 if self.family == FULL else 0)

    def __le__(self, other: "SpaceTag") -> bool:
        return self.rank_key <= other.rank_key

    def __lt__(self, other: "SpaceTag") -> bool:
        return self.rank_key < other.rank_key

    def __ge__(self, other: "SpaceTag") -> bool:
        return self.rank_key >= other.rank_key

    def __gt__(self, other: "SpaceTag") -> bool:
        return self.rank_key > other.rank_key

    def __str__(self) -> str:
        return f"P{self.order}" + ("-" if self.family == TRIMMED else "")

    def to_json(self) -> dict:
        return {"family": self.family, "order": self.order}

    @classmethod
    def parse(cls, text: str) -> "SpaceTag":
        text = text.strip()
        if not text.startswith("P"):
            raise ValueError(f"cannot parse space tag {text!r}")
        if text.endswith("-"):
            return cls(TRIMMED, int(text[1:-1]))
        return cls(FULL, int(text[1:]))


def full(r: int) -> SpaceTag:
    return SpaceTag(FULL, r)


def trimmed(r: int) -> SpaceTag:
    return SpaceTag(TRIMMED, r)


WHITNEY = trimmed(1)


def contains_whitney(tag: SpaceTag, k: int, m: int) -> bool:
    """Whether the space of tag on an m-simplex at degree k contains the Whitney k-forms."""
    if tag >= WHITNEY:
        return True
    return k == m and tag == full(0)


@dataclass(frozen=True)
class SequenceType:
    """Space tags per form degree k = 0..len-1."""

    tags: tuple[SpaceTag, ...]

    def __getitem__(self, k: int) -> SpaceTag:
        return self.tags[k]

    def __len__(self) -> int:
        return len(self.tags)

    @classmethod
    def from_mapping(cls, tags: Mapping[int, SpaceTag]) -> "SequenceType":
        return cls(tuple(tags[k] for k in range(len(tags))))

    @classmethod
    def uniform_trimmed(cls, r: int, n: int) -> "SequenceType":
        return cls(tuple(trimmed(r) for _ in range(n + 1)))

    @classmethod
    def full_sequence(cls, r: int, n: int) -> "SequenceType":
        """P_r, P_{r-1}, ..., P_{r-n}."""
        return cls(tuple(full(r - k) for k in range(n + 1)))

    def restrict(self, m: int) -> "SequenceType":
        return SequenceType(self.tags[: m + 1])

    def __le__(self, other: "SequenceType") -> bool:
        return all(a <= b for a, b in zip(self.tags, other.tags))

    def __str__(self) -> str:
        return "(" + ", ".join(str(t) for t in self.tags) + ")"


def admissible_successors(tag: SpaceTag) -> tuple[SpaceTag, SpaceTag]:
    return trimmed(tag.order), full(tag.order - 1)


def check_admissible(seq: SequenceType) -> bool:
    """P(k) ∈ {P_r⁻, P_r} implies P(k+1) ∈ {P_r⁻, P_{r-1}} for all consecutive degrees."""
    return all(seq[k + 1] in admissible_successors(seq[k]) for k in range(len(seq) - 1))
