"""Polynomial form spaces, sequence types, extensions and global layouts."""
from .local import VARIANTS, bubble_basis, dimension_formula, local_basis
from .sequence import FULL, TRIMMED, SequenceType, SpaceTag, full, trimmed

__all__ = ["FULL", "TRIMMED", "VARIANTS", "SequenceType", "SpaceTag", "bubble_basis", "dimension_formula",
           "full", "local_basis", "trimmed"]
