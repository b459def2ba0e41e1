"""Local extension operators from a face F to a simplex T ⊇ F."""
from __future__ import annotations

from functools import lru_cache, reduce

import numpy as np
from gmpy2 import mpq

from ..barycentric import LocalForm, wedge, whitney_form
from ..coords import monomial_index, pad
from ..rational import left_inverse, qzeros
from .local import PLAIN, local_basis, space_degree
from .sequence import FULL, TRIMMED, SpaceTag


def _check_face(face: tuple[int, ...], n: int) -> None:
    if list(face) != sorted(set(face)) or not face or face[0] < 0 or face[-1] > n:
        raise ValueError(f"{face} is not a face of the {n}-simplex")


def _lift_alpha(alpha: tuple[int, ...], face: tuple[int, ...], n: int) -> tuple[int, ...]:
    out = [0] * (n + 1)
    for j, a in enumerate(alpha):
        out[face[j]] = a
    return tuple(out)


def _monomial(alpha: tuple[int, ...]) -> LocalForm:
    return LocalForm(len(alpha) - 1, 0, {(alpha, ()): 1})


def extend_trimmed_member(alpha, rho, face, n) -> LocalForm:
    """λ_T^{α_{F,T}} φ^T_{ρ_{F,T}} for the spanning member λ_F^α φ^F_ρ."""
    lifted = _lift_alpha(alpha, face, n)
    return wedge(_monomial(lifted), whitney_form(tuple(face[j] for j in rho), n))


def extend_full_member(alpha, sigma, face, n, r: int) -> LocalForm:
    """λ_T^{α_{F,T}} Ψ_{σ_{F,T}} with Ψ_i = dλ_i − (α_{F,T}(i)/r) Σ_{j∈F} dλ_{ι(j)}."""
    lifted = _lift_alpha(alpha, face, n)
    face_sum = reduce(lambda a, b: a + b, (LocalForm.differential(n, v) for v in face))
    psi = []
    for j in sigma:
        i = face[j]
        d_i = LocalForm.differential(n, i)
        if lifted[i]:
            d_i = d_i - face_sum * mpq(lifted[i], r)
        psi.append(d_i)
    out = _monomial(lifted)
    for p in psi:
        out = wedge(out, p)
    return out


@lru_cache(maxsize=None)
def ext_matrix(m: int, n: int, k: int, tag: SpaceTag, face: tuple[int, ...], R: int | None = None) -> np.ndarray:
    """Extension MI(m,k,deg tag) -> MI(n,k,R) defined on the tagged space of the face.

    Inputs outside the tagged space are projected silently; callers check membership.
    """
    _check_face(face, n)
    if len(face) != m + 1:
        raise ValueError("face size does not match m")
    R = space_degree(tag) if R is None else R
    dst = monomial_index(n, k, R)
    plain = local_basis(m, tag, k, PLAIN)
    if plain.dim == 0:
        return qzeros((dst.size, monomial_index(m, k, space_degree(tag)).size))
    images = qzeros((dst.size, plain.dim))
    for j, (alpha, alt) in enumerate(plain.labels):
        if tag.family == TRIMMED:
            image = extend_trimmed_member(alpha, alt, face, n)
        else:
            image = extend_full_member(alpha, alt, face, n, tag.order)
        images[:, j] = dst.vector(image)
    return images.dot(left_inverse(plain.matrix))


def _extend(omega: LocalForm, face, n: int, tag: SpaceTag) -> LocalForm:
    _check_face(tuple(face), n)
    m = len(face) - 1
    if omega.n != m:
        raise ValueError(f"form lives on a {omega.n}-simplex but the face has dimension {m}")
    if tuple(face) == tuple(range(n + 1)):
        return omega
    basis = local_basis(m, tag, omega.k, PLAIN)
    src = monomial_index(m, omega.k, space_degree(tag))
    if omega.degree > space_degree(tag):
        raise ValueError(f"form is not in {tag}Λ^{omega.k}")
    vec = src.vector(omega)
    if basis.coordinates(vec) is None:
        raise ValueError(f"form is not in {tag}Λ^{omega.k}")
    mat = ext_matrix(m, n, omega.k, tag, tuple(face))
    return monomial_index(n, omega.k, space_degree(tag)).form(mat.dot(vec))


def minimal_order(omega: LocalForm, family: str) -> int:
    r = max(omega.degree, 0) if family == FULL else max(omega.degree, 1)
    while local_basis(omega.n, SpaceTag(family, r), omega.k, PLAIN).coordinates(
        monomial_index(omega.n, omega.k, r).vector(omega)
    ) is None:
        r += 1
    return r


def ext_trimmed(omega: LocalForm, face, n: int, order: int | None = None) -> LocalForm:
    """Extension of ω ∈ P_r⁻Λ^k(F) to the n-simplex; r defaults to the smallest fitting order."""
    r = minimal_order(omega, TRIMMED) if order is None else order
    return _extend(omega, face, n, SpaceTag(TRIMMED, r))


def ext_full(omega: LocalForm, face, n: int, order: int | None = None) -> LocalForm:
    """Extension of ω ∈ P_rΛ^k(F) to the n-simplex; r defaults to the smallest fitting order."""
    r = minimal_order(omega, FULL) if order is None else order
    return _extend(omega, face, n, SpaceTag(FULL, r))


def extension_operator(m: int, n: int, k: int, tag: SpaceTag, face: tuple[int, ...], R: int) -> np.ndarray:
    """Extension as a matrix MI(m,k,R) -> MI(n,k,R) (columns beyond the tag degree are zero)."""
    mat = ext_matrix(m, n, k, tag, tuple(face), R)
    src_size = monomial_index(m, k, R).size
    if mat.shape[1] == src_size:
        return mat
    return pad(mat.T, src_size).T
