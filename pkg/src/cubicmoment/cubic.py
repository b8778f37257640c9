"""Quartic extension of a normalized cubic moment sequence.

With M(1) = I the cubic data reduces to a = (a0, a1, a2, a3), where
a_i = beta_{3-i,i}. The five quartic moments are free, and the invariant

    k = (1 + a0*a2 + a1*a3) - (a1^2 + a2^2)

decides how they can be chosen:

* k = 0: setting beta_40 = 1 + a0^2 + a1^2, beta_31 = a0 a1 + a1 a2,
  beta_22 = a1^2 + a2^2, beta_13 = a1 a2 + a2 a3,
  beta_04 = 1 + a2^2 + a3^2 makes M(2) a rank-3 flat extension of M(1);
  all three degree-2 columns are combinations of {1, X, Y}.
* k > 0: the same quartics except beta_22 = 1 + a0 a2 + a1 a3 give a PSD
  M(2) of rank 4 whose column relations are exactly X^2 = 1 + a0 X + a1 Y
  and Y^2 = 1 + a2 X + a3 Y (an x-leading and a y-leading relation, so the
  matrix is recursively determinate and extends flatly one degree up).
* k < 0: beta_40 is bumped to 2 + a0^2 + a1^2, which makes {1, X, Y, X^2}
  independent (the compression M4 to those columns has determinant 1), and
  beta_22 = a1^2 + a2^2, beta_31 = a0 a1 + a1 a2, beta_13 = a1 a2 + a2 a3
  put the XY column back in the span: XY = a1 X + a2 Y. Completing M(2)
  flatly over M4 fixes beta_04 and yields
  Y^2 = p1 + p2 X + p3 Y + p4 X^2 with p = M4^{-1} (1, a2, a3, beta_22)^T
  and p4 = -k. Compatibility of the two XY^2 expansions then forces an
  X^3 relation, which pins the quintic moment beta_50 and lets the whole
  degree-3 matrix be filled in by functional calculus, flat over M(2).
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentRelationsError, MissingRelationError
from .moments import (
    MomentMatrix,
    MomentSequence,
    Monomial,
    Polynomial2,
    build_moment_matrix,
    monomial_index,
    monomials_up_to,
    sequence_length,
)

TOL_K = 1e-10

_ONE = Monomial(0, 0)
_X = Monomial(1, 0)
_Y = Monomial(0, 1)
_X2 = Monomial(2, 0)
_XY = Monomial(1, 1)
_Y2 = Monomial(0, 2)
_X3 = Monomial(3, 0)

BASIS_K0 = (_ONE, _X, _Y)
BASIS_KPOS = (_ONE, _X, _Y, _XY)
BASIS_KNEG = (_ONE, _X, _Y, _X2)


class CaseTag(enum.Enum):
    """Which extension route the sign of k selected."""

    FLAT_K0 = "k_zero"
    RECURSIVELY_DETERMINATE_K_POS = "k_pos"
    RANK_INCREASING_K_NEG = "k_neg"


@dataclass(frozen=True)
class ColumnRelation:
    """A dependent column: target = sum of combo[b] * (column b)."""

    target: Monomial
    combo: dict[Monomial, float]

    def polynomial(self) -> Polynomial2:
        """target - combo as a polynomial; its column vanishes on the matrix."""
        coeffs = {self.target: 1.0}
        for m, c in self.combo.items():
            coeffs[m] = coeffs.get(m, 0.0) - c
        return Polynomial2(coeffs)


@dataclass(frozen=True)
class ExtensionResult:
    """Extension certificate for one normalized input.

    basis lists the independent columns; relations express every dependent
    column over the basis. For the k < 0 route, p_vec is the Y^2 relation
    coefficient vector, beta50 the induced quintic moment, and m3 the flat
    degree-3 extension.
    """

    case: CaseTag
    k: float
    m2: MomentMatrix
    basis: tuple[Monomial, ...]
    relations: tuple[ColumnRelation, ...]
    p_vec: tuple[float, float, float, float] | None = None
    beta50: float | None = None
    m3: MomentMatrix | None = None


def compute_k(a) -> float:
    """The flatness invariant (1 + a0 a2 + a1 a3) - (a1^2 + a2^2)."""
    a0, a1, a2, a3 = (float(v) for v in a)
    return (1.0 + a0 * a2 + a1 * a3) - (a1 * a1 + a2 * a2)


def _as_tuple(a) -> tuple[float, float, float, float]:
    a0, a1, a2, a3 = (float(v) for v in a)
    return (a0, a1, a2, a3)


def _sequence4(a, quartics) -> MomentSequence:
    a0, a1, a2, a3 = a
    b40, b31, b22, b13, b04 = quartics
    return MomentSequence(
        4,
        np.array([1.0, 0.0, 0.0, 1.0, 0.0, 1.0, a0, a1, a2, a3, b40, b31, b22, b13, b04]),
    )


def _rel(target: Monomial, combo: dict[Monomial, float]) -> ColumnRelation:
    return ColumnRelation(target, {m: float(c) for m, c in combo.items() if float(c) != 0.0})


def extend_k0(a, tol_k: float = TOL_K) -> ExtensionResult:
    """Flat extension over M(1): every quartic determined, rank 3 (k = 0)."""
    a0, a1, a2, a3 = a = _as_tuple(a)
    k = compute_k(a)
    if abs(k) > tol_k:
        raise ValueError(f"k = {k:.6g} is not zero within {tol_k:g}")
    quartics = (
        1.0 + a0 * a0 + a1 * a1,
        a0 * a1 + a1 * a2,
        a1 * a1 + a2 * a2,  # equals 1 + a0 a2 + a1 a3 because k = 0
        a1 * a2 + a2 * a3,
        1.0 + a2 * a2 + a3 * a3,
    )
    m2 = build_moment_matrix(_sequence4(a, quartics))
    relations = (
        _rel(_X2, {_ONE: 1.0, _X: a0, _Y: a1}),
        _rel(_XY, {_X: a1, _Y: a2}),
        _rel(_Y2, {_ONE: 1.0, _X: a2, _Y: a3}),
    )
    return ExtensionResult(CaseTag.FLAT_K0, k, m2, BASIS_K0, relations)


def extend_kpos(a, tol_k: float = TOL_K) -> ExtensionResult:
    """Rank-4 PSD extension carrying only the X^2 and Y^2 relations (k > 0).

    The completion block exceeds its flat value by k in the single (XY, XY)
    entry, so {1, X, Y, XY} is independent and positivity is strict there.
    """
    a0, a1, a2, a3 = a = _as_tuple(a)
    k = compute_k(a)
    if k <= tol_k:
        raise ValueError(f"k = {k:.6g} is not positive beyond {tol_k:g}")
    quartics = (
        1.0 + a0 * a0 + a1 * a1,
        a0 * a1 + a1 * a2,
        1.0 + a0 * a2 + a1 * a3,
        a1 * a2 + a2 * a3,
        1.0 + a2 * a2 + a3 * a3,
    )
    m2 = build_moment_matrix(_sequence4(a, quartics))
    relations = (
        _rel(_X2, {_ONE: 1.0, _X: a0, _Y: a1}),
        _rel(_Y2, {_ONE: 1.0, _X: a2, _Y: a3}),
    )
    return ExtensionResult(CaseTag.RECURSIVELY_DETERMINATE_K_POS, k, m2, BASIS_KPOS, relations)


def extend_kneg(a, tol_k: float = TOL_K) -> ExtensionResult:
    """Rank-4 extension flat over the {1, X, Y, X^2} compression (k < 0).

    Includes the induced X^3 relation, the quintic moment beta_50, and the
    flat degree-3 matrix m3.
    """
    a0, a1, a2, a3 = a = _as_tuple(a)
    k = compute_k(a)
    if k >= -tol_k:
        raise ValueError(f"k = {k:.6g} is not negative beyond {tol_k:g}")
    b40 = 2.0 + a0 * a0 + a1 * a1
    b31 = a0 * a1 + a1 * a2
    b22 = a1 * a1 + a2 * a2
    b13 = a1 * a2 + a2 * a3
    m4 = np.array(
        [
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0, a0],
            [0.0, 0.0, 1.0, a1],
            [1.0, a0, a1, b40],
        ]
    )
    y2_column = np.array([1.0, a2, a3, b22])
    p = np.linalg.solve(m4, y2_column)  # m4 has determinant 1, always solvable
    b04 = float(p @ y2_column)  # flat completion: (Y^2)^T M4^{-1} (Y^2)
    m2 = build_moment_matrix(_sequence4(a, (b40, b31, b22, b13, b04)))
    x3_combo, beta50 = x3_relation(a, p)
    relations = (
        _rel(_XY, {_X: a1, _Y: a2}),
        _rel(_Y2, {_ONE: p[0], _X: p[1], _Y: p[2], _X2: p[3]}),
        ColumnRelation(_X3, x3_combo),
    )
    ext = ExtensionResult(
        CaseTag.RANK_INCREASING_K_NEG,
        k,
        m2,
        BASIS_KNEG,
        relations,
        p_vec=tuple(float(v) for v in p),
        beta50=beta50,
    )
    return dataclasses.replace(ext, m3=build_m3_kneg(a, ext))


def beta04_formula(a) -> float:
    """Closed-form beta_04 of the k < 0 completion.

    A degree-8 polynomial in a; algebraically it equals
    1 + k^2 + a2^2 + a3^2, hence is always >= 1.
    """
    a0, a1, a2, a3 = _as_tuple(a)
    return (
        2.0
        + a1**4
        + 2.0 * a0 * a2
        + a0**2 * a2**2
        + 2.0 * a1**2 * a2**2
        + a2**4
        + 2.0 * a1 * a3
        + 2.0 * a0 * a1 * a2 * a3
        + a3**2
        + a1**2 * a3**2
        - 2.0 * a1**2
        - 2.0 * a0 * a1**2 * a2
        - a2**2
        - 2.0 * a0 * a2**3
        - 2.0 * a1**3 * a3
        - 2.0 * a1 * a2**2 * a3
    )


def x3_relation(a, p_vec) -> tuple[dict[Monomial, float], float]:
    """X^3 column forced by matching the two XY^2 expansions (k < 0 route).

    XY^2 expands both through the XY relation and through the Y^2 relation;
    equating them and dividing by p4 gives

        X^3 = (1/p4) [ a2 p1 + (a1^2 + a2 p2 - p1 - a1 p3) X
                       + a1 a2 Y + (a2 p4 - p2) X^2 ].

    Returns (combo over {1, X, Y, X^2}, beta50), where beta50 evaluates the
    combo against the X^2 row of those columns, (1, a0, a1, beta_40).
    """
    a0, a1, a2, a3 = _as_tuple(a)
    p1, p2, p3, p4 = (float(v) for v in p_vec)
    if p4 == 0.0:
        raise ZeroDivisionError("p4 = 0: the Y^2 relation involves no X^2 term")
    c0 = a2 * p1 / p4
    c1 = (a1 * a1 + a2 * p2 - p1 - a1 * p3) / p4
    c2 = a1 * a2 / p4
    c3 = (a2 * p4 - p2) / p4
    b40 = 2.0 + a0 * a0 + a1 * a1
    beta50 = c0 + c1 * a0 + c2 * a1 + c3 * b40
    combo = {
        m: c
        for m, c in ((_ONE, c0), (_X, c1), (_Y, c2), (_X2, c3))
        if c != 0.0
    }
    return combo, float(beta50)


def span_reductions(
    basis, relations, up_to_degree: int
) -> dict[Monomial, np.ndarray]:
    """Coordinates of every monomial of degree <= up_to_degree over the basis.

    Rewrites x^i y^j by peeling one variable at a time and re-expanding
    through the relation set (the recursively-generated property in action).
    Raises MissingRelationError when some monomial cannot be expressed.
    """
    basis = tuple(Monomial(*b) for b in basis)
    pos = {b: i for i, b in enumerate(basis)}
    r = len(basis)
    red: dict[Monomial, np.ndarray] = {}
    for i, b in enumerate(basis):
        unit = np.zeros(r)
        unit[i] = 1.0
        red[b] = unit
    for rel in relations:
        vec = np.zeros(r)
        for m, c in rel.combo.items():
            if m not in pos:
                raise ValueError(f"relation for {rel.target} uses non-basis monomial {m}")
            vec[pos[m]] = c
        red[rel.target] = vec

    def shifted_expand(parent_vec: np.ndarray, di: int, dj: int) -> np.ndarray | None:
        acc = np.zeros(r)
        for b, coeff in zip(basis, parent_vec):
            if coeff == 0.0:
                continue
            image = red.get(Monomial(b.i + di, b.j + dj))
            if image is None:
                return None
            acc += coeff * image
        return acc

    for degree in range(1, up_to_degree + 1):
        pending = [
            Monomial(i, degree - i)
            for i in range(degree, -1, -1)
            if Monomial(i, degree - i) not in red
        ]
        while pending:
            progress = False
            for m in list(pending):
                vec = None
                if m.i > 0:
                    parent = red.get(Monomial(m.i - 1, m.j))
                    if parent is not None:
                        vec = shifted_expand(parent, 1, 0)
                if vec is None and m.j > 0:
                    parent = red.get(Monomial(m.i, m.j - 1))
                    if parent is not None:
                        vec = shifted_expand(parent, 0, 1)
                if vec is not None:
                    red[m] = vec
                    pending.remove(m)
                    progress = True
            if not progress:
                raise MissingRelationError(
                    f"cannot express {pending[0]} over basis {basis}"
                )
    return red


def build_m3_kneg(a, ext: ExtensionResult) -> MomentMatrix:
    """Degree-3 Hankel-block matrix extending m2 by functional calculus.

    Quintic and sextic moments come from rewriting each monomial over the
    basis and applying the Riesz values of the basis monomials. The two
    possible expansions of the XY^2 column (through the XY relation and
    through the Y^2 relation) must coincide; a mismatch beyond 1e-9 means
    the relation set is corrupt.
    """
    if ext.case is not CaseTag.RANK_INCREASING_K_NEG:
        raise ValueError("degree-3 completion is defined for the k < 0 route only")
    a0, a1, a2, a3 = _as_tuple(a)
    p1, p2, p3, p4 = ext.p_vec
    red = span_reductions(ext.basis, ext.relations, 6)
    via_xy = a1 * red[_XY] + a2 * red[_Y2]
    via_y2 = p1 * red[_X] + p2 * red[_X2] + p3 * red[_XY] + p4 * red[_X3]
    # relative to the expansion scale: near-degenerate k blows the X^3
    # coefficients up like 1/|k| without making the relations inconsistent
    scale = max(1.0, float(np.abs(via_xy).max()), float(np.abs(via_y2).max()))
    mismatch = float(np.abs(via_xy - via_y2).max())
    if mismatch > 1e-9 * scale:
        raise InconsistentRelationsError(
            f"the two XY^2 expansions disagree by {mismatch:.3e}"
        )
    riesz_basis = np.array(
        [ext.m2.entries[0, monomial_index(b)] for b in ext.basis]
    )
    vals = np.empty(sequence_length(6))
    for m in monomials_up_to(6):
        if m.degree <= 4:
            vals[monomial_index(m)] = ext.m2.moment(m)
        else:
            vals[monomial_index(m)] = float(red[m] @ riesz_basis)
    return build_moment_matrix(MomentSequence(6, vals))


# Gram matrix of the nonnegativity certificate for beta_04 - 1: it is
# u u^T + e2 e2^T + e3 e3^T with u = (1, 0, 0, -1, -1, 1, 1), hence PSD of
# rank 3 and flat over its identity 3x3 corner.
SOS_GRAM = np.array(
    [
        [1, 0, 0, -1, -1, 1, 1],
        [0, 1, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0],
        [-1, 0, 0, 1, 1, -1, -1],
        [-1, 0, 0, 1, 1, -1, -1],
        [1, 0, 0, -1, -1, 1, 1],
        [1, 0, 0, -1, -1, 1, 1],
    ],
    dtype=float,
)


def sos_certificate_check(a, tol: float = 1e-9) -> bool:
    """Check y^T R y = beta04_formula(a) - 1 >= 0 for the fixed Gram matrix R.

    y = (1, a2, a3, a1^2, a2^2, a0 a2, a1 a3). Certifies that the k < 0
    completion always has beta_04 >= 1.
    """
    a0, a1, a2, a3 = _as_tuple(a)
    y = np.array([1.0, a2, a3, a1 * a1, a2 * a2, a0 * a2, a1 * a3])
    quad = float(y @ SOS_GRAM @ y)
    return abs(quad - (beta04_formula(a) - 1.0)) <= tol and quad >= -1e-12


def extend(a, tol_k: float = TOL_K) -> ExtensionResult:
    """Dispatch on the sign of k; ties within tol_k go to the flat rank-3 case."""
    k = compute_k(a)
    if abs(k) <= tol_k:
        return extend_k0(a, tol_k)
    if k > 0.0:
        return extend_kpos(a, tol_k)
    return extend_kneg(a, tol_k)
