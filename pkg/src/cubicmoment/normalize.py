"""Degree-one (affine) changes of plane coordinates.

An invertible map psi(x, y) = (a + b x + c y, d + e x + f y) carries a
moment problem to an equivalent one: the pushforward sequence is
beta~_ij = Lambda_beta(psi1^i psi2^j), moment matrices transform by
congruence with the substitution matrix J, and representing measures
correspond one-to-one with atoms mapped through psi.

The specific coefficients computed here turn any sequence whose M(1) is
positive definite into the normalized form beta_00 = 1,
beta_10 = beta_01 = beta_11 = 0, beta_20 = beta_02 = 1, i.e. M(1) = I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MomentProblemError, SingularM1Error
from .moments import (
    Atom,
    AtomicMeasure,
    MomentSequence,
    Polynomial2,
    build_moment_matrix,
    monomial_index,
    monomials_up_to,
    riesz,
    sequence_length,
)

SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class AffineMap:
    """psi(x, y) = (a + b*x + c*y, d + e*x + f*y) with invertible linear part."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self) -> None:
        if self.b * self.f - self.c * self.e == 0.0:
            raise ValueError("linear part must be invertible (b*f - c*e != 0)")

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(0.0, 1.0, 0.0, 0.0, 0.0, 1.0)

    @property
    def linear_det(self) -> float:
        return self.b * self.f - self.c * self.e

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a + self.b * x + self.c * y, self.d + self.e * x + self.f * y)

    def invert_point(self, u: float, v: float) -> tuple[float, float]:
        """Solve psi(x, y) = (u, v) for (x, y)."""
        det = self.linear_det
        ru, rv = u - self.a, v - self.d
        return ((self.f * ru - self.c * rv) / det, (self.b * rv - self.e * ru) / det)

    def components(self) -> tuple[Polynomial2, Polynomial2]:
        """The two coordinate functions as degree-one polynomials."""
        p1 = Polynomial2({(0, 0): self.a, (1, 0): self.b, (0, 1): self.c})
        p2 = Polynomial2({(0, 0): self.d, (1, 0): self.e, (0, 1): self.f})
        return p1, p2


def minors(beta: MomentSequence) -> tuple[float, float]:
    """Leading principal 2x2 and 3x3 minors of M(1).

    Assumes the sequence has been rescaled to beta_00 = 1 (the closed forms
    below are written for that normalization).
    """
    if abs(beta[0, 0] - 1.0) > 1e-9:
        raise ValueError("rescale the sequence to beta_00 = 1 before taking minors")
    b10, b01 = beta[1, 0], beta[0, 1]
    b20, b11, b02 = beta[2, 0], beta[1, 1], beta[0, 2]
    d2 = b20 - b10 * b10
    d3 = (
        -b02 * b10 * b10
        + 2.0 * b01 * b10 * b11
        - b11 * b11
        - b01 * b01 * b20
        + b02 * b20
    )
    return d2, d3


def degree_one_coeffs(beta: MomentSequence, tol: float = SINGULAR_RTOL) -> AffineMap:
    """The six coefficients whose map normalizes M(1) to the identity.

    With d2 and d3 the leading minors of M(1):

        a = (beta_01 beta_20 - beta_10 beta_11) / sqrt(d2 d3)
        b = (beta_11 - beta_01 beta_10) / sqrt(d2 d3)
        c = -sqrt(d2 / d3)      d = -beta_10 / sqrt(d2)
        e = 1 / sqrt(d2)        f = 0

    so the linear determinant b*f - c*e = 1/sqrt(d3) is never zero. Raises
    SingularM1Error when either minor fails to clear tol relative to the
    largest degree-<=2 moment magnitude.
    """
    d2, d3 = minors(beta)
    quad_scale = max(abs(beta[m]) for m in monomials_up_to(2))
    threshold = tol * quad_scale
    if d2 <= threshold:
        raise SingularM1Error("d2", d2)
    if d3 <= threshold:
        raise SingularM1Error("d3", d3)
    b10, b01 = beta[1, 0], beta[0, 1]
    b20, b11 = beta[2, 0], beta[1, 1]
    s23 = math.sqrt(d2 * d3)
    s2 = math.sqrt(d2)
    return AffineMap(
        a=(b01 * b20 - b10 * b11) / s23,
        b=(b11 - b01 * b10) / s23,
        c=-math.sqrt(d2 / d3),
        d=-b10 / s2,
        e=1.0 / s2,
        f=0.0,
    )


def transform_sequence(beta: MomentSequence, psi: AffineMap) -> MomentSequence:
    """Pushforward moments beta~_ij = Lambda_beta(psi1^i psi2^j).

    Satisfies Lambda_{beta~}(p) = Lambda_beta(p o psi) for every p of
    admissible degree.
    """
    p1, p2 = psi.components()
    deg = beta.degree
    pow1 = [Polynomial2.constant(1.0)]
    pow2 = [Polynomial2.constant(1.0)]
    for _ in range(deg):
        pow1.append(pow1[-1] * p1)
        pow2.append(pow2[-1] * p2)
    vals = np.empty(sequence_length(deg))
    for m in monomials_up_to(deg):
        vals[monomial_index(m)] = riesz(beta, pow1[m.i] * pow2[m.j])
    return MomentSequence(deg, vals)


def build_J(psi: AffineMap, degree: int) -> np.ndarray:
    """Matrix of substitution on coefficient vectors: J p_hat = (p o psi)_hat.

    Column m holds the coefficients of psi1^i psi2^j for m = x^i y^j, so J
    is block lower-triangular by degree and always invertible. Moment
    matrices of a sequence and its pushforward are congruent through J:
    M~(d) = J^T M(d) J.
    """
    p1, p2 = psi.components()
    labels = monomials_up_to(degree)
    pow1 = [Polynomial2.constant(1.0)]
    pow2 = [Polynomial2.constant(1.0)]
    for _ in range(degree):
        pow1.append(pow1[-1] * p1)
        pow2.append(pow2[-1] * p2)
    J = np.zeros((len(labels), len(labels)))
    for col, m in enumerate(labels):
        J[:, col] = (pow1[m.i] * pow2[m.j]).coefficient_vector(degree)
    return J


def pullback_measure(mu: AtomicMeasure, psi: AffineMap) -> AtomicMeasure:
    """Move atoms through psi^{-1}; weights and cardinality are unchanged.

    If mu~ represents the pushforward sequence, the result represents the
    original one.
    """
    return AtomicMeasure(
        tuple(Atom(*psi.invert_point(a.x, a.y), a.weight) for a in mu.atoms)
    )


@dataclass(frozen=True)
class NormalizationCertificate:
    """Record of a normalization: minors, the map used, and its result.

    a_vec holds the four normalized cubic moments
    (beta~_30, beta~_21, beta~_12, beta~_03).
    """

    d2: float
    d3: float
    map: AffineMap
    normalized: MomentSequence
    a_vec: tuple[float, float, float, float]


def normalize_cubic(beta: MomentSequence, tol: float = SINGULAR_RTOL) -> NormalizationCertificate:
    """Rescale to beta_00 = 1, normalize M(1) to the identity, and certify.

    Applied unconditionally (already-normalized input maps through
    psi(x, y) = (-y, x)); the resulting M(1) is checked against the identity
    to 1e-10.
    """
    if beta.degree != 3:
        raise ValueError("normalization expects a degree-3 sequence")
    scaled = beta.rescaled(1.0 / beta[0, 0])
    d2, d3 = minors(scaled)
    psi = degree_one_coeffs(scaled, tol)
    normalized = transform_sequence(scaled, psi)
    m1 = build_moment_matrix(normalized.truncated(2)).entries
    defect = float(np.abs(m1 - np.eye(3)).max())
    if defect > 1e-10:
        raise MomentProblemError(
            f"normalization failed to reach M(1) = I (defect {defect:.3e})"
        )
    a_vec = (
        normalized[3, 0],
        normalized[2, 1],
        normalized[1, 2],
        normalized[0, 3],
    )
    return NormalizationCertificate(d2, d3, psi, normalized, a_vec)
