"""Moment sequences, degree-lex indexing, and Hankel-block moment matrices.

Monomials x^i y^j are ordered degree-lexicographically: first by total
degree, ties broken by decreasing x-exponent. This gives the column labels
1, X, Y, X^2, XY, Y^2, X^3, ... used everywhere in this package. Moment
data and polynomial coefficient vectors are stored densely in that order;
at degree 6 a sequence holds 28 values, so no sparse structure is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np

__all__ = [
    "Monomial",
    "monomial_index",
    "monomials_up_to",
    "sequence_length",
    "MomentSequence",
    "MomentMatrix",
    "build_moment_matrix",
    "Polynomial2",
    "riesz",
    "column_of",
    "Atom",
    "AtomicMeasure",
]


class Monomial(NamedTuple):
    """Exponent pair (i, j) standing for x^i y^j."""

    i: int
    j: int

    @property
    def degree(self) -> int:
        return self.i + self.j


def monomial_index(m: tuple[int, int]) -> int:
    """Position of x^i y^j in degree-lex order.

    >>> [monomial_index(m) for m in [(0, 0), (1, 1), (0, 3)]]
    [0, 4, 9]
    """
    i, j = m
    d = i + j
    return d * (d + 1) // 2 + (d - i)


def monomials_up_to(degree: int) -> list[Monomial]:
    """All monomials of total degree <= degree, in degree-lex order."""
    return [Monomial(i, d - i) for d in range(degree + 1) for i in range(d, -1, -1)]


def sequence_length(degree: int) -> int:
    """Number of monomials of total degree <= degree."""
    return (degree + 1) * (degree + 2) // 2


@dataclass(frozen=True)
class MomentSequence:
    """Real moments beta_ij for every i + j <= degree.

    Values are stored densely in degree-lex order and are read-only after
    construction. beta_00 must be positive.
    """

    degree: int
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        expected = sequence_length(self.degree)
        if vals.shape != (expected,):
            raise ValueError(
                f"degree-{self.degree} sequence needs {expected} moments, "
                f"got shape {vals.shape}"
            )
        if not vals[0] > 0.0:
            raise ValueError("beta_00 must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "MomentSequence":
        """Build a sequence from a flat degree-lex list, inferring the degree."""
        vals = np.asarray(list(values), dtype=float)
        degree = 0
        while sequence_length(degree) < vals.size:
            degree += 1
        if sequence_length(degree) != vals.size:
            raise ValueError(f"{vals.size} values is not a full set of moments")
        return cls(degree, vals)

    def __getitem__(self, m: tuple[int, int]) -> float:
        i, j = m
        if i < 0 or j < 0 or i + j > self.degree:
            raise IndexError(f"moment ({i},{j}) outside degree {self.degree}")
        return float(self.values[monomial_index(m)])

    def rescaled(self, factor: float) -> "MomentSequence":
        return MomentSequence(self.degree, self.values * factor)

    def truncated(self, degree: int) -> "MomentSequence":
        """Drop all moments above the given total degree."""
        if degree > self.degree:
            raise ValueError("cannot truncate upwards")
        return MomentSequence(degree, self.values[: sequence_length(degree)])


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetric matrix M(d) with entry (u, v) = beta_{u+v}, Hankel by blocks."""

    degree: int
    entries: np.ndarray
    labels: tuple[Monomial, ...]

    def __post_init__(self) -> None:
        ent = np.array(self.entries, dtype=float)
        side = sequence_length(self.degree)
        if ent.shape != (side, side):
            raise ValueError(f"M({self.degree}) must be {side}x{side}, got {ent.shape}")
        ent.setflags(write=False)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "labels", tuple(Monomial(*m) for m in self.labels))

    @property
    def side(self) -> int:
        return self.entries.shape[0]

    def moment(self, m: tuple[int, int]) -> float:
        """Read beta_m back from any entry (u, v) with u + v = m."""
        i, j = m
        for u in self.labels:
            vi, vj = i - u.i, j - u.j
            if vi >= 0 and vj >= 0 and vi + vj <= self.degree:
                return float(self.entries[monomial_index(u), monomial_index((vi, vj))])
        raise IndexError(f"moment ({i},{j}) is not an entry of M({self.degree})")


def build_moment_matrix(beta: MomentSequence) -> MomentMatrix:
    """Assemble M(d) from an even-degree sequence beta^(2d).

    The entry at (row u, col v) is beta_{u+v}, so the result is symmetric
    and Hankel by blocks by construction.
    """
    if beta.degree % 2 != 0:
        raise ValueError("a moment matrix requires an even-degree sequence")
    d = beta.degree // 2
    labels = monomials_up_to(d)
    side = len(labels)
    entries = np.empty((side, side))
    for u, mu in enumerate(labels):
        for v in range(u, side):
            mv = labels[v]
            entries[u, v] = entries[v, u] = beta[mu.i + mv.i, mu.j + mv.j]
    return MomentMatrix(d, entries, tuple(labels))


class Polynomial2:
    """Immutable bivariate polynomial with real coefficients.

    Only what the moment machinery needs: addition, multiplication, integer
    powers, evaluation, and extraction of the degree-lex coefficient vector.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[tuple[int, int], float] = ()):
        cleaned = {}
        for m, c in dict(coeffs).items():
            c = float(c)
            if c != 0.0:
                cleaned[Monomial(*m)] = c
        self._coeffs = cleaned

    @classmethod
    def constant(cls, c: float) -> "Polynomial2":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, coeff: float = 1.0) -> "Polynomial2":
        return cls({(i, j): coeff})

    @property
    def coefficients(self) -> dict[Monomial, float]:
        return dict(self._coeffs)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._coeffs), default=0)

    def __add__(self, other: "Polynomial2") -> "Polynomial2":
        acc = dict(self._coeffs)
        for m, c in other._coeffs.items():
            acc[m] = acc.get(m, 0.0) + c
        return Polynomial2(acc)

    def __neg__(self) -> "Polynomial2":
        return Polynomial2({m: -c for m, c in self._coeffs.items()})

    def __sub__(self, other: "Polynomial2") -> "Polynomial2":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Polynomial2):
            acc: dict[Monomial, float] = {}
            for m1, c1 in self._coeffs.items():
                for m2, c2 in other._coeffs.items():
                    m = Monomial(m1.i + m2.i, m1.j + m2.j)
                    acc[m] = acc.get(m, 0.0) + c1 * c2
            return Polynomial2(acc)
        return Polynomial2({m: c * float(other) for m, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial2":
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial2.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, x: float, y: float) -> float:
        return sum(c * x**m.i * y**m.j for m, c in self._coeffs.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial2) and self._coeffs == other._coeffs

    def __repr__(self) -> str:
        if not self._coeffs:
            return "Polynomial2(0)"
        parts = [
            f"{c:+g}*x^{m.i}*y^{m.j}"
            for m, c in sorted(self._coeffs.items(), key=lambda mc: monomial_index(mc[0]))
        ]
        return f"Polynomial2({' '.join(parts)})"

    def coefficient_vector(self, degree: int) -> np.ndarray:
        """Dense degree-lex coefficient vector padded up to the given degree."""
        if self.degree > degree:
            raise ValueError(f"polynomial degree {self.degree} exceeds {degree}")
        vec = np.zeros(sequence_length(degree))
        for m, c in self._coeffs.items():
            vec[monomial_index(m)] = c
        return vec


def riesz(beta: MomentSequence, p: Polynomial2) -> float:
    """Riesz functional: replace each monomial of p by the matching moment."""
    if p.degree > beta.degree:
        raise ValueError(
            f"polynomial degree {p.degree} exceeds available moments ({beta.degree})"
        )
    return float(sum(c * beta[m] for m, c in p.coefficients.items()))


def column_of(M: MomentMatrix, p: Polynomial2) -> np.ndarray:
    """Functional-calculus column p(X, Y) = M(d) @ p_hat.

    The polynomial vanishes as a column, p(X, Y) = 0, exactly when its
    coefficient vector lies in the kernel of M(d).
    """
    return M.entries @ p.coefficient_vector(M.degree)


class Atom(NamedTuple):
    """A weighted point mass at (x, y)."""

    x: float
    y: float
    weight: float


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many point masses in the plane.

    Solver output guarantees strictly positive weights and 3 or 4 atoms;
    the type itself accepts any atom list so that candidate measures can be
    verified as-is.
    """

    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(Atom(*a) for a in self.atoms))

    @property
    def total_mass(self) -> float:
        return float(sum(a.weight for a in self.atoms))

    def moments(self, degree: int) -> MomentSequence:
        """Exact moments sum rho_k x_k^i y_k^j up to the given degree."""
        vals = np.array(
            [
                sum(a.weight * a.x**m.i * a.y**m.j for a in self.atoms)
                for m in monomials_up_to(degree)
            ]
        )
        return MomentSequence(degree, vals)
