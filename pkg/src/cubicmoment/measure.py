"""Atomic-measure recovery from an extension certificate, and the solver.

The pipeline: normalize the input so M(1) = I, extend to a quartic moment
matrix, form the multiplication-by-x and -by-y matrices on the column-space
basis, take their joint spectrum as the atoms, solve the basis-restricted
Vandermonde system for the densities, pull the measure back through the
normalizing map, and verify the result against the original moments. The
solver never returns an unverified measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubic import CaseTag, ColumnRelation, ExtensionResult, extend, span_reductions
from .errors import SingularVandermondeError, VerificationError
from .linalg import joint_eigen, numeric_rank
from .moments import (
    Atom,
    AtomicMeasure,
    MomentSequence,
    Monomial,
    monomial_index,
    monomials_up_to,
    sequence_length,
)
from .normalize import NormalizationCertificate, normalize_cubic, pullback_measure

__all__ = [
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "SolveReport",
    "MeasureCheck",
    "multiplication_matrices",
    "extract_atoms",
    "solve_densities",
    "verify_measure",
    "solve_cubic",
    "AtomicMeasure",
    "Atom",
]

MIN_ATOM_SEPARATION = 1e-8


@dataclass(frozen=True)
class Tolerances:
    """Pipeline-level tolerances (the subset exposed on the command line).

    psd also serves as the numerical-rank threshold; weight is the smallest
    density accepted before the solve is declared faulty.
    """

    psd: float = 1e-10
    k: float = 1e-10
    accept: float = 1e-8
    weight: float = 1e-10


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SolveReport:
    """Verified diagnostics attached to every successful solve.

    rank equals variety_size here: flat extensions realize the extremal
    case of the variety condition rank <= #atoms <= #variety.
    """

    case: CaseTag
    k: float
    rank: int
    variety_size: int
    max_moment_residual: float
    min_weight: float
    commutator_norm: float
    certificate: NormalizationCertificate
    extension: ExtensionResult


@dataclass(frozen=True)
class MeasureCheck:
    """Residual report from re-integrating a candidate measure.

    residuals holds |sum rho x^i y^j - beta_ij| per monomial in degree-lex
    order; variety_residual is the largest |relation polynomial| over the
    atoms (0 when no relations are supplied).
    """

    max_moment_residual: float
    residuals: np.ndarray
    min_weight: float
    variety_residual: float


def multiplication_matrices(
    basis, relations: tuple[ColumnRelation, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of multiplication by x and by y on the column-space basis.

    Column b of Mx (resp. My) holds the basis coordinates of x*b (resp.
    y*b). Every such product must be in the basis or reducible through the
    relations; otherwise MissingRelationError propagates.
    """
    basis = tuple(Monomial(*b) for b in basis)
    top = max(m.degree for m in basis) + 1
    red = span_reductions(basis, relations, top)
    r = len(basis)
    mx = np.empty((r, r))
    my = np.empty((r, r))
    for col, b in enumerate(basis):
        mx[:, col] = red[Monomial(b.i + 1, b.j)]
        my[:, col] = red[Monomial(b.i, b.j + 1)]
    return mx, my


def extract_atoms(
    ext: ExtensionResult,
    rng: np.random.Generator | None = None,
    separation: float = MIN_ATOM_SEPARATION,
    max_tries: int = 5,
) -> list[tuple[float, float]]:
    """Atoms of the representing measure: the joint spectrum of (Mx, My).

    Returns the pairs sorted by (x, y). The randomized extraction is
    retried when two atoms land closer than `separation` in the max norm;
    flat extensions have distinct atoms, so persistent collisions signal an
    upstream failure and raise SingularVandermondeError.
    """
    mx, my = multiplication_matrices(ext.basis, ext.relations)
    if rng is None:
        rng = np.random.default_rng(0)
    for _ in range(max_tries):
        pairs = joint_eigen(mx, my, rng=rng)
        if len(pairs) < 2 or _min_separation(pairs) >= separation:
            return sorted(pairs)
    raise SingularVandermondeError(
        f"atoms stayed closer than {separation:g} after {max_tries} extractions"
    )


def _min_separation(pairs) -> float:
    gap = np.inf
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            dx = abs(pairs[i][0] - pairs[j][0])
            dy = abs(pairs[i][1] - pairs[j][1])
            gap = min(gap, max(dx, dy))
    return gap


def solve_densities(atoms, basis, beta: MomentSequence) -> np.ndarray:
    """Densities from the basis-restricted Vandermonde system.

    Solves V_B^T rho = (Lambda(t_1), ..., Lambda(t_r))^T, where row k of
    V_B evaluates the basis monomials at atom k.
    """
    atoms = [(float(x), float(y)) for x, y in atoms]
    basis = tuple(Monomial(*b) for b in basis)
    if len(atoms) != len(basis):
        raise ValueError("need exactly as many atoms as basis monomials")
    vb = np.array([[x**m.i * y**m.j for m in basis] for x, y in atoms])
    rhs = np.array([beta[m] for m in basis])
    try:
        rho = np.linalg.solve(vb.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularVandermondeError(
            "coincident atoms made the Vandermonde system singular"
        ) from exc
    return rho


def verify_measure(
    mu: AtomicMeasure,
    beta: MomentSequence,
    relations: tuple[ColumnRelation, ...] = (),
) -> MeasureCheck:
    """Re-integrate every monomial of the sequence against the measure."""
    residuals = np.empty(sequence_length(beta.degree))
    for m in monomials_up_to(beta.degree):
        integral = sum(a.weight * a.x**m.i * a.y**m.j for a in mu.atoms)
        residuals[monomial_index(m)] = abs(integral - beta[m])
    variety_residual = 0.0
    for rel in relations:
        poly = rel.polynomial()
        for a in mu.atoms:
            variety_residual = max(variety_residual, abs(poly(a.x, a.y)))
    weights = [a.weight for a in mu.atoms]
    return MeasureCheck(
        max_moment_residual=float(residuals.max(initial=0.0)),
        residuals=residuals,
        min_weight=min(weights, default=0.0),
        variety_residual=variety_residual,
    )


def solve_cubic(
    beta: MomentSequence,
    seed: int | None = 0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[AtomicMeasure, SolveReport]:
    """Recover a 3- or 4-atomic representing measure for a degree-3 sequence.

    Returns the measure in the original coordinates together with a report
    whose verification fields are always populated. Raises SingularM1Error
    for inputs whose M(1) is not safely positive definite, and
    VerificationError if the recovered measure misses the moments by more
    than tolerances.accept or produces a density below tolerances.weight.
    """
    mass = beta[0, 0]
    certificate = normalize_cubic(beta)
    ext = extend(certificate.a_vec, tol_k=tolerances.k)
    mx, my = multiplication_matrices(ext.basis, ext.relations)
    commutator_norm = float(np.abs(mx @ my - my @ mx).max())
    rng = np.random.default_rng(seed)
    atoms = extract_atoms(ext, rng=rng)
    rho = solve_densities(atoms, ext.basis, certificate.normalized)
    smallest = float(rho.min())
    if smallest < tolerances.weight:
        # near-degenerate k < 0 sends one atom to infinity with density ~ k^4,
        # which is positive in exact arithmetic but numerically meaningless
        hint = (
            f" (k = {ext.k:.3e} is near-degenerate; the rank-4 construction "
            "carries a vanishing density there)"
            if abs(ext.k) < 1e-2
            else ""
        )
        raise VerificationError(
            f"density {smallest:.3e} below {tolerances.weight:g}{hint}"
        )
    mu_normalized = AtomicMeasure(
        tuple(Atom(x, y, float(w)) for (x, y), w in zip(atoms, rho))
    )
    normalized_check = verify_measure(
        mu_normalized, certificate.normalized, ext.relations
    )
    if normalized_check.variety_residual > 1e-7:
        raise VerificationError(
            f"an atom violates a column relation by "
            f"{normalized_check.variety_residual:.3e}"
        )
    pulled = pullback_measure(mu_normalized, certificate.map)
    mu = AtomicMeasure(
        tuple(sorted(Atom(a.x, a.y, a.weight * mass) for a in pulled.atoms))
    )
    check = verify_measure(mu, beta)
    if check.max_moment_residual > tolerances.accept:
        raise VerificationError(
            f"recovered measure misses the moments by "
            f"{check.max_moment_residual:.3e} (tolerance {tolerances.accept:g})"
        )
    report = SolveReport(
        case=ext.case,
        k=ext.k,
        rank=numeric_rank(ext.m2.entries, tolerances.psd),
        variety_size=len(atoms),
        max_moment_residual=check.max_moment_residual,
        min_weight=check.min_weight,
        commutator_norm=commutator_norm,
        certificate=certificate,
        extension=ext,
    )
    return mu, report
