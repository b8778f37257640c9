"""Small dense symmetric linear algebra for moment matrices.

Positivity of a symmetric block matrix [[A, B], [B^T, C]] is decided by
Smul'jan's criterion: A >= 0, B = A W for some W, and C >= W^T A W. The
extension keeps rank A ("flat") exactly when C = W^T A W. Joint eigenvalues
of a commuting pair are extracted from the real Schur form of a random
convex combination.

Everything here works on matrices of side at most ten, so plain dense
LAPACK routines are used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CommutatorError, ComplexAtomError, MomentProblemError, RangeError

TOL_PSD = 1e-10
TOL_RANGE = 1e-9
TOL_FLAT = 1e-9
TOL_COMMUTE = 1e-9
TOL_EIG = 1e-7
TOL_CLUSTER = 1e-7


def _sym(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + S.T)


def psd_min_eig(S) -> float:
    """Smallest eigenvalue of the (defensively symmetrized) input.

    A matrix is accepted as PSD when this is >= -TOL_PSD.
    """
    return float(np.linalg.eigvalsh(_sym(S))[0])


def numeric_rank(S, tol: float) -> int:
    """Count of eigenvalues with |lambda| > tol * max(1, |lambda|_max)."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    lam = np.abs(np.linalg.eigvalsh(_sym(S)))
    return int(np.count_nonzero(lam > tol * max(1.0, float(lam.max(initial=0.0)))))


def range_solve(A, B, tol: float = TOL_RANGE) -> np.ndarray:
    """Least-squares W minimizing ||A W - B||, requiring B in the range of A.

    Raises RangeError when the relative residual ||A W - B|| / max(1, ||B||)
    exceeds tol, which rules out any positive block extension.
    """
    A = _sym(A)
    B = np.asarray(B, dtype=float)
    B2 = B if B.ndim == 2 else B[:, None]
    W, *_ = np.linalg.lstsq(A, B2, rcond=None)
    residual = float(np.linalg.norm(A @ W - B2))
    if residual > tol * max(1.0, float(np.linalg.norm(B2))):
        raise RangeError(
            f"block is not in the range of the diagonal block (residual {residual:.3e})"
        )
    return W if B.ndim == 2 else W[:, 0]


@dataclass(frozen=True)
class SmuljanResult:
    """Outcome of the block positivity / flatness test.

    witness_W is the W with B = A W when one exists (None otherwise), and
    schur_gap is the smallest eigenvalue of C - W^T A W for the least-squares
    W. flat implies psd, and flat holds exactly when the block matrix keeps
    the rank of A.
    """

    psd: bool
    flat: bool
    rank: int
    witness_W: np.ndarray | None
    schur_gap: float


def smuljan_classify(
    A,
    B,
    C,
    tol_psd: float = TOL_PSD,
    tol_range: float = TOL_RANGE,
    tol_flat: float = TOL_FLAT,
) -> SmuljanResult:
    """Classify the block matrix [[A, B], [B^T, C]] as PSD / flat / neither.

    Tolerances are applied relative to the largest block entry, so the
    defaults written for unit-normalized data stay meaningful when the
    blocks carry high-degree moments.
    """
    A = _sym(A)
    B2 = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    C = _sym(np.atleast_2d(np.asarray(C, dtype=float)))
    block = np.block([[A, B2], [B2.T, C]])
    rank = numeric_rank(block, tol_psd)
    scale = max(1.0, float(np.abs(block).max(initial=0.0)))

    a_psd = psd_min_eig(A) >= -tol_psd * scale
    W, *_ = np.linalg.lstsq(A, B2, rcond=None)
    in_range = float(np.linalg.norm(A @ W - B2)) <= tol_range * max(
        1.0, float(np.linalg.norm(B2))
    )
    gap_matrix = C - W.T @ A @ W
    schur_gap = psd_min_eig(gap_matrix)

    psd = a_psd and in_range and schur_gap >= -tol_psd * scale
    flat = psd and float(np.abs(gap_matrix).max(initial=0.0)) <= tol_flat * scale
    return SmuljanResult(
        psd=psd,
        flat=flat,
        rank=rank,
        witness_W=W if in_range else None,
        schur_gap=schur_gap,
    )


def flat_completion(A, B, tol_range: float = TOL_RANGE) -> np.ndarray:
    """The unique C = W^T A W making [[A, B], [B^T, C]] flat over A.

    Raises RangeError (propagated from range_solve) when no such C exists.
    """
    A = _sym(A)
    B2 = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    W = range_solve(A, B2, tol_range)
    return _sym(W.T @ A @ W)


def joint_eigen(
    Mx,
    My,
    rng: np.random.Generator | None = None,
    tol_commute: float = TOL_COMMUTE,
    tol_eig: float = TOL_EIG,
    tol_cluster: float = TOL_CLUSTER,
    max_tries: int = 5,
) -> list[tuple[float, float]]:
    """Joint eigenvalue pairs of two commuting real matrices.

    Parameters
    ----------
    Mx, My : array_like
        Square real matrices of equal size, commuting within tol_commute
        (relative to the largest entry magnitude).
    rng : numpy Generator, optional
        Source of the random combination coefficients; a fixed default seed
        is used when omitted, so calls are reproducible.

    Returns
    -------
    list of (x, y)
        One pair per dimension (with multiplicity). Each pair comes with a
        common unit eigenvector v satisfying ||Mx v - x v|| and
        ||My v - y v|| <= tol_eig * scale.

    Notes
    -----
    Takes the real Schur form of a random convex combination
    c*Mx + (1-c)*My, recovers each eigenvector by back-substitution in the
    triangular factor, and reads the pair off as Rayleigh quotients. A fresh
    c is drawn (up to max_tries) whenever the combination's eigenvalues
    cluster closer than tol_cluster, which would make the back-substitution
    ill-conditioned.
    """
    Mx = np.asarray(Mx, dtype=float)
    My = np.asarray(My, dtype=float)
    if Mx.ndim != 2 or Mx.shape[0] != Mx.shape[1] or Mx.shape != My.shape:
        raise ValueError("Mx and My must be square matrices of equal size")
    n = Mx.shape[0]
    scale = max(1.0, float(np.abs(Mx).max(initial=0.0)), float(np.abs(My).max(initial=0.0)))
    commutator = float(np.abs(Mx @ My - My @ Mx).max(initial=0.0))
    if commutator > tol_commute * scale:
        raise CommutatorError(
            f"multiplication matrices do not commute (max entry {commutator:.3e})"
        )
    if rng is None:
        rng = np.random.default_rng(0)

    saw_complex = False
    clustered_pairs: list[tuple[float, float]] | None = None
    for _ in range(max_tries):
        c = rng.uniform(0.2, 0.8)
        combo = c * Mx + (1.0 - c) * My
        lam = np.linalg.eigvals(combo)
        lam_scale = max(1.0, float(np.abs(lam).max()))
        if float(np.abs(lam.imag).max()) > 1e-6 * lam_scale:
            saw_complex = True
            continue
        T, Q = scipy.linalg.schur(combo, output="real")
        if n > 1 and float(np.abs(np.diag(T, -1)).max()) > tol_cluster * lam_scale:
            # an unresolved 2x2 block means a conjugate pair
            saw_complex = True
            continue
        pairs = _pairs_from_schur(T, Q, Mx, My, tol_eig * scale)
        if pairs is None:
            continue
        diag = np.sort(np.diag(T))
        gap = float(np.diff(diag).min()) if n > 1 else math.inf
        if gap >= tol_cluster:
            return pairs
        # residuals passed but eigenvalues coincide: genuine multiplicity
        clustered_pairs = pairs
    if clustered_pairs is not None:
        return clustered_pairs
    if saw_complex:
        raise ComplexAtomError("joint spectrum is not real")
    raise MomentProblemError("joint eigenvalue extraction did not converge")


def _pairs_from_schur(T, Q, Mx, My, resid_tol) -> list[tuple[float, float]] | None:
    """Read joint pairs off a strictly triangular real Schur form.

    Returns None when some recovered vector is not a joint eigenvector to
    within resid_tol (the caller then retries with a new combination).
    """
    n = T.shape[0]
    t_scale = max(1.0, float(np.abs(T).max(initial=0.0)))
    pairs = []
    for idx in range(n):
        lam = T[idx, idx]
        w = np.zeros(n)
        w[idx] = 1.0
        for row in range(idx - 1, -1, -1):
            rhs = -float(T[row, row + 1 : idx + 1] @ w[row + 1 : idx + 1])
            denom = T[row, row] - lam
            # clamp so repeated eigenvalues with zero coupling still work
            safe = max(abs(denom), 1e-15 * t_scale)
            w[row] = rhs / math.copysign(safe, denom if denom != 0.0 else 1.0)
        v = Q @ w
        v /= np.linalg.norm(v)
        xv = float(v @ (Mx @ v))
        yv = float(v @ (My @ v))
        if (
            float(np.linalg.norm(Mx @ v - xv * v)) > resid_tol
            or float(np.linalg.norm(My @ v - yv * v)) > resid_tol
        ):
            return None
        pairs.append((xv, yv))
    return pairs
