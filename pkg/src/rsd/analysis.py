"""Effect analysis for redundant sensors.

Quantifies how adding redundant sensors to an observable base network
changes the steady-state priori covariance: the Loewner ordering of the two
covariances, the trace gap, the inertia-preserving congruence between the
priori and posteriori differences, and the spectral test that decides
whether the improvement is strict.  The covariance drop P_bar - P fails to
be strictly positive definite exactly when the two symplectic matrices
(built from G0 and G0 + G1) share a stable eigenpair; the same information
is carried by their common unstable left eigenpairs, which this module
computes as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import LinearSystem, SensorBank, ValidationError, augment, _symmetrize
from .riccati import (
    NotInDomRicError,
    UNIT_CIRCLE_MARGIN,
    _canonicalize,
    _inf_norm,
    build_symplectic,
    solve_dare_symplectic,
    symplectic_spectrum,
)

__all__ = [
    "OrderingClass",
    "OrderingVerdict",
    "TraceGap",
    "CommonEigenpairReport",
    "classify_ordering",
    "inertia",
    "trace_gap",
    "strict_improvement_condition",
    "left_eigen_condition",
    "verify_lyapunov_identity",
]


class OrderingClass(Enum):
    """Loewner-order relation between two symmetric matrices."""

    STRICTLY_GREATER = "StrictlyGreater"
    GREATER_WITH_KERNEL = "GreaterWithKernel"
    EQUAL = "Equal"
    INDEFINITE = "Indefinite"


@dataclass
class OrderingVerdict:
    """Classification of P_big - P_small with its spectral evidence.

    kernel_basis holds the eigenvectors whose eigenvalues fall inside the
    +-tolerance band; kernel_dimension is their count.
    """

    classification: OrderingClass
    kernel_dimension: int
    kernel_basis: list
    eigenvalues_of_difference: np.ndarray
    tolerance: float


@dataclass
class TraceGap:
    """Total-variance comparison between base and augmented networks."""

    tr_base: float
    tr_augmented: float
    gap: float


@dataclass
class CommonEigenpairReport:
    """Outcome of the common-eigenpair search between two spectra.

    matches lists (eigenvalue of the base form, eigenvalue of the augmented
    form, eigenvalue distance, principal angle between the eigenvectors).
    inconclusive is set when either spectrum contains eigenvalues clustered
    within the matching tolerance, where eigenvector comparisons cannot
    distinguish invariant-subspace rotations from genuine matches.
    """

    found: bool
    matches: list
    inconclusive: bool


def classify_ordering(P_big, P_small, tol: float | None = None) -> OrderingVerdict:
    """Classify P_big - P_small as strictly greater, greater with kernel,
    equal, or indefinite.

    The default tolerance 1e-7 * (1 + |P_big|_inf) absorbs the certified
    solver residuals of the covariances being compared.
    """
    P_big = np.atleast_2d(np.asarray(P_big, dtype=float))
    P_small = np.atleast_2d(np.asarray(P_small, dtype=float))
    if P_big.shape != P_small.shape or P_big.shape[0] != P_big.shape[1]:
        raise ValidationError(
            f"shape mismatch: {P_big.shape} vs {P_small.shape}"
        )
    if tol is None:
        tol = 1e-7 * (1.0 + _inf_norm(P_big))
    diff = _symmetrize(P_big - P_small, "ordering difference")
    eigvals, eigvecs = np.linalg.eigh(diff)
    in_band = np.abs(eigvals) <= tol
    kernel = [eigvecs[:, i].copy() for i in np.flatnonzero(in_band)]
    if eigvals.min() > tol:
        cls = OrderingClass.STRICTLY_GREATER
    elif np.all(in_band):
        cls = OrderingClass.EQUAL
    elif eigvals.min() >= -tol:
        cls = OrderingClass.GREATER_WITH_KERNEL
    else:
        cls = OrderingClass.INDEFINITE
    return OrderingVerdict(
        classification=cls,
        kernel_dimension=len(kernel),
        kernel_basis=kernel,
        eigenvalues_of_difference=eigvals,
        tolerance=float(tol),
    )


def inertia(M, tol: float | None = None) -> tuple[int, int, int]:
    """Eigenvalue sign counts (n_plus, n_zero, n_minus) of a symmetric matrix.

    Counts are taken against a +-tol dead band, 1e-8 * (1 + max|M|) by
    default.  Congruence transformations preserve these counts, which is
    what links the priori and posteriori covariance differences.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    M = _symmetrize(M, "inertia input")
    if tol is None:
        tol = 1e-8 * (1.0 + (np.abs(M).max() if M.size else 0.0))
    eigvals = np.linalg.eigvalsh(M)
    n_plus = int(np.sum(eigvals > tol))
    n_minus = int(np.sum(eigvals < -tol))
    return n_plus, M.shape[0] - n_plus - n_minus, n_minus


def trace_gap(sys: LinearSystem, base: SensorBank,
              redundant: SensorBank) -> TraceGap:
    """Solve both steady-state DAREs and report tr(P_bar) - tr(P).

    The gap is nonnegative whenever the base network satisfies the standing
    assumptions, and strictly positive whenever the redundant bank carries
    any information at all.
    """
    sol_base, _ = solve_dare_symplectic(sys, base.G, bank=base)
    full = augment(base, redundant)
    sol_full, _ = solve_dare_symplectic(sys, full.G, bank=full)
    tr_base = float(np.trace(sol_base.P))
    tr_full = float(np.trace(sol_full.P))
    return TraceGap(tr_base=tr_base, tr_augmented=tr_full,
                    gap=tr_base - tr_full)


def _match_pairs(values_bar, vectors_bar, values, vectors,
                 tol_eig: float, tol_angle: float) -> list:
    """All (lam_bar, lam, distance, angle) pairs meeting both tolerances."""
    matches = []
    for lam_bar, v_bar in zip(values_bar, vectors_bar):
        for lam, v in zip(values, vectors):
            dist = abs(lam_bar - lam)
            if dist > tol_eig * (1.0 + abs(lam)):
                continue
            cosine = min(1.0, abs(np.vdot(v_bar, v)))
            angle = float(np.arccos(cosine))
            if angle <= tol_angle:
                matches.append((lam_bar, lam, dist, angle))
    return matches


def _clustered(values, tol_eig: float) -> bool:
    return any(abs(a - b) <= tol_eig
               for i, a in enumerate(values) for b in values[:i])


def strict_improvement_condition(
    sys: LinearSystem,
    G0: np.ndarray,
    G1: np.ndarray,
    tol_eig: float = 1e-6,
    tol_angle: float = 1e-6,
) -> CommonEigenpairReport:
    """Search for common stable eigenpairs of the two symplectic forms.

    An empty, conclusive report certifies that the covariance improvement
    P_bar - P is strictly positive definite; each reported match pins a
    direction in which the redundant information is invisible.
    """
    G0 = np.asarray(G0, dtype=float)
    G1 = np.asarray(G1, dtype=float)
    spec_bar = symplectic_spectrum(build_symplectic(sys, G0),
                                   cluster_tol=tol_eig)
    spec = symplectic_spectrum(build_symplectic(sys, G0 + G1),
                               cluster_tol=tol_eig)
    matches = _match_pairs(
        spec_bar.stable_eigenvalues, spec_bar.stable_eigenvectors,
        spec.stable_eigenvalues, spec.stable_eigenvectors,
        tol_eig, tol_angle)
    inconclusive = any(spec_bar.multiplicity_flags) or any(spec.multiplicity_flags)
    return CommonEigenpairReport(found=bool(matches), matches=matches,
                                 inconclusive=inconclusive)


def _unstable_left_pairs(S: np.ndarray, tol_eig: float):
    """Unstable left eigenpairs of S via the transpose eigenproblem."""
    n = S.shape[0] // 2
    lam, W = np.linalg.eig(S.T)
    margin = float(np.abs(np.abs(lam) - 1.0).min())
    if margin < UNIT_CIRCLE_MARGIN:
        raise NotInDomRicError(
            f"eigenvalue within {margin:.3e} of the unit circle; "
            "not in dom(Ric)"
        )
    order = np.argsort(np.abs(lam), kind="stable")
    unstable = [i for i in order if abs(lam[i]) > 1.0]
    if len(unstable) != n:
        raise NotInDomRicError(
            f"{len(unstable)} unstable eigenvalues, expected {n}"
        )
    values = [complex(lam[i]) for i in unstable]
    vectors = [_canonicalize(W[:, i]) for i in unstable]
    return values, vectors


def left_eigen_condition(
    sys: LinearSystem,
    G0: np.ndarray,
    G1: np.ndarray,
    tol_eig: float = 1e-6,
    tol_angle: float = 1e-6,
) -> CommonEigenpairReport:
    """Common unstable left eigenpairs of the two symplectic forms.

    Equivalent to the stable right-eigenpair test (the symplectic structure
    maps one onto the other), but computed through an independent transpose
    eigendecomposition so the two routes cross-validate each other.
    """
    G0 = np.asarray(G0, dtype=float)
    G1 = np.asarray(G1, dtype=float)
    vals_bar, vecs_bar = _unstable_left_pairs(
        build_symplectic(sys, G0), tol_eig)
    vals, vecs = _unstable_left_pairs(
        build_symplectic(sys, G0 + G1), tol_eig)
    matches = _match_pairs(vals_bar, vecs_bar, vals, vecs, tol_eig, tol_angle)
    inconclusive = _clustered(vals_bar, tol_eig) or _clustered(vals, tol_eig)
    return CommonEigenpairReport(found=bool(matches), matches=matches,
                                 inconclusive=inconclusive)


def verify_lyapunov_identity(
    sys: LinearSystem,
    base: SensorBank,
    redundant: SensorBank,
    P_bar: np.ndarray,
    P: np.ndarray,
) -> float:
    """Residual of the Lyapunov-type equation tying P_bar - P to the two
    closed loops.

    With D = P_bar - P, A0 = A (I + P_bar G0)^-1 and G = G0 + G1, the
    difference of the two DAREs collapses to

        A0 D A0^T - D + A0 D G0 (I + P G0)^-1 D A0^T
          + A (I + P G0)^-1 P A^T - A (I + P G)^-1 P A^T = 0

    and the infinity norm of its left side is returned.  A small residual
    certifies that the supplied covariances solve their respective DAREs
    and obey the difference identity.
    """
    P_bar = np.asarray(P_bar, dtype=float)
    P = np.asarray(P, dtype=float)
    n = sys.n
    A = sys.A
    G0 = base.G
    G = G0 + redundant.G
    D = P_bar - P
    eye = np.eye(n)
    A0 = np.linalg.solve((eye + P_bar @ G0).T, A.T).T
    closed0 = np.linalg.solve((eye + P @ G0).T, A.T).T   # A (I+PG0)^-1
    closed = np.linalg.solve((eye + P @ G).T, A.T).T     # A (I+PG)^-1
    correction = A0 @ D @ G0 @ np.linalg.solve(eye + P @ G0, D) @ A0.T
    resid = (A0 @ D @ A0.T - D + correction
             + closed0 @ P @ A.T - closed @ P @ A.T)
    return _inf_norm(resid)
