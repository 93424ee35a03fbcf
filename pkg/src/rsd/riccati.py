"""Steady-state estimation covariances via two independent DARE routes.

The information-form discrete algebraic Riccati equation

    A (I + P G)^-1 P A^T - P + Q = 0,      G = C^T R^-1 C

is solved two ways: by fixed-point iteration of the combined
Lyapunov/Riccati operator map, and by extracting the stable invariant
subspace of the associated 2n x 2n symplectic matrix

    S = [[A^T + G A^-1 Q, -G A^-1],
         [-A^-1 Q,         A^-1 ]]

through an ordered real Schur decomposition (P = Y X^-1).  Both routes
certify their residuals; agreement between them is part of the test
contract, so neither delegates to the other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import LinearSystem, SensorBank, check_observability, _symmetrize

__all__ = [
    "SolverError",
    "NotInDomRicError",
    "DareSolution",
    "SymplecticSpectrum",
    "lyapunov_step",
    "riccati_update",
    "solve_dare_fixed_point",
    "build_symplectic",
    "solve_dare_symplectic",
    "solve_discrete_lyapunov",
]

# dom(Ric) guard: eigenvalues must stay this far from the unit circle
UNIT_CIRCLE_MARGIN = 1e-8
# relative DARE residual certified by both solvers
DARE_RESIDUAL_TOL = 1e-8


class SolverError(RuntimeError):
    """Raised when a solver cannot certify its solution."""


class NotInDomRicError(SolverError):
    """Symplectic matrix has unit-circle eigenvalues or a degenerate
    stable subspace, so the Riccati solution is not well defined."""


def _inf_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, np.inf)) if M.size else 0.0


@dataclass
class DareSolution:
    """Steady-state solution bundle of one DARE.

    Attributes:
        P: priori covariance, symmetric positive definite.
        P_p: posteriori covariance, (P^-1 + G)^-1.
        K: steady Kalman gain P C^T (C P C^T + R)^-1, or None when the
           solver was handed only the information matrix G.
        A_G: closed-loop matrix A (I + P G)^-1, spectral radius < 1.
        method: "fixed_point" or "symplectic".
        iterations: fixed-point sweep count (0 for the symplectic route).
        residual: certified infinity-norm DARE residual.
        diagnostics: route-specific extras (posteriori fixed-point gap,
           subspace conditioning, unit-circle margin).
    """

    P: np.ndarray
    P_p: np.ndarray
    K: np.ndarray | None
    A_G: np.ndarray
    method: str
    iterations: int
    residual: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SymplecticSpectrum:
    """Spectral data of a 2n x 2n symplectic matrix.

    Eigenvectors are canonicalized (unit norm, first significant component
    rotated to the positive real axis) so spectra from different calls can
    be compared directly.  multiplicity_flags marks stable eigenvalues that
    sit within cluster_tol of another stable eigenvalue, where eigenvector
    comparisons become unreliable.
    """

    S: np.ndarray
    stable_eigenvalues: list
    stable_eigenvectors: list
    multiplicity_flags: list
    X_block: np.ndarray
    Y_block: np.ndarray
    definition_residual: float
    unit_circle_margin: float
    cluster_tol: float


def lyapunov_step(sys: LinearSystem, X: np.ndarray) -> np.ndarray:
    """Lyapunov operator h(X) = A X A^T + Q, symmetrized."""
    X = np.asarray(X, dtype=float)
    return _symmetrize(sys.A @ X @ sys.A.T + sys.Q, "lyapunov_step output")


def riccati_update(bank: SensorBank, X: np.ndarray) -> np.ndarray:
    """Riccati operator g(X) = X - X C^T (C X C^T + R)^-1 C X, symmetrized.

    An empty bank (C with zero rows) contributes no information and returns
    X unchanged.
    """
    X = np.asarray(X, dtype=float)
    C, R = bank.C, bank.R
    if C.shape[0] == 0:
        return _symmetrize(X, "riccati_update output")
    CX = C @ X
    innov = C @ X @ C.T + R
    out = X - CX.T @ np.linalg.solve(innov, CX)
    return _symmetrize(out, "riccati_update output")


def _dare_residual(sys: LinearSystem, G: np.ndarray, P: np.ndarray) -> float:
    n = sys.n
    closed = np.linalg.solve((np.eye(n) + P @ G).T, sys.A.T).T  # A (I+PG)^-1
    return _inf_norm(closed @ P @ sys.A.T - P + sys.Q)


def _finalize(sys, G, P, bank, method, iterations, diagnostics) -> DareSolution:
    """Shared certification: residual, SPD, posteriori identity, stability."""
    n = sys.n
    P = _symmetrize(P, "P")
    scale = 1.0 + _inf_norm(P)
    residual = _dare_residual(sys, G, P)
    if residual > DARE_RESIDUAL_TOL * scale:
        raise SolverError(
            f"{method}: DARE residual {residual:.3e} exceeds "
            f"{DARE_RESIDUAL_TOL * scale:.3e}"
        )
    min_eig = float(np.linalg.eigvalsh(P).min())
    if min_eig <= 0.0:
        raise SolverError(
            f"{method}: P is not positive definite (min eigenvalue {min_eig:.3e})"
        )
    if bank is not None:
        P_p = riccati_update(bank, P)
        C, R = bank.C, bank.R
        K = P @ C.T @ np.linalg.inv(C @ P @ C.T + R) if C.shape[0] else None
    else:
        P_p = _symmetrize(np.linalg.inv(np.linalg.inv(P) + G), "P_p")
        K = None
    recomp = _inf_norm(sys.A @ P_p @ sys.A.T + sys.Q - P)
    if recomp > DARE_RESIDUAL_TOL * scale:
        raise SolverError(
            f"{method}: P != A P_p A^T + Q (gap {recomp:.3e})"
        )
    A_G = np.linalg.solve((np.eye(n) + P @ G).T, sys.A.T).T
    rho = float(np.abs(np.linalg.eigvals(A_G)).max())
    if rho >= 1.0:
        raise SolverError(
            f"{method}: closed loop is not stable (spectral radius {rho:.6f})"
        )
    diagnostics = dict(diagnostics)
    diagnostics["posteriori_recomposition_gap"] = recomp
    diagnostics["closed_loop_spectral_radius"] = rho
    return DareSolution(
        P=P,
        P_p=P_p,
        K=K,
        A_G=A_G,
        method=method,
        iterations=iterations,
        residual=residual,
        diagnostics=diagnostics,
    )


def solve_dare_fixed_point(
    sys: LinearSystem,
    bank: SensorBank,
    tol: float = 1e-12,
    max_iter: int = 100000,
) -> DareSolution:
    """Fixed-point route: iterate P <- h(g(P)) from P0 = Q.

    The iteration follows the filter's natural covariance recursion (priori
    update composed with the measurement update) and converges exponentially
    under the standing assumptions.  Stops when the sweep-to-sweep change
    satisfies |dP|_inf <= tol * (1 + |P|_inf).
    """
    observable, rank = check_observability(sys, bank)
    if not observable:
        raise SolverError(
            f"(A, C) is not observable (rank {rank} < {sys.n}); "
            "the DARE has no stabilizing solution"
        )
    P = sys.Q.copy()
    for it in range(1, max_iter + 1):
        P_next = lyapunov_step(sys, riccati_update(bank, P))
        delta = _inf_norm(P_next - P)
        P = P_next
        if delta <= tol * (1.0 + _inf_norm(P)):
            break
    else:
        raise SolverError(
            f"fixed point did not converge in {max_iter} sweeps "
            f"(last residual {_dare_residual(sys, bank.G, P):.3e})"
        )
    sol = _finalize(sys, bank.G, P, bank, "fixed_point", it, {})
    # diagnostic only: the posteriori covariance is itself a g(h(.)) fixed point
    gh_gap = _inf_norm(riccati_update(bank, lyapunov_step(sys, sol.P_p)) - sol.P_p)
    sol.diagnostics["posteriori_fixed_point_gap"] = gh_gap
    return sol


def build_symplectic(sys: LinearSystem, G: np.ndarray) -> np.ndarray:
    """Assemble S = [[A^T + G A^-1 Q, -G A^-1], [-A^-1 Q, A^-1]].

    Requires invertible A; a condition number above 1e8 triggers a warning
    because the explicit inverse then pollutes the spectrum.
    """
    G = np.asarray(G, dtype=float)
    n = sys.n
    if G.shape != (n, n):
        raise SolverError(f"G shape {G.shape} does not match state dim {n}")
    cond = np.linalg.cond(sys.A)
    if not np.isfinite(cond) or cond > 1e12:
        raise SolverError("A is numerically singular; no symplectic form exists")
    if cond > 1e8:
        warnings.warn(
            f"A is ill conditioned (cond {cond:.3e}); symplectic spectrum "
            "may be inaccurate",
            stacklevel=2,
        )
    Ainv = np.linalg.inv(sys.A)
    S = np.block([
        [sys.A.T + G @ Ainv @ sys.Q, -G @ Ainv],
        [-Ainv @ sys.Q, Ainv],
    ])
    resid = _symplectic_residual(S)
    if resid > 1e-8 * (1.0 + _inf_norm(S)):
        raise SolverError(
            f"constructed matrix fails the symplectic identity "
            f"(residual {resid:.3e})"
        )
    return S


def _symplectic_residual(S: np.ndarray) -> float:
    """Infinity norm of J^-1 S^T J S - I (zero for exact symplectic S)."""
    n2 = S.shape[0]
    n = n2 // 2
    J = np.block([
        [np.zeros((n, n)), np.eye(n)],
        [-np.eye(n), np.zeros((n, n))],
    ])
    return _inf_norm(np.linalg.solve(J, S.T) @ J @ S - np.eye(n2))


def _canonicalize(v: np.ndarray) -> np.ndarray:
    """Unit norm, first significant component rotated to be real positive."""
    v = v / np.linalg.norm(v)
    idx = np.flatnonzero(np.abs(v) > 1e-8 * np.abs(v).max())
    lead = v[idx[0]]
    return v * (np.conj(lead) / np.abs(lead))


def symplectic_spectrum(S: np.ndarray, cluster_tol: float = 1e-6) -> SymplecticSpectrum:
    """Stable eigenpairs and invariant-subspace blocks of a symplectic S.

    Eigenpairs come from a dense eigendecomposition; the X/Y blocks come
    from the ordered real Schur form, which stays well behaved under
    clustered eigenvalues where raw eigenvectors degrade.
    """
    n2 = S.shape[0]
    n = n2 // 2
    lam, V = np.linalg.eig(S)
    margin = float(np.abs(np.abs(lam) - 1.0).min())
    if margin < UNIT_CIRCLE_MARGIN:
        raise NotInDomRicError(
            f"eigenvalue within {margin:.3e} of the unit circle; "
            "not in dom(Ric)"
        )
    order = np.argsort(np.abs(lam), kind="stable")
    stable = [i for i in order if abs(lam[i]) < 1.0]
    if len(stable) != n:
        raise NotInDomRicError(
            f"{len(stable)} stable eigenvalues, expected {n}"
        )
    values = [complex(lam[i]) for i in stable]
    vectors = [_canonicalize(V[:, i]) for i in stable]
    flags = [
        any(abs(values[i] - values[j]) <= cluster_tol
            for j in range(n) if j != i)
        for i in range(n)
    ]

    T, Z, sdim = scipy.linalg.schur(S, output="real", sort="iuc")
    if sdim != n:
        raise NotInDomRicError(
            f"Schur ordering found {sdim} stable eigenvalues, expected {n}"
        )
    X = Z[:n, :n]
    Y = Z[n:, :n]
    return SymplecticSpectrum(
        S=S,
        stable_eigenvalues=values,
        stable_eigenvectors=vectors,
        multiplicity_flags=flags,
        X_block=X,
        Y_block=Y,
        definition_residual=_symplectic_residual(S),
        unit_circle_margin=margin,
        cluster_tol=cluster_tol,
    )


def solve_dare_symplectic(
    sys: LinearSystem,
    G: np.ndarray,
    bank: SensorBank | None = None,
) -> tuple[DareSolution, SymplecticSpectrum]:
    """Symplectic route: P = Y X^-1 from the stable invariant subspace.

    Works from the information matrix alone; pass the bank as well to get
    the steady gain K in the solution.  Raises NotInDomRicError when the
    spectrum touches the unit circle and SolverError when the X block is
    numerically singular (complementarity failure).
    """
    G = _symmetrize(np.asarray(G, dtype=float), "G")
    S = build_symplectic(sys, G)
    spectrum = symplectic_spectrum(S)
    X, Y = spectrum.X_block, spectrum.Y_block
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-12:
        raise SolverError(
            "stable subspace is not complementary to span[0; I] "
            f"(X block condition {sv[0] / max(sv[-1], np.finfo(float).tiny):.3e})"
        )
    P = np.real(np.linalg.solve(X.T, Y.T).T)  # Y X^-1
    n = sys.n
    # I + P G invertibility backs the closed-loop form used everywhere below
    IPG = np.eye(n) + P @ G
    sv_ipg = np.linalg.svd(IPG, compute_uv=False)
    if sv_ipg[-1] <= sv_ipg[0] * 1e-12:
        raise SolverError("I + P G is numerically singular")
    diagnostics = {
        "x_block_condition": float(sv[0] / sv[-1]),
        "unit_circle_margin": spectrum.unit_circle_margin,
    }
    sol = _finalize(sys, G, P, bank, "symplectic", 0, diagnostics)
    return sol, spectrum


def solve_discrete_lyapunov(F: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve F X F^T - X + W = 0 for Schur-stable F.

    Thin wrapper over the vectorized linear solve with the stability
    precondition enforced and the residual certified to 1e-10.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    rho = float(np.abs(np.linalg.eigvals(F)).max()) if F.size else 0.0
    if rho >= 1.0:
        raise SolverError(
            f"F is not Schur stable (spectral radius {rho:.6f})"
        )
    X = scipy.linalg.solve_discrete_lyapunov(F, W)
    resid = _inf_norm(F @ X @ F.T - X + W)
    if resid > 1e-10 * (1.0 + _inf_norm(X)):
        raise SolverError(f"Lyapunov residual {resid:.3e} above tolerance")
    return _symmetrize(X, "lyapunov solution")
