"""Iterative convexified design of redundant sensor output matrices.

The design problem picks redundant output rows C~ (with a fixed noise
covariance R~ and a per-sensor spectral-norm budget U) that minimize the
trace of the steady-state priori error covariance of the augmented network.
The trace objective is bounded through gamma >= tr(X^-1) and the Riccati
feasibility condition is written as a matrix inequality that is bilinear in
(X, C~); each outer iteration linearizes the bilinear term around the
previous iterate C_r and solves the resulting semidefinite program, which
yields a non-increasing objective sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    LinearSystem,
    Sensor,
    SensorBank,
    ValidationError,
    _freeze,
    augment,
    check_observability,
    validate_system,
)
from .riccati import lyapunov_step, riccati_update, solve_dare_symplectic
from .sdp import LmiBlock, SdpProblem, block_from_affine, solve

# strictness margin on X; the optimum sits at X = P^-1, far from the margin
STRICTNESS_MARGIN = 1e-9
# objective increases beyond this are a numerical failure, not progress
MONOTONE_TOL = 1e-9


class DesignError(RuntimeError):
    """Raised when the design loop cannot produce a usable iterate."""


@dataclass(frozen=True)
class DesignSpec:
    """Inputs of one design run.

    row_partition lists the number of output rows of each redundant sensor;
    R_tilde is the given block-diagonal noise covariance of those rows
    (conformal with row_partition); norm_bound is the shared spectral-norm
    budget U applied to each sensor's row block.  C_r0 is the initial
    linearization point; when omitted, a deterministic small perturbation of
    zeros is used (entry (i, i mod n) = 1e-3) so the first subproblem is
    not degenerate.
    """

    sys: LinearSystem
    base: SensorBank
    row_partition: tuple
    R_tilde: np.ndarray
    norm_bound: float
    C_r0: Optional[np.ndarray] = None
    epsilon: float = 1e-5
    max_outer_iterations: int = 200

    def __post_init__(self):
        part = tuple(int(r) for r in self.row_partition)
        if not part or any(r <= 0 for r in part):
            raise ValidationError(
                "row_partition must list positive row counts")
        object.__setattr__(self, "row_partition", part)
        m = sum(part)
        n = self.sys.n
        R = np.asarray(self.R_tilde, dtype=float)
        if R.shape != (m, m):
            raise ValidationError(
                f"R_tilde has shape {R.shape}, expected ({m}, {m})")
        if np.abs(R - R.T).max() > 1e-9 * (1 + np.abs(R).max()):
            raise ValidationError("R_tilde must be symmetric")
        R = (R + R.T) / 2.0
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValidationError("R_tilde must be positive definite")
        mask = np.ones((m, m), dtype=bool)
        start = 0
        for rows in part:
            mask[start:start + rows, start:start + rows] = False
            start += rows
        if np.abs(R[mask]).max(initial=0.0) > 1e-12 * (1 + np.abs(R).max()):
            raise ValidationError(
                "R_tilde must be block diagonal conformal with row_partition")
        object.__setattr__(self, "R_tilde", _freeze(R))
        if not self.norm_bound > 0:
            raise ValidationError("norm_bound must be positive")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if self.max_outer_iterations < 1:
            raise ValidationError("max_outer_iterations must be at least 1")
        if self.C_r0 is not None:
            C0 = np.asarray(self.C_r0, dtype=float)
            if C0.shape != (m, n):
                raise ValidationError(
                    f"C_r0 has shape {C0.shape}, expected ({m}, {n})")
            object.__setattr__(self, "C_r0", _freeze(C0))
        if self.base.n != n:
            raise ValidationError(
                "base bank state dimension does not match the system")

    @property
    def num_rows(self) -> int:
        """Total number of redundant output rows."""
        return sum(self.row_partition)


@dataclass(frozen=True)
class PostValidation:
    """Independent check of a design against the exact Riccati solution."""

    dare_trace: float
    bound_gap: float
    residuals: dict


@dataclass(frozen=True)
class DesignResult:
    """Outcome of design_redundant_sensors.

    status is "converged", "max_outer_iterations" or "numerical_failure";
    for the latter two the returned iterate is the best one reached and the
    message explains what stopped the loop.  gamma_trajectory records every
    subproblem optimum in order (including a final rejected value when the
    sequence stopped decreasing).
    """

    spec: DesignSpec
    C_star: np.ndarray
    gamma_star: float
    X_star: np.ndarray
    gamma_trajectory: tuple
    iterations: int
    post_validation: PostValidation
    status: str
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    def sensor_blocks(self):
        """C_star split into per-sensor row blocks."""
        out = []
        start = 0
        for rows in self.spec.row_partition:
            out.append(self.C_star[start:start + rows])
            start += rows
        return out

    @property
    def row_block_norms(self) -> tuple:
        """Spectral norm of each designed sensor block."""
        return tuple(float(np.linalg.norm(blk, 2))
                     for blk in self.sensor_blocks())

    @property
    def gram(self) -> np.ndarray:
        """Information contribution C_star^T R_tilde^-1 C_star.

        The Gram matrix is the design's meaningful output: any C with the
        same Gram matrix yields the same augmented Riccati solution.
        """
        Rti = np.linalg.inv(self.spec.R_tilde)
        return self.C_star.T @ Rti @ self.C_star


def _default_c_r0(m: int, n: int) -> np.ndarray:
    C0 = np.zeros((m, n))
    for i in range(m):
        C0[i, i % n] = 1e-3
    return C0


def build_F_lmi(problem: SdpProblem, X, C_tilde, sys: LinearSystem,
                G0: np.ndarray, C_r: np.ndarray,
                R_tilde: np.ndarray) -> LmiBlock:
    """Riccati feasibility inequality, linearized around C_r.

    Returns the negative-semidefinite block of size 3n + m whose (2,2)
    entry carries Phi = -X - G0 - C~^T R~^-1 C_r - C_r^T R~^-1 C~; at
    C~ = C_r the Schur complement of the -R_tilde corner restores the exact
    bilinear term -C~^T R~^-1 C~.
    """
    n = sys.n
    A = sys.A
    sq = sys.sqrt_Q
    C_r = np.asarray(C_r, dtype=float)
    m = C_r.shape[0]
    if C_r.shape != (m, n):
        raise ValidationError(
            f"C_r has shape {C_r.shape}, expected ({m}, {n})")
    if np.asarray(G0).shape != (n, n):
        raise ValidationError("G0 dimension does not match the system")
    if np.asarray(R_tilde).shape != (m, m):
        raise ValidationError("R_tilde dimension does not match C_r")
    Rt = np.asarray(R_tilde, dtype=float)
    Rti = np.linalg.inv(Rt)
    Z = np.zeros

    def fn(a):
        Xv = a[X.name]
        Cv = a[C_tilde.name]
        phi = -Xv - G0 - Cv.T @ Rti @ C_r - C_r.T @ Rti @ Cv
        return np.block([
            [-Xv, Xv @ A, Xv @ sq, Z((n, m))],
            [A.T @ Xv, phi, Z((n, n)), C_r.T],
            [sq @ Xv, Z((n, n)), -np.eye(n), Z((n, m))],
            [Z((m, n)), C_r, Z((m, n)), -Rt],
        ])

    return block_from_affine(problem, 3 * n + m, fn, "negative_semidefinite",
                             variables=[X, C_tilde])


def build_trace_lmi(problem: SdpProblem, gamma, X) -> LmiBlock:
    """Arrow block of size n^2 + 1 encoding gamma >= tr(X^-1) for X PD."""
    n = X.shape[0]
    E = np.eye(n).reshape(n * n, 1)

    def fn(a):
        return np.block([
            [np.atleast_2d(a[gamma.name]), E.T],
            [E, np.kron(np.eye(n), a[X.name])],
        ])

    return block_from_affine(problem, n * n + 1, fn, "positive_semidefinite",
                             variables=[gamma, X])


def build_norm_lmi(problem: SdpProblem, C_tilde, row_range,
                   norm_bound: float) -> LmiBlock:
    """Spectral-norm budget on one sensor's row block of C_tilde.

    Encodes [[U I_rows, c], [c^T, U I_n]] >= 0, equivalent to
    sigma_max(c) <= U for the rows row_range = (start, stop).
    """
    if not norm_bound > 0:
        raise ValidationError("norm_bound must be positive")
    start, stop = row_range
    rows = stop - start
    n = C_tilde.shape[1]
    if not (0 <= start < stop <= C_tilde.shape[0]):
        raise ValidationError(
            f"row_range {row_range} outside the {C_tilde.shape[0]} rows")
    U = float(norm_bound)

    def fn(a):
        c = a[C_tilde.name][start:stop]
        return np.block([
            [U * np.eye(rows), c],
            [c.T, U * np.eye(n)],
        ])

    return block_from_affine(problem, rows + n, fn, "positive_semidefinite",
                             variables=[C_tilde])


def _block_violation(block: LmiBlock, x: np.ndarray) -> float:
    val = block.evaluate(x)
    eigs = np.linalg.eigvalsh((val + val.T) / 2.0)
    if block.sense == "negative_semidefinite":
        return max(0.0, float(eigs.max()))
    return max(0.0, float(-eigs.min()))


def design_redundant_sensors(spec: DesignSpec) -> DesignResult:
    """Run the outer linearize-and-solve loop and post-validate the result.

    Each iteration linearizes the bilinear Riccati inequality at the
    previous C~ and minimizes gamma subject to {feasibility LMI, trace
    bound, per-sensor norm budgets, X strictly positive}.  The loop stops
    when successive optima differ by less than epsilon (absolute).  The
    returned design is checked against the exact augmented Riccati
    solution.
    """
    t0 = time.perf_counter()
    sys = spec.sys
    base = spec.base
    report = validate_system(sys)
    if not report.all_pass:
        raise ValidationError(
            "model preconditions fail: " + "; ".join(report.warnings))
    observable, rank = check_observability(sys, base)
    if not observable:
        raise ValidationError(
            f"base network is not collectively observable "
            f"(rank {rank} < {sys.n})")
    n = sys.n
    m = spec.num_rows
    G0 = base.G
    C_r = spec.C_r0 if spec.C_r0 is not None else _default_c_r0(m, n)

    trajectory = []
    history = []
    best = None  # (gamma, X, C) of the latest accepted iterate
    status = "max_outer_iterations"
    message = ""
    iterations = 0

    for j in range(spec.max_outer_iterations):
        problem = SdpProblem()
        gam = problem.add_variable("scalar", name="gamma")
        X = problem.add_variable("symmetric_matrix", n, name="X")
        Ct = problem.add_variable("rectangular_matrix", (m, n),
                                  name="C_tilde")
        blocks = [
            build_F_lmi(problem, X, Ct, sys, G0, C_r, spec.R_tilde),
            build_trace_lmi(problem, gam, X),
        ]
        start = 0
        for rows in spec.row_partition:
            blocks.append(build_norm_lmi(problem, Ct,
                                         (start, start + rows),
                                         spec.norm_bound))
            start += rows
        blocks.append(block_from_affine(
            problem, n,
            lambda a: a["X"] - STRICTNESS_MARGIN * np.eye(n),
            "positive_semidefinite", variables=[X]))
        for blk in blocks:
            problem.add_lmi_block(blk)

        warm_violation = None
        if best is not None:
            # the previous iterate must stay feasible after relinearization
            xprev = problem.assignment_to_vector(
                {"gamma": best[0], "X": best[1], "C_tilde": best[2]})
            warm_violation = max(_block_violation(blk, xprev)
                                 for blk in blocks)

        sol = solve(problem, {gam: 1.0})
        iterations = j + 1
        if sol.status != "optimal":
            if best is None:
                if sol.status == "infeasible":
                    raise DesignError(
                        f"design subproblem infeasible at iteration {j} "
                        f"with norm bound U={spec.norm_bound:g}: the "
                        "initial linearization point admits no feasible "
                        "(X, C~); try a larger norm bound or a different "
                        "C_r0")
                raise DesignError(
                    f"design subproblem failed at iteration {j}: "
                    f"{sol.status}: {sol.message}")
            status = "numerical_failure"
            message = (f"subproblem returned {sol.status} at iteration {j}; "
                       "keeping the previous iterate")
            break

        gj = float(sol.objective)
        history.append({
            "iteration": j,
            "objective": gj,
            "solver_iterations": sol.iterations,
            "warm_start_violation": warm_violation,
        })
        trajectory.append(gj)
        if best is not None and gj > best[0] + MONOTONE_TOL:
            status = "numerical_failure"
            message = (f"objective increased at iteration {j} "
                       f"({best[0]:.9g} -> {gj:.9g}); keeping the previous "
                       "iterate")
            break
        previous_gamma = best[0] if best is not None else None
        best = (gj, sol.values["X"], sol.values["C_tilde"])
        C_r = best[2]
        if previous_gamma is not None and \
                abs(gj - previous_gamma) < spec.epsilon:
            status = "converged"
            break

    gamma_star, X_star, C_star = best
    post = _post_validate(spec, gamma_star, X_star, C_star)
    diagnostics = {
        "outer_iterations": history,
        "wall_time": time.perf_counter() - t0,
    }
    return DesignResult(
        spec=spec,
        C_star=_freeze(C_star),
        gamma_star=gamma_star,
        X_star=_freeze(X_star),
        gamma_trajectory=tuple(trajectory),
        iterations=iterations,
        post_validation=post,
        status=status,
        message=message,
        diagnostics=diagnostics,
    )


def _post_validate(spec: DesignSpec, gamma_star: float, X_star: np.ndarray,
                   C_star: np.ndarray) -> PostValidation:
    sensors = []
    start = 0
    for k, rows in enumerate(spec.row_partition):
        sensors.append(Sensor(
            C=C_star[start:start + rows],
            R=spec.R_tilde[start:start + rows, start:start + rows],
            label=f"designed{k + 1}"))
        start += rows
    augmented = augment(spec.base, SensorBank(sensors))
    solution, _ = solve_dare_symplectic(spec.sys, augmented.G,
                                        bank=augmented)
    P = solution.P
    X_inv = np.linalg.inv(X_star)
    dare_residual = lyapunov_step(
        spec.sys, riccati_update(augmented, X_inv)) - X_inv
    residuals = {
        "x_inverse_vs_dare": float(np.abs(X_inv - P).max()),
        "dare_residual_at_x_inverse": float(np.abs(dare_residual).max()),
        "gamma_vs_trace": float(abs(gamma_star - np.trace(X_inv))),
    }
    return PostValidation(
        dare_trace=float(np.trace(P)),
        bound_gap=performance_bound(spec.sys, spec.base, gamma_star),
        residuals=residuals,
    )


def performance_bound(sys: LinearSystem, base: SensorBank,
                      gamma: float) -> float:
    """Certified improvement bound tr(P_base) - gamma.

    Any design achieving objective gamma improves the steady-state priori
    error trace by at least this amount (negative values are vacuous but
    returned unmodified).
    """
    solution, _ = solve_dare_symplectic(sys, base.G, bank=base)
    return float(np.trace(solution.P) - gamma)
