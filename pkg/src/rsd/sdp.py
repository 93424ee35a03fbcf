"""Small-scale semidefinite programming over block LMIs.

Problems are assembled from matrix/scalar decision variables and LMI blocks
that are affine in those variables, then minimized with an embedded
primal-dual interior-point method (HKM search direction with a Mehrotra
predictor-corrector).  The solver targets the block sizes that arise in
iterative sensor design (up to a few hundred rows) and is deterministic:
identical inputs produce bit-identical iterations.

Symmetric matrix variables are stored as scaled upper-triangle vectors
(off-diagonal entries multiplied by sqrt(2)) so that the Euclidean inner
product of two storage vectors equals the trace inner product of the
matrices; this keeps the duality-gap accounting exact.

The user problem

    minimize    c^T x
    subject to  Const_b + sum_k x_k Coef_bk  PSD   for every block b

is treated as the conic dual of the multiplier problem

    minimize    sum_b <Const_b, Z_b>
    subject to  sum_b <Coef_bk, Z_b> = c_k,   Z_b PSD,

with x = -y for the textbook dual variable y; the method drives the linear
residual, the slack residual and the complementarity gap to zero together
from an infeasible start.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "SdpError",
    "DecisionVariable",
    "LmiBlock",
    "SdpProblem",
    "SdpSolution",
    "sym_to_vec",
    "vec_to_sym",
    "block_from_affine",
    "solve",
    "dump_problem",
]

_ROOT2 = np.sqrt(2.0)

# declare optimality below these; accept a stalled iterate one decade looser
GAP_TARGET = 1e-9
FEAS_TARGET = 1e-9
GAP_ACCEPT = 1e-8
FEAS_ACCEPT = 1e-8
# phase-I shift above this (scaled) threshold certifies infeasibility
INFEASIBILITY_THRESHOLD = 1e-7


class SdpError(RuntimeError):
    """Raised for structural problems: bad shapes, unregistered variables,
    mutation after freezing."""


def _upper_indices(n: int):
    return [(i, j) for i in range(n) for j in range(i, n)]


def sym_to_vec(M: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle storage of a symmetric matrix.

    Off-diagonal entries carry a sqrt(2) factor so that
    sym_to_vec(A) @ sym_to_vec(B) == trace(A B).
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    v = np.empty(n * (n + 1) // 2)
    for k, (i, j) in enumerate(_upper_indices(n)):
        v[k] = M[i, i] if i == j else _ROOT2 * M[i, j]
    return v


def vec_to_sym(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of sym_to_vec."""
    v = np.asarray(v, dtype=float)
    M = np.zeros((n, n))
    for k, (i, j) in enumerate(_upper_indices(n)):
        if i == j:
            M[i, i] = v[k]
        else:
            M[i, j] = M[j, i] = v[k] / _ROOT2
    return M


@dataclass(frozen=True)
class DecisionVariable:
    """Handle for one decision variable and its slice of the flattened
    decision vector.

    kind is one of "symmetric_matrix" (storage n(n+1)/2), "rectangular_matrix"
    (storage rows*cols, row-major) or "scalar" (storage 1).
    """

    name: str
    kind: str
    shape: tuple
    offset: int
    length: int

    def to_storage(self, value) -> np.ndarray:
        if self.kind == "scalar":
            return np.atleast_1d(np.asarray(value, dtype=float)).ravel()[:1]
        value = np.asarray(value, dtype=float)
        if value.shape != self.shape:
            raise SdpError(
                f"variable {self.name}: value shape {value.shape} != {self.shape}"
            )
        if self.kind == "symmetric_matrix":
            return sym_to_vec(value)
        return value.ravel()

    def from_storage(self, segment: np.ndarray):
        if self.kind == "scalar":
            return float(segment[0])
        if self.kind == "symmetric_matrix":
            return vec_to_sym(segment, self.shape[0])
        return np.asarray(segment, dtype=float).reshape(self.shape)


class LmiBlock:
    """One affine matrix inequality Const + sum_k x_k Coef_k (PSD or NSD).

    coefficients maps global decision coordinates to symmetric matrices of
    the block size; asymmetric coefficients are rejected outright rather
    than silently symmetrized, because they indicate a bug in the caller's
    affine map.  All-zero coefficients are dropped.
    """

    def __init__(self, size: int, constant, coefficients: dict, sense: str):
        if sense not in ("negative_semidefinite", "positive_semidefinite"):
            raise SdpError(f"unknown sense {sense!r}")
        constant = np.asarray(constant, dtype=float)
        if constant.shape != (size, size):
            raise SdpError(
                f"constant term shape {constant.shape} != ({size}, {size})"
            )
        self._check_symmetric(constant, "constant term")
        coeffs = {}
        for coord, mat in coefficients.items():
            mat = np.asarray(mat, dtype=float)
            if mat.shape != (size, size):
                raise SdpError(
                    f"coefficient for coordinate {coord}: shape {mat.shape} "
                    f"!= ({size}, {size})"
                )
            self._check_symmetric(mat, f"coefficient for coordinate {coord}")
            if np.any(mat != 0.0):
                coeffs[int(coord)] = mat
        self.size = int(size)
        self.constant = constant
        self.coefficients = coeffs
        self.sense = sense

    @staticmethod
    def _check_symmetric(M: np.ndarray, what: str) -> None:
        resid = np.abs(M - M.T).max() if M.size else 0.0
        if resid > 1e-12 * (1.0 + np.abs(M).max()):
            raise SdpError(f"{what} is not symmetric (residual {resid:.3e})")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Affine map value at the flattened decision vector x."""
        M = self.constant.copy()
        for coord, mat in self.coefficients.items():
            M = M + x[coord] * mat
        return M


class SdpProblem:
    """Mutable container for variables and blocks; frozen on first solve."""

    def __init__(self):
        self._variables: list[DecisionVariable] = []
        self._by_name: dict[str, DecisionVariable] = {}
        self._blocks: list[LmiBlock] = []
        self._frozen = False
        self._length = 0

    @property
    def variables(self) -> tuple:
        return tuple(self._variables)

    @property
    def blocks(self) -> tuple:
        return tuple(self._blocks)

    @property
    def num_coordinates(self) -> int:
        return self._length

    def add_variable(self, kind: str, shape=None,
                     name: str | None = None) -> DecisionVariable:
        """Register a decision variable and return its handle.

        kind: "symmetric_matrix" (shape: side length), "rectangular_matrix"
        (shape: (rows, cols)) or "scalar" (shape ignored).
        """
        if self._frozen:
            raise SdpError("problem already solved; cannot add variables")
        if kind == "symmetric_matrix":
            n = int(shape)
            var_shape, length = (n, n), n * (n + 1) // 2
        elif kind == "rectangular_matrix":
            r, c = (int(shape[0]), int(shape[1]))
            var_shape, length = (r, c), r * c
        elif kind == "scalar":
            var_shape, length = (), 1
        else:
            raise SdpError(f"unknown variable kind {kind!r}")
        if name is None:
            name = f"v{len(self._variables)}"
        if name in self._by_name:
            raise SdpError(f"duplicate variable name {name!r}")
        var = DecisionVariable(name=name, kind=kind, shape=var_shape,
                               offset=self._length, length=length)
        self._variables.append(var)
        self._by_name[name] = var
        self._length += length
        return var

    def variable(self, name: str) -> DecisionVariable:
        return self._by_name[name]

    def add_lmi_block(self, block: LmiBlock) -> None:
        if self._frozen:
            raise SdpError("problem already solved; cannot add blocks")
        for coord in block.coefficients:
            if not 0 <= coord < self._length:
                raise SdpError(
                    f"block references coordinate {coord}, but only "
                    f"{self._length} are registered"
                )
        self._blocks.append(block)

    def freeze(self) -> None:
        self._frozen = True

    def assignment_to_vector(self, assignment: dict) -> np.ndarray:
        """Flatten {variable or name: value} into a decision vector."""
        x = np.zeros(self._length)
        for key, value in assignment.items():
            var = key if isinstance(key, DecisionVariable) else self._by_name[key]
            x[var.offset:var.offset + var.length] = var.to_storage(value)
        return x

    def vector_to_assignment(self, x: np.ndarray) -> dict:
        return {var.name: var.from_storage(x[var.offset:var.offset + var.length])
                for var in self._variables}


def block_from_affine(problem: SdpProblem, size: int, fn, sense: str,
                      variables=None) -> LmiBlock:
    """Build an LmiBlock by probing an affine matrix-valued function.

    fn receives an assignment dict {variable name: value} and must return
    the block matrix.  The constant term is fn at the zero assignment and
    each coefficient is the (exact, since fn is affine) finite difference
    against a unit basis coordinate.  variables optionally restricts the
    probing to the variables the block actually uses.  One deterministic
    pseudo-random assignment is re-evaluated to catch non-affine maps.
    """
    if variables is None:
        variables = problem.variables
    variables = [problem.variable(v) if isinstance(v, str) else v
                 for v in variables]
    zero = {var.name: var.from_storage(np.zeros(var.length))
            for var in problem.variables}
    constant = np.asarray(fn(dict(zero)), dtype=float)
    if constant.shape != (size, size):
        raise SdpError(
            f"affine map returned shape {constant.shape}, expected "
            f"({size}, {size})"
        )
    coefficients = {}
    for var in variables:
        for k in range(var.length):
            e = np.zeros(var.length)
            e[k] = 1.0
            probe = dict(zero)
            probe[var.name] = var.from_storage(e)
            mat = np.asarray(fn(probe), dtype=float) - constant
            coefficients[var.offset + k] = (mat + mat.T) / 2.0

    rng = np.random.default_rng(0)
    x = np.zeros(problem.num_coordinates)
    for var in variables:
        x[var.offset:var.offset + var.length] = rng.normal(size=var.length)
    direct = np.asarray(fn(problem.vector_to_assignment(x)), dtype=float)
    block = LmiBlock(size, constant, coefficients, sense)
    assembled = block.evaluate(x)
    scale = 1.0 + np.abs(direct).max()
    if np.abs(direct - assembled).max() > 1e-9 * scale:
        raise SdpError(
            "affine probe mismatch: the supplied map is not affine in the "
            "declared variables"
        )
    return block


@dataclass
class SdpSolution:
    """Solver outcome.

    status: "optimal", "infeasible", "max_iterations" or
    "numerical_failure".  values holds the returned assignment (best iterate
    for max_iterations, empty when infeasible).  primal_infeasibility is
    the worst semidefiniteness violation (most negative eigenvalue, clipped
    at zero) over the blocks evaluated at the returned point; relative_gap
    is |primal - dual| / (1 + |primal| + |dual|) at termination.
    """

    status: str
    values: dict
    objective: float | None
    primal_infeasibility: float
    relative_gap: float
    iterations: int
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    def value(self, var):
        name = var.name if isinstance(var, DecisionVariable) else var
        return self.values[name]


# --------------------------------------------------------------------------
# internal canonical data: every block as Const + sum_k x_k Coef_k  PSD,
# coordinates compressed to the ones that appear in some block
# --------------------------------------------------------------------------

class _BlockData:
    """Canonical PSD block with sparse per-coordinate coefficient triplets."""

    def __init__(self, block: LmiBlock, compact: dict):
        sign = -1.0 if block.sense == "negative_semidefinite" else 1.0
        self.size = block.size
        self.constant = sign * block.constant
        self.local_coords = np.array(
            sorted(compact[c] for c in block.coefficients), dtype=int)
        order = sorted(block.coefficients, key=lambda c: compact[c])
        rows, cols, vals, ptr = [], [], [], [0]
        for coord in order:
            mat = sign * block.coefficients[coord]
            r, c = np.nonzero(mat)
            rows.extend(r.tolist())
            cols.extend(c.tolist())
            vals.extend(mat[r, c].tolist())
            ptr.append(len(vals))
        self.rows = np.array(rows, dtype=int)
        self.cols = np.array(cols, dtype=int)
        self.vals = np.array(vals, dtype=float)
        self.ptr = np.array(ptr, dtype=int)
        self.norm = max(np.abs(self.constant).max(initial=0.0),
                        np.abs(self.vals).max(initial=0.0))

    def apply_adjoint(self, y_local: np.ndarray) -> np.ndarray:
        """sum_j y_j Coef_j as a dense matrix."""
        out = np.zeros((self.size, self.size))
        if len(self.vals):
            lengths = np.diff(self.ptr)
            weights = np.repeat(y_local, lengths) * self.vals
            np.add.at(out, (self.rows, self.cols), weights)
        return out

    def inner_products(self, W: np.ndarray) -> np.ndarray:
        """trace(Coef_j W) for every local coordinate j (W symmetric)."""
        if not len(self.local_coords):
            return np.zeros(0)
        prods = self.vals * W[self.cols, self.rows]
        return np.add.reduceat(prods, self.ptr[:-1])

    def schur_contribution(self, Z: np.ndarray, Sinv: np.ndarray) -> np.ndarray:
        """Matrix [trace(Coef_i Z Coef_j Sinv)]_ij over local coordinates."""
        d = len(self.local_coords)
        if d == 0:
            return np.zeros((0, 0))
        n = self.size
        # W_j = Z Coef_j Sinv from the triplet outer-product expansion
        W = np.empty((d, n, n))
        for j in range(d):
            sl = slice(self.ptr[j], self.ptr[j + 1])
            W[j] = (Z[:, self.rows[sl]] * self.vals[sl]) @ Sinv[self.cols[sl], :]
        flat = W.reshape(d, n * n)
        idx = self.cols * n + self.rows   # W_j[c_t, r_t] positions
        M = np.empty((d, d))
        for i in range(d):
            sl = slice(self.ptr[i], self.ptr[i + 1])
            M[i] = flat[:, idx[sl]] @ self.vals[sl]
        return M


def _sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2.0


def _max_step(M: np.ndarray, dM: np.ndarray) -> float:
    """Largest alpha <= 1 keeping M + alpha dM positive definite, with a
    0.98 interiorness margin."""
    L = np.linalg.cholesky(M)
    W = scipy.linalg.solve_triangular(L, dM, lower=True)
    W = scipy.linalg.solve_triangular(L, W.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(W)).min()
    if lam >= -1e-14:
        return 1.0
    return min(1.0, -0.98 / lam)


def _solve_ipm(blocks: list, b: np.ndarray, scale: float,
               max_iterations: int):
    """Textbook HKM predictor-corrector on data (C_b, A_bk, b).

    Primal: min sum <C_b, Z_b> s.t. sum <A_bk, Z_b> = b_k, Z PSD.
    Dual:   max b^T y        s.t. S_b = C_b - sum_k y_k A_bk PSD.
    Returns (status, y, diagnostics); the caller's decision vector is -y.
    """
    d = len(b)
    N = sum(bl.size for bl in blocks)
    coef_norm = max(bl.norm for bl in blocks)
    const_norm = max(np.abs(bl.constant).max(initial=0.0) for bl in blocks)
    s_scale = max(1.0, const_norm, coef_norm)
    z_scale = max(1.0, np.sqrt(N),
                  np.sqrt(N) * (1.0 + np.abs(b).max(initial=0.0))
                  / (1.0 + coef_norm))
    Z = [z_scale * np.eye(bl.size) for bl in blocks]
    S = [s_scale * np.eye(bl.size) for bl in blocks]
    y = np.zeros(d)
    b_norm = 1.0 + np.linalg.norm(b)
    c_norm = 1.0 + np.sqrt(sum(np.linalg.norm(bl.constant) ** 2
                               for bl in blocks))
    history = []
    status, message = "max_iterations", ""
    iteration = 0

    def gather(mats) -> np.ndarray:
        """A(W): stack block inner products into a length-d vector."""
        out = np.zeros(d)
        for bl, W in zip(blocks, mats):
            if len(bl.local_coords):
                out[bl.local_coords] += bl.inner_products(W)
        return out

    def acceptable() -> bool:
        """Current iterate meets the relaxed thresholds; used to salvage a
        certified answer when a factorization breaks down near optimality."""
        if not history:
            return False
        _, pinf, dinf, gap = history[-1]
        return (pinf <= FEAS_ACCEPT and dinf <= FEAS_ACCEPT
                and gap <= GAP_ACCEPT)

    for iteration in range(1, max_iterations + 1):
        # residuals first: they need no factorization, so every breakdown
        # below can consult the true state of the current iterate
        mu = sum(np.tensordot(Zb, Sb) for Zb, Sb in zip(Z, S)) / N
        rp = b - gather(Z)
        Rd = [bl.constant - bl.apply_adjoint(y[bl.local_coords]) - Sb
              for bl, Sb in zip(blocks, S)]
        pobj = sum(np.tensordot(bl.constant, Zb) for bl, Zb in zip(blocks, Z))
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / b_norm
        dinf = np.sqrt(sum(np.linalg.norm(R) ** 2 for R in Rd)) / c_norm
        history.append((mu, pinf, dinf, gap))

        if pinf <= FEAS_TARGET and dinf <= FEAS_TARGET and gap <= GAP_TARGET:
            status = "optimal"
            break
        if (np.sqrt(sum(np.linalg.norm(Zb) ** 2 for Zb in Z))
                > 1e13 * z_scale * np.sqrt(N)
                or np.sqrt(sum(np.linalg.norm(Sb) ** 2 for Sb in S))
                > 1e13 * s_scale * np.sqrt(N)):
            status, message = "diverged", "iterates diverged"
            break
        if mu < 1e-13 * scale and iteration > 5:
            if acceptable():
                status = "optimal"
            else:
                status, message = ("numerical_failure",
                                   "stalled with exhausted complementarity")
            break

        try:
            Sinv = []
            for Sb in S:
                L = np.linalg.cholesky(Sb)
                inv = scipy.linalg.solve_triangular(
                    L, np.eye(Sb.shape[0]), lower=True)
                Sinv.append(_sym(inv.T @ inv))
        except np.linalg.LinAlgError:
            if acceptable():
                status = "optimal"
            else:
                status, message = ("numerical_failure",
                                   "slack lost definiteness")
            break

        try:
            ZRS = [Zb @ R @ Si for Zb, R, Si in zip(Z, Rd, Sinv)]
            a_zrs = gather([_sym(W) for W in ZRS])

            M = np.zeros((d, d))
            for bl, Zb, Si in zip(blocks, Z, Sinv):
                if len(bl.local_coords):
                    M[np.ix_(bl.local_coords, bl.local_coords)] += \
                        bl.schur_contribution(Zb, Si)
            M = _sym(M)
            trace_scale = max(np.trace(M) / d, np.finfo(float).tiny)
            Mf = None
            jitter = 0.0
            for attempt in range(4):
                try:
                    Mf = scipy.linalg.cho_factor(
                        M + jitter * np.eye(d), lower=True)
                    break
                except np.linalg.LinAlgError:
                    jitter = trace_scale * 10.0 ** (-14 + 4 * attempt)
            if Mf is None:
                if acceptable():
                    status = "optimal"
                else:
                    status, message = ("numerical_failure",
                                       "Schur complement not positive "
                                       "definite")
                break

            def direction(H):
                rhs = rp - gather([_sym(Hb) for Hb in H]) + a_zrs
                dy = scipy.linalg.cho_solve(Mf, rhs)
                dS = [R + bl.apply_adjoint(-dy[bl.local_coords])
                      for bl, R in zip(blocks, Rd)]
                dZ = [_sym(Hb - Zb @ dSb @ Si)
                      for Hb, Zb, dSb, Si in zip(H, Z, dS, Sinv)]
                return dy, dS, dZ

            H_aff = [-Zb for Zb in Z]
            dy_a, dS_a, dZ_a = direction(H_aff)
            a_p = min(_max_step(Zb, dZb) for Zb, dZb in zip(Z, dZ_a))
            a_d = min(_max_step(Sb, dSb) for Sb, dSb in zip(S, dS_a))
            mu_aff = sum(
                np.tensordot(Zb + a_p * dZb, Sb + a_d * dSb)
                for Zb, dZb, Sb, dSb in zip(Z, dZ_a, S, dS_a)) / N
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

            H = [sigma * mu * Si - Zb - dZb @ dSb @ Si
                 for Si, Zb, dZb, dSb in zip(Sinv, Z, dZ_a, dS_a)]
            dy, dS, dZ = direction(H)
            a_p = min(_max_step(Zb, dZb) for Zb, dZb in zip(Z, dZ))
            a_d = min(_max_step(Sb, dSb) for Sb, dSb in zip(S, dS))
        except np.linalg.LinAlgError:
            if acceptable():
                status = "optimal"
            else:
                status, message = "numerical_failure", "factorization failed"
            break

        for i in range(len(blocks)):
            Z[i] = _sym(Z[i] + a_p * dZ[i])
            S[i] = _sym(S[i] + a_d * dS[i])
        y = y + a_d * dy

    diagnostics = {
        "iterations": iteration,
        "mu": history[-1][0] if history else float("nan"),
        "linear_residual": history[-1][1] if history else float("nan"),
        "slack_residual": history[-1][2] if history else float("nan"),
        "relative_gap": history[-1][3] if history else float("nan"),
        "message": message,
    }
    return status, y, diagnostics


def _objective_vector(problem: SdpProblem, minimize: dict) -> np.ndarray:
    c = np.zeros(problem.num_coordinates)
    for key, weight in minimize.items():
        var = key if isinstance(key, DecisionVariable) else problem.variable(key)
        c[var.offset:var.offset + var.length] += var.to_storage(
            weight if var.kind != "scalar" else float(weight))
    return c


def solve(problem: SdpProblem, minimize: dict,
          max_iterations: int = 100,
          _phase_one: bool = False) -> SdpSolution:
    """Minimize a linear functional subject to the problem's LMI blocks.

    minimize maps variables (handles or names) to weights: a float for
    scalar variables, a matrix W for matrix variables contributing
    trace(W^T V) to the objective.  The problem is frozen by the first
    solve; repeated solves are deterministic and bit-identical.

    Statuses: "optimal" (certified feasible and epsilon-optimal),
    "infeasible" (phase-I certificate), "max_iterations" (best iterate
    returned), "numerical_failure" (including apparently unbounded
    problems, with an explanatory message).
    """
    if not problem.blocks:
        raise SdpError("problem has no LMI blocks")
    problem.freeze()
    c = _objective_vector(problem, minimize)
    d_all = problem.num_coordinates

    constrained = np.zeros(d_all, dtype=bool)
    for block in problem.blocks:
        for coord in block.coefficients:
            constrained[coord] = True
    free_objective = np.flatnonzero(~constrained & (c != 0.0))
    if len(free_objective):
        return SdpSolution(
            status="numerical_failure", values={}, objective=None,
            primal_infeasibility=float("nan"), relative_gap=float("nan"),
            iterations=0,
            message=(
                f"objective coordinate {int(free_objective[0])} appears in "
                "no LMI block; the problem is unbounded"
            ),
        )
    active = np.flatnonzero(constrained)
    compact = {int(g): k for k, g in enumerate(active)}
    blocks = [_BlockData(block, compact) for block in problem.blocks]
    scale = max(1.0, max(bl.norm for bl in blocks))

    status, y, diagnostics = _solve_ipm(blocks, c[active], scale,
                                        max_iterations)

    if status in ("diverged", "max_iterations", "numerical_failure") \
            and not _phase_one:
        verdict = _phase_one_verdict(problem, max_iterations)
        if verdict == "infeasible":
            return SdpSolution(
                status="infeasible", values={}, objective=None,
                primal_infeasibility=float("inf"),
                relative_gap=float("nan"),
                iterations=diagnostics["iterations"],
                message="phase-I shift bounded away from zero",
                diagnostics=diagnostics,
            )
        if status == "diverged":
            status = "numerical_failure"
            diagnostics["message"] = (
                "iterates diverged on a feasible problem; the objective "
                "appears unbounded below"
            )
    elif status == "diverged":
        status = "numerical_failure"

    x = np.zeros(d_all)
    x[active] = -y
    values = problem.vector_to_assignment(x)
    worst = 0.0
    for block in problem.blocks:
        eigs = np.linalg.eigvalsh(_sym(block.evaluate(x)))
        viol = -eigs.min() if block.sense == "positive_semidefinite" \
            else eigs.max()
        worst = max(worst, viol)
    reportable = status in ("optimal", "max_iterations")
    return SdpSolution(
        status=status,
        values=values,
        objective=float(c @ x) if reportable else None,
        primal_infeasibility=max(0.0, worst),
        relative_gap=diagnostics["relative_gap"],
        iterations=diagnostics["iterations"],
        message=diagnostics.get("message", ""),
        diagnostics=diagnostics,
    )


def _phase_one_verdict(problem: SdpProblem, max_iterations: int) -> str:
    """Decide feasibility by minimizing the uniform PSD shift t.

    Solves min t subject to every block shifted by t I being PSD and
    t >= -1; a minimum bounded away from zero certifies that no assignment
    satisfies the original blocks.
    """
    aux = SdpProblem()
    for var in problem.variables:
        if var.kind == "symmetric_matrix":
            aux.add_variable(var.kind, var.shape[0], name=var.name)
        elif var.kind == "rectangular_matrix":
            aux.add_variable(var.kind, var.shape, name=var.name)
        else:
            aux.add_variable(var.kind, name=var.name)
    t = aux.add_variable("scalar", name="_phase_one_shift")
    scale = 1.0
    for block in problem.blocks:
        sign = -1.0 if block.sense == "negative_semidefinite" else 1.0
        coeffs = {coord: sign * mat
                  for coord, mat in block.coefficients.items()}
        coeffs[t.offset] = np.eye(block.size)
        aux.add_lmi_block(LmiBlock(block.size, sign * block.constant, coeffs,
                                   "positive_semidefinite"))
        scale = max(scale, np.abs(block.constant).max(initial=0.0))
    aux.add_lmi_block(LmiBlock(1, np.array([[1.0]]),
                               {t.offset: np.array([[1.0]])},
                               "positive_semidefinite"))
    sol = solve(aux, {t: 1.0}, max_iterations=max_iterations,
                _phase_one=True)
    if sol.status != "optimal":
        return "unknown"
    if sol.values["_phase_one_shift"] > INFEASIBILITY_THRESHOLD * (1 + scale):
        return "infeasible"
    return "feasible"


def dump_problem(problem: SdpProblem, stream=None) -> str:
    """Write the assembled problem in a sparse text form for cross-checking.

    Format, one entry per line:
        variable <name> <kind> <offset> <length>
        block <index> <size> <sense>
        entry <block> <row> <col> <coordinate> <coefficient>
    where coordinate -1 denotes the constant term.  Entries come out in
    deterministic sorted order; floats use repr so a round trip is exact.
    """
    own = stream is None
    if own:
        stream = io.StringIO()
    for var in problem.variables:
        stream.write(f"variable {var.name} {var.kind} {var.offset} "
                     f"{var.length}\n")
    for b, block in enumerate(problem.blocks):
        stream.write(f"block {b} {block.size} {block.sense}\n")
        rows, cols = np.nonzero(block.constant)
        for r, cc in zip(rows.tolist(), cols.tolist()):
            stream.write(f"entry {b} {r} {cc} -1 "
                         f"{float(block.constant[r, cc])!r}\n")
        for coord in sorted(block.coefficients):
            mat = block.coefficients[coord]
            rows, cols = np.nonzero(mat)
            for r, cc in zip(rows.tolist(), cols.tolist()):
                stream.write(f"entry {b} {r} {cc} {coord} "
                             f"{float(mat[r, cc])!r}\n")
    return stream.getvalue() if own else ""
