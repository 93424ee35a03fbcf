"""Plant and sensor-network data model.

Defines the discrete-time process

    x[k+1] = A x[k] + w[k],      w ~ N(0, Q)

together with sensor banks

    y_i[k] = C_i x[k] + v_i[k],  v_i ~ N(0, R_i)

and enforces the standing assumptions: A invertible, (A, sqrt(Q))
controllable, and the bank collectively observable.  Banks expose the
stacked output matrix, the block-diagonal noise covariance and the
information matrix G = C^T R^-1 C, which is additive across sensors.

All types are immutable after construction; operations are pure functions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ValidationError",
    "LinearSystem",
    "Sensor",
    "SensorBank",
    "ValidationReport",
    "validate_system",
    "check_observability",
    "augment",
    "information_matrix",
    "psd_sqrt",
    "numerical_rank",
]

# warn when a declared-symmetric input deviates by more than this (relative)
SYMMETRY_WARN_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a structural precondition."""


def _as_matrix(M, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got ndim={M.ndim}")
    return M


def _symmetrize(M: np.ndarray, name: str) -> np.ndarray:
    """Return (M + M^T)/2, warning when the asymmetry is above noise level."""
    resid = np.abs(M - M.T).max() if M.size else 0.0
    scale = max(1.0, np.abs(M).max()) if M.size else 1.0
    if resid > SYMMETRY_WARN_TOL * scale:
        warnings.warn(
            f"{name} is asymmetric (residual {resid:.3e}); symmetrizing",
            stacklevel=3,
        )
    return (M + M.T) / 2.0


def _freeze(M: np.ndarray) -> np.ndarray:
    M = np.array(M, dtype=float, copy=True)
    M.setflags(write=False)
    return M


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via spectral decomposition.

    Eigenvalue clipping at zero makes this safe for singular inputs, which a
    triangular factorization is not.
    """
    M = _symmetrize(np.asarray(M, dtype=float), "psd_sqrt input")
    w, V = np.linalg.eigh(M)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def numerical_rank(M: np.ndarray) -> int:
    """Rank by singular values with threshold max(dim) * sigma_max * 1e-12."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > max(M.shape) * s[0] * 1e-12))


@dataclass(frozen=True)
class LinearSystem:
    """Plant matrices of the process x[k+1] = A x[k] + w[k].

    Attributes:
        A: n x n state transition matrix.
        Q: n x n process-noise covariance, symmetric PSD (symmetrized on
           ingestion).
        n: state dimension.

    The constructor checks shapes and that Q is symmetric PSD.  Invertibility
    of A and controllability of (A, sqrt(Q)) are soft assumptions checked by
    validate_system so that degenerate systems can still be constructed and
    diagnosed.
    """

    A: np.ndarray
    Q: np.ndarray
    n: int = field(init=False)

    def __init__(self, A, Q):
        A = _as_matrix(A, "A")
        Q = _as_matrix(Q, "Q")
        if A.shape[0] != A.shape[1]:
            raise ValidationError(f"A must be square, got {A.shape}")
        if Q.shape != A.shape:
            raise ValidationError(
                f"Q shape {Q.shape} does not match A shape {A.shape}"
            )
        Q = _symmetrize(Q, "Q")
        min_eig = float(np.linalg.eigvalsh(Q).min()) if Q.size else 0.0
        if min_eig < -1e-10 * (1.0 + np.abs(Q).max()):
            raise ValidationError(
                f"Q must be positive semidefinite; min eigenvalue {min_eig:.3e}"
            )
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "n", A.shape[0])

    @property
    def sqrt_Q(self) -> np.ndarray:
        return psd_sqrt(self.Q)


@dataclass(frozen=True)
class Sensor:
    """One sensor y = C x + v with v ~ N(0, R), R symmetric positive definite.

    Attributes:
        C: m_i x n output matrix.
        R: m_i x m_i measurement-noise covariance (symmetrized on ingestion).
        label: identifier used in reports and error messages.
    """

    C: np.ndarray
    R: np.ndarray
    label: str = ""

    def __init__(self, C, R, label: str = ""):
        C = _as_matrix(C, "C")
        R = _as_matrix(R, "R")
        if R.shape != (C.shape[0], C.shape[0]):
            raise ValidationError(
                f"sensor {label or '?'}: R shape {R.shape} does not match "
                f"{C.shape[0]} output rows"
            )
        R = _symmetrize(R, f"R of sensor {label or '?'}")
        min_eig = float(np.linalg.eigvalsh(R).min())
        if min_eig <= 0.0:
            raise ValidationError(
                f"sensor {label or '?'}: R must be positive definite "
                f"(min eigenvalue {min_eig:.3e})"
            )
        object.__setattr__(self, "C", _freeze(C))
        object.__setattr__(self, "R", _freeze(R))
        object.__setattr__(self, "label", label)

    @property
    def m(self) -> int:
        """Number of output rows."""
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[1]


class SensorBank:
    """Ordered collection of sensors sharing one state dimension.

    Caches the stacked output matrix C (sum(m_i) x n), the block-diagonal
    noise covariance R, and the information matrix G = C^T R^-1 C.  Sensor
    order is significant and preserved: augmentation appends redundant
    sensors after the base ones.

    An empty bank needs an explicit state_dim and contributes zero
    information (C with zero rows, G = 0).
    """

    def __init__(self, sensors, state_dim: int | None = None):
        sensors = tuple(sensors)
        if not sensors and state_dim is None:
            raise ValidationError("empty bank needs an explicit state_dim")
        n = state_dim if state_dim is not None else sensors[0].n
        for s in sensors:
            if s.n != n:
                raise ValidationError(
                    f"sensor {s.label or '?'} has {s.n} state columns, "
                    f"bank expects {n}"
                )
        self._sensors = sensors
        self._n = int(n)
        m = sum(s.m for s in sensors)
        C = np.zeros((m, n))
        R = np.zeros((m, m))
        G = np.zeros((n, n))
        row = 0
        for s in sensors:
            C[row:row + s.m] = s.C
            R[row:row + s.m, row:row + s.m] = s.R
            G += s.C.T @ np.linalg.solve(s.R, s.C)
            row += s.m
        self._C = _freeze(C)
        self._R = _freeze(R)
        self._G = _freeze(_symmetrize(G, "G"))

    @property
    def sensors(self) -> tuple:
        return self._sensors

    @property
    def n(self) -> int:
        """State dimension."""
        return self._n

    @property
    def num_rows(self) -> int:
        """Total stacked output rows sum(m_i)."""
        return self._C.shape[0]

    @property
    def C(self) -> np.ndarray:
        """Stacked output matrix, base order preserved."""
        return self._C

    @property
    def R(self) -> np.ndarray:
        """Block-diagonal measurement-noise covariance."""
        return self._R

    @property
    def G(self) -> np.ndarray:
        """Information matrix C^T R^-1 C, symmetric PSD."""
        return self._G

    def __len__(self) -> int:
        return len(self._sensors)

    def __repr__(self) -> str:
        labels = ", ".join(s.label or "?" for s in self._sensors)
        return f"SensorBank(n={self._n}, rows={self.num_rows}, [{labels}])"


@dataclass
class ValidationReport:
    """Outcome of the standing-assumption checks.

    A pass flag is True iff the corresponding rank equals the state
    dimension.  Observability fields stay None until a bank is supplied
    (validate_system checks the plant alone; check_observability fills the
    rest when called through the command-line layer).
    """

    invertibility_pass: bool
    condition_number: float
    controllability_pass: bool
    controllability_rank: int
    observability_pass: bool | None = None
    observability_rank: int | None = None
    warnings: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        ok = self.invertibility_pass and self.controllability_pass
        if self.observability_pass is not None:
            ok = ok and self.observability_pass
        return ok


def validate_system(sys: LinearSystem) -> ValidationReport:
    """Check invertibility of A and controllability of (A, sqrt(Q)).

    Invertibility is decided by the numerical rank of A; the 2-norm condition
    number is reported as a diagnostic.  Controllability uses the rank of
    [sqrt(Q), A sqrt(Q), ..., A^(n-1) sqrt(Q)] with the symmetric PSD square
    root.
    """
    n = sys.n
    rank_A = numerical_rank(sys.A)
    inv_ok = rank_A == n
    cond = float(np.linalg.cond(sys.A)) if inv_ok else float("inf")

    sq = psd_sqrt(sys.Q)
    blocks = []
    Ak = np.eye(n)
    for _ in range(n):
        blocks.append(Ak @ sq)
        Ak = sys.A @ Ak
    ctrb = np.hstack(blocks) if blocks else np.zeros((n, 0))
    rank_c = numerical_rank(ctrb)

    report = ValidationReport(
        invertibility_pass=inv_ok,
        condition_number=cond,
        controllability_pass=rank_c == n,
        controllability_rank=rank_c,
    )
    if not inv_ok:
        report.warnings.append(f"A is singular (rank {rank_A} < {n})")
    elif cond > 1e8:
        report.warnings.append(f"A is ill conditioned (cond {cond:.3e})")
    if rank_c < n:
        report.warnings.append(
            f"(A, sqrt(Q)) not controllable (rank {rank_c} < {n})"
        )
    return report


def check_observability(sys: LinearSystem, bank: SensorBank) -> tuple[bool, int]:
    """Rank test of the stacked observability matrix of (A, C).

    Returns (observable, rank) where observable is True iff
    rank [C; CA; ...; CA^(n-1)] equals n.
    """
    if bank.n != sys.n:
        raise ValidationError(
            f"bank state dimension {bank.n} does not match system {sys.n}"
        )
    n = sys.n
    C = bank.C
    blocks = []
    Ak = np.eye(n)
    for _ in range(n):
        blocks.append(C @ Ak)
        Ak = Ak @ sys.A
    obs = np.vstack(blocks) if blocks else np.zeros((0, n))
    rank = numerical_rank(obs)
    return rank == n, rank


def augment(base: SensorBank, redundant: SensorBank) -> SensorBank:
    """Concatenate two banks: base sensors first, redundant appended after.

    The stacked C concatenates vertically in that order, R stays block
    diagonal, and the information matrices satisfy G = G0 + G1 exactly up to
    rounding.
    """
    if base.n != redundant.n:
        raise ValidationError(
            f"state dimensions differ: base {base.n}, redundant {redundant.n}"
        )
    return SensorBank(base.sensors + redundant.sensors, state_dim=base.n)


def information_matrix(bank: SensorBank) -> np.ndarray:
    """Information matrix G = C^T R^-1 C of a bank (zero matrix when empty)."""
    return bank.G
