"""Monte-Carlo Kalman filtering to verify steady-state predictions.

Noise generation is fully reproducible: each (trial, stream) pair gets an
independent substream of a counter-based Philox generator via
SeedSequence(entropy=seed, spawn_key=(trial, stream)).  Stream 0 drives the
process noise and stream i (i >= 1) drives sensor i-1, keyed by the
sensor's position in the bank; augmented banks list base sensors first, so
shared sensors see identical noise realizations across networks compared
under a common seed.  Gaussian variates are drawn by inverse CDF applied to
a 53-bit uniform, so a given substream always yields the same values.

The filter runs the time-varying recursion from the supplied initial
covariance with the estimate initialized at zero; errors recorded after the
burn-in are posteriori errors, and the empirical covariance is the second
moment about zero (the steady-state error mean is zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import csv

import numpy as np
from scipy.special import ndtri

from .model import (
    LinearSystem,
    SensorBank,
    ValidationError,
    _freeze,
    check_observability,
    validate_system,
)
from .riccati import solve_dare_symplectic

DEFAULT_BINS = 80
BLOWUP_LIMIT = 1e12


class SimulationError(RuntimeError):
    """Raised when the filter recursion blows up."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    x0 is the initial true state (zero when omitted); P0 is the initial
    filter covariance (Q when omitted).  Statistics use the steps after
    burn_in only.
    """

    steps: int = 20000
    trials: int = 1
    seed: int = 0
    x0: Optional[np.ndarray] = None
    P0: Optional[np.ndarray] = None
    burn_in: int = 200

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValidationError("burn_in must be nonnegative")
        if self.steps <= self.burn_in:
            raise ValidationError(
                f"steps ({self.steps}) must exceed burn_in ({self.burn_in})")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        object.__setattr__(self, "seed", int(self.seed))
        if self.x0 is not None:
            object.__setattr__(
                self, "x0",
                _freeze(np.asarray(self.x0, dtype=float).ravel()))
        if self.P0 is not None:
            P0 = np.asarray(self.P0, dtype=float)
            if P0.ndim != 2 or P0.shape[0] != P0.shape[1]:
                raise ValidationError("P0 must be a square matrix")
            if np.abs(P0 - P0.T).max() > 1e-9 * (1 + np.abs(P0).max()):
                raise ValidationError("P0 must be symmetric")
            P0 = (P0 + P0.T) / 2.0
            if np.linalg.eigvalsh(P0).min() < -1e-12 * (1 + np.abs(P0).max()):
                raise ValidationError("P0 must be positive semidefinite")
            object.__setattr__(self, "P0", _freeze(P0))


@dataclass(frozen=True)
class Histogram:
    """Density-normalized bin data for one scalar series.

    edges has bins+1 entries; counts sum to the sample count (values
    outside the range are clamped into the edge bins).
    """

    edges: np.ndarray
    counts: np.ndarray
    densities: np.ndarray

    def rows(self):
        """Yield (bin_left, bin_right, count, density) per bin."""
        for k in range(len(self.counts)):
            yield (float(self.edges[k]), float(self.edges[k + 1]),
                   int(self.counts[k]), float(self.densities[k]))


@dataclass(frozen=True)
class SimOutput:
    """Results of one Monte-Carlo run.

    error_series has shape (trials, steps - burn_in, n) and holds the
    posteriori errors e_k = xhat_k|k - x_k after burn-in.
    predicted_covariance is the posteriori steady state from the Riccati
    solution; final_filter_covariance is the recursion's last posteriori
    covariance (they agree once the recursion has converged).
    """

    config: SimConfig
    error_series: np.ndarray
    empirical_covariance: np.ndarray
    predicted_covariance: np.ndarray
    final_filter_covariance: np.ndarray
    histograms: tuple

    @property
    def retained_steps(self) -> int:
        return self.error_series.shape[1]


@dataclass(frozen=True)
class ComparisonResult:
    """Per-network outputs plus pairwise per-element variance ratios.

    variance_ratios maps (i, j) with i < j to the element-wise ratio of
    empirical error variances of network j over network i.
    """

    labels: tuple
    outputs: tuple
    variance_ratios: dict

    def output(self, label: str) -> SimOutput:
        return self.outputs[self.labels.index(label)]


def _substream(seed: int, trial: int, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(trial, stream))
    return np.random.Generator(np.random.Philox(seq))


def _standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    # inverse CDF over a 53-bit uniform: deterministic for a given stream
    u = rng.integers(1, 2 ** 53, size=shape)
    return ndtri(u / 2 ** 53)


def run_kalman(sys: LinearSystem, bank: SensorBank,
               config: SimConfig) -> SimOutput:
    """Simulate the process and filter it with the given bank.

    The truth follows x_{k+1} = A x_k + w_k with y_k = C x_k + v_k; the
    filter applies the time-varying measurement update and propagation
    starting from (xhat = 0, P0).  Raises SimulationError when the filter
    covariance exceeds the blow-up limit and ValidationError when the
    model preconditions fail.
    """
    report = validate_system(sys)
    if not report.all_pass:
        raise ValidationError(
            "model preconditions fail: " + "; ".join(report.warnings))
    observable, rank = check_observability(sys, bank)
    if not observable:
        raise ValidationError(
            f"bank is not collectively observable (rank {rank} < {sys.n})")

    n = sys.n
    steps, trials, burn_in = config.steps, config.trials, config.burn_in
    x0 = config.x0 if config.x0 is not None else np.zeros(n)
    if x0.shape != (n,):
        raise ValidationError(f"x0 has shape {x0.shape}, expected ({n},)")
    P0 = config.P0 if config.P0 is not None else sys.Q
    if P0.shape != (n, n):
        raise ValidationError(
            f"P0 has shape {P0.shape}, expected ({n}, {n})")

    A, Q, sqrt_Q = sys.A, sys.Q, sys.sqrt_Q
    C, R = bank.C, bank.R
    chols = [np.linalg.cholesky(np.asarray(s.R)) for s in bank.sensors]

    kept = steps - burn_in
    errors = np.empty((trials, kept, n))
    P_post = P0
    for trial in range(trials):
        w = _standard_normal(_substream(config.seed, trial, 0),
                             (steps, n)) @ sqrt_Q.T
        v_parts = [
            _standard_normal(_substream(config.seed, trial, 1 + i),
                             (steps, L.shape[0])) @ L.T
            for i, L in enumerate(chols)
        ]
        v = np.concatenate(v_parts, axis=1) if v_parts else \
            np.zeros((steps, 0))

        # propagate the estimation error e = xhat - x instead of the raw
        # state: e_prior = A e - w, e_post = (I - KC) e_prior + K v.  This
        # is algebraically identical to filtering the simulated truth but
        # stays finite when A has unstable modes (the truth itself
        # overflows float64 long before 20000 steps at |lambda| = 1.1)
        e_prior = -x0.copy()
        P_prior = P0
        for k in range(steps):
            CP = C @ P_prior
            K = np.linalg.solve(CP @ C.T + R, CP).T
            e_post = e_prior - K @ (C @ e_prior) + K @ v[k]
            P_post = P_prior - K @ CP
            P_post = (P_post + P_post.T) / 2.0
            if np.abs(P_post).max() > BLOWUP_LIMIT:
                raise SimulationError(
                    f"filter covariance exceeded {BLOWUP_LIMIT:g} at step "
                    f"{k}; the model assumptions are violated")
            if k >= burn_in:
                errors[trial, k - burn_in] = e_post
            e_prior = A @ e_post - w[k]
            P_prior = A @ P_post @ A.T + Q

    solution, _ = solve_dare_symplectic(sys, bank.G, bank=bank)
    predicted = solution.P_p

    empirical = np.einsum("tki,tkj->ij", errors, errors) / (trials * kept)
    empirical = (empirical + empirical.T) / 2.0
    hists = tuple(histogram(errors[:, :, j].ravel()) for j in range(n))
    return SimOutput(
        config=config,
        error_series=_freeze(errors),
        empirical_covariance=_freeze(empirical),
        predicted_covariance=predicted,
        final_filter_covariance=_freeze(P_post),
        histograms=hists,
    )


def compare_networks(sys: LinearSystem, banks, config: SimConfig,
                     labels=None) -> ComparisonResult:
    """Run the same seeded simulation for several banks and compare.

    All banks see the same truth realization (process-noise stream 0) and
    sensors at the same position receive the same noise stream, so
    networks sharing a base bank are compared under identical inputs.
    """
    banks = list(banks)
    if labels is None:
        labels = tuple(f"network{i + 1}" for i in range(len(banks)))
    else:
        labels = tuple(labels)
    if len(labels) != len(banks):
        raise ValidationError("labels and banks must have equal length")
    if len(set(labels)) != len(labels):
        raise ValidationError("labels must be unique")
    outputs = tuple(run_kalman(sys, bank, config) for bank in banks)
    ratios = {}
    for i in range(len(banks)):
        for j in range(i + 1, len(banks)):
            ratios[(i, j)] = _freeze(
                np.diag(outputs[j].empirical_covariance)
                / np.diag(outputs[i].empirical_covariance))
    return ComparisonResult(labels=labels, outputs=outputs,
                            variance_ratios=ratios)


def histogram(series, bins: int = DEFAULT_BINS,
              value_range=None) -> Histogram:
    """Bin a scalar series with outliers clamped into the edge bins.

    The default range is symmetric about the sample mean with half-width
    four empirical standard deviations; a zero-variance series falls back
    to a unit-width range so exactly one bin is occupied.  Densities
    integrate to one over the binned range.
    """
    series = np.asarray(series, dtype=float).ravel()
    if series.size == 0:
        raise ValidationError("histogram requires a nonempty series")
    if bins < 1:
        raise ValidationError("bins must be at least 1")
    if value_range is None:
        center = series.mean()
        half = 4.0 * series.std()
        if half == 0.0:
            half = 0.5
        lo, hi = center - half, center + half
    else:
        lo, hi = float(value_range[0]), float(value_range[1])
        if not lo < hi:
            raise ValidationError("value_range must satisfy lo < hi")
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, series, side="right") - 1,
                  0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    width = (hi - lo) / bins
    densities = counts / (series.size * width)
    return Histogram(edges=_freeze(edges), counts=_freeze(counts),
                     densities=_freeze(densities))


def write_trajectory_csv(output: SimOutput, path, trial: int = 0) -> None:
    """Write one trial's retained error series as k, e_1, ..., e_n."""
    series = output.error_series[trial]
    n = series.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"e_{j + 1}" for j in range(n)])
        start = output.config.burn_in
        for k in range(series.shape[0]):
            writer.writerow([start + k]
                            + [repr(float(v)) for v in series[k]])


def write_histogram_csv(output: SimOutput, element: int, path) -> None:
    """Write one element's histogram as bin_left, bin_right, count, density."""
    hist = output.histograms[element]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count", "density"])
        for left, right, count, density in hist.rows():
            writer.writerow([repr(left), repr(right), count, repr(density)])
