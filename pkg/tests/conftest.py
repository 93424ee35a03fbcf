"""Shared fixtures: the benchmark two-state network and a reproducible
random corpus of valid systems with redundant banks.

The corpus construction is deliberately conservative so that every derived
quantity is numerically resolvable: base banks are regenerated until
observable, redundant banks are full rank with singular values bounded away
from zero, and both DAREs must solve.  The seed is fixed; the suite is
deterministic.
"""

from __future__ import annotations

import numpy as np
import pytest

from rsd import (
    LinearSystem,
    Sensor,
    SensorBank,
    augment,
    check_observability,
    solve_dare_symplectic,
)

CORPUS_SEED = 20250823
CORPUS_SIZE = 100


@pytest.fixture(scope="session")
def benchmark_system() -> LinearSystem:
    return LinearSystem(np.diag([0.9, 1.1]), np.eye(2) / 4)


@pytest.fixture(scope="session")
def base_bank() -> SensorBank:
    rows = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]
    return SensorBank(
        [Sensor([r], [[1.0]], label=f"s{i + 1}") for i, r in enumerate(rows)]
    )


@pytest.fixture(scope="session")
def ct1() -> Sensor:
    return Sensor([[3.0, 0.0]], [[1.0]], label="ct1")


@pytest.fixture(scope="session")
def ct2() -> Sensor:
    return Sensor([[3.0, 3.0]], [[1.0]], label="ct2")


@pytest.fixture(scope="session")
def r1_bank(ct1) -> SensorBank:
    """Redundant bank whose augmentation leaves state 2 untouched."""
    return SensorBank([ct1])


@pytest.fixture(scope="session")
def r1_double_bank(ct1) -> SensorBank:
    """Two identical copies of the state-1 sensor (G1 = diag(18, 0))."""
    return SensorBank([ct1, Sensor(ct1.C, ct1.R, label="ct1b")])


@pytest.fixture(scope="session")
def r2_bank(ct1, ct2) -> SensorBank:
    return SensorBank([ct1, ct2])


def _random_case(rng: np.random.Generator) -> dict:
    """One corpus entry: system + observable base bank + full-rank redundant
    bank, regenerated until both DAREs solve."""
    n = int(rng.integers(2, 7))
    while True:
        A = rng.normal(size=(n, n))
        rho = np.abs(np.linalg.eigvals(A)).max()
        A = A / rho * rng.uniform(0.5, 1.5)  # mix of stable and unstable
        if abs(np.linalg.det(A)) > 1e-3:
            break
    B = rng.normal(size=(n, n))
    Q = B @ B.T / n + 0.1 * np.eye(n)
    sys = LinearSystem(A, Q)

    while True:
        base = SensorBank(
            [Sensor([rng.normal(size=n)], [[1.0]], label=f"b{i}")
             for i in range(n + 1)]
        )
        if check_observability(sys, base)[0]:
            break

    # full-rank redundant information: singular values in [0.6, 1.6]
    U, _, Vt = np.linalg.svd(rng.normal(size=(n, n)))
    Ct = U @ np.diag(rng.uniform(0.6, 1.6, size=n)) @ Vt
    if rng.uniform() < 0.5:
        redundant = SensorBank([Sensor(Ct, np.eye(n), label="rd")])
    else:
        redundant = SensorBank(
            [Sensor([row], [[1.0]], label=f"rd{i}")
             for i, row in enumerate(Ct)]
        )
    return {"sys": sys, "base": base, "redundant": redundant}


def _resolvable(M: np.ndarray) -> bool:
    """Every eigenvalue of M sits clear of the inertia dead band, so sign
    counts are stable under perturbations of the order of the solve error."""
    band = 1e-8 * (1 + np.abs(M).max())
    return bool(np.abs(np.linalg.eigvalsh(M)).min() > 3 * band)


@pytest.fixture(scope="session")
def random_corpus() -> list:
    rng = np.random.default_rng(CORPUS_SEED)
    corpus = []
    while len(corpus) < CORPUS_SIZE:
        case = _random_case(rng)
        try:
            sol_base, _ = solve_dare_symplectic(
                case["sys"], case["base"].G, bank=case["base"]
            )
            full = augment(case["base"], case["redundant"])
            sol_full, _ = solve_dare_symplectic(case["sys"], full.G, bank=full)
        except Exception:
            continue  # spectra too close to the unit circle; redraw
        if not (_resolvable(sol_base.P - sol_full.P)
                and _resolvable(sol_base.P_p - sol_full.P_p)):
            continue  # a difference eigenvalue sits inside the dead band
        case["full"] = full
        case["sol_base"] = sol_base
        case["sol_full"] = sol_full
        corpus.append(case)
    return corpus
