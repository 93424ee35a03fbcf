"""Designing redundant sensor rows by iterated convexification.

Given a row budget (two scalar sensors, gain limited to norm 5), what is
the best redundant output matrix?  The bilinear Riccati inequality is
convexified around the current iterate, each subproblem is a small
semidefinite program solved by the embedded interior-point method, and
the minimized trace bound gamma decreases monotonically.  This script
runs the loop from two different starting points, shows the trajectory,
and verifies the result against an independently solved Riccati equation.
"""

import numpy as np

from rsd import (
    LinearSystem,
    Sensor,
    SensorBank,
    augment,
    solve_dare_symplectic,
)
from rsd.design import DesignSpec, design_redundant_sensors


def run(name, spec):
    result = design_redundant_sensors(spec)
    print(f"--- {name} ---")
    print(f"status {result.status} after {result.iterations} outer "
          f"iterations ({result.diagnostics['wall_time']:.2f}s)")
    print("gamma trajectory:")
    for i, gamma in enumerate(result.gamma_trajectory):
        print(f"  {i:2d}  {gamma:.9f}")
    print(f"designed rows (norms "
          f"{[round(v, 6) for v in result.row_block_norms]}):")
    print(result.C_star)
    post = result.post_validation
    print(f"independent Riccati check: tr(P) = {post.dare_trace:.9f} "
          f"vs gamma* = {result.gamma_star:.9f}")
    print(f"certified improvement over the base network: "
          f"{post.bound_gap:.6f}\n")
    return result


def main():
    sys_ = LinearSystem(np.diag([0.9, 1.1]), np.eye(2) / 4)
    rows = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]
    base = SensorBank(
        [Sensor([r], [[1.0]], label=f"s{i + 1}")
         for i, r in enumerate(rows)])

    common = dict(sys=sys_, base=base, row_partition=(1, 1),
                  R_tilde=np.eye(2), norm_bound=5.0, epsilon=1e-5)
    warm = run("start from C_r0 = [[3, 0], [3, 3]]",
               DesignSpec(C_r0=np.array([[3.0, 0.0], [3.0, 3.0]]),
                          **common))
    cold = run("start from the default (tiny) linearization point",
               DesignSpec(**common))

    print(f"both starts land on the same optimum to "
          f"{abs(warm.gamma_star - cold.gamma_star):.1e}; only the Gram "
          "matrix C~'R~^-1 C~ matters,")
    print("so the row matrices themselves may differ by an orthogonal "
          "recombination:")
    print("warm Gram:")
    print(warm.gram)
    print("cold Gram:")
    print(cold.gram)

    # the designed network, fed back through the analysis layer
    designed = SensorBank(
        [Sensor([row], [[1.0]], label=f"d{i + 1}")
         for i, row in enumerate(warm.C_star)])
    full = augment(base, designed)
    sol, _ = solve_dare_symplectic(sys_, full.G)
    print(f"\nfinal augmented covariance trace "
          f"{np.trace(sol.P):.9f} (bound {warm.gamma_star:.9f})")


if __name__ == "__main__":
    main()
