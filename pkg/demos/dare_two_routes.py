"""Two independent routes to the steady-state Kalman covariance.

The toolkit solves the information-form Riccati equation twice: by
fixed-point iteration on the covariance recursion, and by reading the
stable invariant subspace off a symplectic matrix.  The two routes share
no code beyond the operator algebra, so their agreement is a strong
correctness check.  This script walks both routes on the two-state
benchmark system and on a scalar case with a closed-form answer.
"""

import numpy as np

from rsd import (
    LinearSystem,
    Sensor,
    SensorBank,
    build_symplectic,
    solve_dare_fixed_point,
    solve_dare_symplectic,
)


def main():
    print("=== benchmark system: A = diag(0.9, 1.1), Q = I/4 ===")
    sys_ = LinearSystem(np.diag([0.9, 1.1]), np.eye(2) / 4)
    rows = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]
    bank = SensorBank(
        [Sensor([r], [[1.0]], label=f"s{i + 1}")
         for i, r in enumerate(rows)])

    fixed = solve_dare_fixed_point(sys_, bank)
    sym, spectrum = solve_dare_symplectic(sys_, bank.G, bank=bank)

    print(f"fixed point:  {fixed.iterations} sweeps, "
          f"residual {fixed.residual:.2e}")
    print("P =")
    print(fixed.P)
    print(f"symplectic:   residual {sym.residual:.2e}, "
          f"unit-circle margin {spectrum.unit_circle_margin:.3f}")
    disagreement = np.abs(fixed.P - sym.P).max()
    print(f"route disagreement |P_fixed - P_symplectic| = "
          f"{disagreement:.2e}")

    print("\n=== symplectic structure ===")
    S = build_symplectic(sys_, bank.G)
    lam = np.sort_complex(np.linalg.eigvals(S))
    print("eigenvalues of S (stable/unstable reciprocal pairs):")
    for value in lam:
        print(f"  {value.real:+.6f} {value.imag:+.6f}j   "
              f"|lambda| = {abs(value):.6f}")
    stable = [v for v in spectrum.stable_eigenvalues]
    closed_loop = np.sort(np.abs(np.linalg.eigvals(sym.A_G)))
    print("stable symplectic eigenvalues equal the closed-loop spectrum:")
    print(f"  symplectic:  {np.sort(np.abs(stable))}")
    print(f"  closed loop: {closed_loop}")

    print("\n=== scalar sanity check against the quadratic root ===")
    # g p^2 + (1 - a^2 - q g) p - q = 0 with a=0.5, q=c=r=1
    root = (0.25 + np.sqrt(0.25 ** 2 + 4.0)) / 2
    scalar_sys = LinearSystem([[0.5]], [[1.0]])
    scalar_bank = SensorBank([Sensor([[1.0]], [[1.0]], label="s")])
    p = solve_dare_fixed_point(scalar_sys, scalar_bank).P[0, 0]
    print(f"closed-form root {root:.12f}")
    print(f"solver           {p:.12f}   (error {abs(p - root):.2e})")


if __name__ == "__main__":
    main()
