"""SDP layer tests: storage, block assembly, the embedded interior-point
solver, and the debug dump."""

import numpy as np
import pytest

from rsd.sdp import (
    LmiBlock,
    SdpError,
    SdpProblem,
    block_from_affine,
    dump_problem,
    solve,
    sym_to_vec,
    vec_to_sym,
)


def make_problem():
    return SdpProblem()


# ----------------------------------------------------------------- storage

def test_variable_storage_lengths():
    p = make_problem()
    X = p.add_variable("symmetric_matrix", 2, name="X")
    C = p.add_variable("rectangular_matrix", (2, 2), name="C")
    s = p.add_variable("scalar", name="s")
    assert X.length == 3
    assert C.length == 4
    assert s.length == 1
    assert (X.offset, C.offset, s.offset) == (0, 3, 7)
    assert p.num_coordinates == 8


def test_symmetric_storage_roundtrip_and_inner_product():
    rng = np.random.default_rng(31)
    for n in (1, 2, 5):
        A = rng.normal(size=(n, n))
        A = A + A.T
        B = rng.normal(size=(n, n))
        B = B + B.T
        np.testing.assert_allclose(vec_to_sym(sym_to_vec(A), n), A, atol=1e-14)
        assert sym_to_vec(A) @ sym_to_vec(B) == pytest.approx(
            np.trace(A @ B), rel=1e-12)


def test_assignment_vector_roundtrip():
    p = make_problem()
    X = p.add_variable("symmetric_matrix", 2, name="X")
    C = p.add_variable("rectangular_matrix", (1, 3), name="C")
    s = p.add_variable("scalar", name="s")
    assign = {"X": np.array([[1.0, 2.0], [2.0, 3.0]]),
              "C": np.array([[4.0, 5.0, 6.0]]), "s": 7.0}
    x = p.assignment_to_vector(assign)
    back = p.vector_to_assignment(x)
    np.testing.assert_allclose(back["X"], assign["X"], atol=1e-14)
    np.testing.assert_array_equal(back["C"], assign["C"])
    assert back["s"] == 7.0


# ------------------------------------------------------------------ blocks

def test_block_evaluation_exact():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    blk = LmiBlock(2, np.diag([1.0, 2.0]), {x.offset: np.diag([1.0, -1.0])},
                   "positive_semidefinite")
    p.add_lmi_block(blk)
    np.testing.assert_array_equal(blk.evaluate(np.array([3.0])),
                                  np.diag([4.0, -1.0]))


def test_block_rejects_asymmetric_coefficient():
    with pytest.raises(SdpError, match="not symmetric"):
        LmiBlock(2, np.zeros((2, 2)),
                 {0: np.array([[0.0, 1.0], [0.0, 0.0]])},
                 "positive_semidefinite")


def test_block_rejects_bad_sense_and_shape():
    with pytest.raises(SdpError, match="sense"):
        LmiBlock(1, np.zeros((1, 1)), {}, "semidefinite")
    with pytest.raises(SdpError, match="shape"):
        LmiBlock(2, np.zeros((1, 1)), {}, "positive_semidefinite")


def test_block_unregistered_coordinate():
    p = make_problem()
    p.add_variable("scalar", name="x")
    blk = LmiBlock(1, np.zeros((1, 1)), {5: np.eye(1)},
                   "positive_semidefinite")
    with pytest.raises(SdpError, match="coordinate"):
        p.add_lmi_block(blk)


def test_affine_builder_psd_shift():
    # X - delta I with delta = 0 evaluates to the identity at X = I
    p = make_problem()
    X = p.add_variable("symmetric_matrix", 2, name="X")
    blk = block_from_affine(p, 2, lambda a: a["X"] - 0.0 * np.eye(2),
                            "positive_semidefinite")
    x = p.assignment_to_vector({X: np.eye(2)})
    np.testing.assert_array_equal(blk.evaluate(x), np.eye(2))


def test_affine_builder_trace_bound_block():
    # arrow block encoding gamma >= trace(X^-1): strictly inside at
    # gamma = trace(I^-1) + 1
    p = make_problem()
    g = p.add_variable("scalar", name="g")
    X = p.add_variable("symmetric_matrix", 2, name="X")
    E = np.eye(2).reshape(4, 1)

    def fn(a):
        return np.block([[np.atleast_2d(a["g"]), E.T],
                         [E, np.kron(np.eye(2), a["X"])]])
    blk = block_from_affine(p, 5, fn, "positive_semidefinite")
    x = p.assignment_to_vector({"g": 3.0, "X": np.eye(2)})
    eigs = np.linalg.eigvalsh(blk.evaluate(x))
    assert eigs.min() == pytest.approx(2.0 - np.sqrt(3.0), abs=1e-12)
    # on the boundary the block is exactly singular
    x = p.assignment_to_vector({"g": 2.0, "X": np.eye(2)})
    assert np.linalg.eigvalsh(blk.evaluate(x)).min() == pytest.approx(
        0.0, abs=1e-12)


def test_affine_builder_rejects_nonlinear_map():
    p = make_problem()
    p.add_variable("symmetric_matrix", 2, name="X")
    with pytest.raises(SdpError, match="not affine"):
        block_from_affine(p, 2, lambda a: a["X"] @ a["X"],
                          "positive_semidefinite")


def test_problem_frozen_after_solve():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    p.add_lmi_block(LmiBlock(1, np.array([[1.0]]),
                             {x.offset: np.array([[1.0]])},
                             "positive_semidefinite"))
    solve(p, {x: 1.0})
    with pytest.raises(SdpError, match="frozen|already solved"):
        p.add_variable("scalar", name="y")
    with pytest.raises(SdpError, match="frozen|already solved"):
        p.add_lmi_block(LmiBlock(1, np.eye(1), {}, "positive_semidefinite"))


def test_duplicate_variable_name():
    p = make_problem()
    p.add_variable("scalar", name="x")
    with pytest.raises(SdpError, match="duplicate"):
        p.add_variable("scalar", name="x")


def test_solve_requires_blocks():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    with pytest.raises(SdpError, match="no LMI blocks"):
        solve(p, {x: 1.0})


# ------------------------------------------------------------------- solve

def test_schur_complement_minimum():
    # minimize g subject to [[g, 1], [1, 1]] PSD: optimum g = 1
    p = make_problem()
    g = p.add_variable("scalar", name="g")
    p.add_lmi_block(block_from_affine(
        p, 2, lambda a: np.array([[a["g"], 1.0], [1.0, 1.0]]),
        "positive_semidefinite"))
    sol = solve(p, {g: 1.0})
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(1.0, abs=2e-6)
    assert sol.primal_infeasibility <= 1e-8
    assert sol.relative_gap <= 1e-8


def test_trace_minimization_at_identity():
    p = make_problem()
    X = p.add_variable("symmetric_matrix", 3, name="X")
    p.add_lmi_block(block_from_affine(p, 3, lambda a: a["X"] - np.eye(3),
                                      "positive_semidefinite"))
    sol = solve(p, {X: np.eye(3)})
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0, abs=3e-6)
    np.testing.assert_allclose(sol.values["X"], np.eye(3), atol=1e-5)


def test_trace_minimization_above_floor():
    # min trace(X) over X >= M has optimum trace(M) at X = M
    rng = np.random.default_rng(37)
    B = rng.normal(size=(4, 4))
    M = B @ B.T / 4
    p = make_problem()
    X = p.add_variable("symmetric_matrix", 4, name="X")
    p.add_lmi_block(block_from_affine(p, 4, lambda a: a["X"] - M,
                                      "positive_semidefinite"))
    sol = solve(p, {X: np.eye(4)})
    assert sol.status == "optimal"
    opt = float(np.trace(M))
    assert sol.objective == pytest.approx(opt, abs=1e-6 * (1 + abs(opt)))
    np.testing.assert_allclose(sol.values["X"], M, atol=1e-5)


def test_matrix_weight_objective():
    # min <W, X> over X >= I equals trace(W) for PSD weight W
    rng = np.random.default_rng(41)
    B = rng.normal(size=(3, 3))
    W = B @ B.T / 3 + 0.2 * np.eye(3)
    p = make_problem()
    X = p.add_variable("symmetric_matrix", 3, name="X")
    p.add_lmi_block(block_from_affine(p, 3, lambda a: a["X"] - np.eye(3),
                                      "positive_semidefinite"))
    sol = solve(p, {X: W})
    assert sol.status == "optimal"
    opt = float(np.trace(W))
    assert sol.objective == pytest.approx(opt, abs=1e-6 * (1 + opt))


def test_infeasible_pair():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    p.add_lmi_block(LmiBlock(1, np.array([[-1.0]]),
                             {x.offset: np.array([[-1.0]])},
                             "positive_semidefinite"))   # x <= -1
    p.add_lmi_block(LmiBlock(1, np.array([[-1.0]]),
                             {x.offset: np.array([[1.0]])},
                             "positive_semidefinite"))   # x >= 1
    sol = solve(p, {x: 1.0})
    assert sol.status == "infeasible"
    assert sol.objective is None
    assert sol.values == {}


def test_unbounded_reported_as_numerical_failure():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    p.add_lmi_block(LmiBlock(1, np.array([[5.0]]),
                             {x.offset: np.array([[-1.0]])},
                             "positive_semidefinite"))   # x <= 5
    sol = solve(p, {x: 1.0})
    assert sol.status == "numerical_failure"
    assert "unbounded" in sol.message


def test_unconstrained_objective_coordinate():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    z = p.add_variable("scalar", name="z")
    p.add_lmi_block(LmiBlock(1, np.array([[1.0]]),
                             {z.offset: np.array([[1.0]])},
                             "positive_semidefinite"))
    sol = solve(p, {x: 1.0})
    assert sol.status == "numerical_failure"
    assert "unbounded" in sol.message


def test_mixed_senses():
    # max x with x <= 2 (NSD block) and x >= 0
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    p.add_lmi_block(LmiBlock(1, np.array([[-2.0]]),
                             {x.offset: np.array([[1.0]])},
                             "negative_semidefinite"))
    p.add_lmi_block(LmiBlock(1, np.zeros((1, 1)),
                             {x.offset: np.array([[1.0]])},
                             "positive_semidefinite"))
    sol = solve(p, {x: -1.0})
    assert sol.status == "optimal"
    assert sol.values["x"] == pytest.approx(2.0, abs=1e-6)


def test_random_diagonal_instances():
    # diagonal LMIs reduce to LPs with the optimum at the lower bounds
    rng = np.random.default_rng(42)
    for _ in range(20):
        m = int(rng.integers(2, 6))
        lo = rng.normal(size=m)
        w = rng.uniform(0.5, 2.0, size=m)
        p = make_problem()
        xs = p.add_variable("rectangular_matrix", (1, m), name="xs")

        def fn(a, lo=lo):
            return np.diag(a["xs"][0] - lo)
        p.add_lmi_block(block_from_affine(p, m, fn, "positive_semidefinite"))
        sol = solve(p, {xs: w.reshape(1, m)})
        assert sol.status == "optimal"
        opt = float(w @ lo)
        assert abs(sol.objective - opt) <= 1e-6 * (1 + abs(opt))


def test_optimal_solutions_satisfy_blocks():
    rng = np.random.default_rng(43)
    for _ in range(5):
        nb = int(rng.integers(2, 5))
        M = rng.normal(size=(nb, nb))
        M = M @ M.T / nb + 0.1 * np.eye(nb)
        p = make_problem()
        X = p.add_variable("symmetric_matrix", nb, name="X")
        p.add_lmi_block(block_from_affine(p, nb, lambda a, M=M: a["X"] - M,
                                          "positive_semidefinite"))
        p.add_lmi_block(block_from_affine(
            p, nb, lambda a: 10.0 * np.eye(nb) - a["X"],
            "positive_semidefinite"))
        sol = solve(p, {X: np.eye(nb)})
        assert sol.status == "optimal"
        assert sol.primal_infeasibility <= 1e-7
        for block in p.blocks:
            val = block.evaluate(p.assignment_to_vector(sol.values))
            eigs = np.linalg.eigvalsh((val + val.T) / 2)
            assert eigs.min() >= -1e-7


def test_determinism():
    def build_and_solve():
        p = make_problem()
        X = p.add_variable("symmetric_matrix", 3, name="X")
        g = p.add_variable("scalar", name="g")
        p.add_lmi_block(block_from_affine(
            p, 3, lambda a: a["X"] - np.diag([1.0, 2.0, 3.0]),
            "positive_semidefinite"))
        p.add_lmi_block(block_from_affine(
            p, 3, lambda a: 4.0 * np.eye(3) - a["X"],
            "positive_semidefinite"))
        E = np.eye(3).reshape(9, 1)

        def fn(a):
            return np.block([[np.atleast_2d(a["g"]), E.T],
                             [E, np.kron(np.eye(3), a["X"])]])
        p.add_lmi_block(block_from_affine(p, 10, fn, "positive_semidefinite"))
        return solve(p, {g: 1.0})

    a, b = build_and_solve(), build_and_solve()
    assert a.status == b.status == "optimal"
    assert a.objective == b.objective
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.values["X"], b.values["X"])


def test_repeat_solve_same_problem():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    p.add_lmi_block(LmiBlock(1, np.array([[-1.0]]),
                             {x.offset: np.array([[1.0]])},
                             "positive_semidefinite"))   # x >= 1
    s1 = solve(p, {x: 1.0})
    s2 = solve(p, {x: 1.0})
    assert s1.objective == s2.objective
    assert s1.iterations == s2.iterations


def test_solution_value_accessor():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    p.add_lmi_block(LmiBlock(1, np.array([[-1.0]]),
                             {x.offset: np.array([[1.0]])},
                             "positive_semidefinite"))
    sol = solve(p, {x: 1.0})
    assert sol.value(x) == sol.value("x") == sol.values["x"]


# -------------------------------------------------------------------- dump

def test_dump_problem_format_and_roundtrip():
    p = make_problem()
    x = p.add_variable("scalar", name="x")
    X = p.add_variable("symmetric_matrix", 2, name="X")
    blk = block_from_affine(
        p, 2, lambda a: a["X"] + a["x"] * np.eye(2) - np.diag([1.0, 0.5]),
        "positive_semidefinite")
    p.add_lmi_block(blk)
    text = dump_problem(p)
    assert "variable x scalar 0 1" in text
    assert "variable X symmetric_matrix 1 3" in text
    assert "block 0 2 positive_semidefinite" in text
    assert text == dump_problem(p)

    # reconstruct the affine map from the dump and compare evaluations
    size = 2
    constant = np.zeros((size, size))
    coeffs = {}
    for line in text.splitlines():
        parts = line.split()
        if parts[0] != "entry":
            continue
        _, b, r, c, coord, value = parts
        r, c, coord, value = int(r), int(c), int(coord), float(value)
        if coord == -1:
            constant[r, c] = value
        else:
            coeffs.setdefault(coord, np.zeros((size, size)))[r, c] = value
    xvec = p.assignment_to_vector({"x": 0.25,
                                   "X": np.array([[2.0, 1.0], [1.0, 3.0]])})
    rebuilt = constant + sum(xvec[k] * mat for k, mat in coeffs.items())
    np.testing.assert_array_equal(rebuilt, blk.evaluate(xvec))
