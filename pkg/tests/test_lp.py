import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stackdec.lp import LinearProgram, LpStatus, solve_lp

scipy_optimize = pytest.importorskip("scipy.optimize")


def le(coeffs, rhs):
    """``coeffs @ x <= rhs`` written as the >= row the LP type takes."""
    return ([-c for c in coeffs], -rhs)


# (name, program, expected objective, expected x or None when not unique)
HAND_SOLVED = [
    ("textbook", LinearProgram([3, 5], ineq_constraints=[le([1, 0], 4), le([0, 2], 12), le([3, 2], 18)]),
     36.0, [2, 6]),
    ("equality", LinearProgram([1, 1], eq_constraints=[([1, 1], 1)], ineq_constraints=[le([1, 0], 0.25)]),
     1.0, None),
    ("ge_rows", LinearProgram([-1, -1], ineq_constraints=[([1, 2], 4), ([3, 1], 6)]),
     -2.8, [1.6, 1.2]),
    ("degenerate_vertex", LinearProgram([1, 1], ineq_constraints=[le([1, 1], 1), le([1, 0], 1), le([0, 1], 1),
                                                                  le([2, 2], 2)]),
     1.0, None),
    ("degenerate_zero_rhs", LinearProgram([2, 1], ineq_constraints=[le([1, -1], 0), le([1, 1], 2)]),
     3.0, [1, 1]),
    ("bounded_box", LinearProgram([1, -1], bounds=[(0, 2), (1, 3)]), 1.0, [2, 1]),
    ("negative_lower", LinearProgram([-1, 0], ineq_constraints=[le([0, 1], 5)], bounds=[(-3, 4), (0, 10)]),
     3.0, None),
    ("free_variable", LinearProgram([1, -2], eq_constraints=[([1, 1], 1)], bounds=[(-math.inf, math.inf), (2, 5)]),
     -5.0, [-1, 2]),
    ("simplex_mix", LinearProgram([0.2, 0.5, 0.3], eq_constraints=[([1, 1, 1], 1)],
                                  ineq_constraints=[([1, -1, 0], 0)], bounds=[(0, 1)] * 3),
     0.35, [0.5, 0.5, 0]),
    ("redundant_equalities", LinearProgram([1, 2], eq_constraints=[([1, 1], 2), ([2, 2], 4)],
                                           ineq_constraints=[le([0, 1], 1.5)]),
     3.5, [0.5, 1.5]),
]


@pytest.mark.parametrize("name, lp, value, x", HAND_SOLVED, ids=[c[0] for c in HAND_SOLVED])
def test_hand_solved(name, lp, value, x, backend):
    sol = solve_lp(lp, backend=backend)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(value, abs=1e-7)
    if x is not None:
        np.testing.assert_allclose(sol.x, x, atol=1e-7)


@pytest.mark.parametrize("lp", [
    LinearProgram([1, 1], ineq_constraints=[([1, 1], 3), le([1, 1], 2)]),
    LinearProgram([1], eq_constraints=[([1], 2)], bounds=[(0, 1)]),
    LinearProgram([1, 1], eq_constraints=[([1, 1], 1), ([1, 1], 2)]),
], ids=["contradictory_rows", "bound_vs_equality", "inconsistent_equalities"])
def test_infeasible(lp, backend):
    assert solve_lp(lp, backend=backend).status is LpStatus.INFEASIBLE


def test_unbounded(backend):
    lp = LinearProgram([1, 1], ineq_constraints=[([1, -1], 0)])
    assert solve_lp(lp, backend=backend).status is LpStatus.UNBOUNDED


def beale():
    # Beale's classic cycling instance
    return LinearProgram(
        [0.75, -20, 0.5, -6],
        ineq_constraints=[le([0.25, -8, -1, 9], 0), le([0.5, -12, -0.5, 3], 0), le([0, 0, 1, 0], 1)],
    )


def test_beale_bland_terminates(backend):
    sol = solve_lp(beale(), rule="bland", backend=backend)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(1.25, abs=1e-9)
    np.testing.assert_allclose(sol.x, [1, 0, 1, 0], atol=1e-9)


def test_beale_dantzig_cycles(backend):
    sol = solve_lp(beale(), rule="dantzig", max_iter=500, backend=backend)
    assert sol.status is LpStatus.ITERATION_LIMIT


def test_bad_rule():
    with pytest.raises(ValueError):
        solve_lp(beale(), rule="steepest")


def test_bad_shapes():
    with pytest.raises(ValueError):
        LinearProgram([1, 1], ineq_constraints=[([1], 0)])
    with pytest.raises(ValueError):
        LinearProgram([1], bounds=[(2, 1)])


def _scipy(lp):
    a_ub = [[-c for c in coeffs] for coeffs, _ in lp.ineq_constraints] or None
    b_ub = [-rhs for _, rhs in lp.ineq_constraints] or None
    a_eq = [list(coeffs) for coeffs, _ in lp.eq_constraints] or None
    b_eq = [rhs for _, rhs in lp.eq_constraints] or None
    bounds = [(lo if math.isfinite(lo) else None, hi if math.isfinite(hi) else None) for lo, hi in lp.bounds]
    return scipy_optimize.linprog(-np.asarray(lp.objective, float), A_ub=a_ub, b_ub=b_ub,
                                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")


@pytest.mark.parametrize("seed", range(40))
def test_matches_scipy_on_random_programs(seed, backend):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 7), rng.integers(1, 6)
    lp = LinearProgram(
        rng.normal(size=n),
        eq_constraints=[(np.ones(n), 1.0)] if seed % 2 else [],
        ineq_constraints=[(rng.normal(size=n), float(rng.normal())) for _ in range(m)],
        bounds=[(0.0, float(rng.uniform(0.5, 3)))] * n,
    )
    ours = solve_lp(lp, backend=backend)
    ref = _scipy(lp)
    if ref.status == 2:
        assert ours.status is LpStatus.INFEASIBLE
    else:
        assert ref.status == 0
        assert ours.status is LpStatus.OPTIMAL
        assert ours.objective_value == pytest.approx(-ref.fun, abs=1e-7)


def test_mixed_scale_rows_stay_feasible(backend):
    """Payoff gaps of 2e-7 beside 1.4 used to drift the tableau into a point with sum(x) = 1.5."""
    e = -2.1326851556123163e-07
    rows = [[0, 1.409125643390775, 0, 0], [-e, 1.409125643390775 - e, 0, 0], [-e, 1.409125643390775 - e, 0, 0]]
    lp = LinearProgram([0, 1, 0, 0], eq_constraints=[([1, 1, 1, 1], 1)],
                       ineq_constraints=[(r, 0.0) for r in rows], bounds=[(0, 1)] * 4)
    sol = solve_lp(lp, backend=backend)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)
    assert sol.x.sum() == pytest.approx(1.0, abs=1e-12)


def test_dual_repair_restores_feasibility():
    from stackdec import kernels
    from stackdec.lp import _dual_simplex

    # max -x1 - x2 s.t. x1 + x2 >= 1, slack basis: dual feasible, primal infeasible
    T = np.array([[-1.0, -1.0, 1.0, -1.0],
                  [1.0, 1.0, 0.0, 0.0]])
    basis = np.array([2], dtype=np.int64)
    ok, its = _dual_simplex(kernels.get_backend(), T, basis, 3, 10, 1e-9, 1e-9)
    assert ok and its == 1
    assert basis[0] == 0 and T[0, -1] == pytest.approx(1.0)
    assert T[1, -1] == pytest.approx(-1.0)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 5).flatmap(lambda n: arrays(
    float, (n, n), elements=st.sampled_from([0.0, 1e-7, -3e-7, 2e-6, 1.0, -2.5, 7.0, 1e-5]))),
    st.data())
def test_optimal_points_are_feasible(ra, data):
    n = ra.shape[0]
    t = data.draw(st.integers(0, n - 1))
    lp = LinearProgram(np.arange(n, dtype=float), eq_constraints=[(np.ones(n), 1.0)],
                       ineq_constraints=[(ra[:, t] - ra[:, k], 0.0) for k in range(n) if k != t],
                       bounds=[(0.0, 1.0)] * n)
    sol = solve_lp(lp)
    if sol.status is LpStatus.OPTIMAL:
        assert abs(sol.x.sum() - 1) <= 1e-9
        assert np.all(sol.x >= -1e-12) and np.all(sol.x <= 1 + 1e-12)
        for coeffs, rhs in lp.ineq_constraints:
            assert coeffs @ sol.x >= rhs - 1e-9
