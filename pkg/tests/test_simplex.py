import itertools

import numpy as np
import pytest

from sqreg.simplex import FEAS_TOL, LinearProgram, solve_lp


def vertex_enumeration_optimum(lp):
    """Brute-force optimum: intersect every n-subset of active constraints.

    All candidate equalities (rows and finite bounds) are enumerated; each
    square system that solves to a feasible point is scored.  Only valid
    for small, bounded, feasible problems.
    """
    n = lp.n_vars
    rows = [(lp.A[i], lp.b[i]) for i in range(lp.n_rows)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lp.lb[j]):
            rows.append((e, lp.lb[j]))
        if np.isfinite(lp.ub[j]):
            rows.append((e.copy(), lp.ub[j]))
    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        A = np.array([rows[i][0] for i in combo])
        b = np.array([rows[i][1] for i in combo])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if not _feasible(lp, x):
            continue
        val = float(lp.c @ x)
        if best is None or val < best:
            best = val
    return best


def _feasible(lp, x, tol=1e-8):
    if np.any(x < lp.lb - tol) or np.any(x > lp.ub + tol):
        return False
    act = lp.A @ x
    for i, sense in enumerate(lp.senses):
        if sense == "<" and act[i] > lp.b[i] + tol:
            return False
        if sense == ">" and act[i] < lp.b[i] - tol:
            return False
        if sense == "=" and abs(act[i] - lp.b[i]) > tol:
            return False
    return True


def test_maximize_bounded_variable():
    # maximize x subject to x <= 1, x >= 0, as min -x
    lp = LinearProgram(c=[-1.0], A=[[1.0]], senses=("<",), b=[1.0],
                       lb=[0.0], ub=[np.inf])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(-1.0)


def test_infeasible_pair():
    lp = LinearProgram(c=[1.0], A=[[1.0], [1.0]], senses=("<", ">"),
                       b=[0.0, 1.0], lb=[0.0], ub=[np.inf])
    assert solve_lp(lp).status == "infeasible"


def test_unbounded():
    lp = LinearProgram(c=[-1.0], A=np.zeros((0, 1)), senses=(), b=[],
                       lb=[0.0], ub=[np.inf])
    assert solve_lp(lp).status == "unbounded"


def test_fixed_variables_substituted():
    lp = LinearProgram(c=[1.0, 2.0], A=[[1.0, 1.0]], senses=(">",), b=[3.0],
                       lb=[2.0, 0.0], ub=[2.0, np.inf])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.x == pytest.approx([2.0, 1.0])


def test_random_lps_match_vertex_enumeration(rng):
    solved = 0
    for _ in range(60):
        n = rng.integers(2, 6)
        m = rng.integers(1, 6)
        A = rng.normal(size=(m, n)).round(2)
        x0 = rng.uniform(0.5, 2.5, size=n)
        senses = tuple(rng.choice(["<", ">", "="], p=[0.5, 0.4, 0.1]) for _ in range(m))
        b = A @ x0
        slack = rng.uniform(0.1, 1.0, size=m)
        b = np.array([
            b[i] + slack[i] if senses[i] == "<" else
            b[i] - slack[i] if senses[i] == ">" else b[i]
            for i in range(m)
        ])
        lp = LinearProgram(c=rng.normal(size=n).round(2), A=A, senses=senses, b=b,
                           lb=np.zeros(n), ub=np.full(n, 3.0))
        sol = solve_lp(lp)
        assert sol.status == "optimal", "constructed-feasible LP must solve"
        oracle = vertex_enumeration_optimum(lp)
        assert oracle is not None
        assert sol.objective == pytest.approx(oracle, abs=1e-8)
        solved += 1
    assert solved == 60


def test_optimal_solutions_respect_feasibility_tolerance(rng):
    for _ in range(40):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 5))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0.0, 1.0, size=n)
        senses = tuple(rng.choice(["<", "=", ">"]) for _ in range(m))
        b = A @ x0 + np.array([0.5 if s == "<" else -0.5 if s == ">" else 0.0
                               for s in senses])
        lp = LinearProgram(c=rng.normal(size=n), A=A, senses=senses, b=b,
                           lb=np.full(n, -2.0), ub=np.full(n, 2.0))
        sol = solve_lp(lp)
        if sol.status != "optimal":
            continue
        assert np.all(sol.x >= lp.lb - FEAS_TOL)
        assert np.all(sol.x <= lp.ub + FEAS_TOL)
        act = lp.A @ sol.x
        for i, sense in enumerate(lp.senses):
            if sense == "<":
                assert act[i] <= lp.b[i] + FEAS_TOL
            elif sense == ">":
                assert act[i] >= lp.b[i] - FEAS_TOL
            else:
                assert act[i] == pytest.approx(lp.b[i], abs=FEAS_TOL)


class TestDegenerateFixtures:
    """Cycling-prone problems must terminate under the anti-cycling rule."""

    def test_beale(self):
        lp = LinearProgram(
            c=[-0.75, 150.0, -0.02, 6.0],
            A=[[0.25, -60.0, -0.04, 9.0],
               [0.5, -90.0, -0.02, 3.0],
               [0.0, 0.0, 1.0, 0.0]],
            senses=("<", "<", "<"),
            b=[0.0, 0.0, 1.0],
            lb=np.zeros(4), ub=np.full(4, np.inf))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-0.05)

    def test_duplicated_rows(self):
        lp = LinearProgram(
            c=[-1.0, -1.0],
            A=[[1.0, 1.0]] * 4,
            senses=("<",) * 4,
            b=[1.0] * 4,
            lb=np.zeros(2), ub=np.full(2, np.inf))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-1.0)

    def test_degenerate_origin(self):
        # several tight constraints through the origin
        lp = LinearProgram(
            c=[-1.0, 0.0, 0.0],
            A=[[1.0, -1.0, 0.0],
               [1.0, 0.0, -1.0],
               [1.0, -0.5, -0.5],
               [1.0, 1.0, 1.0]],
            senses=("<", "<", "<", "<"),
            b=[0.0, 0.0, 0.0, 3.0],
            lb=np.zeros(3), ub=np.full(3, np.inf))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-1.0)


def test_pivot_cap_reports_iteration_limit(rng):
    lp = LinearProgram(c=rng.normal(size=5), A=rng.normal(size=(4, 5)),
                       senses=("<",) * 4, b=rng.uniform(1, 2, size=4),
                       lb=np.zeros(5), ub=np.full(5, 1.0))
    sol = solve_lp(lp, max_pivots=0)
    assert sol.status == "iteration_limit"


def test_rejects_malformed_input():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], A=[[1.0]], senses=("?",), b=[0.0], lb=[0.0], ub=[1.0])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], A=[[1.0]], senses=("<",), b=[0.0], lb=[2.0], ub=[1.0])
