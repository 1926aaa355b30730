import numpy as np
import pytest

from sqreg.core import Dataset, empirical_risk
from sqreg.firstorder import ProxConfig, multi_start_fo
from sqreg.mio import (build_milp, solve_bnb, solve_cqr_exact,
                       solve_enumeration, write_lp_file)
from sqreg.qreg import qr_fit
from sqreg.simplex import LinearProgram, solve_lp

from conftest import planted_dataset, random_dataset


def small_instance(rng, n=20, p=5, support=(0, 2), noise=0.2):
    return planted_dataset(rng, n, p, support=list(support), noise=noise)[0]


class TestBuildMilp:
    def test_dimension_counts(self, rng):
        d = random_dataset(rng, 7, 3)
        m = build_milp(d, 0.5, 0.1, 2)
        assert m.n_continuous == 3 + 2 * 7
        assert m.n_binary == 3
        assert m.n_structural == 7 + 2 * 3 + 1
        assert int(np.sum(m.binary)) == 3

    def test_zero_cap_forces_zero(self, rng):
        d = Dataset(rng.normal(size=(6, 1)), rng.normal(size=6))
        model = build_milp(d, 0.5, 0.0, 0)
        fit = solve_bnb(model, d, gap_tol=1e-9)
        assert np.all(fit.theta == 0.0)
        assert fit.obj_penalized == pytest.approx(empirical_risk(np.zeros(1), d, 0.5))

    def test_feasible_point_satisfies_constraints_and_objective(self, rng):
        d = small_instance(rng)
        lam, k0 = 0.07, 3
        model = build_milp(d, 0.3, lam, k0)
        theta = np.zeros(5)
        theta[[1, 3]] = [0.5, -2.0]
        res = d.y - d.X @ theta
        r = np.maximum(res, 0.0)
        s = np.maximum(-res, 0.0)
        dsel = (theta != 0).astype(float)
        x = np.concatenate([theta, r, s, dsel])
        act = model.A @ x
        for i, sense in enumerate(model.senses):
            if sense == "=":
                assert act[i] == pytest.approx(model.rhs[i], abs=1e-12)
            else:
                assert act[i] <= model.rhs[i] + 1e-12
        assert np.all(x >= model.lb - 1e-12) and np.all(x <= model.ub + 1e-12)
        obj = float(model.obj @ x)
        assert obj == pytest.approx(
            empirical_risk(theta, d, 0.3) + lam * 2, abs=1e-12)


class TestSolveBnb:
    def test_collapses_to_plain_fit_without_penalty(self, rng):
        d = small_instance(rng)
        model = build_milp(d, 0.5, 0.0, 5, box=50.0)
        fit = solve_bnb(model, d, gap_tol=1e-9)
        theta_qr = qr_fit(d, range(5), 0.5)
        assert fit.obj_penalized == pytest.approx(
            empirical_risk(theta_qr, d, 0.5), abs=1e-8)

    def test_matches_enumeration_on_grid(self, rng):
        # instance / cap / penalty combinations cycled deterministically
        lam_grid = [0.0, 0.02, 0.05, 0.1, 0.3]
        for trial in range(12):
            d, _ = planted_dataset(rng, 20, 6, support=[0, 2, 4], noise=0.25)
            k0 = (2, 3, 5)[trial % 3]
            lam = lam_grid[trial % 5]
            enum = solve_enumeration(d, 0.5, lam, k0)
            model = build_milp(d, 0.5, lam, k0)
            bnb = solve_bnb(model, d, gap_tol=1e-8)
            assert bnb.converged
            assert bnb.obj_penalized == pytest.approx(enum.obj_penalized, abs=1e-8)
            assert bnb.gap <= 1e-8 + 1e-12
            # selector projection: the optimum charges exactly the nonzeros
            assert len(bnb.support) == np.count_nonzero(bnb.theta) <= k0
            assert bnb.obj_penalized == pytest.approx(
                bnb.obj_unpenalized + lam * len(bnb.support), abs=1e-12)

    def test_warm_start_never_hurts(self, rng):
        d, _ = planted_dataset(rng, 25, 6, support=[0, 3], noise=0.3)
        lam = 0.08
        cfg = ProxConfig(lam=lam, k0=4)
        warm = multi_start_fo(d, 0.5, cfg, restarts=2, c=1.0, rng_seed=4,
                              intercept_col=0)
        model = build_milp(d, 0.5, lam, 4)
        fit = solve_bnb(model, d, warm=warm, time_limit=1e-9)
        assert fit.obj_penalized <= warm.obj_penalized + 1e-12
        assert not fit.converged  # stopped by the time limit
        assert fit.gap is not None

    def test_gap_reported_zero_on_proven_optimum(self, rng):
        d = small_instance(rng)
        model = build_milp(d, 0.5, 0.05, 3)
        fit = solve_bnb(model, d, gap_tol=1e-8)
        assert fit.gap <= 1e-8


class TestEnumeration:
    def test_zero_cap(self, rng):
        d = small_instance(rng)
        fit = solve_enumeration(d, 0.5, 0.3, 0)
        assert np.all(fit.theta == 0.0)
        assert fit.obj_penalized == pytest.approx(empirical_risk(np.zeros(5), d, 0.5))

    def test_penalty_free_prefers_biggest_feasible_support(self, rng):
        d = small_instance(rng)
        fit = solve_enumeration(d, 0.5, 0.0, 3)
        assert len(fit.support) == 3

    def test_objective_monotone_in_penalty(self, rng):
        d = small_instance(rng)
        objs = [solve_enumeration(d, 0.5, lam, 3).obj_penalized
                for lam in (0.0, 0.01, 0.05, 0.2, 1.0)]
        assert all(a <= b + 1e-12 for a, b in zip(objs, objs[1:]))

    def test_enumeration_cap(self, rng):
        d = random_dataset(rng, 10, 30)
        with pytest.raises(ValueError):
            solve_enumeration(d, 0.5, 0.1, 15, cap=1000)


class TestCqrExact:
    def test_full_budget_matches_plain_fit(self, rng):
        d = small_instance(rng)
        fit = solve_cqr_exact(d, 0.5, 5)
        theta_qr = qr_fit(d, range(5), 0.5)
        assert fit.obj_unpenalized == pytest.approx(
            empirical_risk(theta_qr, d, 0.5), abs=1e-8)

    def test_objective_nonincreasing_in_budget(self, rng):
        d = small_instance(rng)
        objs = [solve_cqr_exact(d, 0.5, q).obj_unpenalized for q in range(1, 6)]
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))

    def test_agrees_with_bnb_at_zero_penalty(self, rng):
        d, _ = planted_dataset(rng, 20, 6, support=[1, 4], noise=0.2)
        exact = solve_cqr_exact(d, 0.5, 3)
        model = build_milp(d, 0.5, 0.0, 3)
        bnb = solve_bnb(model, d, gap_tol=1e-8)
        assert bnb.obj_penalized == pytest.approx(exact.obj_unpenalized, abs=1e-8)


class TestRelaxationBound:
    def test_root_relaxation_lower_bounds_the_optimum(self, rng):
        from sqreg.mio import _relaxation

        for _ in range(10):
            d, _ = planted_dataset(rng, 18, 5, support=[0, 2], noise=0.3)
            lam = 0.06
            model = build_milp(d, 0.5, lam, 3)
            root = solve_lp(_relaxation(model, frozenset(), frozenset()))
            enum = solve_enumeration(d, 0.5, lam, 3)
            assert root.status == "optimal"
            assert root.objective <= enum.obj_penalized + 1e-9


def test_lp_file_export(tmp_path, rng):
    d = small_instance(rng, n=6, p=3)
    model = build_milp(d, 0.25, 0.1, 2)
    path = tmp_path / "model.lp"
    write_lp_file(model, path)
    text = path.read_text()
    assert text.startswith("\\")
    for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
        assert section in text
    assert text.count("d1") >= 2            # objective + selector rows
    assert f"c{model.n_structural}:" in text
    assert "d1 d2 d3" in text
