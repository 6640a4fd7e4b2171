"""The no-audit program: construction, exact solving, and its invariants."""

import random
from fractions import Fraction as F

import pytest

import auditgame as ag
from auditgame import InputError, RegimeError
from auditgame.lp import EQUAL, LESS_EQUAL, OPTIMAL, build_bp_lp, solve_lp

from conftest import with_budget


def test_dimensions_two_type(cfg_a):
    lp = build_bp_lp(cfg_a)
    assert lp.n_vars == 4
    assert sum(1 for r in lp.rows if r[1] == EQUAL) == 2
    assert sum(1 for r in lp.rows if r[1] == LESS_EQUAL) == 2


def test_dimensions_three_type(cfg_three):
    lp = build_bp_lp(cfg_three)
    assert lp.n_vars == 9
    assert sum(1 for r in lp.rows if r[1] == EQUAL) == 3
    assert sum(1 for r in lp.rows if r[1] == LESS_EQUAL) == 3


def test_constraint_coefficients_high_signal(cfg_a):
    """Audit-test row for the high signal: fine-plus-gap mass against cost mass."""
    lp = build_bp_lp(cfg_a)
    row = [r for r in lp.rows if r[1] == LESS_EQUAL][1]
    coeffs, _, rhs = row
    col_hl = lp.variable_index[("high", "low")]
    col_hh = lp.variable_index[("high", "high")]
    assert coeffs[col_hl] == F(1, 2) * (100 + 55) - 25 * F(1, 2)
    assert coeffs[col_hh] == -25 * F(1, 2)
    assert rhs == 0
    # the low-signal columns stay out of the high-signal row
    assert coeffs[lp.variable_index[("low", "low")]] == 0


def test_objective_coefficients(cfg_a):
    lp = build_bp_lp(cfg_a)
    assert lp.objective[lp.variable_index[("high", "low")]] == F(1, 2) * 105
    assert lp.objective[lp.variable_index[("low", "low")]] == F(1, 2) * 50


def test_build_rejects_zero_prior(cfg_a):
    import dataclasses
    bad = dataclasses.replace(cfg_a, prior=(F(0), F(1)))
    with pytest.raises(InputError):
        build_bp_lp(bad)


def test_debug_text_golden(cfg_a):
    expected = (
        "max 25*pi(low|low) + 105/2*pi(high|low) + 25*pi(low|high) + 105/2*pi(high|high)\n"
        "1*pi(low|low) + 1*pi(high|low) = 1\n"
        "1*pi(low|high) + 1*pi(high|high) = 1\n"
        "-25/2*pi(low|low) + 75/2*pi(low|high) <= 0\n"
        "65*pi(high|low) + -25/2*pi(high|high) <= 0\n"
        "all pi >= 0"
    )
    assert build_bp_lp(cfg_a).to_debug_text() == expected


def test_solve_cfg_a_exact(cfg_a):
    sol = solve_lp(build_bp_lp(cfg_a))
    assert sol.status == OPTIMAL
    assert sol.values[("high", "low")] == F(5, 26)
    assert sol.values[("high", "high")] == F(1)
    assert sol.objective_value == F(155, 2) + F(1, 2) * F(5, 26) * 55


def test_solve_truthful_forced_at_free_audits():
    cfg = ag.GameConfig(types=("low", "high"), prior=(F(1, 2), F(1, 2)),
                        alloc=(50, 105), audit_cost=0, fine=100)
    sol = solve_lp(build_bp_lp(cfg))
    assert sol.status == OPTIMAL
    assert sol.values[("high", "low")] == 0
    assert sol.objective_value == F(155, 2)


def test_solve_three_type_fixture(cfg_three):
    sol = solve_lp(build_bp_lp(cfg_three))
    assert sol.status == OPTIMAL
    assert sol.values[("b", "a")] == F(1, 3)
    assert sol.values[("c", "a")] == F(1, 5)
    assert sol.values[("a", "a")] == F(7, 15)
    truthful_value = F(1, 3) * (0 + 2 + 4)
    assert sol.objective_value - truthful_value == F(22, 45)


def test_solution_satisfies_every_constraint_exactly(cfg_a, cfg_three):
    for cfg in (cfg_a, cfg_three):
        lp = build_bp_lp(cfg)
        sol = solve_lp(lp)
        x = [sol.values[key] for key in lp.column_labels]
        assert all(v >= 0 for v in x)
        for coeffs, rel, rhs in lp.rows:
            lhs = sum(c * v for c, v in zip(coeffs, x))
            if rel == EQUAL:
                assert lhs == rhs
            else:
                assert lhs <= rhs


def test_generic_solver_statuses():
    # infeasible: x = 1 and x <= 0 with x >= 0
    lp = ag.LinearProgram(
        objective=(F(1),),
        rows=(((F(1),), EQUAL, F(1)), ((F(1),), LESS_EQUAL, F(0))),
        variable_index={("x", "x"): 0},
        column_labels=(("x", "x"),),
    )
    assert solve_lp(lp).status == "infeasible"
    # unbounded: maximize x with no constraints binding it
    lp = ag.LinearProgram(
        objective=(F(1),),
        rows=(((F(-1),), LESS_EQUAL, F(0)),),
        variable_index={("x", "x"): 0},
        column_labels=(("x", "x"),),
    )
    assert solve_lp(lp).status == "unbounded"


def test_multiplicity_flag_on_degenerate_objective():
    # two signals with identical credits: swapping them preserves the optimum
    cfg = ag.GameConfig(types=("a", "b"), prior=(F(1, 2), F(1, 2)),
                        alloc=(50, 50), audit_cost=5, fine=10)
    sol = solve_lp(build_bp_lp(cfg))
    assert sol.status == OPTIMAL
    assert sol.multiplicity_flag


def _random_two_type(rng):
    q = F(rng.randrange(1, 100), 100)
    c = F(rng.randrange(1, 60))
    k = c + F(rng.randrange(0, 200))
    lo = F(rng.randrange(0, 80))
    df = F(rng.randrange(1, 120))
    return ag.GameConfig(types=("low", "high"), prior=(q, 1 - q),
                         alloc=(lo, lo + df), audit_cost=c, fine=k)


def test_bp_equilibrium_invariants_random():
    rng = random.Random(5)
    for _ in range(60):
        cfg = _random_two_type(rng)
        eq = ag.bp_equilibrium(cfg)
        pi = eq.strategy()
        # truthful is always feasible, so the optimum weakly beats it
        truthful_value = sum(q * f for q, f in zip(cfg.prior, cfg.alloc))
        assert eq.user_utility_avg(cfg) >= truthful_value
        # never under-reports
        for m in range(2):
            for s in range(2):
                if cfg.alloc[s] < cfg.alloc[m]:
                    assert pi.rows[m][s] == 0
        # audit best response vanishes
        assert ag.best_response(pi, cfg).is_zero()
        # caps hold entrywise and in aggregate
        for m, ml in enumerate(cfg.types):
            for s, sl in enumerate(cfg.types):
                if s != m:
                    assert pi.rows[m][s] <= ag.misreport_prob_bound(cfg, sl, ml)
        assert eq.excess <= ag.excess_payments_bound(cfg)


def test_bp_equilibrium_large_fine_limits(cfg_a):
    import dataclasses
    cfg = dataclasses.replace(cfg_a, fine=10**9)
    eq = ag.bp_equilibrium(cfg)
    assert eq.excess < F(1, 100)
    assert eq.strategy().rows[0][1] == F(1, 2) * 25 / (F(1, 2) * (10**9 - 25 + 55))


def test_bp_equilibrium_drops_and_reembeds_zero_prior_types():
    cfg = ag.GameConfig(types=("a", "b", "z"), prior=(F(1, 2), F(1, 2), 0),
                        alloc=(50, 105, 70), audit_cost=25, fine=100)
    with pytest.warns(UserWarning):
        eq = ag.bp_equilibrium(cfg)
    assert eq.strategy().rows[0] == (F(21, 26), F(5, 26), F(0))
    assert eq.strategy().rows[2] == (F(0), F(0), F(1))   # dropped type stays truthful
    assert eq.excess == F(275, 52)


def test_bp_equilibrium_budget_gate(cfg_a):
    with pytest.raises(RegimeError):
        ag.bp_equilibrium(with_budget(cfg_a, 5))
    eq = ag.bp_equilibrium(with_budget(cfg_a, 9))   # above 275/31
    assert eq.excess == F(275, 52)


def _random_general(rng, n):
    weights = [rng.randrange(1, 9) for _ in range(n)]
    prior = tuple(F(w, sum(weights)) for w in weights)
    alloc = tuple(F(rng.randrange(0, 200)) for _ in range(n))
    c = F(rng.randrange(1, 60))
    k = c + F(rng.randrange(0, 200))
    return ag.GameConfig(types=tuple(f"t{i}" for i in range(n)), prior=prior,
                         alloc=alloc, audit_cost=c, fine=k)


def test_solver_matches_independent_solver():
    """Objective values agree with an external floating-point solver on
    random games of two to five types."""
    import numpy as np
    import scipy.optimize as so

    rng = random.Random(21)
    for _ in range(40):
        cfg = _random_general(rng, rng.choice([2, 3, 4, 5]))
        lp = build_bp_lp(cfg)
        mine = solve_lp(lp)
        assert mine.status == OPTIMAL
        c = np.array([-float(v) for v in lp.objective])
        A_eq, b_eq, A_ub, b_ub = [], [], [], []
        for coeffs, rel, rhs in lp.rows:
            row = [float(v) for v in coeffs]
            if rel == EQUAL:
                A_eq.append(row)
                b_eq.append(float(rhs))
            else:
                A_ub.append(row)
                b_ub.append(float(rhs))
        ref = so.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                         bounds=(0, None), method="highs")
        assert ref.status == 0
        scale = max(1.0, abs(float(mine.objective_value)))
        assert abs(-ref.fun - float(mine.objective_value)) < 1e-7 * scale


def test_bp_equilibrium_invariants_hold_on_wider_games():
    rng = random.Random(33)
    for _ in range(25):
        cfg = _random_general(rng, rng.choice([3, 4, 5]))
        eq = ag.bp_equilibrium(cfg)
        pi = eq.strategy()
        assert ag.best_response(pi, cfg).is_zero()
        for m in range(cfg.n_types):
            for s in range(cfg.n_types):
                if cfg.alloc[s] < cfg.alloc[m]:
                    assert pi.rows[m][s] == 0
        assert eq.excess <= ag.excess_payments_bound(cfg)
        truthful_value = sum(q * f for q, f in zip(cfg.prior, cfg.alloc))
        assert eq.user_utility_avg(cfg) >= truthful_value


def test_oracle_never_beats_lp_two_type(cfg_a):
    from auditgame import GridSpec, grid_best_strategy
    eq = ag.bp_equilibrium(cfg_a)
    res = grid_best_strategy(cfg_a, GridSpec(resolution=200))
    slack = (cfg_a.delta_f_max + cfg_a.fine) / 200
    assert res.objective <= eq.user_utility_avg(cfg_a)
    assert res.objective >= eq.user_utility_avg(cfg_a) - slack


def test_oracle_never_beats_lp_three_type(cfg_three):
    from auditgame import GridSpec, grid_best_strategy
    eq = ag.bp_equilibrium(cfg_three)
    res = grid_best_strategy(cfg_three, GridSpec(resolution=200))
    slack = (cfg_three.delta_f_max + cfg_three.fine) * 3 / res.resolution_used
    assert res.objective <= eq.user_utility_avg(cfg_three)
    assert res.objective >= eq.user_utility_avg(cfg_three) - slack
