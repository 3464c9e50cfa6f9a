from collections import Counter
from fractions import Fraction
from itertools import permutations
from math import comb, factorial

import pytest

from twostage_mw import (
    BudgetExceeded,
    SampleDesign,
    TieError,
    ValidationMode,
    Verdict,
    exact_joint_pmf,
    moments_null,
    pmf_cumulants,
    pmf_moments,
    simulate_joint,
    validate_formulas,
)
from twostage_mw.oracle import (
    BUDGET_ENV,
    check_budget,
    classify,
    design_grid,
    discrete_joint_pmf,
    discrete_pi_vector,
    expand_slots,
    moments_to_cumulants,
    point_mass_pmf,
)
from twostage_mw.pi_model import uniform

F = Fraction


def brute_pmf(design):
    m, n, M, N = design.as_tuple()
    counts = Counter()
    for perm in permutations(range(M + N)):
        xs, ys = perm[:M], perm[M:]
        u1 = sum(x < y for x in xs[:m] for y in ys[:n])
        u2 = sum(x < y for x in xs for y in ys)
        counts[(u1, u2)] += 1
    total = sum(counts.values())
    return {k: F(v, total) for k, v in counts.items()}


@pytest.mark.parametrize(
    "design",
    [SampleDesign(1, 1, 2, 2), SampleDesign(2, 1, 3, 3), SampleDesign(1, 2, 2, 3), SampleDesign(3, 2, 4, 3)],
)
def test_pmf_matches_permutation_brute_force(design):
    assert exact_joint_pmf(design).entries == brute_pmf(design)


def test_pmf_small_example():
    pmf = exact_joint_pmf(SampleDesign(1, 1, 2, 2))
    assert pmf.total == factorial(4)
    assert list(pmf.marginal_u2().values()) == [F(1, 6), F(1, 6), F(1, 3), F(1, 6), F(1, 6)]
    assert pmf.marginal_u1() == {0: F(1, 2), 1: F(1, 2)}
    assert sum(pmf.entries.values()) == 1
    assert pmf.tail(lambda u1, u2: u1 >= 1) == F(1, 2)


def test_pmf_total_is_multinomial():
    d = SampleDesign(2, 3, 4, 5)
    pmf = exact_joint_pmf(d)
    assert sum(pmf.counts.values()) == pmf.total
    assert pmf.total == factorial(9) // (factorial(2) * factorial(2) * factorial(3) * factorial(2))


def test_pmf_support_and_symmetry():
    d = SampleDesign(3, 2, 5, 4)
    pmf = exact_joint_pmf(d)
    for (u1, u2), c in pmf.counts.items():
        assert 0 <= u1 <= 6 and u1 <= u2 <= 20 - (6 - u1)
        # reversing all ranks sends (u1, u2) to (mn - u1, MN - u2)
        assert pmf.counts[(6 - u1, 20 - u2)] == c


def test_pmf_moments_match_null_formulas():
    for d in design_grid(7):
        assert pmf_moments(exact_joint_pmf(d)).values == moments_null(d).values


def test_point_mass():
    d = SampleDesign(1, 1, 2, 2)
    mom = pmf_moments(point_mass_pmf(d, 1, 3))
    assert mom[(2, 2)] == 9 and mom[(0, 4)] == 81
    cum = pmf_cumulants(point_mass_pmf(d, 1, 3))
    assert cum.values[(1, 0)] == 1
    assert all(v == 0 for k, v in cum.values.items() if sum(k) > 1)


def test_moments_to_cumulants_small_example():
    cum = pmf_cumulants(exact_joint_pmf(SampleDesign(1, 1, 2, 2)))
    assert cum.values[(1, 1)] == F(5, 12)
    assert cum.values[(2, 0)] == F(1, 4)


def test_moments_to_cumulants_for_a_product_distribution():
    # independent components: every mixed cumulant vanishes
    raw = {(a, b): F(1, a + 1) * F(2**b) for a in range(5) for b in range(5) if 0 < a + b <= 4}
    cum = moments_to_cumulants(raw)
    assert cum[(1, 1)] == cum[(2, 1)] == cum[(2, 2)] == 0
    assert cum[(0, 2)] == 0  # point mass at 2


def test_budget(monkeypatch):
    d = SampleDesign(10, 10, 20, 20)
    assert comb(40, 20) > 20_000_000
    with pytest.raises(BudgetExceeded):
        check_budget(d)
    with pytest.raises(BudgetExceeded):
        exact_joint_pmf(SampleDesign(2, 2, 4, 4), budget=10)
    monkeypatch.setenv(BUDGET_ENV, "5")
    with pytest.raises(BudgetExceeded):
        check_budget(SampleDesign(2, 2, 4, 4))
    monkeypatch.setenv(BUDGET_ENV, "10")
    assert check_budget(SampleDesign(1, 1, 2, 3)) == 10


def test_classify_components():
    assert classify([(0, 0)]) == ("pi0",)
    assert classify([(0, 0), (1, 0)]) == ("pi1",)
    assert classify([(0, 0), (0, 1)]) == ("pi9",)
    assert sorted(classify([(0, 0), (1, 1)])) == ["pi0", "pi0"]
    assert classify([(0, 0), (1, 0), (1, 1)]) == ("pi4",)


def test_expand_slots_second_moment():
    # U = sum of m*n indicators; E(U^2) expands to mn*pi0 + mn(m-1)*pi1 + ...
    d = SampleDesign(2, 3, 2, 3)
    exp = expand_slots(d, [("x0", "y0"), ("x1", "y1")])
    assert exp[("pi0",)] == 6
    assert exp[("pi1",)] == 6
    assert exp[("pi9",)] == 12
    assert exp[("pi0", "pi0")] == 12


def test_discrete_pmf_sums_to_one_and_ties_raise():
    d = SampleDesign(1, 1, 2, 2)
    pmf = discrete_joint_pmf(d, (0, 2), (1, 3))
    assert sum(pmf.values()) == 1
    with pytest.raises(TieError):
        discrete_pi_vector((0, 1), (1, 2))


def test_validate_null_exact_small_grid():
    report = validate_formulas(design_grid(6), ValidationMode.NullExact)
    assert report.ok
    assert set(report.summary()) == {"Exact"}
    assert {r.evaluator for r in report.records} >= {"null_fourth(m, n)", "general_u1sq_u2sq"}


def test_validate_general_modes():
    assert validate_formulas(design_grid(7), ValidationMode.GeneralReduction).ok
    assert validate_formulas(design_grid(6), ValidationMode.GeneralSymbolic).ok


def test_validate_detects_a_broken_formula(monkeypatch):
    from twostage_mw import moments

    monkeypatch.setitem(moments.NULL_EVALUATORS, (2, 2), lambda d: moments.null_u1sq_u2sq(d) + 1)
    report = validate_formulas(design_grid(4), ValidationMode.NullExact)
    assert {r.evaluator for r in report.mismatches} == {"null_u1sq_u2sq"}


def test_simulation_is_deterministic_and_thread_independent():
    d = SampleDesign(2, 2, 4, 4)
    a = simulate_joint(d, uniform(), uniform(), 20_000, seed=9)
    b = simulate_joint(d, uniform(), uniform(), 20_000, seed=9, threads=4)
    assert a == b
    assert a.values != simulate_joint(d, uniform(), uniform(), 20_000, seed=10).values


def test_simulation_null_within_five_se():
    d = SampleDesign(2, 3, 4, 5)
    est = simulate_joint(d, uniform(), uniform(), 200_000, seed=77)
    exact = moments_null(d)
    for order, v in est.values.items():
        assert abs(v - float(exact[order])) <= 5 * est.standard_errors[order], order


def test_small_monte_carlo_validation_passes():
    report = validate_formulas(
        [SampleDesign(2, 2, 4, 4)], ValidationMode.GeneralMonteCarlo, 4.0,
        pi_replications=400_000, sim_replications=100_000, seed=31,
    )
    assert report.ok
    assert all(r.verdict is Verdict.WithinTolerance and r.standard_error > 0 for r in report.records)
