"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

The lines are printed as the tests run (visible with ``-s``) and collected
again in the terminal summary by ``conftest.py``.
"""

import time
from fractions import Fraction

import mpmath
import numpy as np

from twostage_mw import (
    SampleDesign,
    ValidationMode,
    critical_values_cf,
    critical_values_exact,
    exact_joint_pmf,
    mixed_cumulants,
    moments_general,
    moments_null,
    normal_inverse_cdf,
    null_pi_vector,
    pmf_cumulants,
    pmf_moments,
    validate_formulas,
)
from twostage_mw import moments as moments_module
from twostage_mw.oracle import design_grid
from twostage_mw.pi_model import uniform

F = Fraction
RESULTS = []


def record(number, title, ok, detail=""):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_null_exactness():
    start = time.perf_counter()
    designs = design_grid(10)
    report = validate_formulas(designs, ValidationMode.NullExact, 0.0)
    null_records = [r for r in report.records if r.evaluator.startswith("null_")]
    bad = [r for r in null_records if r.oracle_value != r.engine_value]
    record(1, "null moments equal the exact pmf moments, M+N <= 10",
           not bad and len(null_records) == 14 * len(designs),
           f"{len(designs)} designs, {len(bad)} mismatches, {time.perf_counter() - start:.1f}s")


def test_criterion_2_general_reduction():
    pi = null_pi_vector()
    designs = design_grid(10)
    bad = [d for d in designs if moments_general(d, pi).values != moments_null(d).values]
    record(2, "general moments at the null pi's equal the null moments", not bad,
           f"{len(designs)} designs, {len(bad)} mismatches")


def test_criterion_3_monte_carlo_agreement():
    start = time.perf_counter()
    report = validate_formulas(
        [SampleDesign(3, 3, 6, 6)], ValidationMode.GeneralMonteCarlo, 5.0,
        sampler_x=uniform(0.0, 1.0), sampler_y=uniform(0.3, 1.3),
        pi_replications=10_000_000, sim_replications=1_000_000, seed=20240601, threads=1,
    )
    worst = max(r.deviation / r.standard_error for r in report.records)
    record(3, "general moments within 5 combined SE of simulation at (3,3,6,6)",
           report.ok and len(report.records) == 14,
           f"worst {worst:.2f} SE, {time.perf_counter() - start:.1f}s")


def test_criterion_4_cumulant_double_path():
    designs = design_grid(10)
    bad = []
    for d in designs:
        pmf = exact_joint_pmf(d)
        if mixed_cumulants(pmf_moments(pmf)).values != pmf_cumulants(pmf).values:
            bad.append(d)
    record(4, "closed-form cumulants equal the recursion on the exact pmf", not bad,
           f"{len(designs)} designs, {len(bad)} mismatches")


def test_criterion_5_classical_identities():
    failures = []
    for d in design_grid(10):
        m, n, M, N = d.as_tuple()
        mom = moments_null(d)
        c = mixed_cumulants(mom)
        if c[(2, 0)] != F(m * n * (m + n + 1), 12):
            failures.append((d, "variance"))
        if mom[(1, 1)] != F(m * n, M * N) * mom[(0, 2)]:
            failures.append((d, "E(U1 U2)"))
        mu = F(m * n, 2)
        third = mom[(3, 0)] - 3 * mu * mom[(2, 0)] + 3 * mu**2 * mom[(1, 0)] - mu**3
        if third != 0:
            failures.append((d, "symmetry"))
        # E(U1^3 U2) via the null regression of U2 on U1, checked against the pmf
        pmf = exact_joint_pmf(d)
        u1_marg = pmf.marginal_u1()
        shift, slope = moments_module._stage2_shift(d), moments_module._stage2_slope(d)
        for u1, p in u1_marg.items():
            cond = sum(F(cnt, pmf.total) * u2 for (a, u2), cnt in pmf.counts.items() if a == u1) / p
            if cond != shift + slope * u1:
                failures.append((d, "E(U2|U1)"))
                break
        via_regression = sum(p * u1**3 * (shift + slope * u1) for u1, p in u1_marg.items())
        if not (via_regression == mom[(3, 1)] == pmf_moments(pmf)[(3, 1)]):
            failures.append((d, "E(U1^3 U2)"))
    record(5, "classical null identities hold exactly, M+N <= 10", not failures,
           f"{len(failures)} failures" + (f", first {failures[0]}" if failures else ""))


def test_criterion_6_critical_values():
    d = SampleDesign(4, 4, 8, 8)
    ex = critical_values_exact(d, 0.025, 0.05)
    cf = critical_values_cf(d, 0.025, 0.05)
    ok = abs(ex.c1 - cf.c1) <= 1 and abs(ex.c2 - cf.c2) <= 1 and ex.achieved_size <= F(1, 20)
    record(6, "Cornish-Fisher within one unit of exact at (4,4,8,8)", ok,
           f"exact ({ex.c1}, {ex.c2}) size {float(ex.achieved_size):.5f}; cf ({cf.c1}, {cf.c2})")


def _bisection_quantile(p):
    lo, hi = mpmath.mpf(-10), mpmath.mpf(10)
    target = mpmath.mpf(p)
    for _ in range(80):
        mid = (lo + hi) / 2
        if mpmath.ncdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def test_criterion_7_normal_inverse():
    mpmath.mp.dps = 30
    grid = np.linspace(1e-6, 1 - 1e-6, 1000)
    err = max(abs(normal_inverse_cdf(float(p)) - float(_bisection_quantile(float(p)))) for p in grid)
    record(7, "normal inverse cdf within 1e-8 of a bisection oracle", err <= 1e-8, f"max error {err:.2e}")


def test_criterion_8_mutation_sensitivity(monkeypatch):
    designs = design_grid(8)
    terms = moments_module.FOURTH_SINGLE_TERMS
    survivors = []
    for k, (coef, names, kx, ky) in enumerate(terms):
        for delta in (1, -1):
            mutant = list(terms)
            mutant[k] = (coef + delta, names, kx, ky)
            monkeypatch.setattr(moments_module, "FOURTH_SINGLE_TERMS", mutant)
            if not validate_formulas(designs, ValidationMode.NullExact).mismatches:
                survivors.append((k, delta))
            monkeypatch.undo()
    record(8, "every +-1 change to a fourth-order coefficient is caught", not survivors,
           f"{2 * len(terms)} mutants, {len(survivors)} survived")
