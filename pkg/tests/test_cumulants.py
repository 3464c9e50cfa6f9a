from collections import Counter
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from twostage_mw import (
    DegenerateError,
    PiVector,
    SampleDesign,
    Weighting,
    Which,
    exact_joint_pmf,
    mixed_cumulants,
    moments_general,
    moments_null,
    paper_aggregates,
    pmf_cumulants,
    standardized_shape,
)
from twostage_mw.cumulants import cumulant_key
from twostage_mw.moments import ORDERS, MomentSet
from twostage_mw.oracle import design_grid, moments_to_cumulants
from twostage_mw.pi_model import PI_NAMES

F = Fraction


def univariate_cumulants(dist):
    """First four cumulants of a discrete distribution given as {value: prob}."""
    mu = sum(v * p for v, p in dist.items())
    c = [sum((v - mu) ** k * p for v, p in dist.items()) for k in (2, 3, 4)]
    return mu, c[0], c[1], c[2] - 3 * c[0] ** 2


def test_keys():
    assert cumulant_key(2, 1) == "k21"
    assert set(mixed_cumulants(moments_null(SampleDesign(1, 1, 2, 2))).named()) == {
        cumulant_key(*o) for o in ORDERS
    }


def test_small_example():
    c = mixed_cumulants(moments_null(SampleDesign(1, 1, 2, 2)))
    assert c[(1, 1)] == F(5, 12)
    assert paper_aggregates(c).k1 == F(5, 2)


def test_closed_forms_match_recursion_on_grid():
    for d in design_grid(10):
        mom = moments_null(d)
        assert mixed_cumulants(mom).values == moments_to_cumulants(mom.values), d


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 3), st.integers(0, 3),
       st.lists(st.integers(0, 40), min_size=13, max_size=13))
def test_closed_forms_match_recursion_general(m, n, dm, dn, ks):
    d = SampleDesign(m, n, m + dm, n + dn)
    pi = PiVector.from_mapping({name: F(k, 40) for name, k in zip(PI_NAMES, ks)})
    mom = moments_general(d, pi)
    assert mixed_cumulants(mom).values == moments_to_cumulants(mom.values)


@pytest.mark.parametrize("design", [SampleDesign(2, 2, 4, 4), SampleDesign(1, 3, 3, 4), SampleDesign(3, 2, 5, 3)])
def test_marginal_cumulants_against_distribution(design):
    pmf = exact_joint_pmf(design)
    c = pmf_cumulants(pmf)
    assert univariate_cumulants(pmf.marginal_u1()) == (c[(1, 0)], c[(2, 0)], c[(3, 0)], c[(4, 0)])
    assert univariate_cumulants(pmf.marginal_u2()) == (c[(0, 1)], c[(0, 2)], c[(0, 3)], c[(0, 4)])


@pytest.mark.parametrize("design", [SampleDesign(2, 2, 4, 4), SampleDesign(2, 1, 3, 3)])
def test_binomial_aggregate_is_cumulant_of_the_sum(design):
    pmf = exact_joint_pmf(design)
    dist = Counter()
    for (u1, u2), p in pmf.entries.items():
        dist[u1 + u2] += p
    agg = paper_aggregates(pmf_cumulants(pmf), Weighting.BinomialWeights)
    assert agg.as_tuple() == univariate_cumulants(dist)


def test_aggregate_weights():
    c = mixed_cumulants(moments_null(SampleDesign(2, 3, 4, 5)))
    unit = paper_aggregates(c, Weighting.PaperWeights)
    binom = paper_aggregates(c, Weighting.BinomialWeights)
    assert unit.k3 == c[(3, 0)] + c[(2, 1)] + c[(1, 2)] + c[(0, 3)]
    assert binom.k4 == sum(comb(4, r) * c[(r, 4 - r)] for r in range(5))
    assert unit.k1 == binom.k1


def test_null_odd_central_cumulants_vanish():
    for d in design_grid(8):
        c = mixed_cumulants(moments_null(d))
        assert c[(3, 0)] == c[(2, 1)] == c[(1, 2)] == c[(0, 3)] == 0, d


def test_classical_variance():
    for d in design_grid(10):
        c = mixed_cumulants(moments_null(d))
        assert c[(2, 0)] == F(d.m * d.n * (d.m + d.n + 1), 12)
        assert c[(0, 2)] == F(d.M * d.N * (d.M + d.N + 1), 12)


def test_shape_small_example():
    c = mixed_cumulants(moments_null(SampleDesign(1, 1, 3, 3)))
    assert tuple(standardized_shape(c, Which.Stage1)) == pytest.approx((0.5, 0.25, 0.0, -2.0))


def test_shape_of_aggregates():
    c = mixed_cumulants(moments_null(SampleDesign(2, 2, 4, 4)))
    s = standardized_shape(c, Which.AggregateBinomial)
    assert s.variance == pytest.approx(float(paper_aggregates(c, Weighting.BinomialWeights).k2))
    assert s.skewness == pytest.approx(0.0, abs=1e-12)
    assert standardized_shape(c, Which.Stage2).mean == 8


def test_degenerate_and_missing():
    d = SampleDesign(1, 1, 2, 2)
    c = mixed_cumulants(moments_general(d, PiVector.constant(F(1))))
    with pytest.raises(DegenerateError):
        standardized_shape(c, Which.Stage1)
    partial = MomentSet(d, moments_null(d).mode, {(1, 0): F(1, 2)})
    with pytest.raises(KeyError):
        mixed_cumulants(partial)
