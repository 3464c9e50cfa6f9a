from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twostage_mw import (
    DomainError,
    InsufficientData,
    PiVector,
    TieError,
    null_indicator_table,
    null_pi_vector,
    pi_monte_carlo,
    pi_plugin_from_data,
)
from twostage_mw.pi_model import (
    MIRROR,
    PI_NAMES,
    PI_PATTERNS,
    null_pattern_probability,
    parse_pattern,
    parse_sampler,
    shifted,
    uniform,
)
from twostage_mw.oracle import classify

F = Fraction


def test_null_vector_values():
    pi = null_pi_vector()
    assert pi.pi0 == F(1, 2)
    assert pi.pi6 == F(1, 5)
    assert pi.pi8 == F(1, 6)
    assert pi.pi10 == F(2, 15)
    assert pi.is_exact()
    assert "pi11" not in PI_NAMES and len(PI_NAMES) == 13


def test_null_vector_matches_ordering_count():
    # independent of the hard-coded constants: count orderings of the variates
    pi = null_pi_vector()
    for name, edges in PI_PATTERNS.items():
        assert pi[name] == null_pattern_probability(edges), name


def test_null_vector_containment_order():
    p = null_pi_vector()
    assert p.pi2 <= p.pi1 <= p.pi0 and p.pi6 <= p.pi2
    assert p.pi13 <= p.pi12 <= p.pi9 <= p.pi0
    assert p.pi4 <= p.pi1 and p.pi4 <= p.pi9


def test_mirror_is_an_involution_and_maps_shapes():
    for name, image in MIRROR.items():
        assert MIRROR[image] == name
        flipped = [(j, i) for i, j in PI_PATTERNS[name]]
        assert classify(flipped) == (image,)
    p = null_pi_vector()
    assert p.mirrored().mirrored() == p
    assert p.mirrored() == p  # the null is symmetric in the two groups


def test_validate_range():
    PiVector.constant(F(1, 2)).validate()
    with pytest.raises(DomainError):
        PiVector.constant(1.5).validate()
    with pytest.raises(DomainError):
        PiVector.from_mapping({"pi0": 0.5})


@pytest.mark.parametrize(
    "pattern, value",
    [
        ("I_ij I_kl", F(1, 4)),
        ("I_ij I_kj I_kl", F(5, 24)),
        ("I_ij I_kl I_st I_pq", F(1, 16)),
        ("I_{ij}I_{kj}I_{sj}I_{pj}", F(1, 5)),
    ],
)
def test_null_table_lookup(pattern, value):
    assert null_indicator_table()[pattern] == value


def test_null_table_entries_equal_ordering_probability():
    table = null_indicator_table()
    assert len(table) == 25
    for pattern in table:
        assert table[pattern] == null_pattern_probability(parse_pattern(pattern)), pattern


def test_null_table_factorises_over_disjoint_pieces():
    table = null_indicator_table()
    pi = null_pi_vector()
    for pattern in table:
        product = F(1)
        for name in classify(parse_pattern(pattern)):
            product *= pi[name]
        assert table[pattern] == product, pattern


def test_null_table_flags_two_printed_values():
    fixes = null_indicator_table().corrections()
    assert fixes == {
        "I_ij I_kj I_il I_kt": (F(1, 6), F(2, 15)),
        "I_ij I_kj I_il I_st": (F(1, 9), F(5, 48)),
    }


def test_parse_pattern():
    assert parse_pattern("I_ij I_kj I_kl") == ((0, 0), (1, 0), (1, 1))
    with pytest.raises(DomainError):
        parse_pattern("I_ji")
    with pytest.raises(DomainError):
        parse_pattern("nothing here")


# -- Monte Carlo -------------------------------------------------------------

def test_monte_carlo_disjoint_supports():
    est = pi_monte_carlo(uniform(0, 1), uniform(10, 11), 5000, seed=3)
    assert all(v == 1.0 for v in est.value)
    assert all(s == 0.0 for s in est.standard_error)


def test_monte_carlo_deterministic_and_thread_independent():
    a = pi_monte_carlo(uniform(), uniform(), 300_000, seed=11)
    b = pi_monte_carlo(uniform(), uniform(), 300_000, seed=11)
    c = pi_monte_carlo(uniform(), uniform(), 300_000, seed=11, threads=3)
    assert a == b == c
    assert pi_monte_carlo(uniform(), uniform(), 300_000, seed=12) != a


def test_monte_carlo_null_within_five_se():
    est = pi_monte_carlo(uniform(), uniform(), 1_000_000, seed=20240601)
    for name, exact in null_pi_vector().as_dict().items():
        assert abs(est.value[name] - float(exact)) <= 5 * est.standard_error[name], name


def test_monte_carlo_ties_raise():
    def coarse(rng, size):
        return rng.integers(0, 2, size).astype(float)

    with pytest.raises(TieError):
        pi_monte_carlo(coarse, coarse, 1000, seed=1)


def test_sampler_parsing():
    rng = np.random.default_rng(0)
    assert parse_sampler("uniform:2,3")(rng, 5).min() >= 2
    assert parse_sampler("normal:0,1").description == "normal(0.0,1.0)"
    assert "exponential" in parse_sampler("exponential:2").description
    assert shifted(uniform(), 0.3)(rng, 4).min() >= 0.3
    with pytest.raises(DomainError):
        parse_sampler("cauchy:0,1")
    with pytest.raises(DomainError):
        parse_sampler("uniform:1,2,3,4")


# -- plug-in estimator -------------------------------------------------------

def brute_plugin(xs, ys):
    """Average of each indicator product over ordered distinct index choices."""
    out = {}
    for name, edges in PI_PATTERNS.items():
        kx = 1 + max(i for i, _ in edges)
        ky = 1 + max(j for _, j in edges)
        hits = total = 0
        for xi in permutations(range(len(xs)), kx):
            for yj in permutations(range(len(ys)), ky):
                total += 1
                hits += all(xs[xi[i]] < ys[yj[j]] for i, j in edges)
        out[name] = F(hits, total)
    return PiVector.from_mapping(out)


def test_plugin_extremes_and_example():
    assert all(v == 1 for v in pi_plugin_from_data([1, 2, 3, 4], [5, 6, 7, 8]))
    assert all(v == 0 for v in pi_plugin_from_data([5, 6, 7, 8], [1, 2, 3, 4]))
    assert pi_plugin_from_data([1, 3, 5, 7], [2, 4, 6, 8]).pi0 == F(10, 16)


def test_plugin_errors():
    with pytest.raises(InsufficientData):
        pi_plugin_from_data([1, 2, 3], [4, 5, 6, 7])
    with pytest.raises(TieError):
        pi_plugin_from_data([1, 2, 3, 4], [4, 5, 6, 7])


@settings(max_examples=25, deadline=None)
@given(st.permutations(list(range(10))), st.integers(min_value=4, max_value=6))
def test_plugin_matches_brute_force(order, m):
    xs, ys = order[:m], order[m:]
    assert pi_plugin_from_data(xs, ys) == brute_plugin(xs, ys)


def test_plugin_unbiased_under_null():
    rng = np.random.default_rng(5)
    est = [float(pi_plugin_from_data(*rng.random((2, 8))).pi0) for _ in range(400)]
    se = np.std(est, ddof=1) / np.sqrt(len(est))
    assert abs(np.mean(est) - 0.5) <= 5 * se
