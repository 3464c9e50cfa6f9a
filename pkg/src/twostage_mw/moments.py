"""Closed-form joint raw moments of the stage-1 and pooled Mann-Whitney counts.

Every published display is a separate evaluator so a coefficient correction
maps to exactly one function.  Corrections relative to the printed formulas
are listed in ``FORMULA_ERRATA.md`` at the repository root, keyed by
evaluator name.

Two numeric domains share the same code: null-mode evaluators return exact
Fractions of the design sizes; general-mode evaluators return whatever type
the pi entries carry (Fraction in, Fraction out; float in, float out).  The
general polynomials have degree at most four in the pi's with integer
coefficients below ``(MN)**4``, so float evaluation loses at most a few ulps
relative to ``E(U2**4)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import DomainError
from .pi_model import PiVector
from .ustat import SampleDesign

ORDERS: tuple[tuple[int, int], ...] = (
    (1, 0), (0, 1),
    (2, 0), (1, 1), (0, 2),
    (3, 0), (2, 1), (1, 2), (0, 3),
    (4, 0), (3, 1), (2, 2), (1, 3), (0, 4),
)


class Mode(enum.Enum):
    NullExact = "NullExact"
    General = "General"


def moment_key(a: int, b: int) -> str:
    """Report key for E(U1**a U2**b): ``E_U1_2``, ``E_U2_3``, ``E_U1_1_U2_2``."""
    if b == 0:
        return f"E_U1_{a}"
    if a == 0:
        return f"E_U2_{b}"
    return f"E_U1_{a}_U2_{b}"


def parse_moment_key(key: str) -> tuple[int, int]:
    parts = key.split("_")
    if parts[0] != "E" or len(parts) not in (3, 5):
        raise DomainError(f"bad moment key {key!r}")
    a = b = 0
    for name, power in zip(parts[1::2], parts[2::2]):
        if name == "U1":
            a = int(power)
        elif name == "U2":
            b = int(power)
        else:
            raise DomainError(f"bad moment key {key!r}")
    return a, b


@dataclass(frozen=True)
class MomentSet:
    design: SampleDesign
    mode: Mode
    values: dict = field(default_factory=dict)

    def __getitem__(self, order: tuple[int, int]):
        return self.values[order]

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def items(self):
        return self.values.items()

    def named(self) -> dict:
        return {moment_key(a, b): v for (a, b), v in self.values.items()}


# ---------------------------------------------------------------------------
# helpers

def ff(n: int, k: int) -> int:
    """Falling factorial n (n-1) ... (n-k+1)."""
    out = 1
    for i in range(k):
        out *= n - i
    return out


def ratio(m: int, M: int, k: int) -> Fraction:
    """ff(m, k) / ff(M, k), taken as 0 when the numerator vanishes."""
    top = ff(m, k)
    return Fraction(0) if top == 0 else Fraction(top, ff(M, k))


def _weights(d: SampleDesign) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Chance that a given pooled single, column pair, row pair, or disjoint pair
    of indicators lies entirely inside stage 1."""
    single = ratio(d.m, d.M, 1) * ratio(d.n, d.N, 1)
    col_pair = ratio(d.m, d.M, 2) * ratio(d.n, d.N, 1)
    row_pair = ratio(d.m, d.M, 1) * ratio(d.n, d.N, 2)
    disjoint = ratio(d.m, d.M, 2) * ratio(d.n, d.N, 2)
    return single, col_pair, row_pair, disjoint


# ---------------------------------------------------------------------------
# general case: first and second order

def mean_single(a: int, b: int, pi: PiVector):
    return a * b * pi.pi0


def general_u1_mean(d: SampleDesign, pi: PiVector):
    return mean_single(d.m, d.n, pi)


def general_u2_mean(d: SampleDesign, pi: PiVector):
    return mean_single(d.M, d.N, pi)


def second_single(a: int, b: int, pi: PiVector):
    """E(U**2) for one Mann-Whitney count over ``a`` controls and ``b`` treated."""
    return (
        a * b * pi.pi0
        + ff(a, 2) * b * pi.pi1
        + a * ff(b, 2) * pi.pi9
        + ff(a, 2) * ff(b, 2) * pi.pi0 ** 2
    )


def general_u1u2(d: SampleDesign, pi: PiVector):
    m, n, M, N = d.as_tuple()
    return (
        m * n * pi.pi0
        + m * n * (M - 1) * pi.pi1
        + m * n * (N - 1) * pi.pi9
        + m * n * (M - 1) * (N - 1) * pi.pi0 ** 2
    )


# ---------------------------------------------------------------------------
# general case: third order

def third_single(a: int, b: int, pi: PiVector):
    p = pi
    return (
        a * b * p.pi0
        + 3 * ff(a, 2) * b * p.pi1
        + 3 * a * ff(b, 2) * p.pi9
        + 3 * ff(a, 2) * ff(b, 2) * p.pi0 ** 2
        + 6 * ff(a, 2) * ff(b, 2) * p.pi4
        + ff(a, 3) * b * p.pi2
        + a * ff(b, 3) * p.pi12
        + 3 * ff(a, 3) * ff(b, 2) * p.pi0 * p.pi1
        + 3 * ff(a, 2) * ff(b, 3) * p.pi0 * p.pi9
        + ff(a, 3) * ff(b, 3) * p.pi0 ** 3
    )


def general_u1_u2sq(d: SampleDesign, pi: PiVector):
    """E(U1 U2**2) written out term by term (no division by MN)."""
    m, n, M, N = d.as_tuple()
    p = pi
    mn = m * n
    return (
        mn * p.pi0
        + 3 * mn * (M - 1) * p.pi1
        + 3 * mn * (N - 1) * p.pi9
        + 3 * mn * (M - 1) * (N - 1) * p.pi0 ** 2
        + 6 * mn * (M - 1) * (N - 1) * p.pi4
        + mn * (M - 1) * (M - 2) * p.pi2
        + mn * (N - 1) * (N - 2) * p.pi12
        + 3 * mn * (M - 1) * (M - 2) * (N - 1) * p.pi0 * p.pi1
        + 3 * mn * (M - 1) * (N - 1) * (N - 2) * p.pi0 * p.pi9
        + mn * (M - 1) * (M - 2) * (N - 1) * (N - 2) * p.pi0 ** 3
    )


def column_pair_times_u2(d: SampleDesign, pi: PiVector):
    """E(sum over i != k, j of I_ij I_kj U2) over the pooled sample."""
    M, N = d.M, d.N
    p = pi
    return (
        p.pi0 * p.pi1 * ff(M, 3) * ff(N, 2)
        + 2 * p.pi4 * ff(M, 2) * ff(N, 2)
        + p.pi2 * ff(M, 3) * N
        + 2 * p.pi1 * ff(M, 2) * N
    )


def row_pair_times_u2(d: SampleDesign, pi: PiVector):
    """E(sum over i, j != l of I_ij I_il U2) over the pooled sample."""
    M, N = d.M, d.N
    p = pi
    return (
        p.pi0 * p.pi9 * ff(M, 2) * ff(N, 3)
        + 2 * p.pi4 * ff(M, 2) * ff(N, 2)
        + p.pi12 * M * ff(N, 3)
        + 2 * p.pi9 * M * ff(N, 2)
    )


def general_u1sq_u2(d: SampleDesign, pi: PiVector):
    """E(U1**2 U2): split U1**2 by index coincidence and lift each part to the
    pooled sample by within-group exchangeability."""
    single, col_pair, row_pair, disjoint = _weights(d)
    return (
        disjoint * third_single(d.M, d.N, pi)
        + (single - disjoint) * second_single(d.M, d.N, pi)
        + (col_pair - disjoint) * column_pair_times_u2(d, pi)
        + (row_pair - disjoint) * row_pair_times_u2(d, pi)
    )


# ---------------------------------------------------------------------------
# general case: fourth order

# (coefficient, pi monomial, distinct controls, distinct treated).  Two pairs of
# entries carry corrected index counts; see FORMULA_ERRATA.md.
FOURTH_SINGLE_TERMS: list[tuple[int, tuple[str, ...], int, int]] = [
    (1, ("pi0",), 1, 1),
    (7, ("pi1",), 2, 1),
    (7, ("pi9",), 1, 2),
    (6, ("pi12",), 1, 3),
    (6, ("pi2",), 3, 1),
    (36, ("pi4",), 2, 2),
    (6, ("pi8",), 2, 2),
    (7, ("pi0", "pi0"), 2, 2),
    (6, ("pi0", "pi9"), 2, 3),
    (6, ("pi0", "pi1"), 3, 2),
    (12, ("pi7",), 2, 3),
    (12, ("pi3",), 3, 2),
    (12, ("pi0", "pi9"), 2, 3),
    (12, ("pi0", "pi1"), 3, 2),
    (12, ("pi5",), 3, 2),
    (12, ("pi10",), 2, 3),
    (1, ("pi6",), 4, 1),
    (1, ("pi13",), 1, 4),
    (4, ("pi0", "pi12"), 2, 4),
    (4, ("pi0", "pi2"), 4, 2),
    (3, ("pi9", "pi9"), 2, 4),
    (3, ("pi1", "pi1"), 4, 2),
    (6, ("pi1", "pi9"), 3, 3),
    (6, ("pi0", "pi0", "pi0"), 3, 3),
    (24, ("pi0", "pi4"), 3, 3),
    (6, ("pi0", "pi0", "pi1"), 4, 3),
    (6, ("pi9", "pi0", "pi0"), 3, 4),
    (1, ("pi0", "pi0", "pi0", "pi0"), 4, 4),
]


def _monomial(pi: PiVector, names: tuple[str, ...]):
    out = 1
    for name in names:
        out = out * pi[name]
    return out


def fourth_single(a: int, b: int, pi: PiVector):
    """E(U**4) for one count over ``a`` controls and ``b`` treated."""
    total = 0
    for coef, names, kx, ky in FOURTH_SINGLE_TERMS:
        count = ff(a, kx) * ff(b, ky)
        if count:
            total = total + coef * count * _monomial(pi, names)
    return total


def general_u1_u2cube(d: SampleDesign, pi: PiVector):
    """E(U1 U2**3) written out: each pooled term keeps one stage-1 pair."""
    m, n, M, N = d.as_tuple()
    total = 0
    for coef, names, kx, ky in FOURTH_SINGLE_TERMS:
        count = m * n * ff(M - 1, kx - 1) * ff(N - 1, ky - 1)
        if count:
            total = total + coef * count * _monomial(pi, names)
    return total


def _h_expectation(d: SampleDesign, pi: PiVector):
    M, N = d.M, d.N
    p = pi
    inner = (
        p.pi1 * (M - 2) * (N - 1) * (
            p.pi0 + (M - 3) * p.pi1 + (N - 2) * p.pi9 + (M - 3) * (N - 2) * p.pi0 ** 2
        )
        + 2 * (M - 2) * (M - 3) * (N - 1) * p.pi2 * p.pi0
        + 2 * (M - 2) * (N - 1) * p.pi3
        + 4 * (N - 1) * (M - 2) * (N - 2) * p.pi4 * p.pi0
        + 4 * (N - 1) * (M - 2) * p.pi5
        + 4 * (M - 2) * (N - 1) * p.pi1 * p.pi0
        + (M - 2) * p.pi2
        + (M - 2) * (M - 3) * p.pi6
        + 2 * (N - 1) * (p.pi4 + p.pi8)
        + 2 * (N - 1) * (N - 2) * (p.pi7 + p.pi10)
        + 4 * p.pi1
        + 4 * (M - 2) * p.pi2
        + 8 * (N - 1) * p.pi4
        + 4 * (M - 2) * (N - 1) * p.pi3
    )
    return M * (M - 1) * N * inner


def _k_expectation(d: SampleDesign, pi: PiVector):
    return _h_expectation(d.mirrored(), pi.mirrored())


def helper_h_expectation(design: SampleDesign, pi: PiVector):
    """E(H), H = sum over i != k, j of I_ij I_kj U2**2 (pooled sample)."""
    if design.M < 2:
        raise DomainError("E(H) needs at least two controls (M >= 2)")
    pi.validate()
    return _h_expectation(design, pi)


def helper_k_expectation(design: SampleDesign, pi: PiVector):
    """E(K), K = sum over i, j != l of I_ij I_il U2**2: the row/column mirror of E(H)."""
    if design.N < 2:
        raise DomainError("E(K) needs at least two treated (N >= 2)")
    pi.validate()
    return _k_expectation(design, pi)


def general_u1sq_u2sq(d: SampleDesign, pi: PiVector):
    single, col_pair, row_pair, disjoint = _weights(d)
    return (
        (single - disjoint) * third_single(d.M, d.N, pi)
        + (col_pair - disjoint) * _h_expectation(d, pi)
        + (row_pair - disjoint) * _k_expectation(d, pi)
        + disjoint * fourth_single(d.M, d.N, pi)
    )


def general_u1cube_u2(d: SampleDesign, pi: PiVector):
    """E(U1**3 U2): one bracket per coincidence pattern of the three stage-1
    indicators, each bracket being E(pattern * U2) / (pattern count)."""
    m, n, M, N = d.as_tuple()
    p = pi
    p0 = p.pi0
    t1 = ff(m, 3) * ff(n, 3) * (
        p0 ** 4 * (M - 3) * (N - 3)
        + 3 * (N - 3) * p0 ** 2 * p.pi9
        + 3 * (M - 3) * p.pi1 * p0 ** 2
        + 3 * p0 ** 3
        + 6 * p0 * p.pi4
    )
    t2 = 3 * ff(m, 2) * ff(n, 3) * (
        p0 ** 2 * p.pi9 * (M - 2) * (N - 3)
        + p0 * p.pi12 * (N - 3)
        + p.pi9 ** 2 * (N - 3)
        + p.pi9 * p.pi1 * (M - 2)
        + 2 * p.pi4 * p0 * (M - 2)
        + 3 * p.pi9 * p0
        + p.pi7
        + 2 * p.pi10
    )
    t3 = 3 * ff(m, 3) * ff(n, 2) * (
        p0 ** 2 * p.pi1 * (M - 3) * (N - 2)
        + p0 * p.pi2 * (M - 3)
        + p.pi1 ** 2 * (M - 3)
        + p.pi1 * p.pi9 * (N - 2)
        + 2 * p.pi4 * p0 * (N - 2)
        + 3 * p.pi1 * p0
        + p.pi3
        + 2 * p.pi5
    )
    t4 = m * ff(n, 3) * (
        (M - 1) * (N - 3) * p0 * p.pi12
        + (N - 3) * p.pi13
        + 3 * (M - 1) * p.pi7
        + 3 * p.pi12
    )
    t5 = ff(m, 3) * n * (
        (N - 1) * (M - 3) * p0 * p.pi2
        + (M - 3) * p.pi6
        + 3 * (N - 1) * p.pi3
        + 3 * p.pi2
    )
    t6 = 6 * ff(m, 2) * ff(n, 2) * (
        (M - 2) * (N - 2) * p0 * p.pi4
        + (N - 2) * p.pi7
        + (N - 2) * p.pi10
        + (M - 2) * p.pi3
        + (M - 2) * p.pi5
        + 3 * p.pi4
        + p.pi8
    )
    t7 = 3 * ff(m, 2) * ff(n, 2) * (
        (M - 2) * (N - 2) * p0 ** 3
        + 2 * (N - 2) * p0 * p.pi9
        + 2 * (M - 2) * p0 * p.pi1
        + 2 * p0 ** 2
        + 2 * p.pi4
    )
    t8 = 3 * ff(m, 2) * n * (
        (M - 2) * (N - 1) * p0 * p.pi1
        + 2 * (N - 1) * p.pi4
        + (M - 2) * p.pi2
        + 2 * p.pi1
    )
    t9 = 3 * m * ff(n, 2) * (
        (N - 2) * (M - 1) * p0 * p.pi9
        + 2 * (M - 1) * p.pi4
        + (N - 2) * p.pi12
        + 2 * p.pi9
    )
    t10 = Fraction(m * n, M * N) * second_single(M, N, pi)
    return t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8 + t9 + t10


GENERAL_EVALUATORS = {
    (1, 0): general_u1_mean,
    (0, 1): general_u2_mean,
    (2, 0): lambda d, pi: second_single(d.m, d.n, pi),
    (1, 1): general_u1u2,
    (0, 2): lambda d, pi: second_single(d.M, d.N, pi),
    (3, 0): lambda d, pi: third_single(d.m, d.n, pi),
    (2, 1): general_u1sq_u2,
    (1, 2): general_u1_u2sq,
    (0, 3): lambda d, pi: third_single(d.M, d.N, pi),
    (4, 0): lambda d, pi: fourth_single(d.m, d.n, pi),
    (3, 1): general_u1cube_u2,
    (2, 2): general_u1sq_u2sq,
    (1, 3): general_u1_u2cube,
    (0, 4): lambda d, pi: fourth_single(d.M, d.N, pi),
}


def moments_general(design: SampleDesign, pi: PiVector) -> MomentSet:
    """All fourteen joint raw moments for arbitrary pattern probabilities."""
    pi.validate()
    values = {order: GENERAL_EVALUATORS[order](design, pi) for order in ORDERS}
    return MomentSet(design, Mode.General, values)


# ---------------------------------------------------------------------------
# null case: exact polynomials in the design sizes

F = Fraction


def null_mean(a: int, b: int) -> Fraction:
    return F(a * b, 2)


def null_second(a: int, b: int) -> Fraction:
    return F(a * a * b * b, 4) + F(a * a * b + a * b * b + a * b, 12)


def null_u1u2(d: SampleDesign) -> Fraction:
    m, n, M, N = d.as_tuple()
    mn = m * n
    return F(mn * M * N, 4) + F(mn * M + mn * N + mn, 12)


def null_third(a: int, b: int) -> Fraction:
    return F(a ** 3 * b ** 3 + a ** 3 * b ** 2 + a ** 2 * b ** 3 + a ** 2 * b ** 2, 8)


def null_u1_u2sq(d: SampleDesign) -> Fraction:
    m, n, M, N = d.as_tuple()
    mn = m * n
    return F(mn * (M * M * N * N + M * M * N + M * N * N + M * N), 8)


def _stage2_shift(d: SampleDesign) -> Fraction:
    """Intercept of E(U2 | U1) under the null."""
    m, n, M, N = d.as_tuple()
    return F(1, 2) * (
        F((M - m) * n * (n + 1) + (N - n) * m * (m + 1), m + n + 1) + (M - m) * (N - n)
    )


def _stage2_slope(d: SampleDesign) -> Fraction:
    """Slope of E(U2 | U1) under the null."""
    return F(d.M + d.N + 1, d.m + d.n + 1)


def null_u1sq_u2(d: SampleDesign) -> Fraction:
    """E(U1**2 U2) = E(U1**2 E(U2 | U1)), using linearity of E(U2 | U1)."""
    return _stage2_slope(d) * null_third(d.m, d.n) + _stage2_shift(d) * null_second(d.m, d.n)


def null_u1sq_u2_expanded(d: SampleDesign) -> Fraction:
    """The same moment in fully expanded polynomial form."""
    m, n, M, N = d.as_tuple()
    cross = F((M - m) * n * (n + 1) + (N - n) * m * (m + 1), m + n + 1)
    return (
        _stage2_slope(d) * F(m * m * n * n, 8) * (m * n + m + n + 1)
        + F(m * n, 24) * cross * (3 * m * n + m + n + 1)
        + F(1, 24) * (M - m) * (N - n) * (3 * m * m * n * n + m * m * n + m * n * n + m * n)
    )


def null_fourth(a: int, b: int) -> Fraction:
    m, n = a, b
    return (
        F(m**4 * n**4, 16) + F(m**4 * n**3, 8) + F(m**4 * n**2, 48) - F(m**4 * n, 120)
        + F(m**3 * n**4, 8) + F(m**3 * n**3, 6) + F(m**3 * n**2, 40) - F(m**3 * n, 60)
        + F(m**2 * n**4, 48) + F(m**2 * n**3, 40) - F(m**2 * n**2, 240) - F(m**2 * n, 120)
        - F(m * n**4, 120) - F(m * n**3, 60) - F(m * n**2, 120)
    )


def null_u1_u2cube(d: SampleDesign) -> Fraction:
    m, n, M, N = d.as_tuple()
    mn = m * n
    poly = (
        F(M**3 * N**3, 16) + F(M**3 * N**2, 8) + F(M**3 * N, 48) - F(M**3, 120)
        + F(M**2 * N**3, 8) + F(M**2 * N**2, 6) + F(M**2 * N, 40) - F(M**2, 60)
        + F(M * N**3, 48) + F(M * N**2, 40) - F(M * N, 240) - F(M, 120)
        - F(N**3, 120) - F(N**2, 60) - F(N, 120)
    )
    return mn * poly


def null_u1cube_u2(d: SampleDesign) -> Fraction:
    """E(U1**3 U2) = E(U1**3 E(U2 | U1))."""
    return _stage2_slope(d) * null_fourth(d.m, d.n) + _stage2_shift(d) * null_third(d.m, d.n)


def null_h_expectation(d: SampleDesign) -> Fraction:
    M, N = d.M, d.N
    inner = (
        F(5 * M, 4) + F(29 * N, 12)
        + F(3 * (2 * M - 4) * (N - 1), 20)
        + F(2 * (4 * N - 4) * (M - 2), 15)
        + F(19 * (4 * M - 8) * (N - 1), 60)
        + F(17 * (2 * N - 2) * (N - 2), 60)
        + F((M - 2) * (M - 3), 5)
        + (F(M, 3) - F(2, 3)) * (N - 1) * (F(M, 3) + F(N, 3) + F((M - 3) * (N - 2), 4) - F(7, 6))
        + F((2 * M - 4) * (M - 3) * (N - 1), 8)
        + F(5 * (4 * N - 4) * (M - 2) * (N - 2), 48)
        - F(43, 12)
    )
    return M * N * (M - 1) * inner


def null_g_expectation(d: SampleDesign) -> Fraction:
    return null_h_expectation(d.mirrored())


def null_u1sq_u2sq(d: SampleDesign) -> Fraction:
    single, col_pair, row_pair, disjoint = _weights(d)
    return (
        (single - disjoint) * null_third(d.M, d.N)
        + (col_pair - disjoint) * null_h_expectation(d)
        + (row_pair - disjoint) * null_g_expectation(d)
        + disjoint * null_fourth(d.M, d.N)
    )


NULL_EVALUATORS = {
    (1, 0): lambda d: null_mean(d.m, d.n),
    (0, 1): lambda d: null_mean(d.M, d.N),
    (2, 0): lambda d: null_second(d.m, d.n),
    (1, 1): null_u1u2,
    (0, 2): lambda d: null_second(d.M, d.N),
    (3, 0): lambda d: null_third(d.m, d.n),
    (2, 1): null_u1sq_u2,
    (1, 2): null_u1_u2sq,
    (0, 3): lambda d: null_third(d.M, d.N),
    (4, 0): lambda d: null_fourth(d.m, d.n),
    (3, 1): null_u1cube_u2,
    (2, 2): null_u1sq_u2sq,
    (1, 3): null_u1_u2cube,
    (0, 4): lambda d: null_fourth(d.M, d.N),
}


def moments_null(design: SampleDesign) -> MomentSet:
    """All fourteen joint raw moments under the null, as exact Fractions."""
    values = {order: NULL_EVALUATORS[order](design) for order in ORDERS}
    return MomentSet(design, Mode.NullExact, values)
