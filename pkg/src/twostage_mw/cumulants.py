"""Mixed cumulants of (U1, U2) from raw moments, and the order-wise aggregates.

Each ``kappa_rs`` function is the (r, s) partial derivative of the joint
cumulant generating function at the origin, written in raw moments.  The
generic recursion in ``oracle.moments_to_cumulants`` is the independent
check on these.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

from .errors import DegenerateError
from .moments import ORDERS, MomentSet, Mode, moment_key
from .ustat import SampleDesign


def cumulant_key(r: int, s: int) -> str:
    return f"k{r}{s}"


@dataclass(frozen=True)
class CumulantSet:
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
        return {cumulant_key(r, s): v for (r, s), v in self.values.items()}


# Raw moments are passed as a dict E[(a, b)] = E(U1**a U2**b).

def kappa_10(E):
    return E[(1, 0)]


def kappa_01(E):
    return E[(0, 1)]


def kappa_20(E):
    return E[(2, 0)] - E[(1, 0)] ** 2


def kappa_02(E):
    return E[(0, 2)] - E[(0, 1)] ** 2


def kappa_11(E):
    return E[(1, 1)] - E[(1, 0)] * E[(0, 1)]


def kappa_30(E):
    return E[(3, 0)] - 3 * E[(2, 0)] * E[(1, 0)] + 2 * E[(1, 0)] ** 3


def kappa_03(E):
    return E[(0, 3)] - 3 * E[(0, 2)] * E[(0, 1)] + 2 * E[(0, 1)] ** 3


def kappa_21(E):
    e1, e2 = E[(1, 0)], E[(0, 1)]
    return E[(2, 1)] - E[(2, 0)] * e2 - 2 * E[(1, 1)] * e1 + 2 * e1**2 * e2


def kappa_12(E):
    e1, e2 = E[(1, 0)], E[(0, 1)]
    return E[(1, 2)] - E[(0, 2)] * e1 - 2 * E[(1, 1)] * e2 + 2 * e2**2 * e1


def kappa_40(E):
    e1 = E[(1, 0)]
    return E[(4, 0)] - 4 * e1 * E[(3, 0)] - 3 * E[(2, 0)] ** 2 + 12 * e1**2 * E[(2, 0)] - 6 * e1**4


def kappa_04(E):
    e2 = E[(0, 1)]
    return E[(0, 4)] - 4 * e2 * E[(0, 3)] - 3 * E[(0, 2)] ** 2 + 12 * e2**2 * E[(0, 2)] - 6 * e2**4


def kappa_31(E):
    e1, e2 = E[(1, 0)], E[(0, 1)]
    return (
        E[(3, 1)]
        - E[(3, 0)] * e2
        - 3 * e1 * E[(2, 1)]
        - 3 * E[(2, 0)] * E[(1, 1)]
        + 6 * e1 * e2 * E[(2, 0)]
        + 6 * e1**2 * E[(1, 1)]
        - 6 * e1**3 * e2
    )


def kappa_13(E):
    e1, e2 = E[(1, 0)], E[(0, 1)]
    return (
        E[(1, 3)]
        - e1 * E[(0, 3)]
        - 3 * e2 * E[(1, 2)]
        - 3 * E[(0, 2)] * E[(1, 1)]
        + 6 * e1 * e2 * E[(0, 2)]
        + 6 * e2**2 * E[(1, 1)]
        - 6 * e2**3 * e1
    )


def kappa_22(E):
    e1, e2 = E[(1, 0)], E[(0, 1)]
    return (
        E[(2, 2)]
        - 2 * e1 * E[(1, 2)]
        - 2 * e2 * E[(2, 1)]
        - E[(2, 0)] * E[(0, 2)]
        - 2 * E[(1, 1)] ** 2
        + 2 * e1**2 * E[(0, 2)]
        + 2 * e2**2 * E[(2, 0)]
        + 8 * e1 * e2 * E[(1, 1)]
        - 6 * e1**2 * e2**2
    )


CUMULANT_EVALUATORS = {
    (1, 0): kappa_10, (0, 1): kappa_01,
    (2, 0): kappa_20, (1, 1): kappa_11, (0, 2): kappa_02,
    (3, 0): kappa_30, (2, 1): kappa_21, (1, 2): kappa_12, (0, 3): kappa_03,
    (4, 0): kappa_40, (3, 1): kappa_31, (2, 2): kappa_22, (1, 3): kappa_13, (0, 4): kappa_04,
}


def mixed_cumulants(moments: MomentSet) -> CumulantSet:
    """All fourteen mixed cumulants of order one to four."""
    missing = [moment_key(*o) for o in ORDERS if o not in moments.values]
    if missing:
        raise KeyError(f"moment set is missing {missing}")
    E = moments.values
    values = {order: CUMULANT_EVALUATORS[order](E) for order in ORDERS}
    return CumulantSet(moments.design, moments.mode, values)


class Weighting(enum.Enum):
    PaperWeights = "PaperWeights"      # unit coefficient on every mixed partial
    BinomialWeights = "BinomialWeights"  # C(r, s): cumulants of U1 + U2


@dataclass(frozen=True)
class PaperAggregates:
    k1: object
    k2: object
    k3: object
    k4: object
    weighting: Weighting

    def as_tuple(self) -> tuple:
        return (self.k1, self.k2, self.k3, self.k4)


def paper_aggregates(c: CumulantSet, weighting: Weighting = Weighting.PaperWeights) -> PaperAggregates:
    """Sum the mixed cumulants of each total order.

    With unit weights this is the order-wise sum of partial derivatives; with
    binomial weights it is the cumulant sequence of U1 + U2.
    """
    ks = []
    for order in range(1, 5):
        total = 0
        for r in range(order, -1, -1):
            w = 1 if weighting is Weighting.PaperWeights else math.comb(order, r)
            total = total + w * c[(r, order - r)]
        ks.append(total)
    return PaperAggregates(*ks, weighting)


class Which(enum.Enum):
    Stage1 = "Stage1"
    Stage2 = "Stage2"
    AggregatePaper = "AggregatePaper"
    AggregateBinomial = "AggregateBinomial"


@dataclass(frozen=True)
class Shape:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float

    def __iter__(self):
        return iter((self.mean, self.variance, self.skewness, self.excess_kurtosis))


def standardized_shape(c: CumulantSet, which: Which = Which.Stage1) -> Shape:
    """(mean, variance, skewness, excess kurtosis) of a marginal or an aggregate."""
    if which is Which.Stage1:
        k = (c[(1, 0)], c[(2, 0)], c[(3, 0)], c[(4, 0)])
    elif which is Which.Stage2:
        k = (c[(0, 1)], c[(0, 2)], c[(0, 3)], c[(0, 4)])
    elif which is Which.AggregatePaper:
        k = paper_aggregates(c, Weighting.PaperWeights).as_tuple()
    else:
        k = paper_aggregates(c, Weighting.BinomialWeights).as_tuple()
    k1, k2, k3, k4 = (float(v) for v in k)
    if not k2 > 0:
        raise DegenerateError(f"variance of {which.value} is {k2}, shape undefined")
    return Shape(k1, k2, k3 / k2**1.5, k4 / k2**2)
