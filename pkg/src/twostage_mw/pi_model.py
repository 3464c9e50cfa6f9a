"""Indicator-product probabilities (the pi vector) and their estimators.

An indicator ``I_ij`` is 1 when control ``X_i`` lies below treated ``Y_j``.
Each pi is the expectation of a product of such indicators over a fixed index
pattern, with distinct letters meaning distinct indices.  Control letters
are ``i, k, s, p`` and treated letters are ``j, l, q, t``.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from itertools import permutations
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import DomainError, InsufficientData, TieError

Sampler = Callable[[np.random.Generator, tuple], np.ndarray]

# Edge lists (control slot, treated slot).  Index 11 is unused on purpose.
PI_PATTERNS: dict[str, tuple[tuple[int, int], ...]] = {
    "pi0": ((0, 0),),
    "pi1": ((0, 0), (1, 0)),
    "pi2": ((0, 0), (1, 0), (2, 0)),
    "pi3": ((0, 0), (1, 0), (2, 0), (2, 1)),
    "pi4": ((0, 0), (1, 0), (1, 1)),
    "pi5": ((0, 0), (1, 0), (0, 1), (2, 1)),
    "pi6": ((0, 0), (1, 0), (2, 0), (3, 0)),
    "pi7": ((0, 0), (1, 0), (0, 1), (0, 2)),
    "pi8": ((0, 0), (1, 0), (0, 1), (1, 1)),
    "pi9": ((0, 0), (0, 1)),
    "pi10": ((0, 0), (1, 0), (0, 1), (1, 2)),
    "pi12": ((0, 0), (0, 1), (0, 2)),
    "pi13": ((0, 0), (0, 1), (0, 2), (0, 3)),
}
PI_NAMES = tuple(PI_PATTERNS)

# Transposing the roles of controls and treated permutes the patterns.
MIRROR = {
    "pi0": "pi0", "pi1": "pi9", "pi2": "pi12", "pi3": "pi7", "pi4": "pi4",
    "pi5": "pi10", "pi6": "pi13", "pi7": "pi3", "pi8": "pi8", "pi9": "pi1",
    "pi10": "pi5", "pi12": "pi2", "pi13": "pi6",
}


@dataclass(frozen=True)
class PiVector:
    """The thirteen pattern probabilities.  Entries may be floats or Fractions."""

    pi0: object
    pi1: object
    pi2: object
    pi3: object
    pi4: object
    pi5: object
    pi6: object
    pi7: object
    pi8: object
    pi9: object
    pi10: object
    pi12: object
    pi13: object

    @classmethod
    def from_mapping(cls, values) -> "PiVector":
        missing = [name for name in PI_NAMES if name not in values]
        if missing:
            raise DomainError(f"missing pi entries: {missing}")
        return cls(**{name: values[name] for name in PI_NAMES})

    @classmethod
    def constant(cls, value) -> "PiVector":
        return cls(**{name: value for name in PI_NAMES})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __iter__(self) -> Iterator:
        return iter(getattr(self, name) for name in PI_NAMES)

    def __getitem__(self, name: str):
        return getattr(self, name)

    def mirrored(self) -> "PiVector":
        return PiVector(**{name: getattr(self, MIRROR[name]) for name in PI_NAMES})

    def validate(self) -> "PiVector":
        for name in PI_NAMES:
            value = getattr(self, name)
            if not (0 <= value <= 1):
                raise DomainError(f"{name}={value} lies outside [0, 1]")
        return self

    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self)


def null_pi_vector() -> PiVector:
    """Exact pattern probabilities when all observations are i.i.d. continuous."""
    F = Fraction
    return PiVector(
        pi0=F(1, 2), pi1=F(1, 3), pi2=F(1, 4), pi3=F(3, 20), pi4=F(5, 24),
        pi5=F(2, 15), pi6=F(1, 5), pi7=F(3, 20), pi8=F(1, 6), pi9=F(1, 3),
        pi10=F(2, 15), pi12=F(1, 4), pi13=F(1, 5),
    )


# ---------------------------------------------------------------------------
# pattern strings and the null table

_X_LETTERS = "iksp"
_Y_LETTERS = "jlqt"


def parse_pattern(text: str) -> tuple[tuple[int, int], ...]:
    """Parse ``"I_ij I_kj I_kl"`` into slot edges ``((0, 0), (1, 0), (1, 1))``.

    Slots are numbered in order of first appearance.
    """
    tokens = re.findall(r"I_\{?([a-z])([a-z])\}?", text)
    if not tokens:
        raise DomainError(f"no indicators found in {text!r}")
    xs: dict[str, int] = {}
    ys: dict[str, int] = {}
    edges = []
    for a, b in tokens:
        if a not in _X_LETTERS or b not in _Y_LETTERS:
            raise DomainError(f"bad indicator I_{a}{b} in {text!r}")
        edges.append((xs.setdefault(a, len(xs)), ys.setdefault(b, len(ys))))
    return tuple(edges)


def null_pattern_probability(edges: Sequence[tuple[int, int]]) -> Fraction:
    """P(all indicators are 1) for i.i.d. continuous data, by counting orderings."""
    edges = sorted(set(edges))
    nx = 1 + max(e[0] for e in edges)
    ny = 1 + max(e[1] for e in edges)
    total = nx + ny
    good = 0
    for order in permutations(range(total)):
        # order[v] is the rank of variate v; controls first, then treated
        if all(order[i] < order[nx + j] for i, j in edges):
            good += 1
    return Fraction(good, math.factorial(total))


# Printed constants, in their printed order.  Two printed values disagree with
# their literal index pattern; ``value`` holds the probability of the literal
# pattern and ``printed`` keeps the original.
_NULL_TABLE_PRINTED = (
    ("I_ij", Fraction(1, 2)),
    ("I_ij I_kj", Fraction(1, 3)),
    ("I_ij I_il", Fraction(1, 3)),
    ("I_ij I_kl", Fraction(1, 4)),
    ("I_ij I_il I_it", Fraction(1, 4)),
    ("I_ij I_kj I_sj", Fraction(1, 4)),
    ("I_ij I_kj I_kl", Fraction(5, 24)),
    ("I_ij I_kj I_sj I_st", Fraction(3, 20)),
    ("I_ij I_kj I_it I_st", Fraction(2, 15)),
    ("I_ij I_kj I_sj I_pj", Fraction(1, 5)),
    ("I_ij I_kj I_iq I_it", Fraction(3, 20)),
    ("I_ij I_kj I_il I_kt", Fraction(1, 6)),
    ("I_ij I_kj I_iq I_kl", Fraction(2, 15)),
    ("I_ij I_il I_kj", Fraction(5, 24)),
    ("I_ij I_il I_iq I_st", Fraction(1, 8)),
    ("I_ij I_kj I_pj I_st", Fraction(1, 8)),
    ("I_ij I_il I_pq I_pt", Fraction(1, 9)),
    ("I_ij I_kj I_pq I_sq", Fraction(1, 9)),
    ("I_ij I_il I_pq I_sq", Fraction(1, 9)),
    ("I_ij I_kj I_il I_st", Fraction(1, 9)),
    ("I_ij I_kj I_pq I_st", Fraction(1, 12)),
    ("I_ij I_kl I_st I_sq", Fraction(1, 12)),
    ("I_ij I_kl I_st I_pq", Fraction(1, 16)),
    ("I_ij I_il I_it I_iq", Fraction(1, 5)),
    ("I_ij I_kj I_iq I_st", Fraction(5, 48)),
)

_NULL_TABLE_CORRECTIONS = {
    # the printed 1/6 is the 4-cycle value (I_ij I_kj I_il I_kl)
    "I_ij I_kj I_il I_kt": Fraction(2, 15),
    # the printed 1/9 matches no factorisation; the pattern is a 3-path times a single
    "I_ij I_kj I_il I_st": Fraction(5, 48),
}


@dataclass(frozen=True)
class NullIndicatorTable:
    values: dict
    printed: dict

    def __getitem__(self, pattern: str) -> Fraction:
        return self.values[_normalise(pattern)]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def corrections(self) -> dict:
        """Entries whose printed value differs from the literal pattern value."""
        return {
            key: (self.printed[key], value)
            for key, value in self.values.items()
            if self.printed[key] != value
        }


def _normalise(pattern: str) -> str:
    return " ".join(re.findall(r"I_[a-z][a-z]", pattern.replace("{", "").replace("}", "")))


def null_indicator_table() -> NullIndicatorTable:
    values = {}
    printed = {}
    for pattern, value in _NULL_TABLE_PRINTED:
        printed[pattern] = value
        values[pattern] = _NULL_TABLE_CORRECTIONS.get(pattern, value)
    return NullIndicatorTable(values=values, printed=printed)


# ---------------------------------------------------------------------------
# samplers

def uniform(low: float = 0.0, high: float = 1.0) -> Sampler:
    def draw(rng, size):
        return rng.uniform(low, high, size)
    draw.description = f"uniform({low},{high})"
    return draw


def normal(loc: float = 0.0, scale: float = 1.0) -> Sampler:
    def draw(rng, size):
        return rng.normal(loc, scale, size)
    draw.description = f"normal({loc},{scale})"
    return draw


def exponential(scale: float = 1.0) -> Sampler:
    def draw(rng, size):
        return rng.exponential(scale, size)
    draw.description = f"exponential({scale})"
    return draw


def shifted(sampler: Sampler, delta: float) -> Sampler:
    def draw(rng, size):
        return sampler(rng, size) + delta
    draw.description = f"{getattr(sampler, 'description', 'sampler')}+{delta}"
    return draw


def parse_sampler(text: str) -> Sampler:
    """Build a sampler from text such as ``uniform:0,1`` or ``normal:0.5,1``."""
    name, _, args = text.partition(":")
    params = [float(a) for a in args.split(",") if a.strip()]
    factories = {"uniform": uniform, "normal": normal, "exponential": exponential}
    if name not in factories:
        raise DomainError(f"unknown distribution {name!r}; choose from {sorted(factories)}")
    try:
        return factories[name](*params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {args!r}") from exc


# ---------------------------------------------------------------------------
# Monte Carlo estimation

CHUNK = 1 << 18


def chunk_plan(replications: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    """Split replicates into fixed-size chunks, independent of the worker count."""
    return [(k, min(chunk, replications - k * chunk)) for k in range(-(-replications // chunk))]


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def run_chunks(work, plan, threads: Optional[int]):
    """Evaluate ``work(index, size)`` per chunk and return results in chunk order."""
    if threads is None or threads <= 1 or len(plan) <= 1:
        return [work(k, size) for k, size in plan]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda item: work(*item), plan))


@dataclass(frozen=True)
class PiEstimate:
    value: PiVector
    standard_error: PiVector
    replications: int
    seed: int
    covariance: Optional[np.ndarray] = None

    def __eq__(self, other):
        if not isinstance(other, PiEstimate):
            return NotImplemented
        same_cov = (self.covariance is None and other.covariance is None) or (
            self.covariance is not None
            and other.covariance is not None
            and np.array_equal(self.covariance, other.covariance)
        )
        return (
            self.value == other.value
            and self.standard_error == other.standard_error
            and self.replications == other.replications
            and self.seed == other.seed
            and same_cov
        )


def _pattern_indicators(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rows of 0/1 pattern indicators, one column per pi name."""
    below = x[:, :, None] < y[:, None, :]
    if np.any(x[:, :, None] == y[:, None, :]):
        raise TieError("sampler produced a tie between a control and a treated value")
    cols = []
    for name in PI_NAMES:
        ind = np.ones(x.shape[0], dtype=bool)
        for i, j in PI_PATTERNS[name]:
            ind &= below[:, i, j]
        cols.append(ind)
    return np.stack(cols, axis=1).astype(np.int64)


def pi_monte_carlo(
    sampler_x: Sampler,
    sampler_y: Sampler,
    replications: int,
    seed: int,
    threads: Optional[int] = None,
) -> PiEstimate:
    """Estimate every pi by averaging its indicator over independent replicates.

    Each replicate draws four controls and four treated; each pattern reads
    the slots it needs.  Results depend only on ``seed`` and ``replications``.
    """
    if replications < 1:
        raise DomainError("replications must be >= 1")

    def work(index, size):
        rng = chunk_rng(seed, index)
        x = np.asarray(sampler_x(rng, (size, 4)), dtype=float)
        y = np.asarray(sampler_y(rng, (size, 4)), dtype=float)
        z = _pattern_indicators(x, y)
        return z.sum(axis=0), z.T @ z

    parts = run_chunks(work, chunk_plan(replications), threads)
    sums = sum(p[0] for p in parts)
    cross = sum(p[1] for p in parts)
    r = replications
    mean = sums / r
    if r > 1:
        cov = (cross / r - np.outer(mean, mean)) / (r - 1)
    else:
        cov = np.zeros((len(PI_NAMES), len(PI_NAMES)))
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return PiEstimate(
        value=PiVector(*(float(v) for v in mean)),
        standard_error=PiVector(*(float(v) for v in se)),
        replications=r,
        seed=seed,
        covariance=cov,
    )


# ---------------------------------------------------------------------------
# plug-in (U-statistic) estimates from one dataset

def _ff(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def pi_plugin_from_data(xs: Sequence[float], ys: Sequence[float]) -> PiVector:
    """Average each indicator product over all ordered distinct index selections.

    Counts are obtained from row sums, column sums and the two Gram matrices
    of the comparison matrix, so the cost is polynomial in the sample sizes.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    m, n = len(x), len(y)
    if m < 4 or n < 4:
        raise InsufficientData(f"need at least 4 controls and 4 treated, got {m} and {n}")
    if np.any(x[:, None] == y[None, :]):
        raise TieError("tie between a control and a treated value")
    A = (x[:, None] < y[None, :]).astype(object)
    r = [int(v) for v in A.sum(axis=1)]  # treated above each control
    c = [int(v) for v in A.sum(axis=0)]  # controls below each treated
    G = A.dot(A.T)  # common treated of two controls
    H = A.T.dot(A)  # common controls of two treated
    rows = [[j for j in range(n) if A[i, j]] for i in range(m)]
    cols = [[i for i in range(m) if A[i, j]] for j in range(n)]

    counts = {
        "pi0": sum(r),
        "pi1": sum(_ff(v, 2) for v in c),
        "pi9": sum(_ff(v, 2) for v in r),
        "pi2": sum(_ff(v, 3) for v in c),
        "pi12": sum(_ff(v, 3) for v in r),
        "pi6": sum(_ff(v, 4) for v in c),
        "pi13": sum(_ff(v, 4) for v in r),
        # shared treated j, second control k has another treated l
        "pi4": sum((c[j] - 1) * sum(r[k] - 1 for k in cols[j]) for j in range(n)),
        "pi8": sum(_ff(int(G[i, k]), 2) for i in range(m) for k in range(m) if i != k),
        # treated j over three controls, one of which has another treated
        "pi3": sum(_ff(c[j] - 1, 2) * sum(r[s] - 1 for s in cols[j]) for j in range(n)),
        "pi7": sum(_ff(r[i] - 1, 2) * sum(c[j] - 1 for j in rows[i]) for i in range(m)),
        "pi10": sum(
            int(G[i, k]) * ((r[i] - 1) * (r[k] - 1) - int(G[i, k]) + 1)
            for i in range(m) for k in range(m) if i != k
        ),
        "pi5": sum(
            int(H[j, t]) * ((c[j] - 1) * (c[t] - 1) - int(H[j, t]) + 1)
            for j in range(n) for t in range(n) if j != t
        ),
    }
    denominators = {}
    for name, edges in PI_PATTERNS.items():
        nx = 1 + max(e[0] for e in edges)
        ny = 1 + max(e[1] for e in edges)
        denominators[name] = _ff(m, nx) * _ff(n, ny)
    return PiVector(**{name: Fraction(counts[name], denominators[name]) for name in PI_NAMES})
