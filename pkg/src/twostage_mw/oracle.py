"""Independent oracles for the closed-form moments.

* ``exact_joint_pmf``: exact null distribution of (U1, U2).
* ``pattern_moment``: exact E(U1**a U2**b) for any pi vector by expanding the
  power sums over index coincidences and classifying each product of
  indicators by its bipartite shape.  It shares no code with the closed forms.
* ``discrete_joint_pmf`` / ``discrete_pi_vector``: exact answers for finitely
  supported alternatives.
* ``simulate_joint``: seeded Monte Carlo estimates of the joint moments.
* ``validate_formulas``: compares the closed forms with the oracles.
"""

from __future__ import annotations

import enum
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, DomainError, TieError
from .moments import (
    ORDERS,
    MomentSet,
    Mode,
    moment_key,
    moments_general,
    moments_null,
)
from .pi_model import (
    PI_NAMES,
    PI_PATTERNS,
    PiVector,
    Sampler,
    chunk_plan,
    chunk_rng,
    null_pi_vector,
    pi_monte_carlo,
    run_chunks,
    uniform,
)
from .ustat import SampleDesign

DEFAULT_BUDGET = 20_000_000
BUDGET_ENV = "TWOSTAGE_MW_BUDGET"


def enumeration_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise DomainError(f"{BUDGET_ENV} must be positive")
    return value


def check_budget(design: SampleDesign, budget: Optional[int] = None) -> int:
    count = math.comb(design.M + design.N, design.M)
    limit = enumeration_budget() if budget is None else budget
    if count > limit:
        raise BudgetExceeded(
            f"C({design.M + design.N},{design.M}) = {count} arrangements exceeds budget {limit}"
        )
    return count


# ---------------------------------------------------------------------------
# exact null pmf

@dataclass(frozen=True)
class JointPmf:
    """Exact joint null distribution of (U1, U2).

    ``counts[(u1, u2)]`` are integer tallies over ``total`` equally likely
    orderings of the four observation groups.
    """

    design: SampleDesign
    counts: dict
    total: int

    @property
    def entries(self) -> dict:
        return {k: Fraction(v, self.total) for k, v in self.counts.items()}

    def probability(self, u1: int, u2: int) -> Fraction:
        return Fraction(self.counts.get((u1, u2), 0), self.total)

    def marginal_u1(self) -> dict:
        out = Counter()
        for (u1, _), c in self.counts.items():
            out[u1] += c
        return {k: Fraction(v, self.total) for k, v in sorted(out.items())}

    def marginal_u2(self) -> dict:
        out = Counter()
        for (_, u2), c in self.counts.items():
            out[u2] += c
        return {k: Fraction(v, self.total) for k, v in sorted(out.items())}

    def tail(self, predicate: Callable[[int, int], bool]) -> Fraction:
        return Fraction(sum(c for k, c in self.counts.items() if predicate(*k)), self.total)


def exact_joint_pmf(design: SampleDesign, budget: Optional[int] = None) -> JointPmf:
    """Exact null pmf of (U1, U2).

    Under the null every interleaving of the four groups (stage-1 controls,
    stage-2 controls, stage-1 treated, stage-2 treated) in rank order is
    equally likely, with multinomial total.  A dynamic programme over the
    number placed from each group carries the (u1, u2) tallies: a treated
    observation adds the number of controls already placed below it.
    """
    check_budget(design, budget)
    m, n, M, N = design.as_tuple()
    mx, nx = M - m, N - n
    total = math.factorial(M + N) // (
        math.factorial(m) * math.factorial(mx) * math.factorial(n) * math.factorial(nx)
    )
    dtype = np.int64 if total < 2**62 else object
    shape = (m * n + 1, M * N + 1)

    layer = {(0, 0, 0, 0): np.zeros(shape, dtype=dtype)}
    layer[(0, 0, 0, 0)][0, 0] = 1
    for _ in range(M + N):
        nxt: dict = {}

        def add(key, arr):
            if key in nxt:
                nxt[key] += arr
            else:
                nxt[key] = arr.copy()

        for (a1, a2, b1, b2), arr in layer.items():
            if a1 < m:
                add((a1 + 1, a2, b1, b2), arr)
            if a2 < mx:
                add((a1, a2 + 1, b1, b2), arr)
            below = a1 + a2
            if b1 < n:
                shifted = np.zeros(shape, dtype=dtype)
                shifted[a1:, below:] = arr[: shape[0] - a1, : shape[1] - below]
                add((a1, a2, b1 + 1, b2), shifted)
            if b2 < nx:
                shifted = np.zeros(shape, dtype=dtype)
                shifted[:, below:] = arr[:, : shape[1] - below]
                add((a1, a2, b1, b2 + 1), shifted)
        layer = nxt
    final = layer[(m, mx, n, nx)]
    counts = {
        (int(u1), int(u2)): int(final[u1, u2]) for u1, u2 in zip(*np.nonzero(final))
    }
    return JointPmf(design, counts, total)


@lru_cache(maxsize=256)
def _cached_pmf(design: SampleDesign) -> JointPmf:
    return exact_joint_pmf(design)


def pmf_moments(pmf: JointPmf, max_order: int = 4) -> MomentSet:
    """Direct expectations of U1**a U2**b over the support, exact."""
    if not 1 <= max_order <= 4:
        raise DomainError("max_order must be between 1 and 4")
    values = {}
    for a, b in ORDERS:
        if a + b > max_order:
            continue
        s = sum(c * u1**a * u2**b for (u1, u2), c in pmf.counts.items())
        values[(a, b)] = Fraction(s, pmf.total)
    return MomentSet(pmf.design, Mode.NullExact, values)


def point_mass_pmf(design: SampleDesign, u1: int, u2: int) -> JointPmf:
    return JointPmf(design, {(u1, u2): 1}, 1)


# ---------------------------------------------------------------------------
# cumulants by the classical recursion (independent of the closed forms)

def moments_to_cumulants(raw: dict, max_order: int = 4) -> dict:
    """Bivariate cumulants from raw moments via

        mu_{r,s} = sum over (i,j) <= (r,s), (i,j) != (0,0) with a fixed unit
                   removed, of binomial weights times kappa_{i,j} mu_{r-i,s-j}.

    The recursion removes one unit from the first nonzero index.
    """
    mu = dict(raw)
    mu[(0, 0)] = 1
    kappa: dict = {}
    orders = sorted(
        ((r, s) for r in range(max_order + 1) for s in range(max_order + 1) if 1 <= r + s <= max_order),
        key=lambda rs: (rs[0] + rs[1], rs),
    )
    for r, s in orders:
        if r > 0:
            # differentiate in t1: mu_{r,s} = sum C(r-1,i-1) C(s,j) kappa_{i,j} mu_{r-i,s-j}
            acc = 0
            for i in range(1, r + 1):
                for j in range(0, s + 1):
                    if (i, j) == (r, s):
                        continue
                    acc += math.comb(r - 1, i - 1) * math.comb(s, j) * kappa[(i, j)] * mu[(r - i, s - j)]
        else:
            acc = 0
            for j in range(1, s):
                acc += math.comb(s - 1, j - 1) * kappa[(0, j)] * mu[(0, s - j)]
        kappa[(r, s)] = mu[(r, s)] - acc
    return kappa


def pmf_cumulants(pmf: JointPmf):
    """Exact mixed cumulants up to order four, via the recursion above."""
    from .cumulants import CumulantSet  # local import keeps the module graph acyclic

    raw = pmf_moments(pmf, 4).values
    return CumulantSet(pmf.design, Mode.NullExact, moments_to_cumulants(raw, 4))


# ---------------------------------------------------------------------------
# pattern expansion: exact moments for any pi vector

def _shape_signature(edges: Iterable[tuple[int, int]]) -> tuple:
    edges = set(edges)
    xs = Counter(i for i, _ in edges)
    ys = Counter(j for _, j in edges)
    return (len(xs), len(ys), tuple(sorted(xs.values())), tuple(sorted(ys.values())), len(edges))


_SHAPES = {_shape_signature(edges): name for name, edges in PI_PATTERNS.items()}


def _components(edges: set) -> list[set]:
    parent: dict = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(("x", i))] = find(("y", j))
    groups: dict = defaultdict(set)
    for i, j in edges:
        groups[find(("x", i))].add((i, j))
    return list(groups.values())


def classify(edges: Iterable[tuple[int, int]]) -> tuple[str, ...]:
    """Factor a product of indicators into pi names, one per connected piece."""
    out = []
    for comp in _components(set(edges)):
        sig = _shape_signature(comp)
        if sig not in _SHAPES:
            raise DomainError(f"indicator product {sorted(comp)} has no pi pattern")
        out.append(_SHAPES[sig])
    return tuple(sorted(out))


def _set_partitions(items: Sequence):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def _placements(blocks, restricted, small: int, big: int, distinct) -> int:
    """Ways to give each block its own index, restricted blocks within 1..small."""
    for u, v in distinct:
        for b in blocks:
            if u in b and v in b:
                return 0
    r = sum(1 for b in blocks if any(v in restricted for v in b))
    return _falling(small, r) * _falling(big - r, len(blocks) - r)


def expand_slots(
    design: SampleDesign,
    slots: Sequence[tuple[str, str]],
    stage1_x: frozenset = frozenset(),
    stage1_y: frozenset = frozenset(),
    distinct_x: Sequence[tuple[str, str]] = (),
    distinct_y: Sequence[tuple[str, str]] = (),
) -> Counter:
    """Expected value of a sum of products of indicators, as pi-monomial counts.

    ``slots`` lists (control variable, treated variable) per indicator; each
    variable runs over the pooled sample unless it is in ``stage1_x`` /
    ``stage1_y``.  Returns Counter mapping a sorted tuple of pi names to the
    number of index assignments producing that product.
    """
    xvars = sorted({x for x, _ in slots})
    yvars = sorted({y for _, y in slots})
    out: Counter = Counter()
    for px in _set_partitions(xvars):
        cx = _placements(px, stage1_x, design.m, design.M, distinct_x)
        if not cx:
            continue
        xblock = {v: k for k, b in enumerate(px) for v in b}
        for py in _set_partitions(yvars):
            cy = _placements(py, stage1_y, design.n, design.N, distinct_y)
            if not cy:
                continue
            yblock = {v: k for k, b in enumerate(py) for v in b}
            edges = {(xblock[x], yblock[y]) for x, y in slots}
            out[classify(edges)] += cx * cy
    return out


def moment_expansion(design: SampleDesign, a: int, b: int) -> Counter:
    """E(U1**a U2**b) as pi-monomial counts."""
    slots = [(f"x{k}", f"y{k}") for k in range(a + b)]
    s1x = frozenset(f"x{k}" for k in range(a))
    s1y = frozenset(f"y{k}" for k in range(a))
    return expand_slots(design, slots, s1x, s1y)


def evaluate_expansion(expansion: Counter, pi: PiVector):
    total = 0
    for names, count in expansion.items():
        term = count
        for name in names:
            term = term * pi[name]
        total = total + term
    return total


def pattern_moment(design: SampleDesign, a: int, b: int, pi: PiVector):
    return evaluate_expansion(moment_expansion(design, a, b), pi)


def pattern_moments(design: SampleDesign, pi: PiVector) -> MomentSet:
    values = {(a, b): pattern_moment(design, a, b, pi) for a, b in ORDERS}
    return MomentSet(design, Mode.General, values)


def pattern_h_expectation(design: SampleDesign, pi: PiVector):
    """E(sum over i != k, j of I_ij I_kj U2**2) by expansion."""
    slots = [("xi", "yj"), ("xk", "yj"), ("x1", "y1"), ("x2", "y2")]
    exp = expand_slots(design, slots, distinct_x=[("xi", "xk")])
    return evaluate_expansion(exp, pi)


def pattern_k_expectation(design: SampleDesign, pi: PiVector):
    """E(sum over i, j != l of I_ij I_il U2**2) by expansion."""
    slots = [("xi", "yj"), ("xi", "yl"), ("x1", "y1"), ("x2", "y2")]
    exp = expand_slots(design, slots, distinct_y=[("yj", "yl")])
    return evaluate_expansion(exp, pi)


# ---------------------------------------------------------------------------
# discrete alternatives

def _weights_of(support, weights):
    if weights is None:
        return [Fraction(1, len(support))] * len(support)
    w = [Fraction(v) for v in weights]
    if len(w) != len(support) or sum(w) != 1 or any(v < 0 for v in w):
        raise DomainError("weights must be nonnegative, match the support, and sum to 1")
    return w


def _check_disjoint(xs, ys):
    if set(xs) & set(ys):
        raise TieError("control and treated supports overlap, so ties have positive probability")


def discrete_pi_vector(x_support, y_support, x_weights=None, y_weights=None) -> PiVector:
    """Exact pi's when X and Y take finitely many values (supports disjoint)."""
    _check_disjoint(x_support, y_support)
    wx = _weights_of(x_support, x_weights)
    wy = _weights_of(y_support, y_weights)
    out = {}
    for name, edges in PI_PATTERNS.items():
        kx = 1 + max(i for i, _ in edges)
        ky = 1 + max(j for _, j in edges)
        total = Fraction(0)
        for xi in product(range(len(x_support)), repeat=kx):
            px = math.prod(wx[i] for i in xi)
            for yj in product(range(len(y_support)), repeat=ky):
                if all(x_support[xi[i]] < y_support[yj[j]] for i, j in edges):
                    total += px * math.prod(wy[j] for j in yj)
        out[name] = total
    return PiVector.from_mapping(out)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def _multinomial_prob(counts, weights) -> Fraction:
    coef = math.factorial(sum(counts))
    for c in counts:
        coef //= math.factorial(c)
    return coef * math.prod((w**c for w, c in zip(weights, counts)), start=Fraction(1))


def discrete_joint_pmf(design: SampleDesign, x_support, y_support, x_weights=None, y_weights=None) -> dict:
    """Exact pmf of (U1, U2) for finitely supported X and Y, as {(u1,u2): Fraction}.

    Only the value counts within each of the four groups matter, so the sum
    runs over four multinomial count vectors.
    """
    _check_disjoint(x_support, y_support)
    wx = _weights_of(x_support, x_weights)
    wy = _weights_of(y_support, y_weights)
    m, n, M, N = design.as_tuple()
    less = [[int(xv < yv) for yv in y_support] for xv in x_support]

    def groups(size, weights):
        return [(c, _multinomial_prob(c, weights)) for c in _compositions(size, len(weights))]

    gx1, gx2 = groups(m, wx), groups(M - m, wx)
    gy1, gy2 = groups(n, wy), groups(N - n, wy)
    out: dict = defaultdict(Fraction)
    for cx1, p1 in gx1:
        for cx2, p2 in gx2:
            cxt = [a + b for a, b in zip(cx1, cx2)]
            # controls below each support point of Y
            below1 = [sum(cx1[i] * less[i][j] for i in range(len(cx1))) for j in range(len(wy))]
            below = [sum(cxt[i] * less[i][j] for i in range(len(cxt))) for j in range(len(wy))]
            for cy1, p3 in gy1:
                u1 = sum(c * b for c, b in zip(cy1, below1))
                base = sum(c * b for c, b in zip(cy1, below))
                for cy2, p4 in gy2:
                    u2 = base + sum(c * b for c, b in zip(cy2, below))
                    out[(u1, u2)] += p1 * p2 * p3 * p4
    return dict(out)


def discrete_moments(design: SampleDesign, x_support, y_support, x_weights=None, y_weights=None) -> MomentSet:
    pmf = discrete_joint_pmf(design, x_support, y_support, x_weights, y_weights)
    values = {
        (a, b): sum(p * u1**a * u2**b for (u1, u2), p in pmf.items()) for a, b in ORDERS
    }
    return MomentSet(design, Mode.General, values)


# ---------------------------------------------------------------------------
# simulation

@dataclass(frozen=True)
class MomentEstimates:
    design: SampleDesign
    values: dict
    standard_errors: dict
    replications: int
    seed: int
    histogram: Optional[dict] = None

    def named(self) -> dict:
        return {moment_key(a, b): v for (a, b), v in self.values.items()}


def simulate_joint(
    design: SampleDesign,
    sampler_x: Sampler,
    sampler_y: Sampler,
    replications: int,
    seed: int,
    threads: Optional[int] = None,
) -> MomentEstimates:
    """Monte Carlo raw moments of (U1, U2).

    Each chunk returns an integer histogram of (u1, u2), so the reduction is
    exact and the result does not depend on the worker count.
    """
    if replications < 1:
        raise DomainError("replications must be >= 1")
    m, n, M, N = design.as_tuple()
    width = M * N + 1

    def work(index, size):
        rng = chunk_rng(seed, index)
        x = np.asarray(sampler_x(rng, (size, M)), dtype=float)
        y = np.asarray(sampler_y(rng, (size, N)), dtype=float)
        if np.any(x[:, :, None] == y[:, None, :]):
            raise TieError("sampler produced a tie between a control and a treated value")
        below = x[:, :, None] < y[:, None, :]
        u2 = below.sum(axis=(1, 2))
        u1 = below[:, :m, :n].sum(axis=(1, 2))
        return np.bincount(u1 * width + u2, minlength=(m * n + 1) * width)

    hist = sum(run_chunks(work, chunk_plan(replications), threads))
    counts = {
        (int(k // width), int(k % width)): int(c) for k, c in enumerate(hist) if c
    }
    r = replications
    values, ses = {}, {}
    for a, b in ORDERS:
        s1 = sum(c * u1**a * u2**b for (u1, u2), c in counts.items())
        s2 = sum(c * (u1**a * u2**b) ** 2 for (u1, u2), c in counts.items())
        mean = Fraction(s1, r)
        var = (Fraction(s2, r) - mean**2) * Fraction(r, r - 1) if r > 1 else Fraction(0)
        values[(a, b)] = float(mean)
        ses[(a, b)] = math.sqrt(float(var) / r)
    return MomentEstimates(design, values, ses, r, seed, counts)


# ---------------------------------------------------------------------------
# validation

class ValidationMode(enum.Enum):
    NullExact = "NullExact"
    GeneralReduction = "GeneralReduction"
    GeneralMonteCarlo = "GeneralMonteCarlo"
    GeneralSymbolic = "GeneralSymbolic"


class Verdict(enum.Enum):
    Exact = "Exact"
    WithinTolerance = "WithinTolerance"
    Mismatch = "Mismatch"


# the evaluator each moment entry is produced by, for tracing a mismatch
NULL_TRACE = {
    (1, 0): "null_mean(m, n)", (0, 1): "null_mean(M, N)",
    (2, 0): "null_second(m, n)", (1, 1): "null_u1u2", (0, 2): "null_second(M, N)",
    (3, 0): "null_third(m, n)", (2, 1): "null_u1sq_u2", (1, 2): "null_u1_u2sq",
    (0, 3): "null_third(M, N)", (4, 0): "null_fourth(m, n)", (3, 1): "null_u1cube_u2",
    (2, 2): "null_u1sq_u2sq", (1, 3): "null_u1_u2cube", (0, 4): "null_fourth(M, N)",
}
GENERAL_TRACE = {
    (1, 0): "general_u1_mean", (0, 1): "general_u2_mean",
    (2, 0): "second_single(m, n)", (1, 1): "general_u1u2", (0, 2): "second_single(M, N)",
    (3, 0): "third_single(m, n)", (2, 1): "general_u1sq_u2", (1, 2): "general_u1_u2sq",
    (0, 3): "third_single(M, N)", (4, 0): "fourth_single(m, n)", (3, 1): "general_u1cube_u2",
    (2, 2): "general_u1sq_u2sq", (1, 3): "general_u1_u2cube", (0, 4): "fourth_single(M, N)",
}


@dataclass(frozen=True)
class ValidationRecord:
    formula: str
    evaluator: str
    design: SampleDesign
    engine_value: object
    oracle_value: object
    deviation: float
    verdict: Verdict
    standard_error: Optional[float] = None


@dataclass
class ValidationReport:
    mode: ValidationMode
    tolerance: float
    records: list = field(default_factory=list)

    @property
    def mismatches(self) -> list:
        return [r for r in self.records if r.verdict is Verdict.Mismatch]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> Counter:
        return Counter(r.verdict.value for r in self.records)


def _exact_record(formula, evaluator, design, engine, oracle, tolerance) -> ValidationRecord:
    dev = abs(Fraction(engine) - Fraction(oracle))
    if dev == 0:
        verdict = Verdict.Exact
    elif dev <= tolerance:
        verdict = Verdict.WithinTolerance
    else:
        verdict = Verdict.Mismatch
    return ValidationRecord(formula, evaluator, design, engine, oracle, float(dev), verdict)


def design_grid(max_total: int, min_total: int = 2) -> list[SampleDesign]:
    """Every design with 1 <= m <= M, 1 <= n <= N and M + N <= max_total."""
    out = []
    for M in range(1, max_total):
        for N in range(1, max_total - M + 1):
            if M + N < min_total:
                continue
            for m in range(1, M + 1):
                for n in range(1, N + 1):
                    out.append(SampleDesign(m, n, M, N))
    return out


def _random_rational_pi(rng: np.random.Generator) -> PiVector:
    return PiVector(*(Fraction(int(rng.integers(1, 97)), 97) for _ in PI_NAMES))


def _pi_gradient_se(design: SampleDesign, pi: PiVector, cov: np.ndarray, order, h: float = 1e-6) -> float:
    """Delta-method standard error of a general moment from the pi covariance."""
    from .moments import GENERAL_EVALUATORS

    f = GENERAL_EVALUATORS[order]
    base = list(pi)
    grad = np.zeros(len(base))
    for k in range(len(base)):
        up, down = list(base), list(base)
        up[k] += h
        down[k] -= h
        grad[k] = (float(f(design, PiVector(*up))) - float(f(design, PiVector(*down)))) / (2 * h)
    return math.sqrt(max(float(grad @ cov @ grad), 0.0))


def validate_formulas(
    designs: Sequence[SampleDesign],
    mode: ValidationMode = ValidationMode.NullExact,
    tolerance: float = 0.0,
    *,
    sampler_x: Optional[Sampler] = None,
    sampler_y: Optional[Sampler] = None,
    pi_replications: int = 10_000_000,
    sim_replications: int = 1_000_000,
    seed: int = 20240601,
    threads: Optional[int] = None,
    budget: Optional[int] = None,
) -> ValidationReport:
    """Compare the closed forms with an oracle on every design.

    NullExact checks the null polynomials and the general evaluators at the
    null pi's against the exact pmf.  GeneralReduction checks the general
    evaluators at the null pi's against the null polynomials.
    GeneralSymbolic checks the general evaluators at random rational pi's
    against the pattern expansion.  GeneralMonteCarlo checks the general
    evaluators at estimated pi's against simulation, with ``tolerance`` in
    combined standard errors.
    """
    report = ValidationReport(mode, tolerance)
    null_pi = null_pi_vector()
    if mode in (ValidationMode.NullExact, ValidationMode.GeneralReduction):
        for d in designs:
            check_budget(d, budget)

    if mode is ValidationMode.NullExact:
        for d in designs:
            oracle = pmf_moments(exact_joint_pmf(d, budget) if budget else _cached_pmf(d))
            closed = moments_null(d)
            general = moments_general(d, null_pi)
            for order in ORDERS:
                key = moment_key(*order)
                report.records.append(
                    _exact_record(key, NULL_TRACE[order], d, closed[order], oracle[order], tolerance))
                report.records.append(
                    _exact_record(key, GENERAL_TRACE[order], d, general[order], oracle[order], tolerance))
    elif mode is ValidationMode.GeneralReduction:
        for d in designs:
            closed = moments_null(d)
            general = moments_general(d, null_pi)
            for order in ORDERS:
                report.records.append(_exact_record(
                    moment_key(*order), GENERAL_TRACE[order], d, general[order], closed[order], tolerance))
    elif mode is ValidationMode.GeneralSymbolic:
        rng = np.random.default_rng(seed)
        for d in designs:
            pi = _random_rational_pi(rng)
            general = moments_general(d, pi)
            for order in ORDERS:
                report.records.append(_exact_record(
                    moment_key(*order), GENERAL_TRACE[order], d, general[order],
                    pattern_moment(d, *order, pi), tolerance))
    elif mode is ValidationMode.GeneralMonteCarlo:
        sx = sampler_x or uniform(0.0, 1.0)
        sy = sampler_y or uniform(0.3, 1.3)
        est = pi_monte_carlo(sx, sy, pi_replications, seed, threads)
        for d in designs:
            sim = simulate_joint(d, sx, sy, sim_replications, seed + 1, threads)
            general = moments_general(d, est.value)
            for order in ORDERS:
                se = math.hypot(sim.standard_errors[order],
                                _pi_gradient_se(d, est.value, est.covariance, order))
                dev = abs(float(general[order]) - sim.values[order])
                ok = dev <= tolerance * se if se > 0 else dev == 0
                report.records.append(ValidationRecord(
                    moment_key(*order), GENERAL_TRACE[order], d, float(general[order]),
                    sim.values[order], dev, Verdict.WithinTolerance if ok else Verdict.Mismatch, se))
    else:  # pragma: no cover
        raise DomainError(f"unknown validation mode {mode!r}")
    return report
