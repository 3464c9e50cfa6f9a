"""Normal quantiles, Cornish-Fisher expansion and two-stage critical values.

Error spending convention: stage 1 spends ``alpha1``; stage 2 spends the
remainder ``alpha_overall - P(U1 >= c1)``.  Critical values are integers:
reject when the statistic is at least the critical value, and ``mn + 1`` /
``MN + 1`` mean "never reject at this stage".
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .cumulants import Shape, Which, mixed_cumulants, standardized_shape
from .errors import DegenerateError, DomainError, InfeasibleAlpha
from .moments import moments_general, moments_null
from .oracle import JointPmf, exact_joint_pmf, simulate_joint
from .pi_model import PiVector, uniform
from .ustat import SampleDesign

# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x: float) -> float:
    out = 0.0
    for c in reversed(coefs):
        out = out * x + c
    return out


def normal_inverse_cdf(p: float) -> float:
    """Standard normal quantile by AS 241 (about 16 significant digits)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = math.sqrt(-math.log(p if q < 0 else 1.0 - p))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _cf_w(z: float, g1: float, g2: float) -> float:
    return z + (z * z - 1) * g1 / 6 + (z**3 - 3 * z) * g2 / 24 - (2 * z**3 - 5 * z) * g1 * g1 / 36


def cornish_fisher_quantile(shape, p: float) -> float:
    """Quantile from (mean, variance, skewness, excess kurtosis), to the kappa-4 term."""
    mean, var, g1, g2 = shape
    if not var > 0:
        raise DegenerateError("Cornish-Fisher needs a positive variance")
    z = normal_inverse_cdf(p)
    return mean + _cf_w(z, g1, g2) * math.sqrt(var)


def _monotone_bracket(g1: float, g2: float, limit: float = 12.0) -> tuple[float, float]:
    """Interval around z = 0 on which the expansion is increasing.

    The derivative of the expansion is the quadratic
    (g2/8 - g1**2/6) z**2 + (g1/3) z + (1 - g2/8 + 5 g1**2/36); the bracket
    stops at its roots nearest zero.
    """
    a = g2 / 8 - g1 * g1 / 6
    b = g1 / 3
    c = 1 - g2 / 8 + 5 * g1 * g1 / 36
    lo, hi = -limit, limit
    if c <= 0:
        return lo, hi
    if a == 0:
        roots = [] if b == 0 else [-c / b]
    else:
        disc = b * b - 4 * a * c
        roots = [] if disc < 0 else [(-b - math.sqrt(disc)) / (2 * a), (-b + math.sqrt(disc)) / (2 * a)]
    for r in roots:
        if r < 0:
            lo = max(lo, r)
        else:
            hi = min(hi, r)
    return lo, hi


def cornish_fisher_tail(shape, x: float) -> float:
    """Approximate P(T > x) by inverting the expansion on its increasing branch.

    Beyond the ends of that branch the tail is clamped to the normal tail at
    the end point.
    """
    mean, var, g1, g2 = shape
    if not var > 0:
        raise DegenerateError("Cornish-Fisher needs a positive variance")
    target = (x - mean) / math.sqrt(var)
    lo, hi = _monotone_bracket(g1, g2)
    if _cf_w(lo, g1, g2) >= target:
        return normal_sf(lo)
    if _cf_w(hi, g1, g2) <= target:
        return normal_sf(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _cf_w(mid, g1, g2) < target:
            lo = mid
        else:
            hi = mid
    return normal_sf(0.5 * (lo + hi))


class Method(enum.Enum):
    ExactEnumeration = "ExactEnumeration"
    CornishFisher = "CornishFisher"
    MonteCarlo = "MonteCarlo"


@dataclass(frozen=True)
class CriticalValuePair:
    c1: int
    c2: int
    alpha1_nominal: float
    alpha_overall_nominal: float
    achieved_size: Optional[object] = None
    method: Method = Method.ExactEnumeration
    alpha1_spent: Optional[object] = None

    def __post_init__(self):
        if self.c1 < 1 or self.c2 < 1:
            raise DomainError("critical values are positive integers")


def _check_alphas(alpha1: float, alpha_overall: float) -> None:
    if not 0 < alpha1 < alpha_overall < 1:
        raise DomainError(f"need 0 < alpha1 < alpha_overall < 1, got {alpha1}, {alpha_overall}")


def _exact(x) -> Fraction:
    # decimal reading of a float: 0.05 means 1/20, not the nearest binary double
    return x if isinstance(x, Fraction) else Fraction(repr(float(x)))


def _calibrate(counts: dict, total: int, d: SampleDesign, alpha1, alpha_overall):
    """Smallest c1, then smallest c2, meeting the spending constraints on a tally."""
    a1, a = _exact(alpha1), _exact(alpha_overall)
    mn, MN = d.m * d.n, d.M * d.N
    u1_tail = [0] * (mn + 2)
    for (u1, _), cnt in counts.items():
        u1_tail[u1] += cnt
    for k in range(mn - 1, -1, -1):
        u1_tail[k] += u1_tail[k + 1]
    c1 = next(c for c in range(1, mn + 2) if Fraction(u1_tail[c], total) <= a1)
    spent = Fraction(u1_tail[c1], total)
    remaining = a - spent
    if remaining < 0:  # cannot happen: spent <= alpha1 < alpha_overall
        raise InfeasibleAlpha("stage 1 already exceeds the overall level")
    joint_tail = [0] * (MN + 2)
    for (u1, u2), cnt in counts.items():
        if u1 < c1:
            joint_tail[u2] += cnt
    for k in range(MN - 1, -1, -1):
        joint_tail[k] += joint_tail[k + 1]
    c2 = next(c for c in range(1, MN + 2) if Fraction(joint_tail[c], total) <= remaining)
    return c1, c2, spent, spent + Fraction(joint_tail[c2], total)


def critical_values_exact(
    design: SampleDesign, alpha1: float, alpha_overall: float, pmf: Optional[JointPmf] = None
) -> CriticalValuePair:
    """Exact calibration from the null joint pmf; achieved size is a Fraction."""
    _check_alphas(alpha1, alpha_overall)
    pmf = pmf or exact_joint_pmf(design)
    c1, c2, spent, size = _calibrate(pmf.counts, pmf.total, design, alpha1, alpha_overall)
    return CriticalValuePair(c1, c2, alpha1, alpha_overall, size, Method.ExactEnumeration, spent)


def critical_values_monte_carlo(
    design: SampleDesign,
    alpha1: float,
    alpha_overall: float,
    replications: int,
    seed: int,
    threads: Optional[int] = None,
) -> CriticalValuePair:
    """Calibrate on a simulated null tally, for designs beyond the enumeration budget."""
    _check_alphas(alpha1, alpha_overall)
    est = simulate_joint(design, uniform(), uniform(), replications, seed, threads)
    c1, c2, spent, size = _calibrate(est.histogram, replications, design, alpha1, alpha_overall)
    return CriticalValuePair(c1, c2, alpha1, alpha_overall, float(size), Method.MonteCarlo, float(spent))


def _clip(c: int, top: int) -> int:
    return min(max(c, 1), top)


def critical_values_cf(
    design: SampleDesign,
    alpha1: float,
    alpha_overall: float,
    pi: Optional[PiVector] = None,
    *,
    continuity: bool = False,
    stage2_source: Which = Which.Stage2,
) -> CriticalValuePair:
    """Cornish-Fisher calibration from the closed-form cumulants.

    Stage 2 uses the marginal shape of U2 by default.  ``stage2_source`` can
    select one of the order-wise aggregates instead; those describe a
    different statistic, so the option is for comparison only.  With
    ``continuity`` the quantiles are shifted by half a unit.
    """
    _check_alphas(alpha1, alpha_overall)
    moments = moments_null(design) if pi is None else moments_general(design, pi)
    cum = mixed_cumulants(moments)
    shape1 = standardized_shape(cum, Which.Stage1)
    shape2 = standardized_shape(cum, stage2_source)
    half = 0.5 if continuity else 0.0
    mn, MN = design.m * design.n, design.M * design.N

    c1 = _clip(math.ceil(cornish_fisher_quantile(shape1, 1 - alpha1) + half), mn + 1)
    spent = cornish_fisher_tail(shape1, c1 - half)
    remaining = alpha_overall - spent
    if remaining <= 0:
        c2 = MN + 1
    else:
        c2 = _clip(math.ceil(cornish_fisher_quantile(shape2, 1 - min(remaining, 1 - 1e-16)) + half), MN + 1)
    return CriticalValuePair(c1, c2, alpha1, alpha_overall, None, Method.CornishFisher, spent)


@dataclass(frozen=True)
class SizeEstimate:
    value: Union[Fraction, float]
    standard_error: float
    method: str


def overall_size(
    design: SampleDesign,
    c: CriticalValuePair,
    method: str = "exact",
    replications: int = 1_000_000,
    seed: int = 0,
    threads: Optional[int] = None,
) -> SizeEstimate:
    """Null probability of rejecting at either stage for the given pair."""
    reject = lambda u1, u2: u1 >= c.c1 or u2 >= c.c2  # noqa: E731
    if method.lower() == "exact":
        pmf = exact_joint_pmf(design)
        return SizeEstimate(pmf.tail(reject), 0.0, "exact")
    if method.lower() in ("montecarlo", "monte-carlo", "mc"):
        est = simulate_joint(design, uniform(), uniform(), replications, seed, threads)
        hits = sum(cnt for (u1, u2), cnt in est.histogram.items() if reject(u1, u2))
        p = hits / replications
        return SizeEstimate(p, math.sqrt(p * (1 - p) / replications), "montecarlo")
    raise DomainError(f"unknown size method {method!r}")
