"""Mann-Whitney counts and the two-stage decision rule."""

from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

from .errors import DomainError, TieError


@dataclass(frozen=True)
class SampleDesign:
    """Stage-1 sizes ``(m, n)`` and total sizes ``(M, N)`` of a two-stage trial."""

    m: int
    n: int
    M: int
    N: int

    def __post_init__(self):
        for name in ("m", "n", "M", "N"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise DomainError(f"{name} must be an integer, got {value!r}")
        if not (1 <= self.m <= self.M and 1 <= self.n <= self.N):
            raise DomainError(
                f"need 1 <= m <= M and 1 <= n <= N, got {self.as_tuple()}"
            )

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.m, self.n, self.M, self.N)

    def mirrored(self) -> "SampleDesign":
        """Swap the roles of controls and treated."""
        return SampleDesign(self.n, self.m, self.N, self.M)

    @property
    def single_stage(self) -> bool:
        return self.m == self.M and self.n == self.N


@dataclass(frozen=True)
class TwoStageData:
    x_stage1: tuple[float, ...]
    y_stage1: tuple[float, ...]
    x_stage2: tuple[float, ...] = ()
    y_stage2: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("x_stage1", "y_stage1", "x_stage2", "y_stage2"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def design(self) -> SampleDesign:
        m, n = len(self.x_stage1), len(self.y_stage1)
        return SampleDesign(m, n, m + len(self.x_stage2), n + len(self.y_stage2))

    def check(self, design: SampleDesign) -> None:
        if self.design != design:
            raise DomainError(
                f"data sizes {self.design.as_tuple()} do not match design {design.as_tuple()}"
            )


class CriticalValues(Protocol):
    c1: int
    c2: int


class Outcome(enum.Enum):
    RejectAtStage1 = "RejectAtStage1"
    RejectAtStage2 = "RejectAtStage2"
    FailToReject = "FailToReject"


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    u1: int
    u2: Optional[int] = None

    def __post_init__(self):
        if (self.outcome is Outcome.RejectAtStage1) != (self.u2 is None):
            raise DomainError("u2 must be absent exactly when stopping at stage 1")


def mann_whitney_u(xs: Sequence[float], ys: Sequence[float]) -> int:
    """Count pairs ``(i, j)`` with ``xs[i] < ys[j]``.

    Raises TieError if any x equals any y.  Runs in O((m + n) log m).
    """
    sx = sorted(xs)
    total = 0
    for y in ys:
        below = bisect_left(sx, y)
        if below < len(sx) and sx[below] == y:
            raise TieError(f"tie between a control and a treated value at {y!r}")
        total += below
    return total


def two_stage_statistics(data: TwoStageData) -> tuple[int, int]:
    """Return ``(u1, u2)``: stage-1 count and pooled count."""
    u1 = mann_whitney_u(data.x_stage1, data.y_stage1)
    xs = data.x_stage1 + data.x_stage2
    ys = data.y_stage1 + data.y_stage2
    return u1, mann_whitney_u(xs, ys)


def two_stage_decision(
    u1: int, u2_supplier: Callable[[], int], c: CriticalValues
) -> Decision:
    """Apply the early-stopping rule.

    ``u2_supplier`` is only called when stage 1 does not reject, so stage-2
    data need not exist when ``u1 >= c.c1``.
    """
    if u1 >= c.c1:
        return Decision(Outcome.RejectAtStage1, u1)
    u2 = u2_supplier()
    if u2 >= c.c2:
        return Decision(Outcome.RejectAtStage2, u1, u2)
    return Decision(Outcome.FailToReject, u1, u2)


