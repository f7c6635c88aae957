"""Constant-QP baseline search against a target encoded size.

Encoded size is monotone non-increasing in QP, so a bracketed binary
search plus neighbor probes finds the closest size in at most
ceil(log2(52)) + 3 encode calls. The baseline may overshoot the target
freely but must never come in more than (1 - min_ratio) below it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

__all__ = [
    "MatchConstraint",
    "MatchResult",
    "InfeasibleTargetError",
    "match_constant_qp",
]

log = logging.getLogger(__name__)


class InfeasibleTargetError(RuntimeError):
    """No QP in range satisfies the minimum-size constraint."""

    def __init__(self, message: str, probes: list[tuple[int, int]]):
        super().__init__(message)
        self.probes = probes


@dataclass(frozen=True)
class MatchConstraint:
    min_ratio: float = 0.95
    qp_min: int = 0
    qp_max: int = 51

    def __post_init__(self):
        if not 0.0 < self.min_ratio <= 1.0:
            raise ValueError(f"min_ratio must lie in (0, 1], got {self.min_ratio}")
        if not 0 <= self.qp_min <= self.qp_max <= 51:
            raise ValueError(f"bad qp range [{self.qp_min}, {self.qp_max}]")


@dataclass(frozen=True)
class MatchResult:
    qp: int
    size: int
    ratio: float
    probes: list[tuple[int, int]] = field(default_factory=list)


def _pick(
    candidates: list[tuple[int, int]], target_size: int, min_size: float
) -> tuple[int, int] | None:
    """Feasible candidate minimizing |size - target|; ties favor the
    larger size, then the smaller QP."""
    best = None
    for qp, size in sorted(candidates):
        if size < min_size:
            continue
        diff = abs(size - target_size)
        if best is None or diff < best[0] or (diff == best[0] and size > best[1][1]):
            best = (diff, (qp, size))
    return None if best is None else best[1]


def match_constant_qp(
    target_size: int,
    encode_fn: Callable[[int], int],
    constraint: MatchConstraint = MatchConstraint(),
) -> MatchResult:
    """Search for the constant QP whose encode best matches target_size.

    encode_fn maps QP to encoded byte size and is assumed monotone
    non-increasing; if the probes contradict that, the search falls back
    to an exhaustive scan (with a logged warning) so the result is still
    correct. Raises InfeasibleTargetError (carrying the probe log) when
    even the largest encode is below min_ratio * target.
    """
    if target_size <= 0:
        raise ValueError(f"target_size must be > 0, got {target_size}")
    c = constraint
    min_size = c.min_ratio * target_size

    probes: list[tuple[int, int]] = []
    cache: dict[int, int] = {}

    def probe(qp: int) -> int:
        if qp not in cache:
            cache[qp] = int(encode_fn(qp))
            probes.append((qp, cache[qp]))
        return cache[qp]

    # bisect for the smallest qp with size <= target
    lo, hi = c.qp_min, c.qp_max
    if probe(lo) <= target_size:
        crossing = lo
    elif probe(hi) > target_size:
        crossing = hi + 1  # every size is above target
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if probe(mid) <= target_size:
                hi = mid
            else:
                lo = mid
        crossing = hi

    for qp in (crossing - 1, crossing, crossing + 1):
        if c.qp_min <= qp <= c.qp_max:
            probe(qp)

    monotone = all(
        sa >= sb
        for (qa, sa), (qb, sb) in zip(sorted(cache.items()), sorted(cache.items())[1:])
    )
    if not monotone:
        log.warning(
            "encode size is not monotone in QP near the bracket; "
            "falling back to an exhaustive scan"
        )
        for qp in range(c.qp_min, c.qp_max + 1):
            probe(qp)

    chosen = _pick(list(cache.items()), target_size, min_size)
    if chosen is None:
        raise InfeasibleTargetError(
            f"no QP in [{c.qp_min}, {c.qp_max}] reaches {c.min_ratio:.0%} of "
            f"target {target_size} (largest probe: {max(cache.values())})",
            probes,
        )
    qp, size = chosen
    return MatchResult(qp=qp, size=size, ratio=size / target_size, probes=probes)
