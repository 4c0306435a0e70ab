"""Log-uniform block cut points for block-wise prequential coding."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ScheduleError

ROUNDING_RULE = (
    "cuts = floor(t1 * r**k + 0.5), r = (N/t1)**(1/(S-1)); duplicates bumped up by 1, "
    "then clamped below N; last cut forced to N"
)


@dataclass(frozen=True)
class BlockSchedule:
    cuts: tuple[int, ...]
    fallback: bool = field(default=False, compare=False)

    def __post_init__(self):
        c = self.cuts
        if len(c) < 2 or c[0] != 0 or any(b <= a for a, b in zip(c, c[1:])):
            raise ScheduleError(f"cuts must start at 0 and strictly increase, got {c}")

    @property
    def num_blocks(self) -> int:
        return len(self.cuts) - 1

    @property
    def n(self) -> int:
        return self.cuts[-1]

    def blocks(self):
        """Yield ``(index, start, end)`` for each block."""
        for s in range(self.num_blocks):
            yield s, self.cuts[s], self.cuts[s + 1]

    def sizes(self) -> list[int]:
        return [b - a for a, b in zip(self.cuts, self.cuts[1:])]


def make_schedule(n: int, num_blocks: int = 9, first_block: int = 64) -> BlockSchedule:
    """Cut ``n`` examples into ``num_blocks`` blocks whose ends grow geometrically.

    For ``first_block < n < 2 * first_block`` this falls back to two halves and
    emits a warning.
    """
    S, t1 = int(num_blocks), int(first_block)
    if S < 2:
        raise ScheduleError(f"need at least 2 blocks, got S={S}")
    if t1 < 1:
        raise ScheduleError(f"first block size must be >= 1, got t1={t1}")
    if n < S:
        raise ScheduleError(f"cannot split N={n} examples into S={S} non-empty blocks")
    if n <= t1:
        raise ScheduleError(
            f"dataset size N={n} must exceed the first block size t1={t1}; reduce S or t1"
        )
    if n < 2 * t1:
        warnings.warn(
            f"N={n} < 2*t1={2 * t1}: falling back to S=2 with cuts [0, {math.ceil(n / 2)}, {n}]",
            stacklevel=2,
        )
        return BlockSchedule((0, math.ceil(n / 2), n), fallback=True)

    r = (n / t1) ** (1.0 / (S - 1))
    cuts = [0] + [math.floor(t1 * r**k + 0.5) for k in range(S - 1)] + [n]
    for i in range(1, len(cuts)):
        cuts[i] = max(cuts[i], cuts[i - 1] + 1)
    cuts[-1] = n
    for i in range(len(cuts) - 2, 0, -1):
        cuts[i] = min(cuts[i], cuts[i + 1] - 1)
    return BlockSchedule(tuple(cuts))
