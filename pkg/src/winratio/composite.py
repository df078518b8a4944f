"""Composite ordinal outcome: death ranks below any observed change.

Within deaths the order follows the chosen strategy.  With
``missing_as_ties`` a record missing for reasons other than death ties with
every other record.  That is a comparison rule rather than an ordering, so
samples containing such records are analysed by direct pairwise comparison
only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence


class DeathStrategy(str, Enum):
    ALL_DEATHS_EQUAL = "equal"
    DEATHS_BY_LAST_VALUE = "last-value"
    DEATHS_BY_SURVIVAL_TIME = "survival-time"


class Tier(int, Enum):
    DEATH = 0
    ALIVE = 1


@dataclass(frozen=True)
class SubjectRecord:
    change_at_T: Optional[float] = None
    died_before_T: bool = False
    death_time: Optional[float] = None
    last_change_alive: Optional[float] = None
    missing_not_death: bool = False
    subject_id: str = ""

    def __post_init__(self):
        who = self.subject_id or "<unnamed>"
        if self.died_before_T:
            if self.change_at_T is not None:
                raise ValueError(f"subject {who}: died before T but has a change at T")
            if self.missing_not_death:
                raise ValueError(f"subject {who}: a death cannot also be missing for other reasons")
        elif self.death_time is not None:
            raise ValueError(f"subject {who}: death_time given for a subject alive at T")
        if self.death_time is not None and not self.death_time >= 0:
            raise ValueError(f"subject {who}: death_time must be >= 0")
        if self.missing_not_death and self.change_at_T is not None:
            raise ValueError(f"subject {who}: flagged missing but has a change at T")


@dataclass(frozen=True, eq=False)
class CompositeValue:
    """One subject's composite outcome.

    Any death compares below any alive value; ``key`` orders values within a
    tier (higher is better).  A ``tie_with_all`` value compares equal to
    everything.
    """

    tier: Tier
    key: float = 0.0
    tie_with_all: bool = False

    def compare(self, other: "CompositeValue") -> int:
        if self.tie_with_all or other.tie_with_all:
            return 0
        a = (int(self.tier), self.key)
        b = (int(other.tier), other.key)
        return (a > b) - (a < b)

    def __eq__(self, other):
        if not isinstance(other, CompositeValue):
            return NotImplemented
        return self.compare(other) == 0

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    __hash__ = None


def _required(value, what: str, record: SubjectRecord) -> float:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        raise ValueError(f"subject {record.subject_id or '<unnamed>'}: {what} is required")
    return float(value)


def composite_value(record: SubjectRecord, strategy: DeathStrategy | str = DeathStrategy.ALL_DEATHS_EQUAL,
                    missing_as_ties: bool = False) -> CompositeValue:
    strategy = DeathStrategy(strategy)
    if record.died_before_T:
        if strategy is DeathStrategy.ALL_DEATHS_EQUAL:
            return CompositeValue(Tier.DEATH, 0.0)
        if strategy is DeathStrategy.DEATHS_BY_LAST_VALUE:
            return CompositeValue(Tier.DEATH, _required(record.last_change_alive, "last_change_alive", record))
        return CompositeValue(Tier.DEATH, _required(record.death_time, "death_time", record))
    if record.missing_not_death:
        if not missing_as_ties:
            raise ValueError(
                f"subject {record.subject_id or '<unnamed>'}: missing value needs imputation "
                "upstream or the missing-as-ties option"
            )
        return CompositeValue(Tier.ALIVE, 0.0, tie_with_all=True)
    return CompositeValue(Tier.ALIVE, _required(record.change_at_T, "change_at_T", record))


def build_composite(records: Iterable[SubjectRecord],
                    strategy: DeathStrategy | str = DeathStrategy.ALL_DEATHS_EQUAL,
                    missing_as_ties: bool = False) -> list[CompositeValue]:
    """Composite outcomes for ``records`` under a death strategy."""
    return [composite_value(r, strategy, missing_as_ties) for r in records]


def compare_all(values: Sequence[CompositeValue]) -> list[list[int]]:
    """Full pairwise comparison matrix (for inspection and tests)."""
    return [[a.compare(b) for b in values] for a in values]
