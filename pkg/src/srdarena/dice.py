"""Dice substrate: roll specifications, d20 tests, ability modifiers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .rng import RngStream

ALLOWED_SIDES = (4, 6, 8, 10, 12, 20)


class Advantage(Enum):
    NORMAL = "normal"
    ADVANTAGE = "advantage"
    DISADVANTAGE = "disadvantage"


def combine_advantage(advantage: bool, disadvantage: bool) -> Advantage:
    """Any mix of both cancels to normal, regardless of source counts."""
    if advantage and not disadvantage:
        return Advantage.ADVANTAGE
    if disadvantage and not advantage:
        return Advantage.DISADVANTAGE
    return Advantage.NORMAL


@dataclass(frozen=True)
class RollSpec:
    """``count`` dice of ``sides`` faces plus a flat modifier."""

    count: int
    sides: int
    modifier: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"dice count must be >= 1, got {self.count}")
        if self.sides not in ALLOWED_SIDES:
            raise ValueError(f"die must have sides in {ALLOWED_SIDES}, got {self.sides}")

    @classmethod
    def parse(cls, text: str) -> "RollSpec":
        """Parse "2d6+1" / "1d8-2" / "1d10" notation."""
        body = text.strip().lower()
        mod = 0
        for sep in ("+", "-"):
            if sep in body[1:]:
                head, _, tail = body.partition(sep)
                body, mod = head, int(sep + tail)
                break
        count_s, _, sides_s = body.partition("d")
        return cls(int(count_s) if count_s else 1, int(sides_s), mod)

    def __str__(self) -> str:
        if self.modifier == 0:
            return f"{self.count}d{self.sides}"
        return f"{self.count}d{self.sides}{self.modifier:+d}"

    @property
    def minimum(self) -> int:
        return self.count + self.modifier

    @property
    def maximum(self) -> int:
        return self.count * self.sides + self.modifier

    @property
    def average(self) -> float:
        return self.count * (self.sides + 1) / 2 + self.modifier


@dataclass(frozen=True)
class D20Outcome:
    """Result of a d20 test before comparing against a target number."""

    natural: int
    total: int
    advantage_state: Advantage
    critical_hit: bool
    critical_miss: bool

    def __post_init__(self):
        assert not (self.critical_hit and self.critical_miss)


def ability_modifier(score: int) -> int:
    """SRD ability modifier: floor((score - 10) / 2)."""
    if not 1 <= score <= 30:
        raise ValueError(f"ability score out of range 1..30: {score}")
    return (score - 10) // 2


def roll(spec: RollSpec, rng: RngStream) -> int:
    """Roll ``spec``, consuming exactly ``spec.count`` draws."""
    total = spec.modifier
    for _ in range(spec.count):
        total += rng.randint(1, spec.sides)
    return total


def roll_d20(rng: RngStream, modifier: int = 0,
             advantage: Advantage = Advantage.NORMAL) -> D20Outcome:
    """d20 test with advantage handling.

    Consumes one draw, or two under advantage/disadvantage.
    """
    first = rng.randint(1, 20)
    if advantage is Advantage.NORMAL:
        natural = first
    else:
        second = rng.randint(1, 20)
        if advantage is Advantage.ADVANTAGE:
            natural = max(first, second)
        else:
            natural = min(first, second)
    return D20Outcome(
        natural=natural,
        total=natural + modifier,
        advantage_state=advantage,
        critical_hit=natural == 20,
        critical_miss=natural == 1,
    )
