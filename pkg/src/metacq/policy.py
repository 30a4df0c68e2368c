"""Difficulty adaptation policies.

Three methods decide the difficulty of the next question:

* ``all-in-all``   - from the learner's whole performance history
* ``one-after-one``- from the immediately preceding question only
* ``static``       - no adaptation, always the 0.5 default

All policies are pure functions. Partial credit feeds adaptation through
``mark_ratio`` (marks earned over the 2 attainable), so a hint-assisted
correct answer nudges difficulty up less than a clean one.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum

from .core import DEFAULT_DIFFICULTY, MAX_HINTS_PER_QUESTION, Difficulty, PolicyKind, clamp_difficulty

STEP_RANGE = (0.1, 0.3)
SPREAD_RANGE = (0.1, 0.5)


@dataclass(frozen=True)
class PerformanceRecord:
    """Outcome of one answered question, as seen by the policies."""

    question_index: int
    presented_difficulty: float
    mark_ratio: float  # marks earned / 2, always a multiple of 0.25
    hints_used: int = 0

    def __post_init__(self) -> None:
        if self.question_index < 0:
            raise ValueError("question_index must be >= 0")
        if not 0.0 <= self.mark_ratio <= 1.0:
            raise ValueError("mark_ratio must be in [0, 1]")
        if abs(self.mark_ratio * 4 - round(self.mark_ratio * 4)) > 1e-9:
            raise ValueError("mark_ratio must be a multiple of 0.25")
        if not 0 <= self.hints_used <= MAX_HINTS_PER_QUESTION:
            raise ValueError("hints_used out of range")


@dataclass(frozen=True)
class PolicyParams:
    """Tunable policy knobs, bounded to their allowed bands."""

    step: float = 0.1
    spread: float = 0.3

    def __post_init__(self) -> None:
        lo, hi = STEP_RANGE
        if not lo <= self.step <= hi:
            raise ValueError(f"step must be in [{lo}, {hi}]")
        lo, hi = SPREAD_RANGE
        if not lo <= self.spread <= hi:
            raise ValueError(f"spread must be in [{lo}, {hi}]")


def static_difficulty() -> Difficulty:
    """No extra settings: every question arrives at the default 0.5."""
    return Difficulty(DEFAULT_DIFFICULTY)


def one_after_one(prev: PerformanceRecord, params: PolicyParams) -> Difficulty:
    """Shift the previous difficulty by step, scaled by how well it went.

    Full marks move up by a whole step, zero marks down by a whole step,
    partial credit interpolates linearly.
    """
    delta = params.step * (2.0 * prev.mark_ratio - 1.0)
    return clamp_difficulty(prev.presented_difficulty + delta)


def all_in_all(history: list[PerformanceRecord], params: PolicyParams) -> Difficulty:
    """Re-centre around 0.5 using the mean mark ratio of all history."""
    if not history:
        return Difficulty(DEFAULT_DIFFICULTY)
    # fsum: the mean must not depend on the order records are summed in
    mean_ratio = fsum(r.mark_ratio for r in history) / len(history)
    return clamp_difficulty(DEFAULT_DIFFICULTY + params.spread * (2.0 * mean_ratio - 1.0))


def next_difficulty(
    kind: PolicyKind,
    history: list[PerformanceRecord],
    params: PolicyParams | None = None,
) -> Difficulty:
    """Dispatch to the policy for ``kind``; empty history always yields 0.5."""
    params = params or PolicyParams()
    if kind is PolicyKind.STATIC:
        return static_difficulty()
    if kind is PolicyKind.ONE_AFTER_ONE:
        if not history:
            return Difficulty(DEFAULT_DIFFICULTY)
        return one_after_one(history[-1], params)
    if kind is PolicyKind.ALL_IN_ALL:
        return all_in_all(history, params)
    raise ValueError(f"unknown policy kind {kind!r}")
