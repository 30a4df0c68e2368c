"""Shared value types for the tutoring engine.

Everything in this module is an immutable value: difficulties, marks,
mastery levels, chapters and questions. All other modules build on these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum

DEFAULT_DIFFICULTY = 0.5

QUESTIONS_PER_SESSION = 5
MARKS_PER_QUESTION = 2.0
MAX_SESSION_MARKS = 10.0
MAX_HINTS_PER_QUESTION = 3
HINT_PENALTY = 0.5  # marks forfeited per hint taken


class Difficulty(float):
    """A difficulty value on the closed unit interval.

    Construction rejects anything outside [0, 1]; default is 0.5.
    Behaves as a plain float in arithmetic (results decay to float).
    """

    def __new__(cls, value: float = DEFAULT_DIFFICULTY) -> "Difficulty":
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"difficulty must be finite, got {value!r}")
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"difficulty must be in [0, 1], got {v}")
        return super().__new__(cls, v)


def clamp_difficulty(x: float) -> Difficulty:
    """Clamp a finite real into the difficulty range [0, 1]."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot clamp non-finite value {x!r}")
    return Difficulty(min(1.0, max(0.0, x)))


@dataclass(frozen=True, order=True)
class Marks:
    """Marks in exact half-mark units.

    Stored as an integer count of half-marks so totals never suffer float
    drift and "is a multiple of 0.5" is true by construction.
    """

    half_marks: int

    def __post_init__(self) -> None:
        if not isinstance(self.half_marks, int):
            raise TypeError("half_marks must be an int")
        if self.half_marks < 0:
            raise ValueError("marks cannot be negative")

    @classmethod
    def of(cls, value: float) -> "Marks":
        """Build from a real value; rejects anything off the 0.5 grid."""
        doubled = float(value) * 2.0
        if not math.isfinite(doubled):
            raise ValueError(f"marks must be finite, got {value!r}")
        nearest = round(doubled)
        if abs(doubled - nearest) > 1e-9:
            raise ValueError(f"{value!r} is not a multiple of 0.5")
        return cls(int(nearest))

    @property
    def value(self) -> float:
        return self.half_marks / 2.0

    def __add__(self, other: "Marks") -> "Marks":
        return Marks(self.half_marks + other.half_marks)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return f"{self.value:g}"


ZERO_MARKS = Marks(0)
FULL_QUESTION_MARKS = Marks.of(MARKS_PER_QUESTION)


class MasteryLevel(IntEnum):
    """Ordered knowledge mastery ranks, lowest first."""

    NOT_QUALIFIED = 0
    QUALIFIED = 1
    PROFICIENT = 2
    MASTERED = 3

    @property
    def label(self) -> str:
        return _MASTERY_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "MasteryLevel":
        for level, name in _MASTERY_LABELS.items():
            if name == label:
                return level
        raise ValueError(f"unknown mastery label {label!r}")


_MASTERY_LABELS = {
    MasteryLevel.NOT_QUALIFIED: "NotQualified",
    MasteryLevel.QUALIFIED: "Qualified",
    MasteryLevel.PROFICIENT: "Proficient",
    MasteryLevel.MASTERED: "Mastered",
}

# Session-total thresholds (in marks out of 10) for each rank above the floor.
MASTERY_THRESHOLDS = (
    (MasteryLevel.MASTERED, 9.0),
    (MasteryLevel.PROFICIENT, 7.0),
    (MasteryLevel.QUALIFIED, 5.0),
)


def mastery_from_score(total: Marks | float) -> MasteryLevel:
    """Map a session total (0..10 in half-marks) onto a mastery rank.

    [0,5) NotQualified, [5,7) Qualified, [7,9) Proficient, [9,10] Mastered.
    """
    marks = total if isinstance(total, Marks) else Marks.of(total)
    if marks.value > MAX_SESSION_MARKS:
        raise ValueError(f"session total {marks.value} exceeds {MAX_SESSION_MARKS}")
    for level, threshold in MASTERY_THRESHOLDS:
        if marks.value >= threshold:
            return level
    return MasteryLevel.NOT_QUALIFIED


class PolicyKind(str, Enum):
    """The three difficulty-adaptation methods."""

    ONE_AFTER_ONE = "one-after-one"
    STATIC = "static"
    ALL_IN_ALL = "all-in-all"


@dataclass(frozen=True)
class Chapter:
    """One chapter of the e-textbook, with its allocated adaptation policy."""

    id: str
    title: str
    ordinal: int  # contiguous, starting at 1
    policy: PolicyKind
    content_ref: str = ""

    def __post_init__(self) -> None:
        if self.ordinal < 1:
            raise ValueError("chapter ordinal must be >= 1")


@dataclass(frozen=True)
class Mcq:
    """A single multiple-choice question.

    Deliberately permissive at construction time: structural rules
    (3 options, 3 hints, no all/none-of-the-above option, ...) are checked
    by ``provider.validate_mcq`` so that violations can be *reported*
    rather than silently made unrepresentable. Everything handed to a
    session has passed validation at bank-load or generation time.
    """

    id: str
    chapter_id: str
    stem: str
    options: tuple[str, ...]
    correct_index: int
    hints: tuple[str, ...]  # ordered least- to most-revealing
    difficulty: float = DEFAULT_DIFFICULTY

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(self, "hints", tuple(self.hints))


def attainable_marks(hints_used: int) -> Marks:
    """Marks still attainable on a question after ``hints_used`` hints."""
    if not 0 <= hints_used <= MAX_HINTS_PER_QUESTION:
        raise ValueError(f"hints_used must be in 0..{MAX_HINTS_PER_QUESTION}")
    return Marks.of(MARKS_PER_QUESTION - HINT_PENALTY * hints_used)
