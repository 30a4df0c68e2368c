"""The five-question practice session state machine.

Lifecycle per session: repeat (next_question -> zero or more hints ->
submit_answer) five times, then finalize. Hints cost half a mark each and
are capped at three per question; wrong answers earn nothing regardless of
hints. Any operation whose precondition fails raises and leaves the
session untouched.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from . import errors
from .core import (
    MAX_HINTS_PER_QUESTION,
    QUESTIONS_PER_SESSION,
    Chapter,
    Marks,
    MasteryLevel,
    Mcq,
    PolicyKind,
    ZERO_MARKS,
    attainable_marks,
    mastery_from_score,
)
from .policy import PerformanceRecord, PolicyParams, next_difficulty
from .provider import QuestionSource


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class SlotState(Enum):
    PRESENTED = "presented"
    ANSWERED = "answered"


class SessionStatus(Enum):
    ACTIVE = "active"
    FINALIZED = "finalized"
    EXPIRED = "expired"


OPTION_LETTERS = ("A", "B", "C")


@dataclass
class QuestionSlot:
    index: int
    mcq: Mcq
    presented_difficulty: float
    hints_used: int = 0
    state: SlotState = SlotState.PRESENTED
    selected_option: int | None = None
    marks_earned: Marks = ZERO_MARKS

    @property
    def correct(self) -> bool:
        return self.selected_option == self.mcq.correct_index

    def as_record(self) -> PerformanceRecord:
        return PerformanceRecord(
            question_index=self.index,
            presented_difficulty=self.presented_difficulty,
            mark_ratio=self.marks_earned.value / 2.0,
            hints_used=self.hints_used,
        )


@dataclass(frozen=True)
class SessionResult:
    session_id: str
    total_marks: Marks
    mastery: MasteryLevel
    per_question: tuple[tuple[int, Marks, int, bool], ...]  # (index, marks, hints, correct)
    max_marks: float = 10.0


@dataclass
class SessionState:
    session_id: str
    learner_id: str
    chapter_id: str
    policy: PolicyKind
    params: PolicyParams = field(default_factory=PolicyParams)
    history_snapshot: tuple[PerformanceRecord, ...] = ()
    slots: list[QuestionSlot] = field(default_factory=list)
    status: SessionStatus = SessionStatus.ACTIVE
    started_at: str = field(default_factory=_now_iso)
    finalized_at: str | None = None
    last_activity: str = field(default_factory=_now_iso)
    _result: SessionResult | None = None

    # -- views -----------------------------------------------------------

    @property
    def open_slot(self) -> QuestionSlot | None:
        if self.slots and self.slots[-1].state is SlotState.PRESENTED:
            return self.slots[-1]
        return None

    def answered_records(self) -> list[PerformanceRecord]:
        return [s.as_record() for s in self.slots if s.state is SlotState.ANSWERED]

    def policy_history(self) -> list[PerformanceRecord]:
        """Prior-session snapshot plus everything answered so far."""
        return list(self.history_snapshot) + self.answered_records()

    def used_question_ids(self) -> set[str]:
        return {s.mcq.id for s in self.slots}

    def running_total(self) -> Marks:
        total = ZERO_MARKS
        for slot in self.slots:
            total = total + slot.marks_earned
        return total

    # -- state machine ------------------------------------------------------

    def _require_active(self) -> None:
        if self.status is SessionStatus.FINALIZED:
            raise errors.SessionFinalized(f"session {self.session_id} is finalized")
        if self.status is SessionStatus.EXPIRED:
            raise errors.SessionExpired(f"session {self.session_id} has expired")

    def touch(self) -> None:
        self.last_activity = _now_iso()

    def next_question(self, provider: QuestionSource) -> QuestionSlot:
        """Issue the next question at the policy's target difficulty."""
        self._require_active()
        if self.open_slot is not None:
            raise errors.QuestionPending("answer the current question first")
        if len(self.slots) >= QUESTIONS_PER_SESSION:
            raise errors.SessionComplete(f"all {QUESTIONS_PER_SESSION} questions already issued")
        target = next_difficulty(self.policy, self.policy_history(), self.params)
        mcq = provider.pick(self.chapter_id, target, self.used_question_ids())
        slot = QuestionSlot(index=len(self.slots), mcq=mcq, presented_difficulty=float(target))
        self.slots.append(slot)
        self.touch()
        return slot

    def request_hint(self) -> tuple[str, Marks, int]:
        """Reveal the next hint tier at a cost of half a mark.

        Returns (hint text, marks still attainable, hints remaining).
        """
        self._require_active()
        slot = self.open_slot
        if slot is None:
            raise errors.NoActiveQuestion("no question is awaiting an answer")
        if slot.hints_used >= MAX_HINTS_PER_QUESTION:
            raise errors.HintsExhausted(f"all {MAX_HINTS_PER_QUESTION} hints already taken")
        slot.hints_used += 1
        self.touch()
        hint = slot.mcq.hints[slot.hints_used - 1]
        return hint, attainable_marks(slot.hints_used), MAX_HINTS_PER_QUESTION - slot.hints_used

    def submit_answer(self, option_index: int) -> tuple[bool, Marks, str]:
        """Grade the open question. Wrong answers always earn zero."""
        self._require_active()
        slot = self.open_slot
        if slot is None:
            raise errors.NoActiveQuestion("no question is awaiting an answer")
        if not isinstance(option_index, int) or isinstance(option_index, bool) or not (
            0 <= option_index < len(slot.mcq.options)
        ):
            raise errors.InvalidOption(f"option index must be one of 0..{len(slot.mcq.options) - 1}")
        slot.selected_option = option_index
        correct = option_index == slot.mcq.correct_index
        slot.marks_earned = attainable_marks(slot.hints_used) if correct else ZERO_MARKS
        slot.state = SlotState.ANSWERED
        self.touch()
        return correct, slot.marks_earned, self._feedback(slot, correct)

    def finalize(self) -> SessionResult:
        """Close the session and compute its result. Idempotent."""
        if self.status is SessionStatus.FINALIZED:
            assert self._result is not None
            return self._result
        self._require_active()
        answered = [s for s in self.slots if s.state is SlotState.ANSWERED]
        if len(answered) != QUESTIONS_PER_SESSION or self.open_slot is not None:
            raise errors.SessionIncomplete(
                f"{len(answered)}/{QUESTIONS_PER_SESSION} questions answered"
            )
        self.status = SessionStatus.FINALIZED
        self.finalized_at = _now_iso()
        self._result = SessionResult(
            session_id=self.session_id,
            total_marks=self.running_total(),
            mastery=mastery_from_score(self.running_total()),
            per_question=tuple(
                (s.index, s.marks_earned, s.hints_used, s.correct) for s in self.slots
            ),
        )
        return self._result

    def expire(self) -> None:
        """Mark an idle session Expired; it can never reach the learner model."""
        self._require_active()
        self.status = SessionStatus.EXPIRED

    @staticmethod
    def _feedback(slot: QuestionSlot, correct: bool) -> str:
        letter = OPTION_LETTERS[slot.mcq.correct_index]
        answer = slot.mcq.options[slot.mcq.correct_index]
        if correct:
            return (
                f"Correct. {letter}) {answer!s} is the right answer. "
                f"You earned {slot.marks_earned} of 2 marks."
            )
        return (
            f"Incorrect. The right answer was {letter}) {answer!s}. "
            f"{slot.mcq.hints[-1]} You earned 0 marks."
        )


def start_session(
    learner_id: str,
    chapter: Chapter,
    history: list[PerformanceRecord] | tuple[PerformanceRecord, ...] = (),
    params: PolicyParams | None = None,
    olm_store=None,
) -> SessionState:
    """Open a fresh session for a learner on a chapter.

    When an OLM store is supplied, sequential gating is enforced here:
    a locked chapter refuses to start.
    """
    if olm_store is not None:
        model = olm_store.get_model(learner_id)  # raises UnknownLearner
        if not olm_store.is_chapter_unlocked(model, chapter.id):
            raise errors.ChapterLocked(f"chapter {chapter.id!r} is locked by sequential gating")
    return SessionState(
        session_id=uuid.uuid4().hex,
        learner_id=learner_id,
        chapter_id=chapter.id,
        policy=chapter.policy,
        params=params or PolicyParams(),
        history_snapshot=tuple(history),
    )
