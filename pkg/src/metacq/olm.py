"""The Open Learner Model store.

Per-learner, per-chapter mastery with full attempt history. Mastery can
only change through ``apply_transcript`` with a verified transcript
summary; there is deliberately no other write path. State is event-sourced
to an append-only newline-delimited JSON log, and rebuilding from the log
reproduces the in-memory store exactly.

Attempts are ordered by the transcript's own finalize timestamp, so
applying any set of transcripts is idempotent and order-independent:
duplicates are no-ops and "current" is always the mastery of the latest
attempt, even if uploads arrive out of order.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .core import Chapter, Marks, MasteryLevel
from .errors import (
    DuplicateLearner,
    Forbidden,
    LearnerMismatch,
    NoPriorAttempt,
    UnknownChapter,
    UnknownLearner,
)
from .transcript import TranscriptSummary


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass(frozen=True)
class Attempt:
    session_id: str
    total_marks: Marks
    mastery: MasteryLevel
    timestamp: str  # the transcript's finalized_at


@dataclass
class ChapterProgress:
    attempts: list[Attempt] = field(default_factory=list)
    reevaluation_open: bool = False

    @property
    def current(self) -> MasteryLevel:
        """Latest-wins: the most recent attempt decides, even if lower."""
        if not self.attempts:
            return MasteryLevel.NOT_QUALIFIED
        return self.attempts[-1].mastery


@dataclass
class LearnerModel:
    learner_id: str
    chapters: dict[str, ChapterProgress] = field(default_factory=dict)


class OlmStore:
    """In-memory learner models backed by an append-only event log.

    Reads are unsynchronized snapshots; all writes funnel through one lock
    (single appender).
    """

    def __init__(
        self,
        chapters: list[Chapter],
        log_path: str | Path | None = None,
        gating_enabled: bool = True,
    ):
        self.chapters = {c.id: c for c in chapters}
        self._by_ordinal = {c.ordinal: c for c in chapters}
        self.gating_enabled = gating_enabled
        self.log_path = Path(log_path) if log_path else None
        self._models: dict[str, LearnerModel] = {}
        self._write_lock = threading.Lock()

    # -- loading --------------------------------------------------------------

    @classmethod
    def load(
        cls,
        chapters: list[Chapter],
        log_path: str | Path,
        gating_enabled: bool = True,
    ) -> "OlmStore":
        """Rebuild a store by replaying its event log."""
        store = cls(chapters, log_path, gating_enabled)
        path = Path(log_path)
        if not path.exists():
            return store
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    store._replay_event(json.loads(line))
        return store

    def _replay_event(self, event: dict) -> None:
        kind = event["type"]
        if kind == "init":
            self._do_init(event["learner_id"])
        elif kind == "attempt":
            self._do_attempt(
                event["learner_id"],
                event["chapter_id"],
                Attempt(
                    session_id=event["session_id"],
                    total_marks=Marks.of(event["total_marks"]),
                    mastery=MasteryLevel.from_label(event["mastery"]),
                    timestamp=event["timestamp"],
                ),
            )
        elif kind == "reevaluation":
            self._do_reevaluation(event["learner_id"], event["chapter_id"])
        else:
            raise ValueError(f"unknown event type {kind!r} in learner-model log")

    def _append(self, event: dict) -> None:
        if self.log_path is None:
            return
        line = json.dumps(event, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    # -- pure state mutators (shared by live ops and replay) -----------------

    def _do_init(self, learner_id: str) -> LearnerModel:
        model = LearnerModel(
            learner_id=learner_id,
            chapters={cid: ChapterProgress() for cid in self.chapters},
        )
        self._models[learner_id] = model
        return model

    def _do_attempt(self, learner_id: str, chapter_id: str, attempt: Attempt) -> None:
        progress = self._models[learner_id].chapters[chapter_id]
        progress.attempts.append(attempt)
        progress.attempts.sort(key=lambda a: (a.timestamp, a.session_id))
        progress.reevaluation_open = False

    def _do_reevaluation(self, learner_id: str, chapter_id: str) -> None:
        self._models[learner_id].chapters[chapter_id].reevaluation_open = True

    # -- operations -----------------------------------------------------------

    def get_model(self, learner_id: str) -> LearnerModel:
        try:
            return self._models[learner_id]
        except KeyError:
            raise UnknownLearner(f"no learner {learner_id!r}") from None

    def has_learner(self, learner_id: str) -> bool:
        return learner_id in self._models

    def init_learner(self, learner_id: str) -> LearnerModel:
        """Register a learner with every chapter at NotQualified."""
        with self._write_lock:
            if learner_id in self._models:
                raise DuplicateLearner(f"learner {learner_id!r} already initialised")
            model = self._do_init(learner_id)
            self._append({"type": "init", "learner_id": learner_id, "ts": _now_iso()})
            return model

    def ensure_learner(self, learner_id: str) -> LearnerModel:
        with self._write_lock:
            if learner_id in self._models:
                return self._models[learner_id]
            model = self._do_init(learner_id)
            self._append({"type": "init", "learner_id": learner_id, "ts": _now_iso()})
            return model

    def apply_transcript(
        self, summary: TranscriptSummary, expected_learner_id: str | None = None
    ) -> LearnerModel:
        """Record a verified attempt. Re-applying the same session is a no-op."""
        if expected_learner_id is not None and summary.learner_id != expected_learner_id:
            raise LearnerMismatch(
                f"transcript belongs to {summary.learner_id!r}, not {expected_learner_id!r}"
            )
        if summary.chapter_id not in self.chapters:
            raise UnknownChapter(f"no chapter {summary.chapter_id!r}")
        with self._write_lock:
            model = self.get_model(summary.learner_id)
            progress = model.chapters[summary.chapter_id]
            if any(a.session_id == summary.session_id for a in progress.attempts):
                return model
            attempt = Attempt(
                session_id=summary.session_id,
                total_marks=summary.total_marks,
                mastery=summary.mastery,
                timestamp=summary.finalized_at,
            )
            self._do_attempt(summary.learner_id, summary.chapter_id, attempt)
            self._append(
                {
                    "type": "attempt",
                    "learner_id": summary.learner_id,
                    "chapter_id": summary.chapter_id,
                    "session_id": attempt.session_id,
                    "total_marks": attempt.total_marks.value,
                    "mastery": attempt.mastery.label,
                    "timestamp": attempt.timestamp,
                }
            )
            return model

    def request_reevaluation(self, learner_id: str, chapter_id: str) -> LearnerModel:
        """Authorize a redo of an already-attempted chapter."""
        if chapter_id not in self.chapters:
            raise UnknownChapter(f"no chapter {chapter_id!r}")
        with self._write_lock:
            model = self.get_model(learner_id)
            progress = model.chapters[chapter_id]
            if not progress.attempts:
                raise NoPriorAttempt(f"chapter {chapter_id!r} was never attempted")
            self._do_reevaluation(learner_id, chapter_id)
            self._append(
                {
                    "type": "reevaluation",
                    "learner_id": learner_id,
                    "chapter_id": chapter_id,
                    "ts": _now_iso(),
                }
            )
            return model

    def is_chapter_unlocked(self, model: LearnerModel, chapter_id: str) -> bool:
        """Sequential gating: a chapter opens once its predecessor is passed."""
        chapter = self.chapters.get(chapter_id)
        if chapter is None:
            raise UnknownChapter(f"no chapter {chapter_id!r}")
        if not self.gating_enabled or chapter.ordinal == 1:
            return True
        if model.chapters[chapter_id].reevaluation_open:
            return True
        previous = self._by_ordinal.get(chapter.ordinal - 1)
        if previous is None:
            return True
        return model.chapters[previous.id].current >= MasteryLevel.QUALIFIED

    def direct_set_mastery(self, *args, **kwargs):
        """Mastery is never writable directly; transcripts are the only path."""
        raise Forbidden("learner models cannot be edited directly")

    # -- introspection ----------------------------------------------------------

    def snapshot(self) -> dict:
        """Plain-data dump of the whole store, for comparisons and views."""
        return {
            learner_id: {
                chapter_id: {
                    "current": progress.current.label,
                    "reevaluation_open": progress.reevaluation_open,
                    "attempts": [
                        {
                            "session_id": a.session_id,
                            "total_marks": a.total_marks.value,
                            "mastery": a.mastery.label,
                            "timestamp": a.timestamp,
                        }
                        for a in progress.attempts
                    ],
                }
                for chapter_id, progress in model.chapters.items()
            }
            for learner_id, model in self._models.items()
        }
