"""Signed, canonical session transcripts.

A transcript is the only artifact that can update the open learner model.
Learners hold these files locally, so the format is tamper-evident:
canonical JSON (sorted keys, no insignificant whitespace, UTF-8) carrying
an HMAC-SHA256 digest keyed by a server secret. Verification is pure: it
re-checks the digest and replays the event log through the session scoring
rules, accepting the file only if the stored final block is reproduced.
"""

from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass

from .core import (
    HINT_PENALTY,
    MARKS_PER_QUESTION,
    MAX_HINTS_PER_QUESTION,
    QUESTIONS_PER_SESSION,
    Marks,
    MasteryLevel,
    PolicyKind,
    ZERO_MARKS,
    attainable_marks,
    mastery_from_score,
)
from .errors import (
    DigestMismatch,
    MalformedDocument,
    ReplayMismatch,
    SessionIncomplete,
    VersionUnsupported,
)
from .policy import PerformanceRecord
from .session import SessionState, SessionStatus, SlotState

TRANSCRIPT_VERSION = 1
FILE_SUFFIX = ".metacq.json"

_TOP_FIELDS = {
    "version",
    "session_id",
    "learner_id",
    "chapter_id",
    "policy",
    "started_at",
    "finalized_at",
    "events",
    "final",
    "digest",
}


@dataclass(frozen=True)
class TranscriptSummary:
    """What the learner model needs from a verified transcript."""

    session_id: str
    learner_id: str
    chapter_id: str
    total_marks: Marks
    mastery: MasteryLevel
    finalized_at: str


def _canonical_bytes(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _key_bytes(key: bytes | str) -> bytes:
    return key.encode("utf-8") if isinstance(key, str) else key


def compute_digest(doc_without_digest: dict, key: bytes | str) -> str:
    return hmac.new(_key_bytes(key), _canonical_bytes(doc_without_digest), hashlib.sha256).hexdigest()


def events_from_session(session: SessionState) -> list[dict]:
    """Flatten session slots into the ordered wire event list."""
    events: list[dict] = []
    for slot in session.slots:
        events.append(
            {
                "type": "question_presented",
                "index": slot.index,
                "mcq_id": slot.mcq.id,
                "difficulty": slot.presented_difficulty,
            }
        )
        for tier in range(1, slot.hints_used + 1):
            events.append(
                {
                    "type": "hint_requested",
                    "index": slot.index,
                    "tier": tier,
                    "attainable_after": attainable_marks(tier).value,
                }
            )
        if slot.state is SlotState.ANSWERED:
            events.append(
                {
                    "type": "answer_submitted",
                    "index": slot.index,
                    "selected": slot.selected_option,
                    "correct": slot.correct,
                    "marks": slot.marks_earned.value,
                }
            )
    return events


def serialize(session: SessionState, key: bytes | str) -> bytes:
    """Render a finalized session as signed canonical JSON bytes."""
    if session.status is not SessionStatus.FINALIZED:
        raise SessionIncomplete("only finalized sessions can be serialized")
    result = session.finalize()  # cached result
    doc = {
        "version": TRANSCRIPT_VERSION,
        "session_id": session.session_id,
        "learner_id": session.learner_id,
        "chapter_id": session.chapter_id,
        "policy": session.policy.value,
        "started_at": session.started_at,
        "finalized_at": session.finalized_at,
        "events": events_from_session(session),
        "final": {
            "total_marks": result.total_marks.value,
            "mastery": result.mastery.label,
        },
    }
    doc["digest"] = compute_digest(doc, key)
    return _canonical_bytes(doc)


def parse_and_verify(data: bytes, key: bytes | str) -> TranscriptSummary:
    """Authenticate and replay a transcript file.

    Check order matters: the digest is verified before anything else is
    trusted, so any byte-level tampering surfaces as DigestMismatch (or
    MalformedDocument if the file no longer parses at all).
    """
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be a JSON object")
    # the file must be byte-for-byte canonical: otherwise two different
    # byte strings could parse to the same document and share a digest
    if _canonical_bytes(doc) != data:
        raise MalformedDocument("document is not in canonical form")
    digest = doc.get("digest")
    if not isinstance(digest, str):
        raise MalformedDocument("missing digest")

    unsigned = {k: v for k, v in doc.items() if k != "digest"}
    if not hmac.compare_digest(compute_digest(unsigned, key), digest):
        raise DigestMismatch("digest does not verify under this key")

    if doc.get("version") != TRANSCRIPT_VERSION:
        raise VersionUnsupported(f"unsupported transcript version {doc.get('version')!r}")
    if set(doc) != _TOP_FIELDS:
        raise MalformedDocument(f"unexpected field set {sorted(doc)}")
    for name in ("session_id", "learner_id", "chapter_id", "started_at", "finalized_at"):
        if not isinstance(doc[name], str) or not doc[name]:
            raise MalformedDocument(f"{name} must be a non-empty string")
    try:
        PolicyKind(doc["policy"])
    except ValueError as exc:
        raise MalformedDocument(f"unknown policy {doc['policy']!r}") from exc
    final = doc["final"]
    if not (
        isinstance(final, dict)
        and set(final) == {"total_marks", "mastery"}
        and isinstance(final["total_marks"], (int, float))
        and isinstance(final["mastery"], str)
    ):
        raise MalformedDocument("final block must carry total_marks and mastery")
    if not isinstance(doc["events"], list):
        raise MalformedDocument("events must be a list")

    total, mastery = _replay(doc["events"])
    if total.value != float(final["total_marks"]) or mastery.label != final["mastery"]:
        raise ReplayMismatch(
            f"final block says {final['total_marks']}/{final['mastery']}, "
            f"replay gives {total.value}/{mastery.label}"
        )
    return TranscriptSummary(
        session_id=doc["session_id"],
        learner_id=doc["learner_id"],
        chapter_id=doc["chapter_id"],
        total_marks=total,
        mastery=mastery,
        finalized_at=doc["finalized_at"],
    )


def session_records(data: bytes, key: bytes | str) -> list[PerformanceRecord]:
    """Per-question performance records from a verified transcript.

    Used to rebuild a learner's cross-session policy history; the file is
    fully verified first, so the extraction can trust the event layout.
    """
    parse_and_verify(data, key)
    doc = json.loads(data.decode("utf-8"))
    records = []
    difficulty = hints = None
    for event in doc["events"]:
        if event["type"] == "question_presented":
            difficulty, hints = float(event["difficulty"]), 0
        elif event["type"] == "hint_requested":
            hints += 1
        else:
            records.append(
                PerformanceRecord(
                    question_index=event["index"],
                    presented_difficulty=difficulty,
                    mark_ratio=float(event["marks"]) / MARKS_PER_QUESTION,
                    hints_used=hints,
                )
            )
    return records


def _replay(events: list) -> tuple[Marks, MasteryLevel]:
    """Re-run the event log under the session scoring rules.

    Enforces the session invariants: five questions, hint tiers 1..3 in
    order with the right penalty, marks consistent with hints taken and
    correctness, no repeated question ids.
    """
    slots: list[Marks] = []
    seen_mcq_ids: set[str] = set()
    i = 0
    for index in range(QUESTIONS_PER_SESSION):
        presented = _event_at(events, i, "question_presented")
        i += 1
        if presented.get("index") != index:
            raise ReplayMismatch(f"question event out of order at position {i - 1}")
        mcq_id = presented.get("mcq_id")
        if not isinstance(mcq_id, str) or not mcq_id:
            raise MalformedDocument("question_presented missing mcq_id")
        if mcq_id in seen_mcq_ids:
            raise ReplayMismatch(f"question {mcq_id!r} appears twice")
        seen_mcq_ids.add(mcq_id)
        difficulty = presented.get("difficulty")
        if not isinstance(difficulty, (int, float)) or not 0.0 <= float(difficulty) <= 1.0:
            raise ReplayMismatch(f"difficulty {difficulty!r} outside [0, 1]")

        hints = 0
        while i < len(events) and _type_of(events, i) == "hint_requested":
            hint = events[i]
            i += 1
            hints += 1
            if hints > MAX_HINTS_PER_QUESTION:
                raise ReplayMismatch(f"more than {MAX_HINTS_PER_QUESTION} hints on question {index}")
            if hint.get("index") != index or hint.get("tier") != hints:
                raise ReplayMismatch(f"hint tier sequence broken on question {index}")
            expected_attainable = MARKS_PER_QUESTION - HINT_PENALTY * hints
            if hint.get("attainable_after") != expected_attainable:
                raise ReplayMismatch(f"hint penalty inconsistent on question {index}")

        answer = _event_at(events, i, "answer_submitted")
        i += 1
        if answer.get("index") != index:
            raise ReplayMismatch(f"answer event out of order on question {index}")
        selected = answer.get("selected")
        if not isinstance(selected, int) or isinstance(selected, bool) or not 0 <= selected <= 2:
            raise ReplayMismatch(f"selected option {selected!r} invalid")
        correct = answer.get("correct")
        if not isinstance(correct, bool):
            raise MalformedDocument("answer_submitted.correct must be a boolean")
        try:
            marks = Marks.of(answer.get("marks"))
        except (TypeError, ValueError) as exc:
            raise ReplayMismatch(f"marks {answer.get('marks')!r} not on the half-mark grid") from exc
        expected = attainable_marks(hints) if correct else ZERO_MARKS
        if marks != expected:
            raise ReplayMismatch(
                f"question {index} marks {marks.value} inconsistent with "
                f"correct={correct}, hints={hints}"
            )
        slots.append(marks)

    if i != len(events):
        raise ReplayMismatch(f"{len(events) - i} trailing events after question {QUESTIONS_PER_SESSION}")

    total = ZERO_MARKS
    for marks in slots:
        total = total + marks
    return total, mastery_from_score(total)


def _type_of(events: list, i: int) -> str:
    event = events[i]
    if not isinstance(event, dict) or not isinstance(event.get("type"), str):
        raise MalformedDocument(f"event at position {i} is not a typed object")
    return event["type"]


def _event_at(events: list, i: int, expected_type: str) -> dict:
    if i >= len(events):
        raise ReplayMismatch(f"event log ends early, expected {expected_type}")
    if _type_of(events, i) != expected_type:
        raise ReplayMismatch(f"expected {expected_type} at position {i}, got {events[i]['type']!r}")
    return events[i]
