"""Question supply: validation rules, the deterministic bank, and selection.

The bank is the default, fully offline question source. Every question it
serves has passed ``validate_mcq``; the same gate guards LLM-generated
questions (see ``metacq.llm``), so sessions can assume structural validity.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .core import Mcq
from .errors import InvalidBank, NoCandidates

# Option texts must avoid these, in any casing / hyphenation / punctuation.
FORBIDDEN_PHRASES = ("none of the above", "all of the above")

_NORMALIZE_RE = re.compile(r"[^a-z0-9]+")

BANK_VERSION = 1

_BANK_TOP_FIELDS = {"version", "chapters"}
_BANK_CHAPTER_FIELDS = {"id", "questions"}
_BANK_QUESTION_FIELDS = {"id", "stem", "options", "correct_index", "hints", "difficulty"}


def _normalize(text: str) -> str:
    """Lowercase and collapse punctuation/whitespace to single spaces."""
    return _NORMALIZE_RE.sub(" ", text.lower()).strip()


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"{v.code}: {v.message}" for v in self.violations)


def validate_mcq(mcq: Mcq) -> ValidationReport:
    """Check one question against the MCQ design rules.

    All failures are collected and reported together, never just the first.
    """
    violations: list[Violation] = []

    if len(mcq.options) != 3:
        violations.append(Violation("OptionCount", f"expected 3 options, got {len(mcq.options)}"))
    if len(mcq.hints) != 3:
        violations.append(Violation("HintCount", f"expected 3 hints, got {len(mcq.hints)}"))
    if (
        not isinstance(mcq.correct_index, int)
        or isinstance(mcq.correct_index, bool)
        or not 0 <= mcq.correct_index < len(mcq.options)
    ):
        violations.append(
            Violation("BadCorrectIndex", f"correct_index {mcq.correct_index!r} not a valid option position")
        )

    if not mcq.stem.strip():
        violations.append(Violation("EmptyText", "stem is empty"))
    for i, option in enumerate(mcq.options):
        if not option.strip():
            violations.append(Violation("EmptyText", f"option {i} is empty"))
    for i, hint in enumerate(mcq.hints):
        if not hint.strip():
            violations.append(Violation("EmptyText", f"hint {i} is empty"))

    seen: dict[str, int] = {}
    for i, option in enumerate(mcq.options):
        key = _normalize(option)
        if key and key in seen:
            violations.append(
                Violation("DuplicateOption", f"options {seen[key]} and {i} are the same text")
            )
        else:
            seen[key] = i

    for i, option in enumerate(mcq.options):
        normalized = _normalize(option)
        for phrase in FORBIDDEN_PHRASES:
            if phrase in normalized:
                violations.append(
                    Violation("ForbiddenPhrase", f"option {i} contains forbidden phrase {phrase!r}")
                )

    try:
        difficulty = float(mcq.difficulty)
        ok = 0.0 <= difficulty <= 1.0
    except (TypeError, ValueError):
        ok = False
    if not ok:
        violations.append(Violation("DifficultyRange", f"difficulty {mcq.difficulty!r} not in [0, 1]"))

    return ValidationReport(tuple(violations))


class QuestionSource(Protocol):
    """Anything able to produce a valid Mcq near a target difficulty."""

    def pick(self, chapter_id: str, target: float, exclude: set[str]) -> Mcq: ...


@dataclass
class QuestionBank:
    """Immutable-after-load store of authored questions, keyed by chapter."""

    by_chapter: dict[str, tuple[Mcq, ...]] = field(default_factory=dict)

    def chapters(self) -> list[str]:
        return list(self.by_chapter)

    def questions(self, chapter_id: str) -> tuple[Mcq, ...]:
        return self.by_chapter.get(chapter_id, ())

    def all_questions(self) -> Iterable[Mcq]:
        for questions in self.by_chapter.values():
            yield from questions

    def pick(self, chapter_id: str, target: float, exclude: set[str]) -> Mcq:
        return select_question(self, chapter_id, target, exclude)


def select_question(
    bank: QuestionBank, chapter_id: str, target: float, exclude: set[str] | None = None
) -> Mcq:
    """Pick the chapter's question closest to ``target`` difficulty.

    Fully deterministic: distance, then lower difficulty, then smallest id.
    """
    exclude = exclude or set()
    candidates = [q for q in bank.questions(chapter_id) if q.id not in exclude]
    if not candidates:
        raise NoCandidates(f"no selectable question in chapter {chapter_id!r}")
    return min(candidates, key=lambda q: (abs(q.difficulty - target), q.difficulty, q.id))


def load_bank(path: str | Path) -> QuestionBank:
    """Load and fully validate a bank file.

    A file with any invalid question is rejected outright; the error message
    lists every violation found across the whole file.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidBank(f"not valid JSON: {exc}") from exc
    return parse_bank(doc)


def parse_bank(doc: object) -> QuestionBank:
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise InvalidBank("bank document must be a JSON object")
    unknown = set(doc) - _BANK_TOP_FIELDS
    if unknown:
        problems.append(f"unknown top-level fields: {sorted(unknown)}")
    if doc.get("version") != BANK_VERSION:
        problems.append(f"unsupported bank version {doc.get('version')!r}")

    by_chapter: dict[str, tuple[Mcq, ...]] = {}
    seen_ids: set[str] = set()
    for chapter in doc.get("chapters", []):
        if not isinstance(chapter, dict):
            problems.append("chapter entry is not an object")
            continue
        unknown = set(chapter) - _BANK_CHAPTER_FIELDS
        if unknown:
            problems.append(f"chapter has unknown fields: {sorted(unknown)}")
        chapter_id = chapter.get("id")
        if not isinstance(chapter_id, str) or not chapter_id:
            problems.append("chapter missing string id")
            continue
        questions: list[Mcq] = []
        for entry in chapter.get("questions", []):
            mcq, entry_problems = _parse_question(entry, chapter_id)
            problems.extend(entry_problems)
            if mcq is None:
                continue
            if mcq.id in seen_ids:
                problems.append(f"duplicate question id {mcq.id!r}")
            seen_ids.add(mcq.id)
            report = validate_mcq(mcq)
            if not report.valid:
                problems.extend(f"{mcq.id}: {v.code}: {v.message}" for v in report.violations)
            questions.append(mcq)
        by_chapter[chapter_id] = tuple(questions)

    if problems:
        raise InvalidBank("invalid bank:\n  " + "\n  ".join(problems))
    return QuestionBank(by_chapter)


def _parse_question(entry: object, chapter_id: str) -> tuple[Mcq | None, list[str]]:
    if not isinstance(entry, dict):
        return None, [f"question entry in chapter {chapter_id!r} is not an object"]
    problems = []
    unknown = set(entry) - _BANK_QUESTION_FIELDS
    if unknown:
        problems.append(f"question {entry.get('id')!r} has unknown fields: {sorted(unknown)}")
    missing = _BANK_QUESTION_FIELDS - set(entry)
    if missing:
        return None, problems + [f"question {entry.get('id')!r} missing fields: {sorted(missing)}"]
    if not isinstance(entry["id"], str) or not entry["id"]:
        return None, problems + [f"question in chapter {chapter_id!r} has a non-string id"]
    try:
        mcq = Mcq(
            id=entry["id"],
            chapter_id=chapter_id,
            stem=str(entry["stem"]),
            options=tuple(str(o) for o in entry["options"]),
            correct_index=entry["correct_index"],
            hints=tuple(str(h) for h in entry["hints"]),
            difficulty=entry["difficulty"],
        )
    except TypeError as exc:
        return None, problems + [f"question {entry['id']!r}: {exc}"]
    return mcq, problems
