"""Shared test helpers: synthetic banks and scripted sessions."""

from __future__ import annotations

from metacq.core import Chapter, Mcq, PolicyKind
from metacq.provider import QuestionBank
from metacq.session import SessionState, start_session

DIGEST_KEY = "test-signing-key"


def make_mcq(i: int = 0, chapter_id: str = "chx", difficulty: float = 0.5, **overrides) -> Mcq:
    fields = dict(
        id=f"q{i:03d}",
        chapter_id=chapter_id,
        stem=f"What does concept {i} mean?",
        options=(
            f"the right meaning of {i}",
            f"a distractor for {i}",
            f"another distractor for {i}",
        ),
        correct_index=0,
        hints=(f"first nudge {i}", f"closer look {i}", f"nearly the answer {i}"),
        difficulty=difficulty,
    )
    fields.update(overrides)
    return Mcq(**fields)


def make_bank(chapter_id: str = "chx", n: int = 8) -> QuestionBank:
    spread = tuple(round(0.1 + 0.8 * i / (n - 1), 3) for i in range(n))
    questions = tuple(make_mcq(i, chapter_id, difficulty=d) for i, d in enumerate(spread))
    return QuestionBank({chapter_id: questions})


def make_chapter(
    chapter_id: str = "chx", policy: PolicyKind = PolicyKind.STATIC, ordinal: int = 1
) -> Chapter:
    return Chapter(id=chapter_id, title="Toy chapter", ordinal=ordinal, policy=policy)


def play_session(
    outcomes,
    policy: PolicyKind = PolicyKind.STATIC,
    learner: str = "lrn",
    bank: QuestionBank | None = None,
    chapter: Chapter | None = None,
    finalize: bool = True,
) -> SessionState:
    """Run a full scripted session; outcomes is five (correct, hints) pairs."""
    bank = bank or make_bank()
    chapter = chapter or make_chapter(policy=policy)
    session = start_session(learner, chapter)
    for correct, hints in outcomes:
        slot = session.next_question(bank)
        for _ in range(hints):
            session.request_hint()
        choice = slot.mcq.correct_index if correct else (slot.mcq.correct_index + 1) % 3
        session.submit_answer(choice)
    if finalize:
        session.finalize()
    return session
