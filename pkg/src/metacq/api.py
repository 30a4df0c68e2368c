"""HTTP service tying the engine together.

One ``EngineService`` owns the question bank, the learner-model store, the
live sessions and the transcript directory; ``create_app`` wraps it in a
FastAPI app. Session state lives in memory with a TTL; everything durable
(learner models, transcripts) is on disk, so a restarted server replays the
model log and serves previously downloaded transcripts byte-identically.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import defaultdict
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from fastapi import Body, FastAPI, File, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import transcript as transcripts
from .config import ServiceConfig
from .core import (
    MARKS_PER_QUESTION,
    MAX_HINTS_PER_QUESTION,
    MAX_SESSION_MARKS,
    QUESTIONS_PER_SESSION,
    Chapter,
    attainable_marks,
)
from .errors import (
    ConfigError,
    LearnerMismatch,
    MetaCQError,
    SessionIncomplete,
    UnknownChapter,
    UnknownSession,
    MalformedDocument,
)
from .llm import FallbackSource, LlmQuestionSource
from .olm import ChapterProgress, LearnerModel, OlmStore
from .policy import PerformanceRecord
from .provider import QuestionBank, parse_bank
from .session import SessionState, SessionStatus, start_session

log = logging.getLogger("metacq")

_STATUS_BY_CODE = {
    "UnknownLearner": 404,
    "UnknownChapter": 404,
    "UnknownSession": 404,
    "Forbidden": 403,
    "Locked": 409,
    "SessionComplete": 409,
    "SessionIncomplete": 409,
    "SessionExpired": 409,
    "SessionFinalized": 409,
    "QuestionPending": 409,
    "NoActiveQuestion": 409,
    "HintsExhausted": 409,
    "DuplicateLearner": 409,
    "NoCandidates": 409,
    "EndpointUnavailable": 502,
    "InvalidGeneration": 502,
    "ConfigError": 500,
}


def _packaged_text(relative: str) -> str | None:
    node = resources.files("metacq").joinpath(relative)
    try:
        return node.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError):
        return None


def _title_from_markdown(text: str, fallback: str) -> str:
    for line in text.splitlines():
        if line.startswith("# "):
            return line[2:].strip()
    return fallback


class EngineService:
    """All server-side state and the operations the HTTP layer exposes."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        key = os.environ.get(config.digest_key_env, "")
        if not key:
            raise ConfigError(
                f"transcript signing key missing: set the "
                f"{config.digest_key_env} environment variable"
            )
        self._key = key

        if config.bank_path is not None:
            raw = Path(config.bank_path).read_text(encoding="utf-8")
        else:
            raw = _packaged_text("data/bank.json")
            if raw is None:
                raise ConfigError("no bank_path configured and no packaged bank found")
        self.bank: QuestionBank = parse_bank(json.loads(raw))

        self.chapters: list[Chapter] = []
        self.chapter_content: dict[str, str] = {}
        for ordinal, chapter_id in enumerate(self.bank.by_chapter, start=1):
            content = self._read_chapter_content(chapter_id)
            self.chapter_content[chapter_id] = content
            self.chapters.append(
                Chapter(
                    id=chapter_id,
                    title=_title_from_markdown(content, f"Chapter {ordinal}"),
                    ordinal=ordinal,
                    policy=config.policy_for(chapter_id, ordinal),
                    content_ref=f"chapters/{chapter_id}.md",
                )
            )
        self.chapters_by_id = {c.id: c for c in self.chapters}

        self.store = OlmStore.load(
            self.chapters, config.event_log_path, config.gating_enabled
        )

        self.provider = self.bank
        if config.llm is not None:
            generator = LlmQuestionSource(config.llm, self.chapter_content)
            self.provider = FallbackSource(generator, self.bank)

        self.transcript_dir = Path(config.transcript_dir)
        self.transcript_dir.mkdir(parents=True, exist_ok=True)

        self.sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        # answered-question records per (learner, chapter), across sessions
        self._history: dict[tuple[str, str], list[PerformanceRecord]] = defaultdict(list)
        self._replay_stored_transcripts()

    def _read_chapter_content(self, chapter_id: str) -> str:
        if self.config.content_dir is not None:
            path = Path(self.config.content_dir) / f"{chapter_id}.md"
            if path.exists():
                return path.read_text(encoding="utf-8")
            return ""
        return _packaged_text(f"data/chapters/{chapter_id}.md") or ""

    def _replay_stored_transcripts(self) -> None:
        """Rebuild cross-session policy history from transcripts on disk."""
        finalized = []
        for path in sorted(self.transcript_dir.glob(f"*{transcripts.FILE_SUFFIX}")):
            data = path.read_bytes()
            try:
                summary = transcripts.parse_and_verify(data, self._key)
                records = transcripts.session_records(data, self._key)
            except MetaCQError as exc:
                log.warning("ignoring stored transcript %s: %s", path.name, exc)
                continue
            finalized.append((summary.finalized_at, summary.session_id, summary, records))
        finalized.sort(key=lambda item: (item[0], item[1]))
        for _, _, summary, records in finalized:
            self._history[(summary.learner_id, summary.chapter_id)].extend(records)

    # -- lookups -------------------------------------------------------------

    def chapter(self, chapter_id: str) -> Chapter:
        try:
            return self.chapters_by_id[chapter_id]
        except KeyError:
            raise UnknownChapter(f"no chapter {chapter_id!r}") from None

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self.sessions:
                raise UnknownSession(f"no session {session_id!r}")
            return self._locks[session_id]

    def get_session(self, session_id: str) -> SessionState:
        try:
            session = self.sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id!r}") from None
        self._expire_if_idle(session)
        return session

    def _expire_if_idle(self, session: SessionState) -> None:
        if session.status is not SessionStatus.ACTIVE:
            return
        last = datetime.fromisoformat(session.last_activity)
        idle = (datetime.now(timezone.utc) - last).total_seconds()
        if idle > self.config.session_ttl_seconds:
            session.expire()

    def _model_or_default(self, learner_id: str) -> LearnerModel:
        """Registered model, or an unregistered all-fresh view for display."""
        if self.store.has_learner(learner_id):
            return self.store.get_model(learner_id)
        return LearnerModel(
            learner_id=learner_id,
            chapters={c.id: ChapterProgress() for c in self.chapters},
        )

    # -- operations ------------------------------------------------------------

    def open_session(self, learner_id: str, chapter_id: str) -> SessionState:
        chapter = self.chapter(chapter_id)
        self.store.ensure_learner(learner_id)
        with self._registry_lock:
            history = tuple(self._history.get((learner_id, chapter_id), ()))
        session = start_session(
            learner_id,
            chapter,
            history=history,
            params=self.config.policy_params,
            olm_store=self.store,
        )
        with self._registry_lock:
            self.sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def transcript_path(self, session_id: str) -> Path:
        return self.transcript_dir / f"{session_id}{transcripts.FILE_SUFFIX}"

    def finalize_session(self, session: SessionState) -> dict:
        """Finalize, persist the signed transcript, and record history.

        Safe to call repeatedly; the file write and history append happen
        only on the transition to Finalized.
        """
        first_time = session.status is not SessionStatus.FINALIZED
        result = session.finalize()
        path = self.transcript_path(session.session_id)
        if first_time or not path.exists():
            data = transcripts.serialize(session, self._key)
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
            with self._registry_lock:
                self._history[(session.learner_id, session.chapter_id)].extend(
                    session.answered_records()
                )
            if self.config.direct_olm_updates:
                summary = transcripts.parse_and_verify(data, self._key)
                self.store.ensure_learner(summary.learner_id)
                self.store.apply_transcript(summary)
        return {
            "session_id": result.session_id,
            "total_marks": result.total_marks.value,
            "max_marks": MAX_SESSION_MARKS,
            "mastery": result.mastery.label,
            "per_question": [
                {
                    "index": index,
                    "marks": marks.value,
                    "hints_used": hints,
                    "correct": correct,
                }
                for index, marks, hints, correct in result.per_question
            ],
        }

    def olm_rows(self, learner_id: str) -> list[dict]:
        model = self._model_or_default(learner_id)
        rows = []
        for chapter in self.chapters:
            progress = model.chapters[chapter.id]
            rows.append(
                {
                    "chapter_id": chapter.id,
                    "title": chapter.title,
                    "ordinal": chapter.ordinal,
                    "policy": chapter.policy.value,
                    "current": progress.current.label,
                    "unlocked": self.store.is_chapter_unlocked(model, chapter.id),
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
            )
        return rows


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    service = EngineService(config or ServiceConfig())
    app = FastAPI(title="metacq", docs_url=None, redoc_url=None)
    app.state.service = service
    # the browser client is a static page on its own origin; no cookies or
    # auth are involved, so a wildcard origin is safe here
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(MetaCQError)
    async def _engine_error(request, exc: MetaCQError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 400),
            content={"code": exc.code, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "BadRequest", "message": str(exc)},
        )

    # -- chapters ---------------------------------------------------------

    @app.get("/chapters")
    def list_chapters(learner_id: str | None = None):
        model = service._model_or_default(learner_id or "")
        return {
            "chapters": [
                {
                    "id": c.id,
                    "title": c.title,
                    "ordinal": c.ordinal,
                    "policy": c.policy.value,
                    "unlocked": service.store.is_chapter_unlocked(model, c.id),
                }
                for c in service.chapters
            ]
        }

    @app.get("/chapters/{chapter_id}/content")
    def chapter_content(chapter_id: str):
        chapter = service.chapter(chapter_id)
        return {
            "id": chapter.id,
            "title": chapter.title,
            "content": service.chapter_content.get(chapter_id, ""),
        }

    # -- learner model ------------------------------------------------------

    @app.get("/learners/{learner_id}/olm")
    def learner_olm(learner_id: str):
        return {"learner_id": learner_id, "chapters": service.olm_rows(learner_id)}

    @app.post("/learners/{learner_id}/sessions")
    def new_session(learner_id: str, payload: dict = Body(...)):
        chapter_id = payload.get("chapter_id")
        if not isinstance(chapter_id, str):
            raise MalformedDocument("body must carry a string chapter_id")
        session = service.open_session(learner_id, chapter_id)
        return {
            "session_id": session.session_id,
            "learner_id": session.learner_id,
            "chapter_id": session.chapter_id,
            "policy": session.policy.value,
            "questions_total": QUESTIONS_PER_SESSION,
            "marks_per_question": MARKS_PER_QUESTION,
            "started_at": session.started_at,
        }

    @app.post("/learners/{learner_id}/olm/upload")
    def upload_transcript(learner_id: str, file: UploadFile = File(...)):
        data = file.file.read()
        summary = transcripts.parse_and_verify(data, service._key)
        if summary.learner_id != learner_id:
            raise LearnerMismatch(
                f"transcript belongs to {summary.learner_id!r}, not {learner_id!r}"
            )
        service.store.ensure_learner(learner_id)
        model = service.store.apply_transcript(summary, expected_learner_id=learner_id)
        progress = model.chapters[summary.chapter_id]
        return {
            "learner_id": learner_id,
            "chapter_id": summary.chapter_id,
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

    @app.post("/learners/{learner_id}/olm/{chapter_id}/reevaluate")
    def reevaluate(learner_id: str, chapter_id: str):
        model = service.store.request_reevaluation(learner_id, chapter_id)
        progress = model.chapters[chapter_id]
        return {
            "learner_id": learner_id,
            "chapter_id": chapter_id,
            "current": progress.current.label,
            "reevaluation_open": progress.reevaluation_open,
        }

    # -- session lifecycle ----------------------------------------------------

    @app.post("/sessions/{session_id}/question")
    def next_question(session_id: str):
        with service.session_lock(session_id):
            session = service.get_session(session_id)
            slot = session.next_question(service.provider)
            return {
                "session_id": session_id,
                "question_number": slot.index + 1,
                "questions_total": QUESTIONS_PER_SESSION,
                "stem": slot.mcq.stem,
                "options": list(slot.mcq.options),
                "attainable": attainable_marks(slot.hints_used).value,
                "hints_remaining": MAX_HINTS_PER_QUESTION - slot.hints_used,
                "running_total": session.running_total().value,
            }

    @app.post("/sessions/{session_id}/hint")
    def request_hint(session_id: str):
        with service.session_lock(session_id):
            session = service.get_session(session_id)
            hint, attainable, remaining = session.request_hint()
            return {
                "session_id": session_id,
                "hint": hint,
                "tier": MAX_HINTS_PER_QUESTION - remaining,
                "attainable": attainable.value,
                "hints_remaining": remaining,
            }

    @app.post("/sessions/{session_id}/answer")
    def submit_answer(session_id: str, payload: dict = Body(...)):
        with service.session_lock(session_id):
            session = service.get_session(session_id)
            correct, marks, feedback = session.submit_answer(payload.get("option_index"))
            answered = len(session.answered_records())
            return {
                "session_id": session_id,
                "correct": correct,
                "marks_earned": marks.value,
                "feedback": feedback,
                "running_total": session.running_total().value,
                "answered": answered,
                "questions_total": QUESTIONS_PER_SESSION,
                "session_complete": answered == QUESTIONS_PER_SESSION,
            }

    @app.post("/sessions/{session_id}/finalize")
    def finalize(session_id: str):
        with service.session_lock(session_id):
            session = service.get_session(session_id)
            return service.finalize_session(session)

    @app.get("/sessions/{session_id}/transcript")
    def download_transcript(session_id: str):
        path = service.transcript_path(session_id)
        if path.exists():
            return Response(
                content=path.read_bytes(),
                media_type="application/json",
                headers={
                    "Content-Disposition": (
                        f'attachment; filename="{session_id}{transcripts.FILE_SUFFIX}"'
                    )
                },
            )
        session = service.get_session(session_id)  # 404 if unknown
        raise SessionIncomplete(
            f"session {session_id} has no transcript yet; finalize it first"
        )

    return app
