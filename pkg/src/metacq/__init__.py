"""metacq: adaptive multiple-choice tutoring engine.

Five-question practice sessions with tiered hints and mark penalties,
three difficulty-adaptation policies, signed session transcripts, an
event-sourced open learner model, a ratings analysis toolkit, and an HTTP
service plus CLI on top.
"""

__version__ = "1.0.0"

from .core import (
    DEFAULT_DIFFICULTY,
    MARKS_PER_QUESTION,
    MAX_HINTS_PER_QUESTION,
    MAX_SESSION_MARKS,
    QUESTIONS_PER_SESSION,
    Chapter,
    Difficulty,
    Marks,
    MasteryLevel,
    Mcq,
    PolicyKind,
    attainable_marks,
    clamp_difficulty,
    mastery_from_score,
)
from .policy import PerformanceRecord, PolicyParams, next_difficulty
from .provider import QuestionBank, ValidationReport, load_bank, select_question, validate_mcq
from .session import SessionResult, SessionState, SessionStatus, start_session
from .transcript import TranscriptSummary, parse_and_verify, serialize
from .olm import LearnerModel, OlmStore
from .analysis import (
    AggregateStats,
    Rating,
    RatingDataset,
    aggregate,
    cross_task_means,
    ingest_csv,
    policy_task_table,
    simulate_threshold_learner,
    skew_flag,
)
from .config import ServiceConfig, load_config
from .api import create_app

__all__ = [
    "DEFAULT_DIFFICULTY",
    "MARKS_PER_QUESTION",
    "MAX_HINTS_PER_QUESTION",
    "MAX_SESSION_MARKS",
    "QUESTIONS_PER_SESSION",
    "Chapter",
    "Difficulty",
    "Marks",
    "MasteryLevel",
    "Mcq",
    "PolicyKind",
    "attainable_marks",
    "clamp_difficulty",
    "mastery_from_score",
    "PerformanceRecord",
    "PolicyParams",
    "next_difficulty",
    "QuestionBank",
    "ValidationReport",
    "load_bank",
    "select_question",
    "validate_mcq",
    "SessionResult",
    "SessionState",
    "SessionStatus",
    "start_session",
    "TranscriptSummary",
    "parse_and_verify",
    "serialize",
    "LearnerModel",
    "OlmStore",
    "AggregateStats",
    "Rating",
    "RatingDataset",
    "aggregate",
    "cross_task_means",
    "ingest_csv",
    "policy_task_table",
    "simulate_threshold_learner",
    "skew_flag",
    "ServiceConfig",
    "load_config",
    "create_app",
    "__version__",
]
