"""Engine error hierarchy.

Every error carries a stable ``code`` string that the HTTP layer and CLI
surface verbatim, so clients can branch on codes instead of messages.
"""


class MetaCQError(Exception):
    code = "Error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# -- learners / chapters ------------------------------------------------------

class UnknownLearner(MetaCQError):
    code = "UnknownLearner"


class DuplicateLearner(MetaCQError):
    code = "DuplicateLearner"


class UnknownChapter(MetaCQError):
    code = "UnknownChapter"


class ChapterLocked(MetaCQError):
    code = "Locked"


# -- quiz session state machine ----------------------------------------------

class UnknownSession(MetaCQError):
    code = "UnknownSession"


class SessionComplete(MetaCQError):
    code = "SessionComplete"


class SessionIncomplete(MetaCQError):
    code = "SessionIncomplete"


class SessionExpired(MetaCQError):
    code = "SessionExpired"


class SessionFinalized(MetaCQError):
    code = "SessionFinalized"


class QuestionPending(MetaCQError):
    code = "QuestionPending"


class NoActiveQuestion(MetaCQError):
    code = "NoActiveQuestion"


class HintsExhausted(MetaCQError):
    code = "HintsExhausted"


class InvalidOption(MetaCQError):
    code = "InvalidOption"


# -- question provider ---------------------------------------------------------

class NoCandidates(MetaCQError):
    code = "NoCandidates"


class InvalidBank(MetaCQError):
    code = "InvalidBank"


class EndpointUnavailable(MetaCQError):
    code = "EndpointUnavailable"


class InvalidGeneration(MetaCQError):
    code = "InvalidGeneration"


# -- transcripts ---------------------------------------------------------------

class MalformedDocument(MetaCQError):
    code = "MalformedDocument"


class VersionUnsupported(MetaCQError):
    code = "VersionUnsupported"


class DigestMismatch(MetaCQError):
    code = "DigestMismatch"


class ReplayMismatch(MetaCQError):
    code = "ReplayMismatch"


# -- open learner model ---------------------------------------------------------

class LearnerMismatch(MetaCQError):
    code = "LearnerMismatch"


class NoPriorAttempt(MetaCQError):
    code = "NoPriorAttempt"


class Forbidden(MetaCQError):
    code = "Forbidden"


# -- analysis --------------------------------------------------------------------

class InvalidRatings(MetaCQError):
    code = "InvalidRatings"


# -- configuration ---------------------------------------------------------------

class ConfigError(MetaCQError):
    code = "ConfigError"
