"""Service configuration.

One JSON file configures the whole service. Secrets never live in the
file: the transcript signing key and any generation API key are read from
environment variables whose *names* are configured here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import PolicyKind
from .errors import ConfigError
from .llm import LlmSettings
from .policy import PolicyParams

DEFAULT_DIGEST_KEY_ENV = "METACQ_DIGEST_KEY"
DEFAULT_SESSION_TTL_SECONDS = 1800.0

# chapters are assigned policies by position: first chapter adapts question
# by question, second stays fixed, third adapts on the whole history
DEFAULT_POLICY_BY_ORDINAL = {
    1: PolicyKind.ONE_AFTER_ONE,
    2: PolicyKind.STATIC,
    3: PolicyKind.ALL_IN_ALL,
}
FALLBACK_POLICY = PolicyKind.STATIC

_TOP_FIELDS = {
    "listen",
    "bank_path",
    "content_dir",
    "event_log_path",
    "transcript_dir",
    "digest_key_env",
    "policy_params",
    "gating_enabled",
    "allocation",
    "session_ttl_seconds",
    "direct_olm_updates",
    "llm",
}
_LISTEN_FIELDS = {"host", "port"}
_PARAM_FIELDS = {"step", "spread"}
_LLM_FIELDS = {
    "url",
    "api_key_env",
    "model",
    "timeout_seconds",
    "max_retries",
    "max_concurrency",
}


def default_policy_for_ordinal(ordinal: int) -> PolicyKind:
    return DEFAULT_POLICY_BY_ORDINAL.get(ordinal, FALLBACK_POLICY)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    bank_path: Path | None = None  # None → packaged bank
    content_dir: Path | None = None  # None → packaged chapter texts
    event_log_path: Path = Path("metacq-olm.ndjson")
    transcript_dir: Path = Path("metacq-transcripts")
    digest_key_env: str = DEFAULT_DIGEST_KEY_ENV
    policy_params: PolicyParams = field(default_factory=PolicyParams)
    gating_enabled: bool = True
    allocation: dict[str, PolicyKind] = field(default_factory=dict)
    session_ttl_seconds: float = DEFAULT_SESSION_TTL_SECONDS
    direct_olm_updates: bool = False
    llm: LlmSettings | None = None

    def policy_for(self, chapter_id: str, ordinal: int) -> PolicyKind:
        """Allocated policy for a chapter: explicit map first, then ordinal default."""
        if chapter_id in self.allocation:
            return self.allocation[chapter_id]
        return default_policy_for_ordinal(ordinal)


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")


def _expect(doc: dict, key: str, types, where: str, default):
    value = doc.get(key, default)
    if value is default and key not in doc:
        return default
    if isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        raise ConfigError(f"{where}: field {key!r} has the wrong type")
    if not isinstance(value, types):
        raise ConfigError(f"{where}: field {key!r} has the wrong type")
    return value


def load_config(path: str | Path) -> ServiceConfig:
    """Parse a JSON config file, rejecting unknown fields."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(doc, where=str(path))


def parse_config(doc: dict, where: str = "config") -> ServiceConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: top level must be an object")
    _reject_unknown(doc, _TOP_FIELDS, where)
    defaults = ServiceConfig()

    host, port = defaults.host, defaults.port
    listen = doc.get("listen")
    if listen is not None:
        if not isinstance(listen, dict):
            raise ConfigError(f"{where}: 'listen' must be an object")
        _reject_unknown(listen, _LISTEN_FIELDS, f"{where}.listen")
        host = _expect(listen, "host", str, f"{where}.listen", host)
        port = _expect(listen, "port", int, f"{where}.listen", port)
        if not 0 < port < 65536:
            raise ConfigError(f"{where}: port out of range: {port}")

    params = defaults.policy_params
    raw_params = doc.get("policy_params")
    if raw_params is not None:
        if not isinstance(raw_params, dict):
            raise ConfigError(f"{where}: 'policy_params' must be an object")
        _reject_unknown(raw_params, _PARAM_FIELDS, f"{where}.policy_params")
        try:
            params = PolicyParams(
                step=_expect(raw_params, "step", (int, float), where, params.step),
                spread=_expect(raw_params, "spread", (int, float), where, params.spread),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None

    allocation: dict[str, PolicyKind] = {}
    raw_alloc = doc.get("allocation")
    if raw_alloc is not None:
        if not isinstance(raw_alloc, dict):
            raise ConfigError(f"{where}: 'allocation' must be an object")
        for chapter_id, name in raw_alloc.items():
            try:
                allocation[chapter_id] = PolicyKind(name)
            except ValueError:
                raise ConfigError(
                    f"{where}: unknown policy {name!r} for chapter {chapter_id!r}"
                ) from None

    llm = None
    raw_llm = doc.get("llm")
    if raw_llm is not None:
        if not isinstance(raw_llm, dict):
            raise ConfigError(f"{where}: 'llm' must be an object")
        _reject_unknown(raw_llm, _LLM_FIELDS, f"{where}.llm")
        if "url" not in raw_llm:
            raise ConfigError(f"{where}: llm settings need a 'url'")
        base = LlmSettings(url=raw_llm["url"])
        llm = LlmSettings(
            url=_expect(raw_llm, "url", str, f"{where}.llm", base.url),
            api_key_env=_expect(raw_llm, "api_key_env", str, f"{where}.llm", base.api_key_env),
            model=_expect(raw_llm, "model", str, f"{where}.llm", base.model),
            timeout_seconds=_expect(
                raw_llm, "timeout_seconds", (int, float), f"{where}.llm", base.timeout_seconds
            ),
            max_retries=_expect(raw_llm, "max_retries", int, f"{where}.llm", base.max_retries),
            max_concurrency=_expect(
                raw_llm, "max_concurrency", int, f"{where}.llm", base.max_concurrency
            ),
        )

    ttl = _expect(doc, "session_ttl_seconds", (int, float), where, defaults.session_ttl_seconds)
    if ttl <= 0:
        raise ConfigError(f"{where}: session_ttl_seconds must be positive")

    bank_path = _expect(doc, "bank_path", str, where, None)
    content_dir = _expect(doc, "content_dir", str, where, None)
    event_log = _expect(doc, "event_log_path", str, where, str(defaults.event_log_path))
    transcript_dir = _expect(doc, "transcript_dir", str, where, str(defaults.transcript_dir))
    digest_key_env = _expect(doc, "digest_key_env", str, where, defaults.digest_key_env)
    if not digest_key_env:
        raise ConfigError(f"{where}: digest_key_env must be non-empty")

    return ServiceConfig(
        host=host,
        port=port,
        bank_path=Path(bank_path) if bank_path else None,
        content_dir=Path(content_dir) if content_dir else None,
        event_log_path=Path(event_log),
        transcript_dir=Path(transcript_dir),
        digest_key_env=digest_key_env,
        policy_params=params,
        gating_enabled=_expect(doc, "gating_enabled", bool, where, defaults.gating_enabled),
        allocation=allocation,
        session_ttl_seconds=float(ttl),
        direct_olm_updates=_expect(
            doc, "direct_olm_updates", bool, where, defaults.direct_olm_updates
        ),
        llm=llm,
    )
