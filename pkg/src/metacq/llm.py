"""Optional external-completion adapter for question generation.

Speaks a chat-completions style JSON protocol to a configured endpoint.
Every generated question must pass the same ``validate_mcq`` gate as the
bank; invalid generations are retried, then rejected. The adapter is
feature-gated: when unconfigured or unreachable, the engine runs entirely
from the deterministic bank.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass

import requests

from .core import Mcq, clamp_difficulty
from .errors import ConfigError, EndpointUnavailable, InvalidGeneration, MetaCQError
from .provider import FORBIDDEN_PHRASES, QuestionSource, validate_mcq

SYSTEM_PROMPT = (
    "You write one multiple-choice practice question at a time for an e-textbook chapter. "
    "Rules: provide exactly three answer options with exactly one correct; never use "
    f"options like {FORBIDDEN_PHRASES[0]!r} or {FORBIDDEN_PHRASES[1]!r}; provide exactly "
    "three hints ordered from least to most revealing. "
    'Respond with JSON only: {"stem": str, "options": [str, str, str], '
    '"correct_index": 0|1|2, "hints": [str, str, str]}.'
)


@dataclass(frozen=True)
class LlmSettings:
    url: str
    api_key_env: str = "METACQ_LLM_API_KEY"
    model: str = "gpt-4"
    timeout_seconds: float = 30.0
    max_retries: int = 2  # re-asks after an invalid generation
    max_concurrency: int = 4


class LlmQuestionSource:
    """Generates questions through the configured completion endpoint."""

    def __init__(self, settings: LlmSettings, chapter_content: dict[str, str] | None = None):
        self.settings = settings
        self.chapter_content = chapter_content or {}
        self._gate = threading.BoundedSemaphore(settings.max_concurrency)

    def pick(self, chapter_id: str, target: float, exclude: set[str]) -> Mcq:
        return self.generate(chapter_id, target)

    def generate(self, chapter_id: str, target: float) -> Mcq:
        """Request a question near ``target`` difficulty; validate or retry."""
        api_key = os.environ.get(self.settings.api_key_env, "")
        if not api_key:
            raise ConfigError(f"credential env var {self.settings.api_key_env} is not set")

        last_problem = "no attempts made"
        for _ in range(self.settings.max_retries + 1):
            content = self._complete(api_key, chapter_id, target)
            try:
                mcq = self._parse_mcq(content, chapter_id, target)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                last_problem = f"unparseable generation: {exc}"
                continue
            report = validate_mcq(mcq)
            if report.valid:
                return mcq
            last_problem = str(report)
        raise InvalidGeneration(f"gave up after {self.settings.max_retries + 1} attempts: {last_problem}")

    def _complete(self, api_key: str, chapter_id: str, target: float) -> str:
        context = self.chapter_content.get(chapter_id, "")
        user_prompt = (
            f"Chapter: {chapter_id}\n"
            f"Target difficulty: {float(target):.2f} on a 0 (easiest) to 1 (hardest) scale.\n"
            "Write the question strictly about this chapter content:\n"
            f"{context}"
        )
        payload = {
            "model": self.settings.model,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": 0.7,
        }
        try:
            with self._gate:
                response = requests.post(
                    self.settings.url,
                    json=payload,
                    headers={"Authorization": f"Bearer {api_key}"},
                    timeout=self.settings.timeout_seconds,
                )
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise EndpointUnavailable(f"completion endpoint failed: {exc}") from exc

    @staticmethod
    def _parse_mcq(content: str, chapter_id: str, target: float) -> Mcq:
        text = content.strip()
        if text.startswith("```"):
            text = text.strip("`").removeprefix("json").strip()
        body = json.loads(text)
        difficulty = body.get("difficulty", target)
        return Mcq(
            id=f"gen-{uuid.uuid4().hex[:12]}",
            chapter_id=chapter_id,
            stem=str(body["stem"]),
            options=tuple(str(o) for o in body["options"]),
            correct_index=body["correct_index"],
            hints=tuple(str(h) for h in body["hints"]),
            difficulty=float(clamp_difficulty(float(difficulty))),
        )


class FallbackSource:
    """Prefer the LLM source, fall back to the bank when it cannot deliver."""

    def __init__(self, primary: QuestionSource, fallback: QuestionSource):
        self.primary = primary
        self.fallback = fallback

    def pick(self, chapter_id: str, target: float, exclude: set[str]) -> Mcq:
        try:
            return self.primary.pick(chapter_id, target, exclude)
        except MetaCQError:
            return self.fallback.pick(chapter_id, target, exclude)
