import json
import random

import pytest

from helpers import DIGEST_KEY, make_bank, make_chapter, play_session
from metacq.core import PolicyKind
from metacq.errors import (
    DigestMismatch,
    MalformedDocument,
    ReplayMismatch,
    SessionIncomplete,
    VersionUnsupported,
)
from metacq.session import start_session
from metacq.transcript import (
    FILE_SUFFIX,
    TRANSCRIPT_VERSION,
    compute_digest,
    parse_and_verify,
    serialize,
    session_records,
)

WRONG_KEY = "some-other-key"


def canonical(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def resign(doc: dict, key: str = DIGEST_KEY) -> bytes:
    """Canonical bytes for a (possibly tampered) document, freshly signed."""
    body = {k: v for k, v in doc.items() if k != "digest"}
    body["digest"] = compute_digest(body, key)
    return canonical(body)


@pytest.fixture
def transcript_bytes():
    session = play_session([(True, 0), (True, 1), (False, 0), (True, 2), (False, 3)])
    return serialize(session, DIGEST_KEY)


@pytest.fixture
def doc(transcript_bytes):
    return json.loads(transcript_bytes.decode("utf-8"))


class TestRoundTrip:
    def test_summary_matches_session(self):
        session = play_session([(True, 0)] * 4 + [(False, 0)])
        data = serialize(session, DIGEST_KEY)
        summary = parse_and_verify(data, DIGEST_KEY)
        assert summary.session_id == session.session_id
        assert summary.learner_id == "lrn"
        assert summary.chapter_id == "chx"
        assert summary.total_marks.value == 8.0
        assert summary.mastery.label == "Proficient"
        assert summary.finalized_at == session.finalized_at

    def test_serialization_is_deterministic(self):
        session = play_session([(True, 1)] * 5)
        assert serialize(session, DIGEST_KEY) == serialize(session, DIGEST_KEY)

    def test_reserialized_parse_is_identical(self, transcript_bytes):
        doc = json.loads(transcript_bytes.decode("utf-8"))
        assert canonical(doc) == transcript_bytes

    def test_non_ascii_identifiers_round_trip(self):
        session = play_session([(True, 0)] * 5, learner="Åsa-雷")
        data = serialize(session, DIGEST_KEY)
        summary = parse_and_verify(data, DIGEST_KEY)
        assert summary.learner_id == "Åsa-雷"
        assert "Åsa-雷".encode("utf-8") in data  # no ascii escaping

    def test_unfinalized_session_refuses(self):
        session = play_session([(True, 0)] * 5, finalize=False)
        with pytest.raises(SessionIncomplete):
            serialize(session, DIGEST_KEY)

    def test_file_suffix(self):
        assert FILE_SUFFIX == ".metacq.json"

    def test_top_level_shape(self, doc):
        assert set(doc) == {
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
        assert doc["version"] == TRANSCRIPT_VERSION
        assert doc["policy"] in {p.value for p in PolicyKind}

    def test_hint_events_carry_penalty_schedule(self, doc):
        tiers = [
            (e["tier"], e["attainable_after"])
            for e in doc["events"]
            if e["type"] == "hint_requested"
        ]
        for tier, attainable in tiers:
            assert attainable == 2.0 - 0.5 * tier


class TestDigest:
    def test_wrong_key_rejected(self, transcript_bytes):
        with pytest.raises(DigestMismatch):
            parse_and_verify(transcript_bytes, WRONG_KEY)

    def test_edited_total_without_resigning(self, doc):
        doc["final"]["total_marks"] = 10.0
        data = canonical(doc)  # keeps the stale digest
        with pytest.raises(DigestMismatch):
            parse_and_verify(data, DIGEST_KEY)

    def test_resigned_under_wrong_key(self, doc):
        with pytest.raises(DigestMismatch):
            parse_and_verify(resign(doc, WRONG_KEY), DIGEST_KEY)

    def test_digest_checked_before_version(self, doc):
        doc["version"] = 99
        # stale digest: must surface as tampering, not as a version problem
        with pytest.raises(DigestMismatch):
            parse_and_verify(canonical(doc), DIGEST_KEY)
        # freshly signed: now the version check fires
        with pytest.raises(VersionUnsupported):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_single_byte_mutations_never_verify(self, transcript_bytes):
        rng = random.Random(1234)
        for _ in range(100):
            i = rng.randrange(len(transcript_bytes))
            replacement = rng.randrange(256)
            if replacement == transcript_bytes[i]:
                replacement = (replacement + 1) % 256
            mutated = (
                transcript_bytes[:i] + bytes([replacement]) + transcript_bytes[i + 1 :]
            )
            with pytest.raises((DigestMismatch, MalformedDocument)):
                parse_and_verify(mutated, DIGEST_KEY)


class TestMalformed:
    def test_not_json(self):
        with pytest.raises(MalformedDocument):
            parse_and_verify(b"{not json", DIGEST_KEY)

    def test_not_utf8(self):
        with pytest.raises(MalformedDocument):
            parse_and_verify(b"\xff\xfe{}", DIGEST_KEY)

    def test_not_an_object(self):
        with pytest.raises(MalformedDocument):
            parse_and_verify(b"[1,2]", DIGEST_KEY)

    def test_truncated(self, transcript_bytes):
        with pytest.raises(MalformedDocument):
            parse_and_verify(transcript_bytes[:-40], DIGEST_KEY)

    def test_missing_digest(self, doc):
        del doc["digest"]
        with pytest.raises(MalformedDocument):
            parse_and_verify(canonical(doc), DIGEST_KEY)

    def test_non_canonical_whitespace_rejected(self, doc):
        pretty = json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False).encode("utf-8")
        with pytest.raises(MalformedDocument):
            parse_and_verify(pretty, DIGEST_KEY)

    def test_non_canonical_key_order_rejected(self, doc):
        unsorted = json.dumps(doc, sort_keys=False, separators=(",", ":"), ensure_ascii=False)
        reordered = dict(reversed(list(doc.items())))
        data = json.dumps(reordered, sort_keys=False, separators=(",", ":"), ensure_ascii=False)
        assert unsorted == canonical(doc).decode("utf-8")  # fixture already sorted
        with pytest.raises(MalformedDocument):
            parse_and_verify(data.encode("utf-8"), DIGEST_KEY)

    def test_extra_field_rejected_even_if_signed(self, doc):
        doc["comment"] = "tweaked"
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_missing_field_rejected_even_if_signed(self, doc):
        del doc["started_at"]
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_unknown_policy_rejected(self, doc):
        doc["policy"] = "adaptive-magic"
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_final_block_shape(self, doc):
        doc["final"] = {"total_marks": 8.0}
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_events_must_be_list(self, doc):
        doc["events"] = {}
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_empty_identifier_rejected(self, doc):
        doc["learner_id"] = ""
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)


class TestReplay:
    """Internally consistent signatures with inconsistent stories must fail."""

    def events(self, doc):
        return doc["events"]

    def answers(self, doc):
        return [e for e in self.events(doc) if e["type"] == "answer_submitted"]

    def presentations(self, doc):
        return [e for e in self.events(doc) if e["type"] == "question_presented"]

    def test_final_total_must_match_replay(self, doc):
        doc["final"]["total_marks"] = doc["final"]["total_marks"] + 0.5
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_final_mastery_must_match_replay(self, doc):
        doc["final"]["mastery"] = "Mastered"
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_marks_inconsistent_with_hints(self, doc):
        answer = self.answers(doc)[0]  # correct with no hints: must be 2.0
        assert answer["marks"] == 2.0
        answer["marks"] = 1.5
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_wrong_answer_cannot_carry_marks(self, doc):
        answer = self.answers(doc)[2]  # a wrong answer
        assert answer["correct"] is False
        answer["marks"] = 2.0
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_off_grid_marks(self, doc):
        answer = self.answers(doc)[0]
        answer["marks"] = 1.9
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_duplicate_question_ids(self, doc):
        presented = self.presentations(doc)
        presented[1]["mcq_id"] = presented[0]["mcq_id"]
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_difficulty_out_of_range(self, doc):
        self.presentations(doc)[0]["difficulty"] = 1.5
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_missing_mcq_id(self, doc):
        self.presentations(doc)[0]["mcq_id"] = ""
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_hint_tier_sequence_broken(self, doc):
        hints = [e for e in self.events(doc) if e["type"] == "hint_requested"]
        hints[0]["tier"] = 2
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_hint_penalty_rewritten(self, doc):
        hints = [e for e in self.events(doc) if e["type"] == "hint_requested"]
        hints[0]["attainable_after"] = 2.0
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_selected_option_out_of_range(self, doc):
        self.answers(doc)[0]["selected"] = 7
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_selected_option_boolean(self, doc):
        self.answers(doc)[0]["selected"] = True
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_correct_flag_must_be_boolean(self, doc):
        self.answers(doc)[0]["correct"] = 1
        with pytest.raises(MalformedDocument):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_short_event_log(self, doc):
        doc["events"] = doc["events"][:-2]
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_trailing_events(self, doc):
        doc["events"].append(dict(doc["events"][0]))
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_question_indices_out_of_order(self, doc):
        presented = self.presentations(doc)
        presented[0]["index"], answers = 1, self.answers(doc)
        answers[0]["index"] = 1
        with pytest.raises(ReplayMismatch):
            parse_and_verify(resign(doc), DIGEST_KEY)

    def test_fabricated_perfect_story_with_wrong_key_fails_first(self, doc):
        for answer in self.answers(doc):
            answer["correct"] = True
            answer["marks"] = 2.0
        doc["final"] = {"total_marks": 10.0, "mastery": "Mastered"}
        with pytest.raises(DigestMismatch):
            parse_and_verify(resign(doc, WRONG_KEY), DIGEST_KEY)


class TestSessionRecords:
    def test_matches_session_slots(self):
        session = play_session([(True, 0), (True, 2), (False, 1), (True, 3), (False, 0)])
        data = serialize(session, DIGEST_KEY)
        records = session_records(data, DIGEST_KEY)
        assert [r.mark_ratio for r in records] == [1.0, 0.5, 0.0, 0.25, 0.0]
        assert [r.hints_used for r in records] == [0, 2, 1, 3, 0]
        assert [r.question_index for r in records] == [0, 1, 2, 3, 4]
        expected = [s.presented_difficulty for s in session.slots]
        assert [r.presented_difficulty for r in records] == pytest.approx(expected)

    def test_requires_verification(self, transcript_bytes):
        with pytest.raises(DigestMismatch):
            session_records(transcript_bytes, WRONG_KEY)

    def test_adaptive_difficulties_survive(self):
        session = play_session([(True, 0)] * 5, policy=PolicyKind.ONE_AFTER_ONE)
        records = session_records(serialize(session, DIGEST_KEY), DIGEST_KEY)
        assert [r.presented_difficulty for r in records] == pytest.approx(
            [0.5, 0.6, 0.7, 0.8, 0.9]
        )
