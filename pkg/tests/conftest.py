import json
from importlib import resources

import pytest

from helpers import DIGEST_KEY


@pytest.fixture(autouse=True)
def _digest_key(monkeypatch):
    monkeypatch.setenv("METACQ_DIGEST_KEY", DIGEST_KEY)


@pytest.fixture(scope="session")
def packaged_bank():
    from metacq.provider import parse_bank

    raw = resources.files("metacq").joinpath("data/bank.json").read_text("utf-8")
    return parse_bank(json.loads(raw))


@pytest.fixture(scope="session")
def ratings_path(tmp_path_factory):
    raw = resources.files("metacq").joinpath("data/ratings.csv").read_bytes()
    path = tmp_path_factory.mktemp("ratings") / "ratings.csv"
    path.write_bytes(raw)
    return path
