"""Command-line entry points.

    metacq serve --config service.json
    metacq bank validate bank.json
    metacq analyze --input ratings.csv [--task 1|2] [--format text|json]
    metacq transcript verify run.metacq.json
"""

from __future__ import annotations

import json
import os
import sys
from importlib import resources
from pathlib import Path

import click

from .analysis import build_report, ingest_csv, render_text
from .api import create_app
from .config import DEFAULT_DIGEST_KEY_ENV, ServiceConfig, load_config
from .errors import InvalidBank, MetaCQError
from .provider import load_bank
from .transcript import parse_and_verify


@click.group()
def main():
    """Adaptive multiple-choice tutoring engine."""


@main.command()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON config file; defaults apply when omitted.",
)
def serve(config_path: str | None):
    """Run the HTTP service."""
    import uvicorn

    cfg = load_config(config_path) if config_path else ServiceConfig()
    try:
        app = create_app(cfg)
    except MetaCQError as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(2)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")


@main.group()
def bank():
    """Question bank tools."""


@bank.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def bank_validate(path: str):
    """Validate every question in a bank file; nonzero exit on any problem."""
    try:
        loaded = load_bank(path)
    except InvalidBank as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    for chapter_id in loaded.by_chapter:
        for mcq in loaded.by_chapter[chapter_id]:
            click.echo(f"{mcq.id}: valid")
    total = sum(len(qs) for qs in loaded.by_chapter.values())
    click.echo(f"bank valid: {len(loaded.by_chapter)} chapters, {total} questions")


@main.command("analyze")
@click.option(
    "--input",
    "input_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Ratings CSV; defaults to the packaged study data.",
)
@click.option("--task", type=click.Choice(["1", "2"]), default=None)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def analyze(input_path: str | None, task: str | None, fmt: str):
    """Aggregate difficulty ratings into per-policy summary tables."""
    try:
        if input_path is None:
            with resources.as_file(
                resources.files("metacq").joinpath("data/ratings.csv")
            ) as packed:
                dataset = ingest_csv(packed)
        else:
            dataset = ingest_csv(input_path)
    except MetaCQError as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(1)
    report = build_report(dataset, task=int(task) if task else None)
    if fmt == "json":
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        click.echo(render_text(report))


@main.group()
def transcript():
    """Session transcript tools."""


@transcript.command("verify")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--key-env",
    default=DEFAULT_DIGEST_KEY_ENV,
    show_default=True,
    help="Environment variable holding the signing key.",
)
def transcript_verify(file: str, key_env: str):
    """Offline digest and replay check of a downloaded transcript."""
    key = os.environ.get(key_env, "")
    if not key:
        click.echo(f"signing key not set: export {key_env}", err=True)
        sys.exit(2)
    data = Path(file).read_bytes()
    try:
        summary = parse_and_verify(data, key)
    except MetaCQError as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(1)
    click.echo(
        f"verified: session {summary.session_id} learner {summary.learner_id} "
        f"chapter {summary.chapter_id} total {summary.total_marks} "
        f"mastery {summary.mastery.label}"
    )


if __name__ == "__main__":
    main()
