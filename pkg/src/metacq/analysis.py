"""Rating analysis toolkit.

Works over Likert difficulty ratings (1 = very easy .. 5 = very hard)
collected per task, policy, question and participant. Provides pooled
per-policy aggregates (mean, median, mode, mean absolute deviation), a
cross-task mean-of-means summary, skew flags, CSV ingestion, and a
threshold-learner simulator used as an oracle for the adaptive policies.

Two deviation measures appear in reports and both are mean absolute
deviations, taken over different populations:

* ``mad``: over every individual rating pooled for a policy within a task.
* ``stability_mad``: over the per-question mean ratings, measuring how
  consistently a policy hits one difficulty level across its questions.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from math import fsum
from pathlib import Path
from statistics import median as _median

from .core import DEFAULT_DIFFICULTY, PolicyKind
from .errors import InvalidRatings
from .policy import PerformanceRecord, PolicyParams, next_difficulty

RATING_MIN = 1
RATING_MAX = 5
TASKS = (1, 2)
SKEW_EPSILON = 0.05

# report rows always in this order
POLICY_ROW_ORDER = (PolicyKind.ONE_AFTER_ONE, PolicyKind.STATIC, PolicyKind.ALL_IN_ALL)

CSV_HEADER = ["task", "policy", "question_id", "participant_id", "rating"]


class Skew(str, Enum):
    RIGHT = "RightSkew"
    LEFT = "LeftSkew"
    SYMMETRIC = "Symmetric"


@dataclass(frozen=True)
class Rating:
    """One participant's difficulty score for one question."""

    task: int
    policy: PolicyKind
    question_id: str
    participant_id: str
    rating: int

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        _check_rating_value(self.rating)


def _check_rating_value(value) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"rating must be an integer, got {value!r}")
    if not RATING_MIN <= value <= RATING_MAX:
        raise ValueError(
            f"rating must be in {RATING_MIN}..{RATING_MAX}, got {value}"
        )


@dataclass(frozen=True)
class RatingDataset:
    records: tuple[Rating, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            key = (r.task, r.policy, r.question_id, r.participant_id)
            if key in seen:
                raise ValueError(f"duplicate rating for {key}")
            seen.add(key)

    def tasks(self) -> list[int]:
        return sorted({r.task for r in self.records})

    def ratings_for(self, task: int, policy: PolicyKind) -> list[int]:
        return [r.rating for r in self.records if r.task == task and r.policy == policy]

    def question_means(self, task: int, policy: PolicyKind) -> dict[str, float]:
        """Mean rating per question for one policy within one task."""
        groups: dict[str, list[int]] = defaultdict(list)
        for r in self.records:
            if r.task == task and r.policy == policy:
                groups[r.question_id].append(r.rating)
        return {qid: fsum(vals) / len(vals) for qid, vals in sorted(groups.items())}


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    median: float
    mode: int
    mad: float
    n: int


def aggregate(ratings) -> AggregateStats:
    """Pool a list of ratings into mean, median, mode and MAD.

    Mode ties break toward the smallest value; MAD is the mean of the
    absolute deviations about the mean.
    """
    values = list(ratings)
    if not values:
        raise ValueError("cannot aggregate an empty rating list")
    for v in values:
        _check_rating_value(v)
    n = len(values)
    mean = fsum(values) / n
    counts = Counter(values)
    best = max(counts.values())
    mode = min(v for v, c in counts.items() if c == best)
    mad = fsum(abs(v - mean) for v in values) / n
    return AggregateStats(
        mean=mean, median=float(_median(values)), mode=mode, mad=mad, n=n
    )


def policy_task_table(
    dataset: RatingDataset, task: int
) -> list[tuple[PolicyKind, AggregateStats]]:
    """Pooled aggregates for each policy within one task, in report order."""
    if task not in dataset.tasks():
        raise ValueError(f"dataset has no ratings for task {task!r}")
    rows = []
    for policy in POLICY_ROW_ORDER:
        pooled = dataset.ratings_for(task, policy)
        if not pooled:
            raise ValueError(f"task {task} has no ratings for policy {policy.value!r}")
        rows.append((policy, aggregate(pooled)))
    return rows


def stability_mad(dataset: RatingDataset, task: int, policy: PolicyKind) -> float:
    """Spread of a policy's per-question mean ratings within one task.

    Mean absolute deviation of the question means about their own mean; low
    values mean the policy produced questions of consistent perceived
    difficulty.
    """
    means = list(dataset.question_means(task, policy).values())
    if not means:
        raise ValueError(f"no ratings for task {task!r} / policy {policy!r}")
    center = fsum(means) / len(means)
    return fsum(abs(m - center) for m in means) / len(means)


def cross_task_means(task1_means, task2_means) -> dict[PolicyKind, float]:
    """Per-policy mean of the two task means, rounded to 1 decimal half-up."""
    out = {}
    for policy in POLICY_ROW_ORDER:
        if policy not in task1_means or policy not in task2_means:
            raise ValueError(f"missing mean for policy {policy.value!r}")
        total = Decimal(str(task1_means[policy])) + Decimal(str(task2_means[policy]))
        rounded = (total / 2).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
        out[policy] = float(rounded)
    return out


def skew_flag(stats: AggregateStats) -> Skew:
    if stats.mean > stats.median + SKEW_EPSILON:
        return Skew.RIGHT
    if stats.mean < stats.median - SKEW_EPSILON:
        return Skew.LEFT
    return Skew.SYMMETRIC


# -- CSV ingestion --------------------------------------------------------------

def ingest_csv(path: str | Path) -> RatingDataset:
    """Load ratings from a CSV with header task,policy,question_id,participant_id,rating.

    Collects every problem (with its line number) before failing, so a bad
    file is reported in full.
    """
    path = Path(path)
    problems: list[str] = []
    records: list[Rating] = []
    seen: set[tuple] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidRatings(f"{path}: empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise InvalidRatings(
                f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}"
            )
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CSV_HEADER):
                problems.append(f"line {line}: expected {len(CSV_HEADER)} fields, got {len(row)}")
                continue
            task_s, policy_s, question_id, participant_id, rating_s = (
                cell.strip() for cell in row
            )
            try:
                task = int(task_s)
                if task not in TASKS:
                    raise ValueError
            except ValueError:
                problems.append(f"line {line}: task must be 1 or 2, got {task_s!r}")
                continue
            try:
                policy = PolicyKind(policy_s)
            except ValueError:
                problems.append(f"line {line}: unknown policy {policy_s!r}")
                continue
            try:
                rating = int(rating_s)
                _check_rating_value(rating)
            except ValueError:
                problems.append(
                    f"line {line}: rating must be an integer in "
                    f"{RATING_MIN}..{RATING_MAX}, got {rating_s!r}"
                )
                continue
            if not question_id or not participant_id:
                problems.append(f"line {line}: empty question_id or participant_id")
                continue
            key = (task, policy, question_id, participant_id)
            if key in seen:
                problems.append(f"line {line}: duplicate rating for {key}")
                continue
            seen.add(key)
            records.append(Rating(task, policy, question_id, participant_id, rating))
    if problems:
        raise InvalidRatings(f"{path}: " + "; ".join(problems))
    return RatingDataset(tuple(records))


# -- report ----------------------------------------------------------------------

def build_report(dataset: RatingDataset, task: int | None = None) -> dict:
    """Full analysis as plain data: per-task rows plus cross-task means.

    ``task`` restricts the report to one task; cross-task means appear only
    when both tasks are present.
    """
    tasks = [task] if task is not None else dataset.tasks()
    report: dict = {"tasks": {}}
    task_means: dict[int, dict[PolicyKind, float]] = {}
    for t in tasks:
        rows = []
        means: dict[PolicyKind, float] = {}
        for policy, stats in policy_task_table(dataset, t):
            means[policy] = stats.mean
            rows.append(
                {
                    "policy": policy.value,
                    "n": stats.n,
                    "mean": stats.mean,
                    "median": stats.median,
                    "mode": stats.mode,
                    "mad": stats.mad,
                    "stability_mad": stability_mad(dataset, t, policy),
                    "skew": skew_flag(stats).value,
                }
            )
        task_means[t] = means
        report["tasks"][str(t)] = {"rows": rows}
    if 1 in task_means and 2 in task_means:
        cross = cross_task_means(task_means[1], task_means[2])
        report["cross_task_means"] = {p.value: v for p, v in cross.items()}
    return report


def render_text(report: dict) -> str:
    """Aligned plain-text rendering of ``build_report`` output."""
    lines: list[str] = []
    header = (
        f"{'policy':<15}{'n':>4}{'mean':>8}{'median':>8}{'mode':>6}"
        f"{'mad':>8}{'stability':>11}  skew"
    )
    for task_key in sorted(report["tasks"]):
        lines.append(f"Task {task_key}")
        lines.append(header)
        for row in report["tasks"][task_key]["rows"]:
            lines.append(
                f"{row['policy']:<15}{row['n']:>4}{row['mean']:>8.3f}"
                f"{row['median']:>8.1f}{row['mode']:>6}{row['mad']:>8.3f}"
                f"{row['stability_mad']:>11.3f}  {row['skew']}"
            )
        lines.append("")
    if "cross_task_means" in report:
        lines.append("Cross-task mean difficulty (1 decimal, half up)")
        for policy, value in report["cross_task_means"].items():
            lines.append(f"{policy:<15}{value:>6.1f}")
        lines.append("")
    return "\n".join(lines)


# -- simulation oracle -------------------------------------------------------------

def simulate_threshold_learner(
    ability: float,
    policy: PolicyKind,
    params: PolicyParams | None = None,
    n_questions: int = 10,
    start: float = DEFAULT_DIFFICULTY,
) -> list[float]:
    """Trace presented difficulties for an idealized learner.

    The learner earns full marks whenever the presented difficulty is at or
    below its ability, zero marks otherwise. ``start`` seeds the first
    presented difficulty; the configured policy drives every later one.
    """
    params = params or PolicyParams()
    history: list[PerformanceRecord] = []
    trace: list[float] = []
    for index in range(n_questions):
        if index == 0:
            presented = float(start)
        else:
            presented = float(next_difficulty(policy, history, params))
        trace.append(presented)
        # tolerance so 0.1-grid arithmetic dust cannot flip the outcome
        ratio = 1.0 if presented <= ability + 1e-9 else 0.0
        history.append(
            PerformanceRecord(
                question_index=index,
                presented_difficulty=presented,
                mark_ratio=ratio,
                hints_used=0,
            )
        )
    return trace
