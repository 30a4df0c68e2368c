import json
from fractions import Fraction
from statistics import median as stat_median

import pytest
from hypothesis import given, strategies as st

from metacq.analysis import (
    CSV_HEADER,
    POLICY_ROW_ORDER,
    Rating,
    RatingDataset,
    Skew,
    aggregate,
    build_report,
    cross_task_means,
    ingest_csv,
    policy_task_table,
    render_text,
    simulate_threshold_learner,
    skew_flag,
    stability_mad,
)
from metacq.core import PolicyKind
from metacq.errors import InvalidRatings
from metacq.policy import PolicyParams

OAO, STA, AIA = PolicyKind.ONE_AFTER_ONE, PolicyKind.STATIC, PolicyKind.ALL_IN_ALL

# Frozen expectations for the packaged study ratings, computed independently
# with exact rational arithmetic over the raw CSV.
FIXTURE_EXPECTED = {
    (1, OAO): dict(mean=90 / 45, median=2.0, mode=1, mad=44 / 45, smad=16 / 45),
    (1, STA): dict(mean=92 / 45, median=2.0, mode=1, mad=3128 / 4050, smad=0.3644444444444444),
    (1, AIA): dict(mean=99 / 45, median=2.0, mode=1, mad=53.2 / 45, smad=0.24888888888888888),
    (2, OAO): dict(mean=69 / 45, median=1.0, mode=1, mad=28.8 / 45, smad=0.3644444444444444),
    (2, STA): dict(mean=80 / 45, median=1.0, mode=1, mad=3220 / 4050, smad=0.17777777777777778),
    (2, AIA): dict(mean=89 / 45, median=2.0, mode=1, mad=0.8691358024691358, smad=0.3822222222222222),
}
FIXTURE_SKEWS = {
    (1, OAO): Skew.SYMMETRIC,
    (1, STA): Skew.SYMMETRIC,
    (1, AIA): Skew.RIGHT,
    (2, OAO): Skew.RIGHT,
    (2, STA): Skew.RIGHT,
    (2, AIA): Skew.SYMMETRIC,
}


def dataset(rows):
    """rows: (task, policy, question, participant, rating) tuples."""
    return RatingDataset(tuple(Rating(*row) for row in rows))


def uniform_dataset(values_by_question, task=1, policy=STA):
    rows = []
    for qid, values in values_by_question.items():
        for i, value in enumerate(values):
            rows.append(Rating(task, policy, qid, f"p{i}", value))
    return RatingDataset(tuple(rows))


class TestRatingValues:
    @pytest.mark.parametrize("value", [1, 2, 3, 4, 5])
    def test_likert_range_accepted(self, value):
        assert Rating(1, STA, "q", "p", value).rating == value

    @pytest.mark.parametrize("value", [0, 6, -1, 2.5, "3", True])
    def test_out_of_range_rejected(self, value):
        with pytest.raises(ValueError):
            Rating(1, STA, "q", "p", value)

    def test_unknown_task_rejected(self):
        with pytest.raises(ValueError):
            Rating(3, STA, "q", "p", 1)

    def test_duplicate_observation_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            dataset([(1, STA, "q", "p", 1), (1, STA, "q", "p", 2)])


class TestAggregate:
    @pytest.mark.parametrize(
        "values, mean, median, mode, mad",
        [
            ([2, 2, 2], 2.0, 2.0, 2, 0.0),
            ([1, 1, 1, 5], 2.0, 1.0, 1, 1.5),
            ([1, 2], 1.5, 1.5, 1, 0.5),  # mode tie breaks low
            ([1, 5, 5], 11 / 3, 5.0, 5, 16 / 9),
            ([3], 3.0, 3.0, 3, 0.0),
            ([1, 2, 3, 4, 5], 3.0, 3.0, 1, 1.2),
        ],
    )
    def test_examples(self, values, mean, median, mode, mad):
        stats = aggregate(values)
        assert stats.mean == pytest.approx(mean)
        assert stats.median == median
        assert stats.mode == mode
        assert stats.mad == pytest.approx(mad)
        assert stats.n == len(values)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_invalid_value_rejected(self):
        with pytest.raises(ValueError):
            aggregate([1, 2, 9])

    @given(st.lists(st.integers(1, 5), min_size=1, max_size=60))
    def test_matches_exact_rational_oracle(self, values):
        stats = aggregate(values)
        mean = Fraction(sum(values), len(values))
        mad = sum(abs(Fraction(v) - mean) for v in values) / len(values)
        counts = {v: values.count(v) for v in set(values)}
        best = max(counts.values())
        mode = min(v for v, c in counts.items() if c == best)
        assert stats.mean == pytest.approx(float(mean), abs=1e-12)
        assert stats.mad == pytest.approx(float(mad), abs=1e-12)
        assert stats.median == float(stat_median(values))
        assert stats.mode == mode

    @given(st.lists(st.integers(1, 5), min_size=1, max_size=30))
    def test_permutation_invariant(self, values):
        assert aggregate(values) == aggregate(list(reversed(values)))


class TestStability:
    def test_hand_computed_example(self):
        ds = uniform_dataset({"q1": [2], "q2": [2], "q3": [3]})
        # question means 2, 2, 3 -> centre 7/3 -> deviations 1/3, 1/3, 2/3
        assert stability_mad(ds, 1, STA) == pytest.approx(4 / 9)

    def test_perfectly_consistent_policy(self):
        ds = uniform_dataset({"q1": [2, 4], "q2": [3, 3], "q3": [1, 5]})
        # all three questions average 3.0 despite noisy raters
        assert stability_mad(ds, 1, STA) == 0.0
        assert aggregate(ds.ratings_for(1, STA)).mad > 0.0

    def test_missing_policy_rejected(self):
        ds = uniform_dataset({"q1": [2]})
        with pytest.raises(ValueError):
            stability_mad(ds, 1, OAO)


class TestCrossTaskMeans:
    def test_exact_identity_on_published_style_means(self):
        got = cross_task_means(
            {OAO: 1.9, STA: 2.0, AIA: 2.1},
            {OAO: 1.5, STA: 1.8, AIA: 1.9},
        )
        assert got == {OAO: 1.7, STA: 1.9, AIA: 2.0}

    def test_rounds_half_up(self):
        got = cross_task_means(
            {OAO: 1.8, STA: 1.0, AIA: 1.0},
            {OAO: 2.3, STA: 1.1, AIA: 1.0},
        )
        # (1.8 + 2.3) / 2 = 2.05: half-up gives 2.1, never banker's 2.0
        assert got[OAO] == 2.1
        assert got[STA] == pytest.approx(1.1)  # 1.05 rounds up too
        assert got[AIA] == 1.0

    def test_missing_policy_rejected(self):
        with pytest.raises(ValueError):
            cross_task_means({OAO: 1.9, STA: 2.0}, {OAO: 1.5, STA: 1.8, AIA: 1.9})


class TestSkew:
    @pytest.mark.parametrize(
        "values, expected",
        [
            ([1, 1, 1, 5], Skew.RIGHT),  # mean 2.0 vs median 1.0
            ([1, 5, 5, 5], Skew.LEFT),  # mean 4.0 vs median 5.0
            ([2, 2, 2], Skew.SYMMETRIC),
            ([1, 2, 3, 4, 5], Skew.SYMMETRIC),
        ],
    )
    def test_from_samples(self, values, expected):
        assert skew_flag(aggregate(values)) == expected

    def test_epsilon_boundary(self):
        from metacq.analysis import AggregateStats

        at_eps = AggregateStats(mean=2.05, median=2.0, mode=2, mad=0.0, n=3)
        over_eps = AggregateStats(mean=2.051, median=2.0, mode=2, mad=0.0, n=3)
        under = AggregateStats(mean=1.949, median=2.0, mode=2, mad=0.0, n=3)
        assert skew_flag(at_eps) == Skew.SYMMETRIC  # strict inequality
        assert skew_flag(over_eps) == Skew.RIGHT
        assert skew_flag(under) == Skew.LEFT


class TestIngest:
    def write(self, tmp_path, text):
        path = tmp_path / "r.csv"
        path.write_text(text, encoding="utf-8")
        return path

    def test_round_trip(self, tmp_path):
        path = self.write(
            tmp_path,
            "task,policy,question_id,participant_id,rating\n"
            "1,static,Q1,P1,3\n"
            "2,all-in-all,Q1,P1,5\n"
            "\n"
            "1,one-after-one,Q2,P2,1\n",
        )
        ds = ingest_csv(path)
        assert len(ds.records) == 3
        assert ds.ratings_for(1, STA) == [3]
        assert ds.tasks() == [1, 2]

    def test_header_must_match(self, tmp_path):
        path = self.write(tmp_path, "a,b,c,d,e\n1,static,Q1,P1,3\n")
        with pytest.raises(InvalidRatings, match="expected header"):
            ingest_csv(path)

    def test_empty_file(self, tmp_path):
        with pytest.raises(InvalidRatings, match="empty"):
            ingest_csv(self.write(tmp_path, ""))

    def test_problems_reported_with_line_numbers(self, tmp_path):
        path = self.write(
            tmp_path,
            "task,policy,question_id,participant_id,rating\n"
            "9,static,Q1,P1,3\n"
            "1,warp,Q1,P1,3\n"
            "1,static,Q1,P1,0\n"
            "1,static,Q1,P1,x\n"
            "1,static,,P1,3\n"
            "1,static,Q1,P2,3,extra\n"
            "1,static,Q9,P9,2\n"
            "1,static,Q9,P9,2\n",
        )
        with pytest.raises(InvalidRatings) as err:
            ingest_csv(path)
        message = str(err.value)
        assert "line 2: task" in message
        assert "line 3: unknown policy 'warp'" in message
        assert "line 4: rating" in message
        assert "line 5: rating" in message
        assert "line 6: empty question_id" in message
        assert "line 7: expected 5 fields" in message
        assert "line 9: duplicate" in message

    def test_packaged_fixture_loads(self, ratings_path):
        ds = ingest_csv(ratings_path)
        assert len(ds.records) == 270
        for task in (1, 2):
            for policy in POLICY_ROW_ORDER:
                assert len(ds.ratings_for(task, policy)) == 45
                assert len(ds.question_means(task, policy)) == 5


class TestFixtureNumbers:
    """The packaged study data must reproduce its frozen aggregates."""

    @pytest.fixture(scope="class")
    @staticmethod
    def ds(ratings_path):
        return ingest_csv(ratings_path)

    @pytest.mark.parametrize("task", [1, 2])
    def test_pooled_rows(self, ds, task):
        rows = policy_task_table(ds, task)
        assert [policy for policy, _ in rows] == list(POLICY_ROW_ORDER)
        for policy, stats in rows:
            expected = FIXTURE_EXPECTED[(task, policy)]
            assert stats.n == 45
            assert stats.mean == pytest.approx(expected["mean"], abs=1e-12)
            assert stats.median == expected["median"]
            assert stats.mode == expected["mode"]
            assert stats.mad == pytest.approx(expected["mad"], abs=1e-9)

    @pytest.mark.parametrize("task", [1, 2])
    def test_stability(self, ds, task):
        for policy in POLICY_ROW_ORDER:
            expected = FIXTURE_EXPECTED[(task, policy)]["smad"]
            got = stability_mad(ds, task, policy)
            assert got == pytest.approx(expected, abs=1e-9)
            assert got <= 0.4

    def test_skew_pattern(self, ds):
        for task in (1, 2):
            for policy, stats in policy_task_table(ds, task):
                assert skew_flag(stats) == FIXTURE_SKEWS[(task, policy)]

    def test_cross_task_summary(self, ds):
        report = build_report(ds)
        assert report["cross_task_means"] == {
            "one-after-one": 1.8,
            "static": 1.9,
            "all-in-all": 2.1,
        }


class TestReport:
    def test_shape_and_row_order(self, ratings_path):
        report = build_report(ingest_csv(ratings_path))
        assert sorted(report["tasks"]) == ["1", "2"]
        for task_block in report["tasks"].values():
            assert [r["policy"] for r in task_block["rows"]] == [
                "one-after-one",
                "static",
                "all-in-all",
            ]
            for row in task_block["rows"]:
                assert set(row) == {
                    "policy",
                    "n",
                    "mean",
                    "median",
                    "mode",
                    "mad",
                    "stability_mad",
                    "skew",
                }
        json.dumps(report)  # report must be plain serializable data

    def test_single_task_report_has_no_cross_means(self, ratings_path):
        report = build_report(ingest_csv(ratings_path), task=1)
        assert sorted(report["tasks"]) == ["1"]
        assert "cross_task_means" not in report

    def test_render_text(self, ratings_path):
        text = render_text(build_report(ingest_csv(ratings_path)))
        assert "Task 1" in text and "Task 2" in text
        assert "one-after-one" in text and "static" in text and "all-in-all" in text
        assert "Cross-task mean difficulty" in text
        assert "2.044" in text  # task 1 static mean, 3 decimals


class TestSimulation:
    def test_static_never_moves(self):
        trace = simulate_threshold_learner(0.9, STA, n_questions=6)
        assert trace == [0.5] * 6

    def test_strong_learner_walks_to_ceiling(self):
        trace = simulate_threshold_learner(1.0, OAO, n_questions=8)
        assert trace == pytest.approx([0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.0, 1.0])

    def test_weak_learner_walks_to_floor(self):
        trace = simulate_threshold_learner(0.0, OAO, n_questions=8)
        assert trace == pytest.approx([0.5, 0.4, 0.3, 0.2, 0.1, 0.0, 0.1, 0.0])

    def test_mid_learner_oscillates_around_ability(self):
        trace = simulate_threshold_learner(0.65, OAO, n_questions=12)
        tail = trace[3:]
        assert all(0.55 - 1e-9 <= d <= 0.75 + 1e-9 for d in tail)

    def test_whole_history_policy_saturates(self):
        trace = simulate_threshold_learner(1.0, AIA, n_questions=5)
        assert trace == pytest.approx([0.5, 0.8, 0.8, 0.8, 0.8])

    def test_custom_start_and_params(self):
        trace = simulate_threshold_learner(
            1.0, OAO, params=PolicyParams(step=0.2), n_questions=3, start=0.1
        )
        assert trace == pytest.approx([0.1, 0.3, 0.5])
