import math

import numpy as np
import pytest

from nlifoundry.curriculum import (
    PacingConfig,
    Schedule,
    difficulty_score,
    length_scores,
    paced_prefix_size,
    read_schedule,
    schedule_cart_cl,
    schedule_cart_stra_clpp,
    schedule_scored,
    schedule_standard,
    similarity_scores,
    write_schedule,
)
from nlifoundry.errors import ConfigError
from nlifoundry.labeler import LabeledPair
from nlifoundry.relations import RELATIONS, Relation


class TestDifficultyScore:
    def test_branch_values(self):
        assert difficulty_score(0.9, 0.1) == pytest.approx(0.2, abs=1e-12)
        assert difficulty_score(0.5, 0.2) == pytest.approx(2.3, abs=1e-12)

    def test_endpoints(self):
        assert difficulty_score(1.0, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert difficulty_score(0.0, 0.0) == pytest.approx(3.0, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            difficulty_score(1.2, 0.0)
        with pytest.raises(ValueError):
            difficulty_score(0.5, -0.1)

    def test_image_and_monotonicity_fuzz(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(0, 1, size=(2000, 2))
        for c, v in values:
            assert 0.0 <= difficulty_score(c, v) <= 3.0
        # decreasing in confidence on each branch, v fixed
        for v in rng.uniform(0, 1, size=50):
            highs = sorted(rng.uniform(0.5001, 1.0, size=10))
            lows = sorted(rng.uniform(0.0, 0.5, size=10))
            for pool in (highs, lows):
                scores = [difficulty_score(c, v) for c in pool]
                assert all(a >= b for a, b in zip(scores, scores[1:]))
        # increasing in variability on the confident branch, decreasing on the other
        for c in rng.uniform(0.5001, 1.0, size=25):
            vs = sorted(rng.uniform(0, 1, size=10))
            scores = [difficulty_score(c, v) for v in vs]
            assert all(a <= b for a, b in zip(scores, scores[1:]))
        for c in rng.uniform(0.0, 0.5, size=25):
            vs = sorted(rng.uniform(0, 1, size=10))
            scores = [difficulty_score(c, v) for v in vs]
            assert all(a >= b for a, b in zip(scores, scores[1:]))


def ids(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i:03d}" for i in range(n)]


class TestScheduleStandard:
    def test_shape(self):
        schedule = schedule_standard(ids("p", 6), PacingConfig(3, 2, seed=0))
        assert len(schedule.batches) == 3
        assert all(len(b) == 2 for b in schedule.batches)
        assert schedule.phase_boundary == 0

    def test_deterministic(self):
        pool = ids("p", 10)
        a = schedule_standard(pool, PacingConfig(5, 3, seed=4))
        b = schedule_standard(pool, PacingConfig(5, 3, seed=4))
        assert a.batches == b.batches

    def test_coverage_when_draws_reach_pool(self):
        """Permutation cycling covers the pool once draws >= pool size."""
        pool = ids("p", 30)
        covered = []
        for seed in range(100):
            schedule = schedule_standard(pool, PacingConfig(10, 3, seed=seed))
            seen = {i for batch in schedule.batches for i in batch}
            covered.append(len(seen) / len(pool))
        assert sum(covered) / len(covered) > 0.95

    def test_empty_pool_rejected(self):
        with pytest.raises(ConfigError):
            schedule_standard([], PacingConfig(2, 2))


class TestScheduleCartCl:
    def groups(self):
        return {
            "E2L": ids("e", 10),
            "A": ids("a", 10),
            "H2L": ids("h", 10),
        }

    @pytest.mark.parametrize("n,expected", [(8, (2, 2, 4)), (4, (1, 1, 2))])
    def test_segment_structure(self, n, expected):
        schedule = schedule_cart_cl(self.groups(), PacingConfig(n, 4, seed=1))
        assert len(schedule.batches) == n
        assert schedule.phase_boundary == n
        boundaries = np.cumsum((0,) + expected)
        for segment, prefix in zip(range(3), "eah"):
            for batch in schedule.batches[boundaries[segment]:boundaries[segment + 1]]:
                assert all(i.startswith(prefix) for i in batch)

    def test_small_pool_sampled_with_replacement(self):
        groups = {"E2L": ["only"], "A": ids("a", 3), "H2L": ids("h", 3)}
        schedule = schedule_cart_cl(groups, PacingConfig(4, 4, seed=0))
        assert schedule.batches[0] == ["only"] * 4

    def test_empty_group_named_in_error(self):
        groups = {"E2L": ids("e", 3), "A": [], "H2L": ids("h", 3)}
        with pytest.raises(ConfigError, match="'A'"):
            schedule_cart_cl(groups, PacingConfig(4, 2))


class TestScheduleScored:
    def test_length_ordering(self):
        pairs = [
            LabeledPair("short", "a b c", "d e", Relation.NEUTRAL),
            LabeledPair("long", " ".join(["w"] * 15), " ".join(["v"] * 5),
                        Relation.NEUTRAL),
            LabeledPair("mid", " ".join(["w"] * 8), " ".join(["v"] * 4),
                        Relation.NEUTRAL),
        ]
        scores = length_scores(pairs)
        ordered = sorted(scores, key=lambda i: (scores[i], i))
        assert ordered == ["short", "mid", "long"]

    def test_phase_boundary_half(self):
        scores = {i: float(k) for k, i in enumerate(ids("p", 20))}
        schedule = schedule_scored(scores, PacingConfig(10, 4, seed=0))
        assert schedule.phase_boundary == 5

    def test_pacing_prefix(self):
        assert paced_prefix_size(1, 2, 10) == 5
        assert paced_prefix_size(2, 2, 10) == 10
        assert paced_prefix_size(1, 3, 10) == 4

    def test_nested_availability(self):
        pool = ids("p", 40)
        scores = {i: float(hash(i) % 97) for i in pool}
        cfg = PacingConfig(12, 5, curriculum_fraction=0.5, seed=2)
        schedule = schedule_scored(scores, cfg, pool=pool)
        ordered = sorted(pool, key=lambda i: (scores[i], i))
        t_cur = schedule.phase_boundary
        previous: set[str] = set()
        for t in range(1, t_cur + 1):
            available = set(ordered[: paced_prefix_size(t, t_cur, len(pool))])
            assert previous <= available
            assert set(schedule.batches[t - 1]) <= available
            previous = available
        assert ordered[0] in {i for b in schedule.batches[:1] for i in b} or (
            ordered[0] in available
        )

    def test_minimal_score_available_from_first_batch(self):
        pool = ids("p", 9)
        scores = {i: float(k) for k, i in enumerate(pool)}
        cfg = PacingConfig(4, 3, curriculum_fraction=1.0, seed=5)
        schedule = schedule_scored(scores, cfg, pool=pool)
        first_available = paced_prefix_size(1, schedule.phase_boundary, len(pool))
        assert first_available >= 1
        assert set(schedule.batches[0]) <= set(pool[:first_available])

    def test_missing_score_errors(self):
        with pytest.raises(ConfigError, match="missing score"):
            schedule_scored({"a": 1.0}, PacingConfig(2, 2), pool=["a", "b"])

    def test_similarity_scores_most_similar_first(self):
        features = {
            "same": np.array([1.0, 0.0, 1.0, 0.0]),
            "orthogonal": np.array([1.0, 0.0, 0.0, 1.0]),
            "opposite": np.array([1.0, 0.0, -1.0, 0.0]),
        }
        scores = similarity_scores(features)
        ordered = sorted(scores, key=lambda i: (scores[i], i))
        assert ordered == ["same", "orthogonal", "opposite"]


class TestScheduleCartStra:
    def setup_data(self, sizes=(8, 4, 2, 1)):
        labels: dict[str, Relation] = {}
        scores: dict[str, float] = {}
        for relation, size in zip(RELATIONS, sizes):
            for i in range(size):
                example_id = f"{relation.value[:4]}{i:02d}"
                labels[example_id] = relation
                scores[example_id] = float(i)
        return scores, labels

    def test_every_batch_class_balanced(self):
        scores, labels = self.setup_data()
        schedule = schedule_cart_stra_clpp(scores, labels, PacingConfig(10, 8, seed=0))
        for batch in schedule.batches:
            assert len(batch) == 8
            per_class = {r: 0 for r in RELATIONS}
            for example_id in batch:
                per_class[labels[example_id]] += 1
            assert set(per_class.values()) == {2}

    def test_first_batch_takes_minimal_scores_per_class(self):
        scores, labels = self.setup_data(sizes=(8, 8, 8, 8))
        schedule = schedule_cart_stra_clpp(scores, labels, PacingConfig(6, 8, seed=1))
        first = schedule.batches[0]
        for relation in RELATIONS:
            members = [i for i in first if labels[i] is relation]
            member_scores = sorted(scores[i] for i in members)
            class_minimums = sorted(
                scores[i] for i in labels if labels[i] is relation
            )[: len(members)]
            assert member_scores == class_minimums

    def test_minority_of_one_recurs_everywhere(self):
        scores, labels = self.setup_data(sizes=(5, 5, 5, 1))
        singleton = [i for i, l in labels.items() if l is Relation.NEUTRAL]
        schedule = schedule_cart_stra_clpp(scores, labels, PacingConfig(7, 4, seed=2))
        for batch in schedule.batches:
            assert singleton[0] in batch

    def test_indivisible_batch_size_errors_with_hint(self):
        scores, labels = self.setup_data()
        with pytest.raises(ConfigError, match="multiple of 4"):
            schedule_cart_stra_clpp(scores, labels, PacingConfig(4, 6))

    def test_empty_class_errors(self):
        scores, labels = self.setup_data(sizes=(4, 4, 4, 0))
        # only three classes present: batch of 6 is divisible, runs fine
        schedule = schedule_cart_stra_clpp(scores, labels, PacingConfig(3, 6, seed=0))
        assert all(len(b) == 6 for b in schedule.batches)


class TestScheduleIo:
    def test_round_trip_and_byte_identical_for_same_seed(self, tmp_path):
        scores = {i: float(k) for k, i in enumerate(ids("p", 12))}
        cfg = PacingConfig(6, 4, seed=9)
        schedule = schedule_scored(scores, cfg)
        path_a, path_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_schedule(schedule, path_a)
        write_schedule(schedule_scored(scores, cfg), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()
        loaded = read_schedule(path_a)
        assert loaded.batches == schedule.batches
        assert loaded.phase_boundary == schedule.phase_boundary

    def test_phase_markers(self, tmp_path):
        scores = {i: float(k) for k, i in enumerate(ids("p", 4))}
        schedule = schedule_scored(scores, PacingConfig(4, 2, seed=0))
        path = tmp_path / "s.jsonl"
        write_schedule(schedule, path)
        import json

        phases = [
            json.loads(line)["phase"]
            for line in path.read_text().splitlines()
            if '"batch"' in line
        ]
        assert phases == ["curriculum", "curriculum", "standard", "standard"]
