"""Difficulty scoring and curriculum batch schedules.

A schedule is the full sequence of training mini-batches (example-id
lists). Strategies differ in where batches draw from: the whole pool
(standard), difficulty-group segments (cart), a growing easiest-first
prefix (scored: cartpp / length / sts), or per-class easiest-first queues
with stratified batches (cartstrapp).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

from nlifoundry.errors import ConfigError
from nlifoundry.relations import RELATIONS, Relation
from nlifoundry.textnorm import tokenize_words

GROUP_EASY, GROUP_AMBIGUOUS, GROUP_HARD = "E2L", "A", "H2L"


def difficulty_score(confidence: float, variability: float) -> float:
    """Joint difficulty score on [0, 3] from confidence and variability.

    For confidently learned examples (confidence strictly above 0.5) the
    score is ``1 - confidence + variability``, rewarding stability; for the
    rest it is ``3 - confidence - variability``, so hard, low-variability
    examples score highest and ambiguous ones land in between.
    """
    if not 0.0 <= confidence <= 1.0:
        raise ValueError(f"confidence must be in [0, 1], got {confidence}")
    if not 0.0 <= variability <= 1.0:
        raise ValueError(f"variability must be in [0, 1], got {variability}")
    if confidence > 0.5:
        return 1.0 - confidence + variability
    return 3.0 - confidence - variability


@dataclass
class PacingConfig:
    """Batch-count, batch-size and pacing parameters for every strategy."""

    total_batches: int
    batch_size: int
    curriculum_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.total_batches < 1:
            raise ConfigError("total_batches must be at least 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if not 0.0 <= self.curriculum_fraction <= 1.0:
            raise ConfigError("curriculum_fraction must be in [0, 1]")


@dataclass
class Schedule:
    """Ordered batches plus the index of the first standard-phase batch."""

    batches: list[list[str]]
    phase_boundary: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.phase_boundary <= len(self.batches):
            raise ValueError("phase_boundary out of range")

    def phase_of(self, batch_index: int) -> str:
        return "curriculum" if batch_index < self.phase_boundary else "standard"


def write_schedule(schedule: Schedule, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps({"meta": schedule.meta,
                                 "phase_boundary": schedule.phase_boundary}) + "\n")
        for index, ids in enumerate(schedule.batches):
            handle.write(
                json.dumps(
                    {"batch": index, "phase": schedule.phase_of(index), "ids": ids}
                )
                + "\n"
            )


def read_schedule(path) -> Schedule:
    meta: dict = {}
    boundary = None
    batches: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            if "meta" in record:
                meta = record["meta"]
                boundary = record.get("phase_boundary", 0)
                continue
            batches.append(list(record["ids"]))
            if boundary is None and record.get("phase") == "standard":
                boundary = record["batch"]
    if boundary is None:
        boundary = len(batches)
    return Schedule(batches=batches, phase_boundary=boundary, meta=meta)


class _PermutationStream:
    """Endless stream over a pool via seeded reshuffled permutations."""

    def __init__(self, pool: list[str], rng: random.Random, ordered_first: list[str] | None = None):
        if not pool:
            raise ConfigError("cannot schedule from an empty pool")
        self._pool = list(pool)
        self._rng = rng
        self._current = list(ordered_first) if ordered_first is not None else None
        self._cursor = 0
        if self._current is None:
            self._reshuffle()

    def _reshuffle(self):
        self._current = self._pool[:]
        self._rng.shuffle(self._current)
        self._cursor = 0

    def reshuffle(self):
        self._reshuffle()

    def take(self, count: int) -> list[str]:
        out: list[str] = []
        while len(out) < count:
            if self._cursor >= len(self._current):
                self._reshuffle()
            out.append(self._current[self._cursor])
            self._cursor += 1
        return out


def schedule_standard(pool: list[str], cfg: PacingConfig) -> Schedule:
    """Conventional training: seeded uniform batches over the pool.

    Batches are cut from successive seeded permutations of the pool, so
    whenever total draws reach the pool size every id has appeared.
    """
    rng = random.Random(cfg.seed)
    stream = _PermutationStream(pool, rng)
    batches = [stream.take(cfg.batch_size) for _ in range(cfg.total_batches)]
    return Schedule(
        batches=batches,
        phase_boundary=0,
        meta={"strategy": "standard", "seed": cfg.seed, "batch_size": cfg.batch_size},
    )


def schedule_cart_cl(groups: dict[str, list[str]], cfg: PacingConfig) -> Schedule:
    """Difficulty-group curriculum: easy, then ambiguous, then hard.

    With N total batches: the first N//4 are sampled from the easy group,
    the next N//4 from the ambiguous group and the remainder from the hard
    group. Batches sample without replacement when the group pool is large
    enough, with replacement otherwise. There is no standard phase.
    """
    for name in (GROUP_EASY, GROUP_AMBIGUOUS, GROUP_HARD):
        if not groups.get(name):
            raise ConfigError(f"cannot build cart schedule: group {name!r} is empty")
    quarter = cfg.total_batches // 4
    segments = [
        (GROUP_EASY, quarter),
        (GROUP_AMBIGUOUS, quarter),
        (GROUP_HARD, cfg.total_batches - 2 * quarter),
    ]
    rng = random.Random(cfg.seed)
    batches: list[list[str]] = []
    for name, count in segments:
        pool = groups[name]
        for _ in range(count):
            if len(pool) >= cfg.batch_size:
                batches.append(rng.sample(pool, cfg.batch_size))
            else:
                batches.append([rng.choice(pool) for _ in range(cfg.batch_size)])
    return Schedule(
        batches=batches,
        phase_boundary=cfg.total_batches,
        meta={"strategy": "cart", "seed": cfg.seed, "batch_size": cfg.batch_size,
              "segments": [[name, count] for name, count in segments]},
    )


def paced_prefix_size(batch_number: int, curriculum_batches: int, pool_size: int) -> int:
    """Linear pacing: available prefix size at curriculum batch t (1-based)."""
    return min(pool_size, math.ceil(batch_number / curriculum_batches * pool_size))


def schedule_scored(
    scores: dict[str, float],
    cfg: PacingConfig,
    pool: list[str] | None = None,
    direction: str = "ascending",
    strategy: str = "scored",
) -> Schedule:
    """Easiest-first curriculum over any difficulty score.

    The pool is sorted by score (ties by id). During the curriculum phase
    (the first ceil(curriculum_fraction * N) batches) batch t draws
    uniformly from the easiest ceil(t/T * n) pool entries; the standard
    phase draws uniformly from the whole pool. Length- and
    similarity-based curricula are this schedule with their own scores.
    """
    if direction not in ("ascending", "descending"):
        raise ConfigError(f"unknown direction {direction!r}")
    if pool is None:
        pool = sorted(scores)
    missing = [i for i in pool if i not in scores]
    if missing:
        raise ConfigError(f"missing scores for pool example(s): {missing[:5]}")
    if not pool:
        raise ConfigError("cannot schedule from an empty pool")
    sign = 1.0 if direction == "ascending" else -1.0
    ordered = sorted(pool, key=lambda i: (sign * scores[i], i))
    t_cur = math.ceil(cfg.curriculum_fraction * cfg.total_batches)
    rng = random.Random(cfg.seed)
    batches: list[list[str]] = []
    for t in range(1, t_cur + 1):
        available = ordered[: paced_prefix_size(t, t_cur, len(ordered))]
        batches.append(rng.choices(available, k=cfg.batch_size))
    for _ in range(cfg.total_batches - t_cur):
        batches.append(rng.choices(ordered, k=cfg.batch_size))
    return Schedule(
        batches=batches,
        phase_boundary=t_cur,
        meta={"strategy": strategy, "seed": cfg.seed, "batch_size": cfg.batch_size,
              "direction": direction, "pool_size": len(ordered)},
    )


def schedule_cart_stra_clpp(
    scores: dict[str, float],
    labels: dict[str, Relation],
    cfg: PacingConfig,
) -> Schedule:
    """Stratified easiest-first curriculum: every batch is class-balanced.

    Within each class, examples are consumed in ascending difficulty-score
    order; each batch takes batch_size/K from every class. Exhausted class
    queues are reshuffled and cycled (this is what realizes oversampling).
    After the curriculum phase the queues are reshuffled once more and the
    standard phase continues with stratified-uniform batches.
    """
    classes = [c for c in RELATIONS if any(label is c for label in labels.values())]
    if not classes:
        raise ConfigError("no labeled examples to schedule")
    if cfg.batch_size % len(classes) != 0:
        raise ConfigError(
            f"batch size {cfg.batch_size} is not divisible by {len(classes)} "
            f"classes; pick a multiple of {len(classes)}"
        )
    per_class = cfg.batch_size // len(classes)
    by_class: dict[Relation, list[str]] = {c: [] for c in classes}
    for example_id, label in labels.items():
        by_class[label].append(example_id)
    missing = [i for i in labels if i not in scores]
    if missing:
        raise ConfigError(f"missing scores for example(s): {missing[:5]}")

    rng = random.Random(cfg.seed)
    streams = {}
    for relation in classes:
        ids = by_class[relation]
        if not ids:
            raise ConfigError(f"empty class {relation.value!r}")
        ordered = sorted(ids, key=lambda i: (scores[i], i))
        streams[relation] = _PermutationStream(ids, rng, ordered_first=ordered)

    t_cur = math.ceil(cfg.curriculum_fraction * cfg.total_batches)
    batches: list[list[str]] = []
    for index in range(cfg.total_batches):
        if index == t_cur:
            for stream in streams.values():
                stream.reshuffle()
        batch: list[str] = []
        for relation in classes:
            batch.extend(streams[relation].take(per_class))
        batches.append(batch)
    return Schedule(
        batches=batches,
        phase_boundary=t_cur,
        meta={"strategy": "cartstrapp", "seed": cfg.seed,
              "batch_size": cfg.batch_size, "classes": [c.value for c in classes]},
    )


def length_scores(pairs) -> dict[str, float]:
    """Length-based difficulty: premise plus hypothesis token count."""
    return {
        pair.pair_id: float(
            len(tokenize_words(pair.premise)) + len(tokenize_words(pair.hypothesis))
        )
        for pair in pairs
    }


def similarity_scores(features: dict[str, np.ndarray]) -> dict[str, float]:
    """Similarity-based difficulty from concatenated pair features.

    Each feature vector is the premise half followed by the hypothesis
    half; the score is the negated cosine similarity between the halves, so
    the most similar pairs sort first.
    """
    out: dict[str, float] = {}
    for example_id, vector in features.items():
        vector = np.asarray(vector, dtype=float)
        if vector.shape[0] % 2 != 0:
            raise ConfigError(
                "similarity scores need premise+hypothesis features of even length"
            )
        half = vector.shape[0] // 2
        premise, hypothesis = vector[:half], vector[half:]
        norm = np.linalg.norm(premise) * np.linalg.norm(hypothesis)
        cosine = float(premise @ hypothesis / norm) if norm else 0.0
        out[example_id] = -cosine
    return out
