"""Training-dynamics cartography: confidence / variability / correctness.

Consumes a rectangular per-epoch dynamics log (any trainer can produce
one), computes the per-example statistics, assigns the easy-to-learn,
ambiguous and hard-to-learn groups by rank, and exports a data map.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from nlifoundry.curriculum import (
    GROUP_AMBIGUOUS,
    GROUP_EASY,
    GROUP_HARD,
    difficulty_score,
)
from nlifoundry.errors import ConfigError
from nlifoundry.relations import Relation, parse_relation


@dataclass(frozen=True)
class DynamicsRecord:
    """The model's view of one example at one epoch: probability assigned
    to the gold label and the predicted label."""

    example_id: str
    epoch: int
    gold_prob: float
    predicted_label: Relation

    def to_json(self) -> dict:
        return {
            "example_id": self.example_id,
            "epoch": self.epoch,
            "gold_prob": self.gold_prob,
            "predicted_label": self.predicted_label.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DynamicsRecord":
        return cls(
            example_id=data["example_id"],
            epoch=int(data["epoch"]),
            gold_prob=float(data["gold_prob"]),
            predicted_label=parse_relation(data["predicted_label"]),
        )


@dataclass
class CartographyPoint:
    example_id: str
    confidence: float
    variability: float
    correctness: float
    groups: frozenset[str] = field(default_factory=frozenset)
    score: float = 0.0


def compute_points(
    records: list[DynamicsRecord], gold: dict[str, Relation]
) -> list[CartographyPoint]:
    """Aggregate a rectangular dynamics log into one point per example.

    Confidence is the mean of the gold-label probability over epochs,
    variability its population standard deviation, correctness the
    fraction of epochs whose prediction matched the gold label. Every
    example must cover the same epoch set, with at least two epochs.
    """
    per_example: dict[str, dict[int, DynamicsRecord]] = {}
    for record in records:
        epochs = per_example.setdefault(record.example_id, {})
        if record.epoch in epochs:
            raise ValueError(
                f"duplicate record for example {record.example_id!r} "
                f"epoch {record.epoch}"
            )
        epochs[record.epoch] = record
    if not per_example:
        return []

    reference_ids = list(per_example)
    reference_epochs = set(per_example[reference_ids[0]])
    if len(reference_epochs) < 2:
        raise ValueError("need at least two epochs of dynamics")
    for example_id, epochs in per_example.items():
        if set(epochs) != reference_epochs:
            raise ValueError(
                f"example {example_id!r} covers epochs {sorted(epochs)}, "
                f"expected {sorted(reference_epochs)}"
            )

    ordered_epochs = sorted(reference_epochs)
    points: list[CartographyPoint] = []
    for example_id in reference_ids:
        if example_id not in gold:
            raise ValueError(f"example {example_id!r} has no gold label")
        label = gold[example_id]
        probs = np.array(
            [per_example[example_id][e].gold_prob for e in ordered_epochs]
        )
        correct = np.array(
            [per_example[example_id][e].predicted_label is label
             for e in ordered_epochs]
        )
        confidence = float(probs.mean())
        variability = float(probs.std())  # population (divide-by-E) deviation
        points.append(
            CartographyPoint(
                example_id=example_id,
                confidence=confidence,
                variability=variability,
                correctness=float(correct.mean()),
                score=difficulty_score(confidence, min(1.0, variability)),
            )
        )
    return points


def assign_groups(
    points: list[CartographyPoint], fraction: float = 1 / 3
) -> list[CartographyPoint]:
    """Rank-based group assignment; groups may overlap and need not cover.

    E2L is the top ceil(fraction*n) points by confidence, H2L the bottom
    that many, A the top that many by variability. Ties break by example
    id. Returns new points; input order is preserved.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"group fraction must be in (0, 1], got {fraction}")
    n = len(points)
    if n == 0:
        return []
    k = min(n, math.ceil(fraction * n))
    easy = {
        p.example_id
        for p in sorted(points, key=lambda p: (-p.confidence, p.example_id))[:k]
    }
    hard = {
        p.example_id
        for p in sorted(points, key=lambda p: (p.confidence, p.example_id))[:k]
    }
    ambiguous = {
        p.example_id
        for p in sorted(points, key=lambda p: (-p.variability, p.example_id))[:k]
    }
    out = []
    for point in points:
        groups = set()
        if point.example_id in easy:
            groups.add(GROUP_EASY)
        if point.example_id in ambiguous:
            groups.add(GROUP_AMBIGUOUS)
        if point.example_id in hard:
            groups.add(GROUP_HARD)
        out.append(
            CartographyPoint(
                example_id=point.example_id,
                confidence=point.confidence,
                variability=point.variability,
                correctness=point.correctness,
                groups=frozenset(groups),
                score=point.score,
            )
        )
    return out


def group_pools(points: list[CartographyPoint]) -> dict[str, list[str]]:
    pools: dict[str, list[str]] = {GROUP_EASY: [], GROUP_AMBIGUOUS: [], GROUP_HARD: []}
    for point in points:
        for group in point.groups:
            pools[group].append(point.example_id)
    return pools


def write_dynamics(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json()) + "\n")


def read_dynamics(path) -> list[DynamicsRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                out.append(DynamicsRecord.from_json(json.loads(line)))
    return out


CSV_COLUMNS = ["example_id", "confidence", "variability", "correctness",
               "groups", "score"]


def write_points_csv(points: list[CartographyPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for point in points:
            writer.writerow(
                [
                    point.example_id,
                    f"{point.confidence:.10g}",
                    f"{point.variability:.10g}",
                    f"{point.correctness:.10g}",
                    "|".join(sorted(point.groups)),
                    f"{point.score:.10g}",
                ]
            )


def read_points_csv(path) -> list[CartographyPoint]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            out.append(
                CartographyPoint(
                    example_id=row["example_id"],
                    confidence=float(row["confidence"]),
                    variability=float(row["variability"]),
                    correctness=float(row["correctness"]),
                    groups=frozenset(g for g in row["groups"].split("|") if g),
                    score=float(row["score"]),
                )
            )
    return out


def plot_map(points: list[CartographyPoint], path) -> None:
    """Scatter of variability (x) vs confidence (y) colored by binned
    correctness, with marginal histograms of all three statistics."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    figure = plt.figure(figsize=(11, 6))
    grid = figure.add_gridspec(3, 2, width_ratios=(2.6, 1), hspace=0.55, wspace=0.25)
    scatter_ax = figure.add_subplot(grid[:, 0])
    hist_axes = [figure.add_subplot(grid[i, 1]) for i in range(3)]

    if points:
        variability = [p.variability for p in points]
        confidence = [p.confidence for p in points]
        correctness = [p.correctness for p in points]
        bins = np.clip((np.array(correctness) * 5).astype(int), 0, 4)
        colors = plt.get_cmap("coolwarm_r")(bins / 4)
        scatter_ax.scatter(variability, confidence, c=colors, s=12, alpha=0.7,
                           linewidths=0)
        for ax, values, label in zip(
            hist_axes,
            (confidence, variability, correctness),
            ("confidence", "variability", "correctness"),
        ):
            ax.hist(values, bins=20, color="#4878a8")
            ax.set_title(label, fontsize=9)
    scatter_ax.set_xlabel("variability")
    scatter_ax.set_ylabel("confidence")
    scatter_ax.set_title("training dynamics map")
    figure.savefig(path)
    plt.close(figure)


def export_map(points: list[CartographyPoint], csv_path, plot_path=None) -> None:
    """Write the CSV data map and, when requested, the scatter image."""
    write_points_csv(points, csv_path)
    if plot_path is not None:
        plot_map(points, plot_path)
