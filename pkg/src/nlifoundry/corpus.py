"""Corpus persistence, stratified splitting, statistics and oversampling."""

from __future__ import annotations

import csv
import json
import math
import random
import warnings
from dataclasses import dataclass, field

from nlifoundry.errors import ConfigError, FormatError
from nlifoundry.labeler import LabeledPair
from nlifoundry.relations import RELATIONS, Relation, parse_relation
from nlifoundry.textnorm import tokenize_words

SPLITS = ("train", "val", "test")


@dataclass
class Corpus:
    """Labeled pairs plus an (optional) split assignment per pair."""

    pairs: list[LabeledPair]
    split_assignment: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        known = {p.pair_id for p in self.pairs}
        for pair_id, split in self.split_assignment.items():
            if pair_id not in known:
                raise ValueError(f"split assignment for unknown pair {pair_id!r}")
            if split not in SPLITS:
                raise ValueError(f"unknown split {split!r} for pair {pair_id!r}")

    def split_of(self, pair_id: str) -> str:
        return self.split_assignment.get(pair_id, "unassigned")

    def pairs_in(self, split: str) -> list[LabeledPair]:
        return [p for p in self.pairs if self.split_of(p.pair_id) == split]


def stratified_split(
    corpus: Corpus,
    ratios: tuple[float, float, float] = (0.906, 0.047, 0.047),
    seed: int = 0,
) -> Corpus:
    """Assign train/val/test per class with largest-remainder allocation.

    Within each class, pairs are shuffled with the seed and dealt so that
    per-class split proportions match ``ratios`` as closely as integer
    counts allow. A class with fewer pairs than populated splits goes
    entirely to train, with a warning.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"ratios must be three non-negative numbers: {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)}")
    if ratios[0] <= 0:
        raise ConfigError("train ratio must be positive")

    by_class: dict[Relation, list[LabeledPair]] = {}
    for pair in corpus.pairs:
        by_class.setdefault(pair.label, []).append(pair)

    positive_splits = sum(1 for r in ratios if r > 0)
    rng = random.Random(seed)
    assignment: dict[str, str] = {}
    for relation in RELATIONS:
        members = by_class.get(relation, [])
        if not members:
            continue
        if len(members) < positive_splits:
            warnings.warn(
                f"class {relation.value!r} has {len(members)} pair(s), fewer than "
                f"{positive_splits} splits; assigning all to train",
                stacklevel=2,
            )
            for pair in members:
                assignment[pair.pair_id] = "train"
            continue
        shuffled = members[:]
        rng.shuffle(shuffled)
        counts = _largest_remainder(len(members), ratios)
        cursor = 0
        for split, count in zip(SPLITS, counts):
            for pair in shuffled[cursor : cursor + count]:
                assignment[pair.pair_id] = split
            cursor += count
    return Corpus(pairs=corpus.pairs, split_assignment=assignment)


def _largest_remainder(total: int, ratios: tuple[float, ...]) -> list[int]:
    quotas = [total * r for r in ratios]
    counts = [math.floor(q) for q in quotas]
    remainder = total - sum(counts)
    order = sorted(
        range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in order[:remainder]:
        counts[i] += 1
    return counts


@dataclass
class StatsCell:
    count: int
    avg_premise_words: float
    avg_hypothesis_words: float
    avg_overlap_ratio: float


@dataclass
class CorpusStats:
    """Per (split x class) counts, average word counts and overlap ratios.

    ``cells`` maps split -> row name (class value or "overall") -> cell.
    Splits with no pairs have no entry at all rather than zero-filled rows.
    """

    cells: dict[str, dict[str, StatsCell]]

    def to_json(self) -> dict:
        return {
            split: {name: vars(cell) for name, cell in rows.items()}
            for split, rows in self.cells.items()
        }


def overlap_ratio(premise: str, hypothesis: str) -> float:
    """Jaccard overlap of the two word sets (1.0 for two empty texts)."""
    a = set(tokenize_words(premise))
    b = set(tokenize_words(hypothesis))
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def compute_stats(corpus: Corpus) -> CorpusStats:
    """Word-count and overlap statistics per split and class."""
    groups: dict[str, dict[Relation, list[LabeledPair]]] = {}
    for pair in corpus.pairs:
        split = corpus.split_of(pair.pair_id)
        groups.setdefault(split, {}).setdefault(pair.label, []).append(pair)

    def cell(pairs: list[LabeledPair]) -> StatsCell:
        n = len(pairs)
        return StatsCell(
            count=n,
            avg_premise_words=sum(len(tokenize_words(p.premise)) for p in pairs) / n,
            avg_hypothesis_words=sum(len(tokenize_words(p.hypothesis)) for p in pairs)
            / n,
            avg_overlap_ratio=sum(overlap_ratio(p.premise, p.hypothesis) for p in pairs)
            / n,
        )

    cells: dict[str, dict[str, StatsCell]] = {}
    for split, by_class in groups.items():
        rows: dict[str, StatsCell] = {}
        everything: list[LabeledPair] = []
        for relation in RELATIONS:
            members = by_class.get(relation)
            if members:
                rows[relation.value] = cell(members)
                everything.extend(members)
        rows["overall"] = cell(everything)
        cells[split] = rows
    return CorpusStats(cells=cells)


def format_stats_table(stats: CorpusStats) -> str:
    """Render a class-distribution report shaped like the corpus summary
    table: counts, average words and overlap per split."""
    splits = [s for s in (*SPLITS, "unassigned") if s in stats.cells]
    header = ["relation"]
    for metric in ("count", "premise_words", "hypothesis_words", "overlap"):
        header += [f"{metric}/{s}" for s in splits]
    rows = [header]
    for name in [r.value for r in RELATIONS] + ["overall"]:
        row = [name]
        for metric in ("count", "avg_premise_words", "avg_hypothesis_words",
                       "avg_overlap_ratio"):
            for split in splits:
                cell = stats.cells[split].get(name)
                if cell is None:
                    row.append("-")
                elif metric == "count":
                    row.append(str(cell.count))
                else:
                    row.append(f"{getattr(cell, metric):.2f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join(
        "  ".join(value.ljust(width) for value, width in zip(row, widths))
        for row in rows
    )


def oversample(
    pairs: list[LabeledPair],
    seed: int = 0,
    classes: tuple[Relation, ...] = RELATIONS,
) -> list[str]:
    """Balance class counts by repeating minority-class pair ids.

    Returns the original ids (input order) followed by seeded
    uniform-with-replacement copies, grouped by class, so that every class
    reaches the majority count. An empty class cannot be balanced.
    """
    by_class: dict[Relation, list[str]] = {c: [] for c in classes}
    for pair in pairs:
        if pair.label in by_class:
            by_class[pair.label].append(pair.pair_id)
    empty = [c.value for c in classes if not by_class[c]]
    if empty:
        raise ConfigError(f"cannot oversample: empty class(es) {empty}")
    majority = max(len(ids) for ids in by_class.values())
    rng = random.Random(seed)
    out = [p.pair_id for p in pairs if p.label in by_class]
    for relation in classes:
        ids = by_class[relation]
        out.extend(rng.choice(ids) for _ in range(majority - len(ids)))
    return out


def write_corpus(corpus: Corpus, path) -> None:
    """JSONL persistence; the split assignment rides on each pair line."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for pair in corpus.pairs:
            record = pair.to_json()
            split = corpus.split_of(pair.pair_id)
            if split != "unassigned":
                record["split"] = split
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_corpus(path) -> Corpus:
    pairs: list[LabeledPair] = []
    assignment: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                pair = LabeledPair.from_json(record)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise FormatError(f"bad pair record: {exc}", lineno) from exc
            pairs.append(pair)
            if "split" in record:
                assignment[pair.pair_id] = record["split"]
    return Corpus(pairs=pairs, split_assignment=assignment)


def write_tsv(corpus: Corpus, path, split: str | None = None) -> None:
    """Interchange export: premise, hypothesis, label columns."""
    selected = corpus.pairs if split is None else corpus.pairs_in(split)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(["premise", "hypothesis", "label"])
        for pair in selected:
            writer.writerow([pair.premise, pair.hypothesis, pair.label.value])


_COLUMN_ALIASES = {
    "premise": "premise",
    "sentence1": "premise",
    "text_a": "premise",
    "hypothesis": "hypothesis",
    "sentence2": "hypothesis",
    "text_b": "hypothesis",
    "label": "label",
    "relation": "label",
    "gold_label": "label",
}


def read_table(path, delimiter: str | None = None) -> list[LabeledPair]:
    """Read a premise/hypothesis/label table (released corpora, TSV/CSV).

    The delimiter defaults on the file extension (tab for .tsv, comma
    otherwise). Header columns are matched case-insensitively against
    common aliases; the label accepts "causal" for the reasoning class.
    Unknown labels raise a row-level error with the line number.
    """
    path = str(path)
    if delimiter is None:
        delimiter = "\t" if path.endswith(".tsv") else ","
    pairs: list[LabeledPair] = []
    with open(path, "r", encoding="utf-8-sig", newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            return []
        columns: dict[str, int] = {}
        for index, name in enumerate(header):
            canonical = _COLUMN_ALIASES.get(name.strip().lower())
            if canonical and canonical not in columns:
                columns[canonical] = index
        missing = {"premise", "hypothesis", "label"} - set(columns)
        if missing:
            raise FormatError(
                f"missing column(s) {sorted(missing)} in header {header!r}", 1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                label = parse_relation(row[columns["label"]])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"bad label: {exc}", lineno) from exc
            try:
                premise = row[columns["premise"]]
                hypothesis = row[columns["hypothesis"]]
            except IndexError as exc:
                raise FormatError("row has too few columns", lineno) from exc
            pairs.append(
                LabeledPair(
                    pair_id=f"row-{lineno}",
                    premise=premise,
                    hypothesis=hypothesis,
                    label=label,
                )
            )
    return pairs
