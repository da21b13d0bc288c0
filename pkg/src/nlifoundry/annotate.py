"""Re-annotation campaigns: task dealing, majority vote, agreement stats.

Campaign state is an append-only JSONL event log replayed on startup, so a
crash loses at most the vote being written. Automatic labels are kept in a
campaign-level map and never attached to, stored on, or served with a task.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nlifoundry.errors import ConfigError, FormatError
from nlifoundry.relations import RELATIONS, Relation, parse_relation

OPEN, COMPLETE, DISCARDED = "open", "complete", "discarded"

# Default annotator guidelines served alongside tasks: the task statement
# and the four category definitions, shown to every annotator.
DEFAULT_GUIDELINES = """\
# Annotation guidelines

You will be shown sentence pairs of the form (Sentence A, Sentence B),
without any additional context. Your task is to determine the relationship
between sentences A and B, choosing one of the following four options:

- **Contrastive**: one sentence presents a viewpoint or fact that differs
  from the other. Sentence B does not have to directly oppose Sentence A;
  comparisons, criticisms, or pointing out a limitation or a unique aspect
  all belong here.
- **Reasoning**: Sentence A provides a basis or rationale that leads to or
  explains the information in Sentence B. Look for a logical sequence where
  the first sentence sets up a foundation that the second builds upon or
  concludes from.
- **Entailment**: one sentence expands on or specifies the information
  given in the other, providing more details or a specific instance of the
  general idea of the first sentence.
- **Neutral**: the two sentences are unrelated, each standing on its own
  without referring to, supporting, or elaborating on the other. A pair
  that does not fit the other categories should be labeled neutral.

Keys 1-4 select Contrastive / Reasoning / Entailment / Neutral.
"""


class VoteRejected(Exception):
    """Vote violates a precondition (double vote, not assigned)."""


class NotFound(Exception):
    """Unknown task or annotator."""


@dataclass
class AnnotationTask:
    task_id: str
    pair_id: str
    premise: str
    hypothesis: str
    assigned: list[str]
    labels: dict[str, Relation] = field(default_factory=dict)
    status: str = OPEN
    final_label: Relation | None = None

    def to_view(self) -> dict:
        """The only serialization ever sent to an annotator."""
        return {
            "task_id": self.task_id,
            "premise": self.premise,
            "hypothesis": self.hypothesis,
        }

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "pair_id": self.pair_id,
            "premise": self.premise,
            "hypothesis": self.hypothesis,
            "assigned": list(self.assigned),
        }


def aggregate(labels) -> tuple[str, Relation | None]:
    """Strict-majority aggregation: (status, final label or None).

    A label needs more than half of the votes; otherwise the task is
    discarded. Symmetric in vote order.
    """
    votes = list(labels)
    counts = Counter(votes)
    top_label, top_count = counts.most_common(1)[0]
    if top_count > len(votes) / 2:
        return COMPLETE, top_label
    return DISCARDED, None


@dataclass
class Campaign:
    required_votes: int
    annotators: list[str]
    tasks: dict[str, AnnotationTask]
    auto_labels: dict[str, Relation] = field(default_factory=dict)

    def next_task_for(self, annotator: str) -> AnnotationTask | None:
        if annotator not in self.annotators:
            raise NotFound(f"unknown annotator {annotator!r}")
        for task in self.tasks.values():
            if (
                task.status == OPEN
                and annotator in task.assigned
                and annotator not in task.labels
            ):
                return task
        return None

    def submit_label(self, task_id: str, annotator: str, label: Relation) -> AnnotationTask:
        task = self.tasks.get(task_id)
        if task is None:
            raise NotFound(f"unknown task {task_id!r}")
        if annotator not in self.annotators:
            raise NotFound(f"unknown annotator {annotator!r}")
        if annotator not in task.assigned:
            raise VoteRejected(f"annotator {annotator!r} is not assigned to {task_id}")
        if annotator in task.labels:
            raise VoteRejected(f"annotator {annotator!r} already voted on {task_id}")
        if task.status != OPEN:
            raise VoteRejected(f"task {task_id} is already {task.status}")
        task.labels[annotator] = label
        if len(task.labels) >= self.required_votes:
            task.status, task.final_label = aggregate(task.labels.values())
        return task

    def progress(self) -> dict:
        counts = Counter(task.status for task in self.tasks.values())
        return {status: counts.get(status, 0) for status in (OPEN, COMPLETE, DISCARDED)}

    def completed_tasks(self) -> list[AnnotationTask]:
        return [t for t in self.tasks.values() if t.status == COMPLETE]


def create_campaign(
    pairs,
    annotator_ids: list[str],
    required_votes: int = 3,
) -> Campaign:
    """One task per pair, dealt round-robin so each task gets
    ``required_votes`` distinct annotators."""
    annotators = list(annotator_ids)
    if required_votes < 1:
        raise ConfigError("required_votes must be at least 1")
    if required_votes > len(annotators):
        raise ConfigError(
            f"required_votes={required_votes} exceeds the {len(annotators)} annotators"
        )
    if len(set(annotators)) != len(annotators):
        raise ConfigError("annotator ids must be unique")
    tasks: dict[str, AnnotationTask] = {}
    auto_labels: dict[str, Relation] = {}
    for index, pair in enumerate(pairs):
        assigned = [
            annotators[(index + j) % len(annotators)] for j in range(required_votes)
        ]
        task = AnnotationTask(
            task_id=f"task-{pair.pair_id}",
            pair_id=pair.pair_id,
            premise=pair.premise,
            hypothesis=pair.hypothesis,
            assigned=assigned,
        )
        if task.task_id in tasks:
            raise ConfigError(f"duplicate pair id {pair.pair_id!r}")
        tasks[task.task_id] = task
        auto_labels[pair.pair_id] = pair.label
    return Campaign(
        required_votes=required_votes,
        annotators=annotators,
        tasks=tasks,
        auto_labels=auto_labels,
    )


def fleiss_kappa(votes) -> float:
    """Fleiss kappa over an items x categories vote-count matrix.

    kappa = (P_obs - P_exp) / (1 - P_exp). Every item must carry the same
    number of votes n >= 2. When P_exp is 1 (a single category used
    everywhere) the ratio degenerates; by convention the result is then 1
    for perfect observed agreement and 0 otherwise.
    """
    matrix = np.asarray(votes, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("votes must be an items x categories matrix")
    row_sums = matrix.sum(axis=1)
    if len(set(row_sums.tolist())) != 1:
        raise ValueError("ragged vote matrix: every item needs the same vote count")
    n = row_sums[0]
    if n < 2:
        raise ValueError("need at least two votes per item")
    p_item = ((matrix**2).sum(axis=1) - n) / (n * (n - 1))
    p_obs = float(p_item.mean())
    proportions = matrix.sum(axis=0) / matrix.sum()
    p_exp = float((proportions**2).sum())
    if p_exp == 1.0:
        return 1.0 if p_obs == 1.0 else 0.0
    return (p_obs - p_exp) / (1 - p_exp)


def cohen_kappa(labels_a, labels_b) -> float:
    """Cohen kappa between two equal-length label sequences.

    Expected agreement comes from the product of the two marginal
    distributions; the degenerate 1 - P_exp = 0 case follows the same
    convention as :func:`fleiss_kappa`.
    """
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty label sequences")
    total = len(a)
    p_obs = sum(x == y for x, y in zip(a, b)) / total
    counts_a = Counter(a)
    counts_b = Counter(b)
    p_exp = sum(
        counts_a[k] / total * counts_b.get(k, 0) / total for k in counts_a
    )
    if p_exp == 1.0:
        return 1.0 if p_obs == 1.0 else 0.0
    return (p_obs - p_exp) / (1 - p_exp)


@dataclass
class AgreementReport:
    fleiss_kappa: float | None
    cohen_kappa_auto_vs_manual: float | None
    confusion_classes: list[str]
    confusion_auto_vs_final: list[list[int]]
    discarded_count: int
    complete_count: int

    def to_json(self) -> dict:
        return {
            "fleiss_kappa": self.fleiss_kappa,
            "cohen_kappa_auto_vs_manual": self.cohen_kappa_auto_vs_manual,
            "confusion_classes": self.confusion_classes,
            "confusion_auto_vs_final": self.confusion_auto_vs_final,
            "discarded_count": self.discarded_count,
            "complete_count": self.complete_count,
        }


def agreement_report(
    campaign: Campaign, pair_ids: set[str] | None = None
) -> AgreementReport:
    """Agreement statistics over complete tasks (optionally restricted to a
    set of pair ids, e.g. one difficulty group)."""
    completed = [
        t
        for t in campaign.completed_tasks()
        if pair_ids is None or t.pair_id in pair_ids
    ]
    categories = list(RELATIONS)
    cat_index = {c: i for i, c in enumerate(categories)}

    fleiss = None
    if completed:
        matrix = np.zeros((len(completed), len(categories)), dtype=int)
        for row, task in enumerate(completed):
            for vote in task.labels.values():
                matrix[row, cat_index[vote]] += 1
        fleiss = fleiss_kappa(matrix)

    with_auto = [t for t in completed if t.pair_id in campaign.auto_labels]
    cohen = None
    confusion = [[0] * len(categories) for _ in categories]
    if with_auto:
        auto = [campaign.auto_labels[t.pair_id] for t in with_auto]
        manual = [t.final_label for t in with_auto]
        cohen = cohen_kappa(auto, manual)
        for a, m in zip(auto, manual):
            confusion[cat_index[a]][cat_index[m]] += 1

    discarded = sum(
        1
        for t in campaign.tasks.values()
        if t.status == DISCARDED and (pair_ids is None or t.pair_id in pair_ids)
    )
    return AgreementReport(
        fleiss_kappa=fleiss,
        cohen_kappa_auto_vs_manual=cohen,
        confusion_classes=[c.value for c in categories],
        confusion_auto_vs_final=confusion,
        discarded_count=discarded,
        complete_count=len(completed),
    )


# --- event-log persistence -------------------------------------------------

def save_campaign(campaign: Campaign, path) -> None:
    """Write the campaign header event; votes are appended afterwards."""
    header = {
        "type": "campaign",
        "version": 1,
        "required_votes": campaign.required_votes,
        "annotators": campaign.annotators,
        "tasks": [task.to_json() for task in campaign.tasks.values()],
        "auto_labels": {
            pid: label.value for pid, label in campaign.auto_labels.items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(header, ensure_ascii=False) + "\n")
        for task in campaign.tasks.values():
            for annotator, label in task.labels.items():
                handle.write(
                    json.dumps(
                        {
                            "type": "label",
                            "task_id": task.task_id,
                            "annotator": annotator,
                            "label": label.value,
                        }
                    )
                    + "\n"
                )


def append_vote_event(path, task_id: str, annotator: str, label: Relation) -> None:
    with open(path, "a", encoding="utf-8", newline="\n") as handle:
        handle.write(
            json.dumps(
                {
                    "type": "label",
                    "task_id": task_id,
                    "annotator": annotator,
                    "label": label.value,
                }
            )
            + "\n"
        )
        handle.flush()


def load_campaign(path) -> Campaign:
    """Replay the event log: header first, then every recorded vote."""
    path = Path(path)
    campaign: Campaign | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad event: {exc.msg}", lineno) from exc
            kind = event.get("type")
            if kind == "campaign":
                tasks = {
                    t["task_id"]: AnnotationTask(
                        task_id=t["task_id"],
                        pair_id=t["pair_id"],
                        premise=t["premise"],
                        hypothesis=t["hypothesis"],
                        assigned=list(t["assigned"]),
                    )
                    for t in event["tasks"]
                }
                campaign = Campaign(
                    required_votes=event["required_votes"],
                    annotators=list(event["annotators"]),
                    tasks=tasks,
                    auto_labels={
                        pid: parse_relation(v)
                        for pid, v in event.get("auto_labels", {}).items()
                    },
                )
            elif kind == "label":
                if campaign is None:
                    raise FormatError("vote event before campaign header", lineno)
                campaign.submit_label(
                    event["task_id"], event["annotator"], parse_relation(event["label"])
                )
            else:
                raise FormatError(f"unknown event type {kind!r}", lineno)
    if campaign is None:
        raise FormatError("no campaign header found", 1)
    return campaign
