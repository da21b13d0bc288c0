"""Shared fixtures and the acceptance-suite result printer."""

from __future__ import annotations

import numpy as np
import pytest

from nlifoundry.ingest.sentences import Sentence
from nlifoundry.labeler import LabeledPair
from nlifoundry.relations import RELATIONS, Relation


def make_sentence(text: str, article_id: int = 1, section: str = "Istorie",
                  index: int = 0) -> Sentence:
    return Sentence(
        text=text,
        article_id=article_id,
        section_path=section,
        index_in_section=index,
        char_len=len(text),
    )


def synthetic_corpus(
    n: int = 2000,
    skew: tuple[int, ...] = (8, 4, 2, 1),
    tokens_per_class: int = 40,
    seed: int = 0,
) -> tuple[list[LabeledPair], dict[str, Relation]]:
    """Class-separable pairs: each class draws from its own token pool."""
    rng = np.random.default_rng(seed)
    vocab = {
        relation: [f"w{k}t{j}" for j in range(tokens_per_class)]
        for k, relation in enumerate(RELATIONS)
    }

    def sentence(relation: Relation) -> str:
        count = int(rng.integers(8, 15))
        return " ".join(rng.choice(vocab[relation], size=count))

    total_weight = sum(skew)
    counts = [round(n * w / total_weight) for w in skew]
    counts[0] += n - sum(counts)
    pairs: list[LabeledPair] = []
    labels: dict[str, Relation] = {}
    i = 0
    for relation, count in zip(RELATIONS, counts):
        for _ in range(count):
            pair_id = f"syn-{i:05d}"
            pairs.append(
                LabeledPair(pair_id, sentence(relation), sentence(relation), relation)
            )
            labels[pair_id] = relation
            i += 1
    return pairs, labels


_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if "test_acceptance" not in item.nodeid:
        return
    name = item.name.removeprefix("test_")
    if report.when == "call":
        _ACCEPTANCE_RESULTS.append((name, "PASS" if report.passed else "FAIL"))
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE_RESULTS.append((name, "SKIP"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status:4s}  {name}")
