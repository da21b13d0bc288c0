"""Classification metrics and the two nonparametric significance tests."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from nlifoundry.relations import RELATIONS


@dataclass
class EvalReport:
    """Per-class precision/recall/F1, micro/macro F1 and the confusion
    matrix (rows gold, columns predicted, in class order)."""

    classes: list
    per_class: dict
    micro_f1: float
    macro_f1: float
    confusion: list[list[int]]
    support: dict

    def to_json(self) -> dict:
        return {
            "version": 1,
            "classes": [str(c) for c in self.classes],
            "per_class": {
                str(c): dict(metrics) for c, metrics in self.per_class.items()
            },
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion,
            "support": {str(c): n for c, n in self.support.items()},
        }


def classification_report(gold, pred, classes=None) -> EvalReport:
    """Compute per-class and aggregate metrics over the configured classes.

    Precision and recall use the zero convention when their denominator is
    zero, and F1 is zero when both are. Micro-F1 comes from the global
    confusion matrix and equals accuracy for single-label data; macro-F1
    is the unweighted mean over *all* configured classes, so an absent
    class contributes zero.
    """
    gold = list(gold)
    pred = list(pred)
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if classes is None:
        classes = list(RELATIONS)
    index = {c: i for i, c in enumerate(classes)}
    unknown = {x for x in itertools.chain(gold, pred) if x not in index}
    if unknown:
        raise ValueError(f"labels outside the configured classes: {unknown!r}")

    k = len(classes)
    confusion = [[0] * k for _ in range(k)]
    for g, p in zip(gold, pred):
        confusion[index[g]][index[p]] += 1

    per_class = {}
    f1_sum = 0.0
    for i, cls in enumerate(classes):
        tp = confusion[i][i]
        fp = sum(confusion[r][i] for r in range(k)) - tp
        fn = sum(confusion[i]) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        per_class[cls] = {"precision": precision, "recall": recall, "f1": f1}
        f1_sum += f1

    total = len(gold)
    trace = sum(confusion[i][i] for i in range(k))
    micro = trace / total if total else 0.0
    return EvalReport(
        classes=list(classes),
        per_class=per_class,
        micro_f1=micro,
        macro_f1=f1_sum / k if k else 0.0,
        confusion=confusion,
        support={cls: sum(confusion[i]) for i, cls in enumerate(classes)},
    )


@dataclass
class TestResult:
    statistic: float
    p_value: float
    method: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            **self.details,
        }


def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function via the regularized upper incomplete
    gamma function."""
    if x < 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def cochran_q(correctness) -> TestResult:
    """Cochran's Q over an items x classifiers binary success matrix.

    Q = (L-1) * (L * sum(G_j^2) - T^2) / (L * T - sum(R_i^2)) with G_j the
    per-classifier success counts, R_i the per-item success counts and T
    the total. The p-value is the chi-square survival at df = L-1. A zero
    denominator (no within-item disagreement to test) yields Q = 0, p = 1.
    """
    matrix = np.asarray(correctness)
    if matrix.ndim != 2:
        raise ValueError("correctness must be an items x classifiers matrix")
    n_items, n_classifiers = matrix.shape
    if n_classifiers < 2:
        raise ValueError("need at least two classifiers")
    if n_items < 1:
        raise ValueError("need at least one item")
    if not np.isin(matrix, (0, 1)).all():
        raise ValueError("correctness entries must be 0 or 1")

    g = matrix.sum(axis=0).astype(float)
    r = matrix.sum(axis=1).astype(float)
    total = float(matrix.sum())
    denominator = n_classifiers * total - float((r**2).sum())
    df = n_classifiers - 1
    if denominator == 0:
        q = 0.0
    else:
        q = df * (n_classifiers * float((g**2).sum()) - total**2) / denominator
    return TestResult(
        statistic=q,
        p_value=chi2_sf(q, df) if denominator else 1.0,
        method="cochran_q",
        details={"df": df, "n_items": n_items, "n_classifiers": n_classifiers},
    )


def mcnemar_statistic(a, b) -> float:
    """McNemar chi-square without continuity correction (reference for the
    L = 2 Cochran's Q equivalence)."""
    a = np.asarray(a)
    b = np.asarray(b)
    b01 = int(((a == 0) & (b == 1)).sum())
    b10 = int(((a == 1) & (b == 0)).sum())
    if b01 + b10 == 0:
        return 0.0
    return (b10 - b01) ** 2 / (b10 + b01)


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks

_ENUMERATION_CAP = 400_000


def mann_whitney_u(sample_a, sample_b, mode: str = "exact") -> TestResult:
    """Two-sided Mann-Whitney U test; U = min(U_a, U_b) from midranks.

    Exact mode computes the two-sided p as the probability, over all
    equally likely assignments of the pooled ranks to the two groups, that
    min(U_a, U_b) is at most the observed value. Without ties this uses the
    classic rank-sum counting recurrence; with ties it enumerates
    combinations outright (small samples only). Normal mode applies the
    tie-corrected normal approximation with continuity correction.
    """
    a = [float(x) for x in sample_a]
    b = [float(x) for x in sample_b]
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n, m = len(a), len(b)
    ranks = _midranks(a + b)
    rank_sum_a = sum(ranks[:n])
    u_a = rank_sum_a - n * (n + 1) / 2
    u_b = n * m - u_a
    u = min(u_a, u_b)

    if mode == "exact":
        if n * m > 10_000:
            raise ValueError(
                f"exact mode requires n*m <= 10000, got {n}*{m}; use mode='normal'"
            )
        has_ties = len(set(a + b)) < n + m
        if has_ties:
            p = _exact_p_enumerate(ranks, n, u)
        else:
            p = _exact_p_counting(n, m, u)
    elif mode == "normal":
        p = _normal_p(a + b, ranks, n, m, u)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return TestResult(
        statistic=u,
        p_value=p,
        method="mann_whitney_u",
        details={"n": n, "m": m, "mode": mode, "u_a": u_a, "u_b": u_b},
    )


def _exact_p_enumerate(ranks: list[float], n: int, u_observed: float) -> float:
    total = math.comb(len(ranks), n)
    if total > _ENUMERATION_CAP:
        raise ValueError(
            f"{total} rank assignments is too many for exact enumeration "
            "with ties; use mode='normal'"
        )
    nm = n * (len(ranks) - n)
    offset = n * (n + 1) / 2
    hits = 0
    for combo in itertools.combinations(range(len(ranks)), n):
        u_a = sum(ranks[i] for i in combo) - offset
        if min(u_a, nm - u_a) <= u_observed + 1e-12:
            hits += 1
    return hits / total


def _exact_p_counting(n: int, m: int, u_observed: float) -> float:
    """Distribution of the rank sum of n untied ranks out of 1..n+m."""
    top = n * (n + m)
    counts = np.zeros((n + 1, top + 1))
    counts[0, 0] = 1.0
    for value in range(1, n + m + 1):
        for j in range(min(n, value), 0, -1):
            counts[j, value:] += counts[j - 1, : top + 1 - value]
    distribution = counts[n]
    nm = n * m
    offset = n * (n + 1) // 2
    hits = 0.0
    for rank_sum, ways in enumerate(distribution):
        if not ways:
            continue
        u_a = rank_sum - offset
        if min(u_a, nm - u_a) <= u_observed + 1e-12:
            hits += ways
    return float(hits / distribution.sum())


def _normal_p(values: list[float], ranks: list[float], n: int, m: int,
              u: float) -> float:
    big_n = n + m
    tie_sizes: dict[float, int] = {}
    for value in values:
        tie_sizes[value] = tie_sizes.get(value, 0) + 1
    tie_term = sum(t**3 - t for t in tie_sizes.values())
    variance = (n * m / 12) * (big_n + 1 - tie_term / (big_n * (big_n - 1)))
    if variance <= 0:
        return 1.0
    z = (u - n * m / 2 + 0.5) / math.sqrt(variance)
    p = 2 * 0.5 * math.erfc(-z / math.sqrt(2))
    return min(1.0, p)
