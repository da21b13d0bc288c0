"""Bag-of-embeddings pair features (premise+hypothesis or hypothesis-only)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from nlifoundry.textnorm import tokenize_words
from nlifoundry.trainer.embeddings import EmbeddingTable, hashed_table

MODE_BOTH = "both"
MODE_HYPOTHESIS_ONLY = "hypothesis-only"


@dataclass(frozen=True)
class PairFeatures:
    pair_id: str
    vector: np.ndarray


def sentence_vector(text: str, table: EmbeddingTable) -> np.ndarray:
    """Mean of the token vectors; the zero vector for an empty token list."""
    tokens = tokenize_words(text)
    if not tokens:
        return np.zeros(table.dim)
    return np.mean([table.token_vector(t) for t in tokens], axis=0)


def featurize(pair, table: EmbeddingTable, mode: str = MODE_BOTH) -> PairFeatures:
    """Feature vector for one pair.

    ``both`` concatenates the premise and hypothesis sentence vectors (2d
    values); ``hypothesis-only`` uses just the hypothesis (d values) and
    never touches the premise text, which is what makes it a fair probe
    for hypothesis-side shortcut patterns.
    """
    if mode == MODE_BOTH:
        vector = np.concatenate(
            [sentence_vector(pair.premise, table), sentence_vector(pair.hypothesis, table)]
        )
    elif mode == MODE_HYPOTHESIS_ONLY:
        vector = sentence_vector(pair.hypothesis, table)
    else:
        raise ValueError(f"unknown feature mode {mode!r}")
    if not np.isfinite(vector).all():
        raise ValueError(f"non-finite feature values for pair {pair.pair_id!r}")
    return PairFeatures(pair_id=pair.pair_id, vector=vector)


def featurize_pairs(pairs, table: EmbeddingTable, mode: str = MODE_BOTH):
    """Featurize a pair list into (ids, matrix) with aligned rows."""
    ids = [pair.pair_id for pair in pairs]
    matrix = np.vstack([featurize(pair, table, mode).vector for pair in pairs]) \
        if pairs else np.zeros((0, table.dim * (2 if mode == MODE_BOTH else 1)))
    return ids, matrix


class CbowFeaturizer(BaseEstimator, TransformerMixin):
    """Estimator-style wrapper so pair featurization composes in pipelines.

    Parameters
    ----------
    embeddings : EmbeddingTable, optional
        Pre-loaded vector table. When omitted a vocabulary-free hashed
        table of ``hashed_dim`` dimensions is built at fit time.
    hashed_dim : int
        Dimension of the fallback hashed table.
    mode : str
        "both" or "hypothesis-only".
    seed : int
        Seed for hashed ngram vectors.
    """

    def __init__(self, embeddings: EmbeddingTable | None = None,
                 hashed_dim: int = 300, mode: str = MODE_BOTH, seed: int = 0):
        self.embeddings = embeddings
        self.hashed_dim = hashed_dim
        self.mode = mode
        self.seed = seed

    def fit(self, X, y=None):
        self.table_ = self.embeddings or hashed_table(self.hashed_dim, self.seed)
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "table_"):
            self.fit(X)
        _, matrix = featurize_pairs(list(X), self.table_, self.mode)
        return matrix
