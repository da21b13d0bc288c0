"""Word-vector tables with a hashed-ngram fallback for unknown tokens."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from nlifoundry.errors import FormatError

logger = logging.getLogger(__name__)

OOV_HASHED = "hashed-ngrams"
OOV_ZERO = "zero"


@dataclass
class EmbeddingTable:
    """Token vectors plus the policy for out-of-vocabulary tokens."""

    dim: int
    vectors: dict[str, np.ndarray]
    oov_policy: str = OOV_HASHED
    seed: int = 0
    _gram_cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"embedding dim must be positive, got {self.dim}")
        if self.oov_policy not in (OOV_HASHED, OOV_ZERO):
            raise ValueError(f"unknown oov policy {self.oov_policy!r}")

    def _gram_vector(self, gram: str) -> np.ndarray:
        cached = self._gram_cache.get(gram)
        if cached is None:
            digest = hashlib.blake2b(
                f"{self.seed}|{gram}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            cached = rng.standard_normal(self.dim)
            self._gram_cache[gram] = cached
        return cached

    def token_vector(self, token: str) -> np.ndarray:
        vector = self.vectors.get(token)
        if vector is not None:
            return vector
        if self.oov_policy == OOV_ZERO:
            return np.zeros(self.dim)
        grams = [
            token[i : i + n]
            for n in (3, 4, 5)
            for i in range(len(token) - n + 1)
        ] or [token]
        return np.mean([self._gram_vector(g) for g in grams], axis=0)


def hashed_table(dim: int, seed: int = 0) -> EmbeddingTable:
    """A vocabulary-free table: every token resolves via hashed ngrams."""
    return EmbeddingTable(dim=dim, vectors={}, oov_policy=OOV_HASHED, seed=seed)


def load_embeddings(path, oov_policy: str = OOV_HASHED, seed: int = 0) -> EmbeddingTable:
    """Read a word-vector text file: ``<count> <dim>`` header, then one
    ``token v1 ... vdim`` row per line. Duplicate tokens keep the last
    occurrence (with a warning); wrong row arity is an error."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise FormatError(f"expected '<count> <dim>' header, got {header!r}", 1)
        try:
            declared_count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise FormatError(f"bad header: {exc}", 1) from exc
        for lineno, line in enumerate(handle, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2 and not line.strip():
                continue
            token = parts[0]
            values = [p for p in parts[1:] if p]
            if len(values) != dim:
                raise FormatError(
                    f"token {token!r} has {len(values)} values, expected {dim}",
                    lineno,
                )
            try:
                vector = np.array([float(v) for v in values])
            except ValueError as exc:
                raise FormatError(f"bad value: {exc}", lineno) from exc
            if token in vectors:
                logger.warning("duplicate token %r at line %d: last one wins",
                               token, lineno)
            vectors[token] = vector
    if declared_count != len(vectors):
        logger.warning(
            "header declared %d tokens but file held %d", declared_count, len(vectors)
        )
    return EmbeddingTable(dim=dim, vectors=vectors, oov_policy=oov_policy, seed=seed)
