"""The four-way relation label space shared by every pipeline stage."""

from __future__ import annotations

import enum


class Relation(enum.Enum):
    """Relation between a premise and a hypothesis sentence."""

    CONTRASTIVE = "contrastive"
    ENTAILMENT = "entailment"
    REASONING = "reasoning"
    NEUTRAL = "neutral"

    def __str__(self) -> str:
        return self.value


# Canonical class order used for split allocation, classifier outputs,
# confusion matrices and report rows.
RELATIONS: tuple[Relation, ...] = tuple(Relation)

# "causal" appears as an alternative name for the reasoning class in
# interchange files; accepted on input, never emitted.
_INPUT_ALIASES = {"causal": Relation.REASONING}


def parse_relation(value: str) -> Relation:
    """Parse a relation from its serialization string (case-insensitive).

    Accepts the input alias ``"causal"`` for :attr:`Relation.REASONING`.
    Raises ``ValueError`` for anything else.
    """
    key = value.strip().lower()
    if key in _INPUT_ALIASES:
        return _INPUT_ALIASES[key]
    try:
        return Relation(key)
    except ValueError:
        raise ValueError(f"unknown relation label: {value!r}") from None
