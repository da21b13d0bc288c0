"""Corpus foundry and curriculum-learning toolkit for sentence-pair inference.

The package covers the full desk-scale pipeline: streaming wiki-dump
ingestion, cue-based distant supervision, corpus splitting and statistics,
a re-annotation service with agreement statistics, training-dynamics
cartography, difficulty-scored curriculum schedules, shallow deterministic
classifiers, and an evaluation/significance-testing harness.
"""

__version__ = "0.1.0"

from nlifoundry.relations import Relation, parse_relation

__all__ = ["Relation", "parse_relation", "__version__"]
