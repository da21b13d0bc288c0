"""Deterministic shallow classifiers over bag-of-embedding pair features."""

from nlifoundry.trainer.embeddings import EmbeddingTable, hashed_table, load_embeddings
from nlifoundry.trainer.features import (
    CbowFeaturizer,
    PairFeatures,
    featurize,
    featurize_pairs,
    sentence_vector,
)
from nlifoundry.trainer.models import (
    LinearSvmClassifier,
    SoftmaxClassifier,
    softmax_objective,
)
from nlifoundry.trainer.modelio import load_model, model_to_json, save_model

__all__ = [
    "EmbeddingTable",
    "load_embeddings",
    "hashed_table",
    "PairFeatures",
    "featurize",
    "featurize_pairs",
    "sentence_vector",
    "CbowFeaturizer",
    "SoftmaxClassifier",
    "LinearSvmClassifier",
    "softmax_objective",
    "save_model",
    "load_model",
    "model_to_json",
]
