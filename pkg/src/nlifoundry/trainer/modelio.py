"""Versioned binary model files plus a JSON debug export.

Layout: 4-byte magic, u32 version, u32 metadata length, UTF-8 JSON
metadata, then the float64 weight matrix row-major and the bias vector.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from nlifoundry.errors import FormatError
from nlifoundry.relations import Relation, parse_relation
from nlifoundry.trainer.models import LinearSvmClassifier, SoftmaxClassifier

_MAGIC = b"NLIF"
_VERSION = 1
_KINDS = {"softmax": SoftmaxClassifier, "linear-svm-ovr": LinearSvmClassifier}


def _classes_to_json(classes) -> tuple[str, list]:
    if all(isinstance(c, Relation) for c in classes):
        return "relation", [c.value for c in classes]
    return "raw", list(classes)


def _classes_from_json(tag: str, values: list):
    if tag == "relation":
        return [parse_relation(v) for v in values]
    return list(values)


def save_model(model, path) -> None:
    tag, class_values = _classes_to_json(model.classes_)
    meta = {
        "kind": model._kind,
        "classes_type": tag,
        "classes": class_values,
        "n_classes": int(model._W.shape[0]),
        "n_features": int(model._W.shape[1]),
        "hyper": {
            "learning_rate": model.learning_rate,
            "C": model.C,
            "tol": model.tol,
            "epochs": model.epochs,
            "batch_size": model.batch_size,
            "seed": model.seed,
        },
    }
    blob = json.dumps(meta).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<II", _VERSION, len(blob)))
        handle.write(blob)
        handle.write(np.ascontiguousarray(model._W, dtype="<f8").tobytes())
        handle.write(np.ascontiguousarray(model._b, dtype="<f8").tobytes())


def load_model(path):
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != _MAGIC:
            raise FormatError(f"not a model file (magic {magic!r})")
        version, meta_len = struct.unpack("<II", handle.read(8))
        if version != _VERSION:
            raise FormatError(f"unsupported model version {version}")
        meta = json.loads(handle.read(meta_len).decode("utf-8"))
        k, f = meta["n_classes"], meta["n_features"]
        weights = np.frombuffer(handle.read(8 * k * f), dtype="<f8").reshape(k, f)
        bias = np.frombuffer(handle.read(8 * k), dtype="<f8")
        if bias.shape[0] != k:
            raise FormatError("model file truncated")
    cls = _KINDS.get(meta["kind"])
    if cls is None:
        raise FormatError(f"unknown model kind {meta['kind']!r}")
    model = cls(**meta["hyper"])
    model.classes_ = _classes_from_json(meta["classes_type"], meta["classes"])
    model._W = weights.copy()
    model._b = bias.copy()
    return model


def model_to_json(model) -> dict:
    tag, class_values = _classes_to_json(model.classes_)
    return {
        "kind": model._kind,
        "classes_type": tag,
        "classes": class_values,
        "weights": model._W.tolist(),
        "bias": model._b.tolist(),
        "hyper": {
            "learning_rate": model.learning_rate,
            "C": model.C,
            "tol": model.tol,
            "epochs": model.epochs,
            "batch_size": model.batch_size,
            "seed": model.seed,
        },
    }
