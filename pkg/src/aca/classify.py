"""Threshold and k-nearest-neighbor classifiers over aggregated feature vectors."""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "LabeledDataset",
    "Normalizer",
    "KnnModel",
    "ThresholdModel",
    "fit_threshold",
    "fit_knn",
    "predict_knn",
    "predict",
    "evaluate",
    "leave_one_out",
    "read_dataset_csv",
    "write_dataset_csv",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "aca-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class LabeledDataset:
    vectors: np.ndarray
    labels: tuple[str, ...]
    sources: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.vectors, dtype=np.float64)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        if X.ndim != 2:
            raise ParameterError("vectors must form a (points, features) matrix")
        labels, sources, names = tuple(map(str, self.labels)), tuple(map(str, self.sources)), tuple(self.feature_names)
        if X.shape[0] != len(labels) or len(labels) != len(sources):
            raise ParameterError("vectors, labels and sources differ in length")
        if X.shape[1] != len(names):
            raise ParameterError(f"vectors have {X.shape[1]} columns but {len(names)} feature names")
        X.setflags(write=False)
        object.__setattr__(self, "vectors", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return len(self.labels)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))

    def subset(self, indices) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset(self.vectors[idx], [self.labels[i] for i in idx],
                              [self.sources[i] for i in idx], self.feature_names)


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension z-scoring; constant training dimensions keep a std of 1."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Normalizer":
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def __call__(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


@dataclass(frozen=True)
class KnnModel:
    vectors: np.ndarray
    labels: tuple[str, ...]
    k: int
    normalizer: Normalizer
    feature_names: tuple[str, ...] = ()

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class ThresholdModel:
    """``label_above`` if ``x[feature_index] > threshold`` else ``label_below``."""

    feature_index: int
    threshold: float
    label_above: str
    label_below: str
    training_accuracy: float = field(default=float("nan"), compare=False)
    feature_names: tuple[str, ...] = ()

    def predict(self, vector) -> str:
        return self.label_above if float(np.asarray(vector)[self.feature_index]) > self.threshold else self.label_below


def fit_threshold(data: LabeledDataset, feature_index: int) -> ThresholdModel:
    """Single-feature threshold maximizing training accuracy.

    Candidates are the midpoints between adjacent distinct sorted values plus
    the maximum value itself (everything below). Both orientations are tried
    for each; the first best in ascending threshold order wins, with the
    lexicographically first class as ``above`` preferred on equal accuracy.
    """
    classes = data.classes
    if len(classes) != 2:
        raise ParameterError(f"threshold classifier needs exactly 2 classes, got {len(classes)}")
    if not 0 <= feature_index < data.vectors.shape[1]:
        raise ParameterError(f"feature index {feature_index} out of range")
    x = data.vectors[:, feature_index]
    y = np.array(data.labels)
    values = np.unique(x)
    candidates = list((values[:-1] + values[1:]) / 2.0) + [values[-1]]

    best = None
    for eps in candidates:
        above = x > eps
        for hi, lo in ((classes[0], classes[1]), (classes[1], classes[0])):
            acc = float(np.mean(np.where(above, hi, lo) == y))
            if best is None or acc > best[0]:
                best = (acc, float(eps), hi, lo)
    acc, eps, hi, lo = best
    return ThresholdModel(feature_index, eps, hi, lo, acc, data.feature_names)


def fit_knn(data: LabeledDataset, k: int = 1) -> KnnModel:
    """Store z-scored training vectors; ``k`` must be odd and at most the dataset size."""
    if int(k) != k or k < 1 or k % 2 == 0 or k > len(data):
        raise ParameterError(f"k must be odd and in [1, {len(data)}], got {k}")
    norm = Normalizer.fit(data.vectors)
    return KnnModel(norm(data.vectors), data.labels, int(k), norm, data.feature_names)


def predict_knn(model: KnnModel, vector) -> tuple[str, dict[str, int]]:
    """Majority label of the ``k`` nearest training points (Euclidean, normalized space).

    Distance ties keep the earlier training point; vote ties go to the larger
    summed inverse distance, then to the lexicographically smaller label.
    """
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (model.vectors.shape[1],):
        raise ParameterError(f"expected a vector of length {model.vectors.shape[1]}, got shape {v.shape}")
    d = np.sqrt(((model.vectors - model.normalizer(v)) ** 2).sum(axis=1))
    nearest = np.argsort(d, kind="stable")[: model.k]
    votes: Counter[str] = Counter()
    closeness: dict[str, float] = {}
    for i in nearest:
        lab = model.labels[i]
        votes[lab] += 1
        closeness[lab] = closeness.get(lab, 0.0) + (np.inf if d[i] == 0 else 1.0 / d[i])
    label = min(votes, key=lambda lab: (-votes[lab], -closeness[lab], lab))
    return label, dict(sorted(votes.items()))


def predict(model: KnnModel | ThresholdModel, vector) -> str:
    if isinstance(model, KnnModel):
        return predict_knn(model, vector)[0]
    return model.predict(vector)


def evaluate(model: KnnModel | ThresholdModel, test: LabeledDataset) -> dict:
    """Accuracy, per-class precision/recall and confusion matrix (rows = truth)."""
    if len(test) == 0:
        raise ParameterError("empty test set")
    preds = [predict(model, v) for v in test.vectors]
    return _report(list(test.labels), preds)


def _report(truth: Sequence[str], preds: Sequence[str]) -> dict:
    labels = sorted(set(truth) | set(preds))
    pos = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(truth, preds):
        cm[pos[t], pos[p]] += 1
    per_class = {}
    for lab, i in pos.items():
        tp = cm[i, i]
        col, row = cm[:, i].sum(), cm[i, :].sum()
        per_class[lab] = {
            "precision": float(tp / col) if col else 0.0,
            "recall": float(tp / row) if row else 0.0,
            "support": int(row),
        }
    return {
        "accuracy": float(np.trace(cm) / cm.sum()),
        "labels": labels,
        "per_class": per_class,
        "confusion_matrix": cm.tolist(),
        "predictions": list(preds),
    }


def leave_one_out(data: LabeledDataset, k: int = 1) -> dict:
    """Refit the kNN model without each point in turn and classify that point."""
    preds = []
    for i in range(len(data)):
        rest = data.subset(j for j in range(len(data)) if j != i)
        preds.append(predict_knn(fit_knn(rest, k), data.vectors[i])[0])
    return _report(list(data.labels), preds)


# --------------------------------------------------------------------------
# Interchange


def read_dataset_csv(path) -> LabeledDataset:
    """CSV with header ``source,label,f1,...,fn``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["source", "label"]:
        raise ParameterError(f"{path}: header must start with 'source,label'")
    names = rows[0][2:]
    body = [r for r in rows[1:] if r]
    for n, r in enumerate(body, start=2):
        if len(r) != len(names) + 2:
            raise ParameterError(f"{path}:{n}: expected {len(names) + 2} fields, got {len(r)}")
    try:
        X = np.array([[float(v) for v in r[2:]] for r in body]).reshape(len(body), len(names))
    except ValueError as exc:
        raise ParameterError(f"{path}: {exc}") from None
    return LabeledDataset(X, [r[1] for r in body], [r[0] for r in body], names)


def write_dataset_csv(data: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "label", *data.feature_names])
        for src, lab, vec in zip(data.sources, data.labels, data.vectors):
            w.writerow([src, lab, *(repr(float(v)) for v in vec)])


def model_to_dict(model: KnnModel | ThresholdModel) -> dict:
    head = {"format": MODEL_FORMAT, "version": MODEL_VERSION}
    if isinstance(model, KnnModel):
        return {**head, "algo": "knn", "k": model.k, "feature_names": list(model.feature_names),
                "mean": model.normalizer.mean.tolist(), "std": model.normalizer.std.tolist(),
                "vectors": model.vectors.tolist(), "labels": list(model.labels)}
    return {**head, "algo": "threshold", "feature_index": model.feature_index, "threshold": model.threshold,
            "label_above": model.label_above, "label_below": model.label_below,
            "training_accuracy": model.training_accuracy, "feature_names": list(model.feature_names)}


def model_from_dict(d: dict) -> KnnModel | ThresholdModel:
    if d.get("format") != MODEL_FORMAT:
        raise ParameterError("not a classifier model file")
    if d.get("version") != MODEL_VERSION:
        raise ParameterError(f"unsupported model version {d.get('version')!r}")
    if d["algo"] == "knn":
        norm = Normalizer(np.array(d["mean"]), np.array(d["std"]))
        return KnnModel(np.array(d["vectors"], dtype=np.float64), tuple(d["labels"]), int(d["k"]), norm,
                        tuple(d["feature_names"]))
    if d["algo"] == "threshold":
        return ThresholdModel(int(d["feature_index"]), float(d["threshold"]), d["label_above"],
                              d["label_below"], float(d["training_accuracy"]), tuple(d["feature_names"]))
    raise ParameterError(f"unknown model algo {d['algo']!r}")


def save_model(model: KnnModel | ThresholdModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)


def load_model(path) -> KnnModel | ThresholdModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
