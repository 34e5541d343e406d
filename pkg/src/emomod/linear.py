"""Sparse linear models: a hinge-loss binary learner and a one-vs-rest
emotion classifier over modifier-prefixed bags of words."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus_io import Emotion, EMOTIONS

DEFAULTS = {"lambda": 1e-4, "epochs": 20, "seed": 42}


class TrainingError(ValueError):
    pass


class Vocabulary:
    """Interns feature strings to dense integer ids."""

    def __init__(self, items=()):
        self.items: list[str] = []
        self.ids: dict[str, int] = {}
        for it in items:
            self.add(it)

    def add(self, item: str) -> int:
        i = self.ids.get(item)
        if i is None:
            i = self.ids[item] = len(self.items)
            self.items.append(item)
        return i

    def get(self, item: str):
        return self.ids.get(item)

    def __len__(self):
        return len(self.items)

    def __contains__(self, item):
        return item in self.ids

    def index(self, fv: dict, grow: bool = False) -> dict[int, float]:
        """Map a string-keyed feature vector to ids, dropping zeros.
        Unknown features are dropped unless ``grow``."""
        out = {}
        for key, value in fv.items():
            if value == 0:
                continue
            i = self.add(key) if grow else self.ids.get(key)
            if i is not None:
                out[i] = out.get(i, 0.0) + float(value)
        return out


def featurize_bow(doc, scope=None) -> Counter:
    """Unigram counts; tokens inside a modifier scope become ``<prefix>_<token>``."""
    scope = scope or {}
    counts = Counter()
    for i, tok in enumerate(doc.tokens):
        kind = scope.get(i)
        counts[f"{kind.prefix}_{tok.normalized}" if kind else tok.normalized] += 1
    return counts


@dataclass
class LinearModel:
    vocabulary: Vocabulary
    weights: np.ndarray
    bias: float = 0.0
    meta: dict = field(default_factory=dict)
    loss_trace: list = field(default_factory=list)

    def score(self, fv: dict) -> float:
        s = self.bias
        ids, w = self.vocabulary.ids, self.weights
        for key, value in fv.items():
            i = ids.get(key)
            if i is not None and i < len(w):
                s += w[i] * value
        return float(s)

    def predict(self, fv: dict) -> bool:
        return self.score(fv) > 0

    def to_json(self) -> dict:
        return {"vocabulary": self.vocabulary.items, "weights": self.weights.tolist(),
                "bias": self.bias, "metadata": self.meta}

    @classmethod
    def from_json(cls, obj) -> "LinearModel":
        return cls(Vocabulary(obj["vocabulary"]), np.asarray(obj["weights"], dtype=float),
                   float(obj["bias"]), obj.get("metadata", {}))


# ----------------------------------------------------------------------
# regularized hinge objective; bias is treated as a weight on a constant
# feature and regularized with the rest

def hinge_objective(w, b, X, y, lam):
    """lam/2 * (|w|^2 + b^2) + mean(max(0, 1 - y (Xw + b))). ``X`` dense, ``y`` in {-1,+1}."""
    margins = y * (X @ w + b)
    return 0.5 * lam * (w @ w + b * b) + np.maximum(0.0, 1.0 - margins).mean()


def hinge_subgradient(w, b, X, y, lam):
    margins = y * (X @ w + b)
    active = (margins < 1.0).astype(float)
    coef = -(active * y) / len(y)
    return lam * w + X.T @ coef, lam * b + coef.sum()


def _hyper(hyper):
    h = dict(DEFAULTS)
    h.update(hyper or {})
    return h


def _pegasos(rows, labels, dim, lam, epochs, rng):
    """Stochastic subgradient descent on the hinge objective with step
    1/(lam*t) and projection onto the ball of radius 1/sqrt(lam).

    ``rows`` are lists of (id, value) with the bias as id ``dim``.
    Weights are stored as scale * v so the shrink step is O(1).
    """
    v = np.zeros(dim + 1)
    scale, sqnorm = 1.0, 0.0
    radius2 = 1.0 / lam
    sqx = [sum(x * x for _, x in r) for r in rows]
    trace = []
    t = 0
    n = len(rows)
    for _ in range(epochs):
        for k in rng.permutation(n):
            t += 1
            row, y = rows[k], labels[k]
            dot = scale * sum(v[j] * x for j, x in row)
            shrink = 1.0 - 1.0 / t
            if shrink == 0.0:
                v[:] = 0.0
                scale, sqnorm, dot = 1.0, 0.0, 0.0
            else:
                scale *= shrink
                sqnorm *= shrink * shrink
                dot *= shrink
            if y * dot < 1.0:
                eta = 1.0 / (lam * t)
                a = eta * y
                for j, x in row:
                    v[j] += a * x / scale
                sqnorm += 2.0 * a * dot + a * a * sqx[k]
            if sqnorm > radius2:
                f = math.sqrt(radius2 / sqnorm)
                scale *= f
                sqnorm = radius2
            if scale < 1e-100:
                v *= scale
                scale = 1.0
        w = scale * v
        margins = np.array([labels[k] * sum(w[j] * x for j, x in rows[k]) for k in range(n)])
        trace.append(0.5 * lam * float(w @ w) + float(np.maximum(0.0, 1.0 - margins).mean()))
    w = scale * v
    return w[:dim], float(w[dim]), trace


def train_binary(examples, hyper=None, vocabulary: Vocabulary | None = None) -> LinearModel:
    """Train a hinge-loss linear model on (feature dict, bool) pairs."""
    examples = list(examples)
    if not examples:
        raise TrainingError("no training examples")
    ys = {bool(y) for _, y in examples}
    if len(ys) < 2:
        raise TrainingError(f"only one class present ({ys.pop()})")
    h = _hyper(hyper)
    vocab = vocabulary if vocabulary is not None else Vocabulary()
    indexed = [vocab.index(fv, grow=True) for fv, _ in examples]
    return _train_indexed(indexed, [1.0 if y else -1.0 for _, y in examples], vocab, h)


def _train_indexed(indexed, labels, vocab, h, seed=None):
    dim = len(vocab)
    rows = [sorted(fv.items()) + [(dim, 1.0)] for fv in indexed]
    rng = np.random.default_rng(h["seed"] if seed is None else seed)
    w, b, trace = _pegasos(rows, labels, dim, float(h["lambda"]), int(h["epochs"]), rng)
    meta = {"lambda": h["lambda"], "epochs": h["epochs"], "seed": h["seed"]}
    meta.update({k: v for k, v in h.items() if k not in meta})
    return LinearModel(vocab, w, b, meta, trace)


@dataclass
class MulticlassModel:
    members: list[LinearModel]
    degenerate: list[bool]

    @property
    def vocabulary(self):
        return self.members[0].vocabulary

    def scores(self, fv: dict) -> np.ndarray:
        return np.array([m.score(fv) for m in self.members])

    def to_json(self) -> dict:
        return {"vocabulary": self.vocabulary.items,
                "weights": [m.weights.tolist() for m in self.members],
                "biases": [m.bias for m in self.members],
                "metadata": {**self.members[0].meta, "degenerate": self.degenerate,
                             "emotion_order": [e.label for e in EMOTIONS]}}

    @classmethod
    def from_json(cls, obj) -> "MulticlassModel":
        vocab = Vocabulary(obj["vocabulary"])
        meta = dict(obj.get("metadata", {}))
        degenerate = meta.pop("degenerate", [False] * len(EMOTIONS))
        meta.pop("emotion_order", None)
        members = [LinearModel(vocab, np.asarray(w, dtype=float), float(b), dict(meta))
                   for w, b in zip(obj["weights"], obj["biases"])]
        return cls(members, degenerate)


def train_multiclass_ovr(examples, hyper=None) -> MulticlassModel:
    """One binary model per emotion (class vs rest) over a shared vocabulary.
    Emotions absent from the data get an all-zero model flagged degenerate."""
    examples = list(examples)
    if not examples:
        raise TrainingError("no training examples")
    present = {Emotion(y) for _, y in examples}
    if len(present) < 2:
        raise TrainingError("need at least two emotions in the training data")
    h = _hyper(hyper)
    vocab = Vocabulary()
    indexed = [vocab.index(fv, grow=True) for fv, _ in examples]
    members, degenerate = [], []
    for emo in EMOTIONS:
        if emo not in present:
            members.append(LinearModel(vocab, np.zeros(len(vocab)), 0.0,
                                       {"lambda": h["lambda"], "epochs": h["epochs"], "seed": h["seed"]}))
            degenerate.append(True)
            continue
        labels = [1.0 if y == emo else -1.0 for _, y in examples]
        members.append(_train_indexed(indexed, labels, vocab, h, seed=h["seed"] + int(emo)))
        degenerate.append(False)
    return MulticlassModel(members, degenerate)


def predict_emotion(model: MulticlassModel, fv: dict) -> Emotion:
    scores = model.scores(fv)
    # np.argmax returns the first maximum: lowest canonical index wins ties
    return Emotion(int(np.argmax(scores)))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_json(), f)


def load_model(path):
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    if "biases" in obj:
        return MulticlassModel.from_json(obj)
    return LinearModel.from_json(obj)
