"""Weighted emotion lexicon with modifier-specific weight matrices.

A document is reduced to four count vectors (one per modification:
none, amplified, downtoned, negated) over the prior emotions of its
emotion words. Each modification owns a 6x6 matrix whose cell [i, j]
is what one word of prior emotion i contributes to predicted emotion j.
The matrices are fitted by stochastic hill climbing on macro-F1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .corpus_io import EMOTION_NAMES, Emotion
from .lexicons import ModifierKind

log = logging.getLogger(__name__)

SLICES = ("no_mod", "amp", "down", "neg")
SLICE_OF_KIND = {None: 0, ModifierKind.AMPLIFIER: 1, ModifierKind.DOWNTONER: 2, ModifierKind.NEGATION: 3}
DEFAULT_SCHEDULE = ("no_mod", "neg", "amp", "down")
N = len(EMOTION_NAMES)


class WeightTensor:
    def __init__(self, weights=None, meta=None):
        w = np.zeros((4, N, N)) if weights is None else np.array(weights, dtype=float)
        if w.shape != (4, N, N):
            raise ValueError(f"weight tensor must have shape (4, {N}, {N}), got {w.shape}")
        if not np.isfinite(w).all():
            raise ValueError("weight tensor has non-finite entries")
        self.weights = w
        self.meta = dict(meta or {})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.weights[SLICES.index(name)]

    def __eq__(self, other):
        return isinstance(other, WeightTensor) and np.array_equal(self.weights, other.weights)

    @classmethod
    def identity(cls):
        return cls(np.stack([np.eye(N)] * 4))

    def to_json(self) -> dict:
        return {"slices": {name: self.weights[k].tolist() for k, name in enumerate(SLICES)},
                "emotion_order": list(EMOTION_NAMES), "meta": self.meta}

    @classmethod
    def from_json(cls, obj) -> "WeightTensor":
        if list(obj.get("emotion_order", EMOTION_NAMES)) != list(EMOTION_NAMES):
            raise ValueError("tensor file uses a different emotion order")
        return cls([obj["slices"][name] for name in SLICES], obj.get("meta"))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def count_vectors(doc, scope, emotion_lexicon) -> np.ndarray:
    """(4, 6) integer counts; rows follow SLICES."""
    x = np.zeros((4, N), dtype=np.int64)
    for i, word in enumerate(doc.words):
        emotions = emotion_lexicon.get(word)
        if not emotions:
            continue
        row = SLICE_OF_KIND[scope.get(i)]
        for e in emotions:
            x[row, int(e)] += 1
    return x


def _weights(t):
    return t.weights if isinstance(t, WeightTensor) else np.asarray(t, dtype=float)


def score(t, x) -> np.ndarray:
    """Sum over modifications of W_mod^T x_mod."""
    w = _weights(t)
    x = np.asarray(x, dtype=float)
    return sum(w[m].T @ x[m] for m in range(4))


def predict(t, x) -> Emotion:
    return Emotion(int(np.argmax(score(t, x))))


def score_batch(t, X) -> np.ndarray:
    """(n, 4, 6) counts -> (n, 6) scores."""
    return np.einsum("nmi,mij->nj", np.asarray(X, dtype=float), _weights(t))


def macro_f1(gold: np.ndarray, pred: np.ndarray) -> float:
    cm = np.bincount(gold * N + pred, minlength=N * N).reshape(N, N)
    tp = np.diag(cm).astype(float)
    col, row = cm.sum(axis=0), cm.sum(axis=1)
    p = np.divide(tp, col, out=np.zeros(N), where=col > 0)
    r = np.divide(tp, row, out=np.zeros(N), where=row > 0)
    denom = p + r
    f = np.divide(2 * p * r, denom, out=np.zeros(N), where=denom > 0)
    return float(f.mean())


@dataclass(frozen=True)
class TraceStep:
    slice: str
    restart: int
    epoch: int
    objective: float        # objective of the current (accepted) weights after this epoch
    accepted: bool
    since_improvement: int


def hill_climb(train, restarts: int = 8, patience: int = 500, max_epochs: int = 5000,
               seed: int = 0, schedule=DEFAULT_SCHEDULE):
    """Fit the four weight slices one after another.

    While a slice is active the others are frozen (slices not yet fitted
    stay zero). Each restart draws the active slice from N(0, 1); each
    epoch adds N(0, 1) noise to one random cell and keeps the change only
    if training macro-F1 strictly improves. A restart ends after
    ``patience`` consecutive rejections or ``max_epochs`` epochs. The best
    restart (by final objective) is kept before moving to the next slice.

    ``train`` is a sequence of (counts, emotion) pairs. Returns the tensor
    and the per-epoch trace.
    """
    train = list(train)
    if not train:
        raise ValueError("empty training data")
    X = np.asarray([np.asarray(x, dtype=float) for x, _ in train])
    gold = np.asarray([int(y) for _, y in train], dtype=np.int64)
    missing = sorted(set(range(N)) - set(gold.tolist()))
    if missing:
        log.warning("training data lacks emotions: %s", ", ".join(EMOTION_NAMES[i] for i in missing))

    weights = np.zeros((4, N, N))
    trace: list[TraceStep] = []
    seeds = np.random.SeedSequence(seed).spawn(len(schedule) * restarts)
    for si, name in enumerate(schedule):
        m = SLICES.index(name)
        frozen = weights.copy()
        frozen[m] = 0.0
        base = score_batch(frozen, X)
        Xm = X[:, m, :]
        best = (-1.0, None)
        for r in range(restarts):
            rng = np.random.default_rng(seeds[si * restarts + r])
            w = rng.standard_normal((N, N))
            scores = base + Xm @ w
            obj = macro_f1(gold, scores.argmax(axis=1))
            since = 0
            for epoch in range(1, max_epochs + 1):
                i, j = rng.integers(N), rng.integers(N)
                delta = rng.standard_normal()
                col = scores[:, j] + delta * Xm[:, i]
                trial = scores.copy()
                trial[:, j] = col
                cand = macro_f1(gold, trial.argmax(axis=1))
                accepted = cand > obj
                if accepted:
                    w[i, j] += delta
                    scores = trial
                    obj = cand
                    since = 0
                else:
                    since += 1
                trace.append(TraceStep(name, r, epoch, obj, accepted, since))
                if since >= patience:
                    break
            log.debug("slice %s restart %d: objective %.4f after %d epochs", name, r, obj, epoch)
            if obj > best[0]:
                best = (obj, w.copy())
        weights[m] = best[1]
    final = macro_f1(gold, score_batch(weights, X).argmax(axis=1))
    meta = {"seed": seed, "objective": final, "epochs": len(trace), "restarts": restarts,
            "patience": patience, "max_epochs": max_epochs, "schedule": list(schedule)}
    return WeightTensor(weights, meta), trace


def write_trace(trace, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write("slice\trestart\tepoch\tobjective\taccepted\tsince_improvement\n")
        for s in trace:
            f.write(f"{s.slice}\t{s.restart}\t{s.epoch}\t{s.objective!r}\t{int(s.accepted)}\t{s.since_improvement}\n")


# ----------------------------------------------------------------------
# export and inspection

def export_matrices(t: WeightTensor, path):
    """Heatmap table: one row per (modification, prior emotion), one
    column per predicted emotion rounded to 1 decimal, followed by the
    same values at full precision."""
    w = _weights(t)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(["modifier", "prior"] + list(EMOTION_NAMES)
                          + [f"{e}_full" for e in EMOTION_NAMES]) + "\n")
        for m, name in enumerate(SLICES):
            for i, prior in enumerate(EMOTION_NAMES):
                row = w[m, i]
                f.write("\t".join([name, prior] + [f"{v:.1f}" for v in row]
                                  + [repr(float(v)) for v in row]) + "\n")


def import_matrices(path) -> WeightTensor:
    w = np.zeros((4, N, N))
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        full = [header.index(f"{e}_full") for e in EMOTION_NAMES]
        for line in f:
            cols = line.rstrip("\n").split("\t")
            m, i = SLICES.index(cols[0]), EMOTION_NAMES.index(cols[1])
            w[m, i] = [float(cols[c]) for c in full]
    return WeightTensor(w)


UNDEFINED = "undefined"


def inspect(t, eps: float = 1e-9) -> dict:
    """Summary statistics for reading the fitted matrices:

    - ``no_mod_diagonal_dominance``: fraction of no-mod rows whose diagonal is the row maximum
    - ``mean_abs``: mean |w| of the neg and no-mod slices, and their ratio
    - ``amp_vs_no_mod`` / ``down_vs_no_mod``: per-emotion diagonal ratios
    """
    w = _weights(t)
    nomod = w[0]
    rows = sum(1 for i in range(N) if nomod[i, i] >= nomod[i].max())

    def diag_ratio(slice_):
        out = {}
        for i, e in enumerate(EMOTION_NAMES):
            d = nomod[i, i]
            out[e] = UNDEFINED if abs(d) <= eps else float(slice_[i, i] / d)
        return out

    neg_abs = float(np.abs(w[3]).mean())
    nomod_abs = float(np.abs(nomod).mean())
    return {
        "no_mod_diagonal_dominance": {"rows": rows, "of": N, "fraction": rows / N},
        "mean_abs": {"neg": neg_abs, "no_mod": nomod_abs,
                     "ratio": UNDEFINED if nomod_abs <= eps else neg_abs / nomod_abs},
        "amp_vs_no_mod": diag_ratio(w[1]),
        "down_vs_no_mod": diag_ratio(w[2]),
    }


def render_inspection(rep: dict) -> str:
    def fmt(v):
        return v if isinstance(v, str) else f"{v:.2f}"
    d = rep["no_mod_diagonal_dominance"]
    m = rep["mean_abs"]
    lines = [f"no-mod diagonal is row maximum: {d['rows']}/{d['of']}",
             f"mean |W_neg| = {m['neg']:.3f}, mean |W_no-mod| = {m['no_mod']:.3f}, ratio {fmt(m['ratio'])}",
             f"{'emotion':<10} {'amp/no-mod':>11} {'down/no-mod':>12}"]
    for e in EMOTION_NAMES:
        lines.append(f"{e:<10} {fmt(rep['amp_vs_no_mod'][e]):>11} {fmt(rep['down_vs_no_mod'][e]):>12}")
    return "\n".join(lines)
