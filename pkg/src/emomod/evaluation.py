"""Confusion matrices, per-class and macro precision/recall/F1, subset
evaluation and with/without comparison tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .corpus_io import EMOTION_NAMES


def pct(x: float) -> Decimal:
    """Fraction -> percent, rounded half-up to one decimal."""
    return Decimal(repr(100.0 * float(x))).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def macro_average(values) -> float:
    values = list(values)
    return float(sum(values) / len(values)) if values else 0.0


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


class ConfusionMatrix:
    """Gold rows, predicted columns."""

    def __init__(self, classes=EMOTION_NAMES, counts=None):
        self.classes = tuple(classes)
        k = len(self.classes)
        self.counts = np.zeros((k, k), dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (k, k) or (self.counts < 0).any():
            raise ValueError("confusion counts must be a non-negative square matrix matching the classes")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, gold: int, pred: int, n: int = 1):
        self.counts[int(gold), int(pred)] += n

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ValueError("cannot merge confusion matrices over different classes")
        return ConfusionMatrix(self.classes, self.counts + other.counts)


def confusion(golds, preds, classes=EMOTION_NAMES) -> ConfusionMatrix:
    golds, preds = list(golds), list(preds)
    if len(golds) != len(preds):
        raise ValueError(f"length mismatch: {len(golds)} gold vs {len(preds)} predicted")
    if not golds:
        raise ValueError("nothing to evaluate")
    cm = ConfusionMatrix(classes)
    np.add.at(cm.counts, (np.asarray(golds, dtype=int), np.asarray(preds, dtype=int)), 1)
    return cm


@dataclass
class EvalReport:
    classes: tuple
    precision: list
    recall: list
    f1: list
    support: list
    subset: str = "all"
    size: int | None = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.classes = tuple(self.classes)
        if self.size is None:
            self.size = int(sum(self.support))

    @property
    def macro_precision(self) -> float:
        return macro_average(self.precision)

    @property
    def macro_recall(self) -> float:
        return macro_average(self.recall)

    @property
    def macro_f1(self) -> float:
        return macro_average(self.f1)

    def to_json(self) -> dict:
        return {
            "subset": self.subset, "size": self.size, "warnings": self.warnings,
            "classes": {c: {"precision": p, "recall": r, "f1": f, "support": s}
                        for c, p, r, f, s in zip(self.classes, self.precision, self.recall,
                                                 self.f1, self.support)},
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall,
                      "f1": self.macro_f1},
        }

    def render(self, title=None) -> str:
        lines = [title or f"subset: {self.subset}",
                 f"{'class':<10} {'size':>8} {'P':>6} {'R':>6} {'F1':>6}"]
        for c, p, r, f, s in zip(self.classes, self.precision, self.recall, self.f1, self.support):
            lines.append(f"{c:<10} {s:>8} {pct(p):>6} {pct(r):>6} {pct(f):>6}")
        lines.append(f"{'Macro':<10} {self.size:>8} {pct(self.macro_precision):>6} "
                     f"{pct(self.macro_recall):>6} {pct(self.macro_f1):>6}")
        return "\n".join(lines)


def report_from_counts(classes, tp, fp, fn, support=None, **kw) -> EvalReport:
    precision, recall, f1 = [], [], []
    for t, p_, n_ in zip(tp, fp, fn):
        p = t / (t + p_) if t + p_ else 0.0
        r = t / (t + n_) if t + n_ else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(f1_score(p, r))
    if support is None:
        support = [t + n_ for t, n_ in zip(tp, fn)]
    return EvalReport(classes, precision, recall, f1, [int(s) for s in support], **kw)


def report(cm: ConfusionMatrix, subset: str = "all") -> EvalReport:
    c = cm.counts
    tp = np.diag(c)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    return report_from_counts(cm.classes, tp.tolist(), fp.tolist(), fn.tolist(),
                              c.sum(axis=1).tolist(), subset=subset, size=cm.total)


def subset_eval(docs, scopes, golds, preds, kind) -> EvalReport:
    """Evaluate only documents whose scope labelling contains ``kind``.

    ``scopes`` is aligned with ``docs`` (one labelling per document)."""
    keep = [i for i, s in enumerate(scopes) if any(k is kind for k in s.values())]
    name = getattr(kind, "value", str(kind))
    if not keep:
        k = len(EMOTION_NAMES)
        return EvalReport(EMOTION_NAMES, [0.0] * k, [0.0] * k, [0.0] * k, [0] * k,
                          subset=name, size=0, warnings=[f"no document contains a {name} scope"])
    cm = confusion([golds[i] for i in keep], [preds[i] for i in keep])
    return report(cm, subset=name)


@dataclass
class DeltaTable:
    classes: tuple
    precision: list
    recall: list
    f1: list
    macro: dict

    def to_json(self) -> dict:
        return {"classes": {c: {"precision": p, "recall": r, "f1": f}
                            for c, p, r, f in zip(self.classes, self.precision, self.recall, self.f1)},
                "macro": self.macro}

    def render(self) -> str:
        def s(x):
            return f"{pct(x):+}"
        lines = [f"{'class':<10} {'dP':>6} {'dR':>6} {'dF1':>6}"]
        for c, p, r, f in zip(self.classes, self.precision, self.recall, self.f1):
            lines.append(f"{c:<10} {s(p):>6} {s(r):>6} {s(f):>6}")
        m = self.macro
        lines.append(f"{'Macro':<10} {s(m['precision']):>6} {s(m['recall']):>6} {s(m['f1']):>6}")
        return "\n".join(lines)


def compare_reports(a: EvalReport, b: EvalReport) -> DeltaTable:
    """Deltas b - a, per class and macro."""
    if a.classes != b.classes:
        raise ValueError(f"class schemas differ: {a.classes} vs {b.classes}")
    return DeltaTable(
        a.classes,
        [y - x for x, y in zip(a.precision, b.precision)],
        [y - x for x, y in zip(a.recall, b.recall)],
        [y - x for x, y in zip(a.f1, b.f1)],
        {"precision": b.macro_precision - a.macro_precision,
         "recall": b.macro_recall - a.macro_recall,
         "f1": b.macro_f1 - a.macro_f1},
    )


def render_side_by_side(reports: dict, title: str = "") -> str:
    """Several reports over the same classes, one column group each."""
    names = list(reports)
    first = reports[names[0]]
    head = f"{'':<10} " + " ".join(f"{n:^20}" for n in names)
    sub = f"{'class':<10} " + " ".join(f"{'P':>6} {'R':>6} {'F1':>6}" for _ in names)
    lines = ([title] if title else []) + [head, sub]
    for ci, c in enumerate(first.classes):
        cells = " ".join(f"{pct(r.precision[ci]):>6} {pct(r.recall[ci]):>6} {pct(r.f1[ci]):>6}"
                         for r in reports.values())
        lines.append(f"{c:<10} {cells}")
    cells = " ".join(f"{pct(r.macro_precision):>6} {pct(r.macro_recall):>6} {pct(r.macro_f1):>6}"
                     for r in reports.values())
    lines.append(f"{'Macro':<10} {cells}")
    return "\n".join(lines)


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")
