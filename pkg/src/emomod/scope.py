"""Modifier scope detection over emotion words.

Three interchangeable detectors produce a scope labelling, a plain dict
from document-level token index (0-based) to ModifierKind:

* ``next_n_scope`` -- up to n tokens after each cue, cut at punctuation
  and adversative conjunctions;
* ``dep_tree_scope`` -- heads of cue tokens, spread along conj edges;
* ``classifier_scope`` -- one linear model per modifier kind over
  token/dependency features.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .corpus_io import CorpusError, Document
from .evaluation import EvalReport, report_from_counts
from .lexicons import KINDS, ModifierKind
from .linear import LinearModel, TrainingError, train_binary

PUNCTUATION = frozenset(".,;:!?—()")
ADVERSATIVES = frozenset({"but", "however", "yet", "although", "though",
                          "nevertheless", "whereas", "still"})
DISTANCE_BINS = 5   # distances bucketed as 0,1,2,3,4,5+


def is_punctuation(word: str) -> bool:
    return bool(word) and all(ch in PUNCTUATION for ch in word)


def is_barrier(word: str) -> bool:
    return is_punctuation(word) or word in ADVERSATIVES


def _resolve(claims):
    """Pick one kind per token from ``{token: [(kind, distance, cue), ...]}``:
    kind priority first, then nearest cue, then leftmost cue."""
    return {i: min(c, key=lambda k: (k[0].priority, k[1], k[2]))[0] for i, c in claims.items()}


def next_n_scope(doc: Document, cues, n: int = 2) -> dict:
    if n < 1:
        raise ValueError("n must be >= 1")
    words = doc.words
    claims: dict[int, list] = {}
    for start, end in doc.sentence_bounds:
        for c in range(start, end):
            kind = cues.get(words[c])
            if kind is None:
                continue
            for i in range(c + 1, min(c + 1 + n, end)):
                if is_barrier(words[i]):
                    break
                # cue words occupy scope positions but are not labelled
                if words[i] in cues:
                    continue
                claims.setdefault(i, []).append((kind, i - c, c))
    return _resolve(claims)


def _conj_links(doc: Document, children):
    """Undirected conjunct adjacency, minus links blocked by an adversative
    coordinator (attached to either conjunct between the two)."""
    words = doc.words
    links: dict[int, set] = {}
    for b, tok in enumerate(doc.tokens):
        if not (tok.deprel or "").split(":")[0] == "conj":
            continue
        a = doc.head_of(b)
        if a is None:
            continue
        lo, hi = min(a, b), max(a, b)
        blocked = False
        for owner in (a, b):
            for ch in children[owner]:
                rel = (doc.tokens[ch].deprel or "").split(":")[0]
                if rel == "cc" and words[ch] in ADVERSATIVES and (owner == b or lo < ch < hi):
                    blocked = True
        if not blocked:
            links.setdefault(a, set()).add(b)
            links.setdefault(b, set()).add(a)
    return links


def _require_parse(doc):
    if not doc.has_dependencies:
        raise CorpusError(f"document {doc.id}: dependencies required")


def dep_tree_scope(doc: Document, cues) -> dict:
    _require_parse(doc)
    words = doc.words
    children = doc.children()
    links = _conj_links(doc, children)
    claims: dict[int, list] = {}
    for c, w in enumerate(words):
        kind = cues.get(w)
        if kind is None:
            continue
        h = doc.head_of(c)
        if h is None or words[h] in cues:
            continue
        # breadth-first over conj links; distance is link count from the cue's head
        seen = {h: 1}
        queue = deque([h])
        while queue:
            u = queue.popleft()
            for v in links.get(u, ()):
                if v not in seen:
                    seen[v] = seen[u] + 1
                    queue.append(v)
        for i, dist in seen.items():
            if words[i] not in cues:
                claims.setdefault(i, []).append((kind, dist, c))
    return _resolve(claims)


# ----------------------------------------------------------------------
# token classifier

@dataclass(frozen=True)
class ScopePair:
    doc_id: str
    cue_index: int
    emo_index: int
    kind: ModifierKind
    modifies: bool


@dataclass(frozen=True)
class ScopeFeatures:
    word: str
    pos: str
    right_dist: int
    left_dist: int
    dep_dist: int
    dep1_pos: str | None
    dep1_dist: int
    dep2_pos: str | None
    dep2_dist: int

    def as_features(self) -> dict:
        """One-hot encoding with bucketed distances."""
        fv = {f"word={self.word}": 1.0, f"pos={self.pos}": 1.0,
              f"dep1_pos={self.dep1_pos}": 1.0, f"dep2_pos={self.dep2_pos}": 1.0}
        for name in ("right_dist", "left_dist", "dep_dist", "dep1_dist", "dep2_dist"):
            d = getattr(self, name)
            fv[f"{name}={min(d, DISTANCE_BINS)}"] = 1.0
        return fv


def _down_dist(node, children, is_cue):
    """Edges from ``node`` down to the nearest cue among its descendants; 0 if none."""
    frontier, depth = list(children[node]), 1
    while frontier:
        if any(is_cue(x) for x in frontier):
            return depth
        frontier = [y for x in frontier for y in children[x]]
        depth += 1
    return 0


def extract_scope_features(doc: Document, i: int, cues, kind: ModifierKind,
                           children=None) -> ScopeFeatures:
    _require_parse(doc)
    start, end = doc.sentence_of(i)
    words = doc.words
    cue_pos = [j for j in range(start, end) if cues.get(words[j]) is kind and j != i]
    left = [i - j for j in cue_pos if j < i]
    right = [j - i for j in cue_pos if j > i]
    if children is None:
        children = doc.children()

    def is_cue(j):
        return j != i and cues.get(words[j]) is kind

    dep1 = doc.head_of(i)
    dep2 = doc.head_of(dep1) if dep1 is not None else None
    return ScopeFeatures(
        word=words[i],
        pos=doc.tokens[i].pos,
        right_dist=min(right, default=0),
        left_dist=min(left, default=0),
        dep_dist=_down_dist(i, children, is_cue),
        dep1_pos=doc.tokens[dep1].pos if dep1 is not None else None,
        dep1_dist=_down_dist(dep1, children, is_cue) if dep1 is not None else 0,
        dep2_pos=doc.tokens[dep2].pos if dep2 is not None else None,
        dep2_dist=_down_dist(dep2, children, is_cue) if dep2 is not None else 0,
    )


def train_scope_classifier(pairs, docs, cues, kind: ModifierKind, hyper=None) -> LinearModel:
    """Train the binary scope model for one modifier kind from gold pairs."""
    by_id = {d.id: d for d in docs}
    examples = []
    for p in pairs:
        if p.kind is not kind:
            raise TrainingError(f"pair of kind {p.kind.value} given to {kind.value} classifier")
        doc = by_id.get(p.doc_id)
        if doc is None:
            raise TrainingError(f"pair references unknown document {p.doc_id!r}")
        feats = extract_scope_features(doc, p.emo_index, cues, kind)
        examples.append((feats.as_features(), p.modifies))
    hyper = dict(hyper or {})
    hyper["kind"] = kind.value
    return train_binary(examples, hyper)


def classifier_scope(doc: Document, cues, models: dict, emotion_lexicon) -> dict:
    missing = [k.value for k in KINDS if k not in models]
    if missing:
        raise KeyError(f"missing scope models for: {', '.join(missing)}")
    words = doc.words
    children = doc.children()
    labels = {}
    for start, end in doc.sentence_bounds:
        if not any(words[j] in cues for j in range(start, end)):
            continue
        for i in range(start, end):
            if words[i] not in emotion_lexicon or words[i] in cues:
                continue
            for kind in KINDS:
                feats = extract_scope_features(doc, i, cues, kind, children)
                if models[kind].predict(feats.as_features()):
                    labels[i] = kind
                    break
    return labels


def detect(doc: Document, method: str, cues, n: int = 2, models=None, emotion_lexicon=None) -> dict:
    if method == "next_n":
        return next_n_scope(doc, cues, n)
    if method == "dep_tree":
        return dep_tree_scope(doc, cues)
    if method == "classifier":
        return classifier_scope(doc, cues, models or {}, emotion_lexicon or {})
    raise ValueError(f"unknown scope method {method!r}")


def restrict(scope: dict, kind: ModifierKind) -> dict:
    return {i: k for i, k in scope.items() if k is kind}


# ----------------------------------------------------------------------
# evaluation against gold pairs

def evaluate_scope(predicted: dict, gold) -> EvalReport:
    """Per-kind P/R/F1 over gold pairs. ``predicted`` maps doc id to a scope
    labelling; a pair is predicted positive when its emotion word carries
    the pair's kind."""
    counts = {k: [0, 0, 0] for k in KINDS}     # tp, fp, fn
    support = {k: 0 for k in KINDS}
    for p in gold:
        hit = predicted.get(p.doc_id, {}).get(p.emo_index) is p.kind
        c = counts[p.kind]
        if p.modifies:
            support[p.kind] += 1
            c[0 if hit else 2] += 1
        elif hit:
            c[1] += 1
    return report_from_counts(
        [k.value for k in KINDS],
        [counts[k][0] for k in KINDS], [counts[k][1] for k in KINDS],
        [counts[k][2] for k in KINDS], [support[k] for k in KINDS])


def read_gold_pairs(path) -> list[ScopePair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            try:
                if len(parts) != 5 or parts[4].strip() not in ("0", "1"):
                    raise ValueError("expected doc_id<TAB>cue<TAB>emo<TAB>kind<TAB>0|1")
                cue, emo = int(parts[1]), int(parts[2])
                if cue == emo:
                    raise ValueError("cue and emotion word indices coincide")
                pairs.append(ScopePair(parts[0], cue, emo, ModifierKind.parse(parts[3]),
                                       parts[4].strip() == "1"))
            except ValueError as exc:
                raise CorpusError(str(exc), path, lineno) from None
    return pairs


def write_gold_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(f"{p.doc_id}\t{p.cue_index}\t{p.emo_index}\t{p.kind.value}\t{int(p.modifies)}\n")


def write_scopes(scopes: dict, path):
    """``scopes`` maps doc id to labelling; written as JSON-lines."""
    with open(path, "w", encoding="utf-8") as f:
        for doc_id, labels in scopes.items():
            rec = {"id": doc_id, "labels": [[i, k.value] for i, k in sorted(labels.items())]}
            f.write(json.dumps(rec) + "\n")


def read_scopes(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                labels = {}
                for i, k in rec["labels"]:
                    if int(i) in labels:
                        raise ValueError(f"token {i} labelled twice")
                    labels[int(i)] = ModifierKind.parse(k)
                out[str(rec["id"])] = labels
            except (KeyError, ValueError, TypeError) as exc:
                raise CorpusError(f"bad scope record: {exc}", path, lineno) from None
    return out


def pooled_f1(predicted: dict, gold) -> float:
    """F1 over all gold pairs regardless of kind (micro average)."""
    tp = fp = fn = 0
    for p in gold:
        hit = predicted.get(p.doc_id, {}).get(p.emo_index) is p.kind
        if p.modifies:
            tp += hit
            fn += not hit
        else:
            fp += hit
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def sweep_next_n(docs, cues, gold, ns) -> dict:
    """For each n: (pooled F1, per-kind report) of next-n against gold pairs."""
    gold = list(gold)
    out = {}
    for n in ns:
        predicted = {d.id: next_n_scope(d, cues, n) for d in docs}
        out[n] = (pooled_f1(predicted, gold), evaluate_scope(predicted, gold))
    return out
