"""Synthetic corpora shared by the unit and acceptance tests."""

import itertools
from collections import Counter

import numpy as np

from emomod import lexmodel
from emomod.corpus_io import Document, Emotion, Token, document_from_text
from emomod.linear import hinge_objective, hinge_subgradient
from emomod.lexicons import ModifierKind
from emomod.scope import ScopePair

NEG, AMP, DOWN = ModifierKind.NEGATION, ModifierKind.AMPLIFIER, ModifierKind.DOWNTONER
CUES = {"not": NEG, "never": NEG, "very": AMP, "so": AMP, "slightly": DOWN, "little": DOWN}
EMOTION_LEXICON = {
    "happy": frozenset({Emotion.JOY}), "glad": frozenset({Emotion.JOY}),
    "angry": frozenset({Emotion.ANGER}), "scared": frozenset({Emotion.FEAR}),
    "sad": frozenset({Emotion.SADNESS}), "shocked": frozenset({Emotion.SURPRISE, Emotion.FEAR}),
    "gross": frozenset({Emotion.DISGUST}),
}
FILLERS = ["today", "we", "went", "out", "the", "game", "was", "long", "friends", "came"]
EMO_WORDS = sorted(EMOTION_LEXICON)


def parsed(doc_id, words, heads, deprels=None, pos=None, label=None, bounds=None):
    """Document with explicit (sentence-relative, 1-based) heads."""
    deprels = deprels or ["dep"] * len(words)
    pos = pos or ["X"] * len(words)
    bounds = bounds or [(0, len(words))]
    toks = []
    for start, end in bounds:
        for k in range(start, end):
            toks.append(Token(k - start + 1, words[k], words[k].lower(), pos[k], heads[k], deprels[k]))
    return Document(doc_id, tuple(toks), tuple(bounds), label)


# ----------------------------------------------------------------------
# random documents for fuzzing

VOCAB = FILLERS + EMO_WORDS + list(CUES) + [",", ".", ";", "but", "yet", "and"]


def random_document(rng, doc_id="r", max_sents=3, max_len=12):
    words, heads, rels, bounds = [], [], [], []
    for _ in range(rng.integers(1, max_sents + 1)):
        n = int(rng.integers(1, max_len + 1))
        start = len(words)
        root = int(rng.integers(1, n + 1))
        for k in range(1, n + 1):
            words.append(VOCAB[rng.integers(len(VOCAB))])
            if k == root:
                heads.append(0)
            else:
                # earlier tokens or the root only, so the tree stays acyclic
                choices = list(range(1, k)) + [root]
                heads.append(int(choices[rng.integers(len(choices))]))
            rels.append(["dep", "conj", "cc", "advmod", "neg"][rng.integers(5)])
        bounds.append((start, len(words)))
    return parsed(doc_id, words, heads, rels, bounds=bounds)


# ----------------------------------------------------------------------
# next-n sweep corpus: true scopes within 2 tokens, distractors 4-8 tokens out

def sweep_corpus(n_docs=300, seed=0):
    rng = np.random.default_rng(seed)
    cue_words = list(CUES)
    docs, gold = [], []
    for d in range(n_docs):
        cue = cue_words[rng.integers(len(cue_words))]
        near = int(rng.integers(1, 3))
        far = int(rng.integers(4, 9))
        words = [FILLERS[rng.integers(len(FILLERS))] for _ in range(far + 2)]
        c = 1
        words[c] = cue
        words[c + near] = EMO_WORDS[rng.integers(len(EMO_WORDS))]
        words[c + far] = EMO_WORDS[rng.integers(len(EMO_WORDS))]
        doc = document_from_text(f"d{d}", " ".join(words))
        docs.append(doc)
        gold.append(ScopePair(doc.id, c, c + near, CUES[cue], True))
        gold.append(ScopePair(doc.id, c, c + far, CUES[cue], False))
    return docs, gold


# ----------------------------------------------------------------------
# negation-flip corpus: plain unigrams cannot tell "not happy" from "happy ... not"

def negation_flip_corpus(n_docs=2000, seed=0):
    rng = np.random.default_rng(seed)

    def f():
        return FILLERS[rng.integers(len(FILLERS))]

    docs = []
    for d in range(n_docs):
        kind = d % 4
        if kind == 0:
            words, label = [f(), "not", "happy", f(), f()], Emotion.SADNESS
        elif kind == 1:
            words, label = [f(), "happy", f(), "not", f()], Emotion.JOY
        elif kind == 2:
            words, label = [f(), "happy", f(), f()], Emotion.JOY
        else:
            words, label = [f(), "sad", f(), f()], Emotion.SADNESS
        docs.append(document_from_text(f"n{d}", " ".join(words), label))
    return docs


def bayes_unigram_accuracy_negated():
    """Best accuracy any function of the unigram bag can reach on the
    documents containing "not", by exact enumeration of the generator."""
    mass = Counter()
    for f1, f2, f3 in itertools.product(FILLERS, repeat=3):
        p = 1.0 / len(FILLERS) ** 3
        mass[(frozenset(Counter([f1, "not", "happy", f2, f3]).items()), Emotion.SADNESS)] += p
        mass[(frozenset(Counter([f1, "happy", f2, "not", f3]).items()), Emotion.JOY)] += p
    by_bag = {}
    for (bag, label), p in mass.items():
        by_bag.setdefault(bag, Counter())[label] += p / 2    # both templates equally likely
    return sum(max(c.values()) for c in by_bag.values())


# ----------------------------------------------------------------------
# lexical-model generator

def generator_tensor():
    base = np.full((6, 6), -1.0)
    np.fill_diagonal(base, 3.0)
    # slice order no_mod, amp, down, neg; the neg slice flips sign
    return lexmodel.WeightTensor(np.stack([base, base, base, -base]))


def generator_sample(n, rng, tensor, mix=(0.55, 0.15, 0.15, 0.15), min_margin=0.5):
    """Random count vectors labelled by ``tensor``; draws whose top two
    scores are closer than ``min_margin`` are rejected so labels never
    hinge on tie-breaking."""
    X = []
    while len(X) < n:
        x = np.zeros((4, 6), dtype=np.int64)
        for _ in range(rng.integers(1, 5)):
            x[rng.choice(4, p=mix), rng.integers(6)] += 1
        top = np.sort(lexmodel.score(tensor, x))[-2:]
        if top[1] - top[0] >= min_margin:
            X.append(x)
    X = np.array(X)
    return X, lexmodel.score_batch(tensor, X).argmax(axis=1)


# ----------------------------------------------------------------------
# scope classifier toy set: modifies iff the cue is one or two tokens left

def toy_pairs(n=200, seed=0):
    rng = np.random.default_rng(seed)
    docs, pairs = [], []
    emo = sorted(EMOTION_LEXICON)
    for k in range(n):
        d = int(rng.integers(1, 9))
        words = ["today", "not"] + [FILLERS[rng.integers(len(FILLERS))] for _ in range(d - 1)]
        words.append(emo[rng.integers(len(emo))])
        doc = parsed(f"p{k}", words, [0] + [1] * (len(words) - 1))
        docs.append(doc)
        pairs.append(ScopePair(doc.id, 1, len(words) - 1, NEG, d <= 2))
    return docs, pairs



# ----------------------------------------------------------------------
# hinge subgradient oracle

def finite_difference_check(seed):
    """Max relative error between the analytic subgradient and central
    differences at a random point away from the hinge kinks."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 8))
    y = rng.choice([-1.0, 1.0], 30)
    lam = 0.1
    while True:
        w, b = rng.standard_normal(8), float(rng.standard_normal())
        if np.abs(1 - y * (X @ w + b)).min() > 1e-3:
            break
    gw, gb = hinge_subgradient(w, b, X, y, lam)
    analytic = np.append(gw, gb)
    h = 1e-6
    numeric = np.zeros(9)
    for k in range(9):
        e = np.zeros(9)
        e[k] = h
        plus = hinge_objective(w + e[:8], b + e[8], X, y, lam)
        minus = hinge_objective(w - e[:8], b - e[8], X, y, lam)
        numeric[k] = (plus - minus) / (2 * h)
    return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
