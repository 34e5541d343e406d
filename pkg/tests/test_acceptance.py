"""Acceptance criteria. Each test prints one PASS/FAIL line."""

import time
from decimal import Decimal
from pathlib import Path

import numpy as np
import pytest

from emomod import lexmodel
from emomod.corpus_io import document_from_text, load_conllu, split_corpus
from emomod.evaluation import ConfusionMatrix, macro_average, pct, report
from emomod.lexicons import KINDS, ModifierKind, load_cue_lexicon
from emomod.linear import featurize_bow, predict_emotion, train_multiclass_ovr
from emomod.scope import (
    ScopeFeatures, classifier_scope, dep_tree_scope, extract_scope_features, is_barrier,
    next_n_scope, sweep_next_n, train_scope_classifier,
)

from synth import (
    CUES, EMOTION_LEXICON, bayes_unigram_accuracy_negated, finite_difference_check,
    generator_sample, generator_tensor, negation_flip_corpus, random_document, sweep_corpus,
    toy_pairs,
)

NEG = ModifierKind.NEGATION
LOVE_HATE = Path(__file__).parent / "data" / "love_hate.conllu"


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_golden_scope(verdict):
    t0 = time.perf_counter()
    doc = document_from_text("g", "Happiness is not a goal; it is a by-product.")
    labels = next_n_scope(doc, load_cue_lexicon(), 2)
    got = {doc.words[i]: k for i, k in labels.items()}
    elapsed = time.perf_counter() - t0
    verdict(1, got == {"a": NEG, "goal": NEG} and elapsed < 1.0,
            f"next-2 scope {sorted(got)} in {elapsed:.3f}s")


def test_criterion_02_golden_features(verdict):
    doc = load_conllu(LOVE_HATE)[0]
    f = extract_scope_features(doc, doc.words.index("hate"), load_cue_lexicon(), NEG)
    expected = ScopeFeatures(word="hate", pos="VB", right_dist=0, left_dist=3, dep_dist=0,
                             dep1_pos="VB", dep1_dist=1, dep2_pos=None, dep2_dist=0)
    verdict(2, f == expected, f"features of 'hate' = {f}")


def test_criterion_03_metric_anchors(verdict):
    rep = report(ConfusionMatrix(("negation", "amplifier", "downtoner"),
                                 [[34, 2, 0], [0, 19, 1], [5, 0, 12]]))
    per_kind = [pct(f) for f in rep.f1]
    emotion_macro = macro_average([0.879, 0.437, 0.613, 0.701, 0.452, 0.058])
    ok = (per_kind == [Decimal("90.7"), Decimal("92.7"), Decimal("80.0")]
          and pct(rep.macro_f1) == Decimal("87.8") and pct(emotion_macro) == Decimal("52.3"))
    verdict(3, ok, f"per-kind F1 {per_kind}, macro {pct(rep.macro_f1)}; emotion macro {pct(emotion_macro)}")


def test_criterion_04_sweep_shape(verdict):
    t0 = time.perf_counter()
    docs, gold = sweep_corpus(300, seed=0)
    f1 = {n: v[0] for n, v in sweep_next_n(docs, CUES, gold, range(1, 13)).items()}
    again = {n: v[0] for n, v in sweep_next_n(docs, CUES, gold, range(1, 13)).items()}
    elapsed = time.perf_counter() - t0
    ok = (max(f1, key=f1.get) == 2 and f1[2] > f1[1] and all(f1[2] > f1[n] for n in range(4, 13))
          and f1 == again and elapsed < 10)
    shown = ", ".join(f"{n}:{pct(v)}" for n, v in f1.items())
    verdict(4, ok, f"F1 by n {shown} in {elapsed:.2f}s")


def test_criterion_05_prefixing_value(verdict):
    t0 = time.perf_counter()
    bound = bayes_unigram_accuracy_negated()
    cues = load_cue_lexicon()
    docs = negation_flip_corpus(2000)
    split = split_corpus(docs, seed=42)
    scopes = {d.id: next_n_scope(d, cues, 2) for d in docs}
    plain = train_multiclass_ovr([(featurize_bow(d), d.label) for d in split.train_repr])
    scoped = train_multiclass_ovr([(featurize_bow(d, scopes[d.id]), d.label) for d in split.train_repr])
    negated = [d for d in split.test_repr if "not" in d.words]
    acc_plain = np.mean([predict_emotion(plain, featurize_bow(d)) is d.label for d in negated])
    acc_scoped = np.mean([predict_emotion(scoped, featurize_bow(d, scopes[d.id])) is d.label
                          for d in negated])
    elapsed = time.perf_counter() - t0
    ok = bound <= 0.65 and acc_scoped >= 0.95 and acc_plain <= 0.65 and elapsed < 60
    verdict(5, ok, f"negated subset ({len(negated)} docs): scoped {acc_scoped:.3f}, plain "
                   f"{acc_plain:.3f}, unigram bound {bound:.3f}, {elapsed:.1f}s")


@pytest.fixture(scope="module")
def recovery():
    rng = np.random.default_rng(2024)
    gen = generator_tensor()
    X, y = generator_sample(1000, rng, gen)
    Xh, yh = generator_sample(1000, rng, gen)
    t0 = time.perf_counter()
    tensor, trace = lexmodel.hill_climb(list(zip(X, y)), restarts=8, patience=500,
                                        max_epochs=5000, seed=7)
    elapsed = time.perf_counter() - t0
    return {"train": list(zip(X, y)), "held": (Xh, yh), "gen": gen, "tensor": tensor,
            "trace": trace, "elapsed": elapsed}


def test_criterion_06_lexmodel_recovery(verdict, recovery):
    Xh, yh = recovery["held"]
    gen_f1 = lexmodel.macro_f1(yh, lexmodel.score_batch(recovery["gen"], Xh).argmax(axis=1))
    fit_f1 = lexmodel.macro_f1(yh, lexmodel.score_batch(recovery["tensor"], Xh).argmax(axis=1))
    ok = fit_f1 >= 0.9 * gen_f1 and recovery["elapsed"] < 300
    verdict(6, ok, f"held-out macro-F1 {fit_f1:.3f} vs generator {gen_f1:.3f} "
                   f"(ratio {fit_f1 / gen_f1:.3f}), {recovery['elapsed']:.1f}s")


def test_criterion_07_hill_climb_invariants(verdict, recovery):
    trace = recovery["trace"]
    runs = {}
    for step in trace:
        runs.setdefault((step.slice, step.restart), []).append(step)
    monotone = all(all(a < b for a, b in zip(acc, acc[1:]))
                   for acc in ([s.objective for s in steps if s.accepted] for steps in runs.values()))
    patience_ok = all(
        (steps[-1].since_improvement == 500 or steps[-1].epoch == 5000)
        and all(s.since_improvement < 500 for s in steps[:-1])
        and all(s.since_improvement == 0 if s.accepted else True for s in steps)
        for steps in runs.values())
    by_patience = sum(steps[-1].since_improvement == 500 for steps in runs.values())
    again, trace2 = lexmodel.hill_climb(recovery["train"], restarts=8, patience=500,
                                        max_epochs=5000, seed=7)
    identical = (again.weights.tobytes() == recovery["tensor"].weights.tobytes() and trace2 == trace)
    ok = monotone and patience_ok and by_patience > 0 and identical
    verdict(7, ok, f"{len(runs)} restarts, monotone={monotone}, {by_patience} stopped by patience "
                   f"at exactly 500, rerun bit-identical={identical}")


def test_criterion_08_oracle_equivalence(verdict):
    rng = np.random.default_rng(8)
    worst, mismatches = 0.0, 0
    for _ in range(1000):
        w = rng.standard_normal((4, 6, 6)) * rng.uniform(0.1, 10)
        x = rng.integers(0, 6, (4, 6))
        oracle = [0.0] * 6
        for m in range(4):
            for i in range(6):
                for j in range(6):
                    oracle[j] += w[m, i, j] * x[m, i]
        got = lexmodel.score(w, x)
        denom = max(np.linalg.norm(oracle), 1e-300)
        worst = max(worst, float(np.linalg.norm(got - np.array(oracle)) / denom))
        first_max = max(range(6), key=lambda j: (oracle[j], -j))
        mismatches += int(lexmodel.predict(w, x)) != first_max
    verdict(8, worst <= 1e-12 and mismatches == 0,
            f"max relative error {worst:.2e}, argmax mismatches {mismatches}/1000")


def test_criterion_09_subgradient(verdict):
    errors = [finite_difference_check(seed) for seed in range(100, 120)]
    verdict(9, max(errors) <= 1e-4, f"max relative error {max(errors):.2e} over 20 points")


def test_criterion_10_exclusivity_fuzz(verdict):
    t0 = time.perf_counter()
    docs, pairs = toy_pairs(200)
    models = {}
    for kind in KINDS:
        kpairs = [p.__class__(p.doc_id, p.cue_index, p.emo_index, kind, p.modifies) for p in pairs]
        kcues = {"not": kind}
        models[kind] = train_scope_classifier(kpairs, docs, kcues, kind)
    rng = np.random.default_rng(10)
    violations = []
    for k in range(10_000):
        doc = random_document(rng, f"f{k}")
        words = doc.words
        for method, labels in (("next_n", next_n_scope(doc, CUES, int(rng.integers(1, 6)))),
                               ("dep_tree", dep_tree_scope(doc, CUES)),
                               ("classifier", classifier_scope(doc, CUES, models, EMOTION_LEXICON))):
            if not all(isinstance(v, ModifierKind) for v in labels.values()):
                violations.append((doc.id, method, "non-exclusive label"))
            if any(words[i] in CUES for i in labels):
                violations.append((doc.id, method, "cue labelled"))
        n = 3
        for i in next_n_scope(doc, CUES, n):
            start, _ = doc.sentence_of(i)
            j = i - 1
            while words[j] not in CUES:
                if j <= start or is_barrier(words[j]):
                    violations.append((doc.id, "next_n", f"token {i} crosses a boundary"))
                    break
                j -= 1
        for i in dep_tree_scope(doc, CUES):
            start, end = doc.sentence_of(i)
            if not any(words[j] in CUES for j in range(start, end)):
                violations.append((doc.id, "dep_tree", f"token {i} has no cue in its sentence"))
    elapsed = time.perf_counter() - t0
    verdict(10, not violations, f"10000 documents x 3 methods, {len(violations)} violations "
                                f"{violations[:3]}, {elapsed:.1f}s")
